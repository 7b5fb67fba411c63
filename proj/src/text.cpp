#include "cliniseq/text.hpp"

#include <fstream>
#include <sstream>

#include "cliniseq/error.hpp"

namespace cliniseq::corpus {

namespace {

constexpr std::string_view kOnixWords =
    "a about above across after again against all almost alone along already also although always "
    "among an and another any anybody anyone anything anywhere are area areas around as ask asked "
    "asking asks at away b back backed backing backs be became because become becomes been before "
    "began behind being beings best better between big both but by c came can cannot case cases "
    "certain certainly clear clearly come could d did differ different differently do does done down "
    "downed downing downs during e each early either end ended ending ends enough even evenly ever "
    "every everybody everyone everything everywhere f face faces fact facts far felt few find finds "
    "first for four from full fully further furthered furthering furthers g gave general generally "
    "get gets give given gives go going good goods got great greater greatest group grouped grouping "
    "groups h had has have having he her here herself high higher highest him himself his how however "
    "i if important in interest interested interesting interests into is it its itself j just k keep "
    "keeps kind knew know known knows l large largely last later latest least less let lets like "
    "likely long longer longest m made make making man many may me member members men might more most "
    "mostly mr mrs much must my myself n necessary need needed needing needs never new newer newest "
    "next no nobody non noone not nothing now nowhere number numbers o of off often old older oldest "
    "on once one only open opened opening opens or order ordered ordering orders other others our out "
    "over p part parted parting parts per perhaps place places point pointed pointing points possible "
    "present presented presenting presents problem problems put puts q quite r rather really right "
    "room rooms s said same saw say says second seconds see seem seemed seeming seems sees several "
    "shall she should show showed showing shows side sides since small smaller smallest so some "
    "somebody someone something somewhere state states still such sure t take taken than that the "
    "their them then there therefore these they thing things think thinks this those though thought "
    "thoughts three through thus to today together too took toward turn turned turning turns two u "
    "under until up upon us use used uses v very w want wanted wanting wants was way ways we well "
    "wells went were what when where whether which while who whole whose why will with within without "
    "work worked working works would x y year years yet you young younger youngest your yours z";

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_word_byte(unsigned char c) { return is_digit(c) || is_alpha(c) || c == '#' || c >= 0x80; }
char lower(unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); }

// Length of a clock time starting at i ("H:MM" / "HH:MM", optional am/pm),
// or 0 when the digit run at i is not one.
std::size_t match_time(std::string_view s, std::size_t i) {
  std::size_t j = i;
  while (j < s.size() && is_digit(s[j])) ++j;
  const std::size_t hour_digits = j - i;
  if (hour_digits < 1 || hour_digits > 2) return 0;
  if (j >= s.size() || s[j] != ':') return 0;
  ++j;
  if (j + 2 > s.size() || !is_digit(s[j]) || !is_digit(s[j + 1])) return 0;
  j += 2;
  if (j < s.size() && is_digit(s[j])) return 0;
  std::size_t k = j;
  if (k < s.size() && s[k] == ' ') ++k;
  if (k + 2 <= s.size()) {
    const char a = lower(s[k]), m = lower(s[k + 1]);
    const bool ampm = (a == 'a' || a == 'p') && m == 'm';
    const bool bounded = k + 2 == s.size() || !is_word_byte(static_cast<unsigned char>(s[k + 2]));
    if (ampm && bounded) return k + 2 - i;
  }
  return j - i;
}

// Rewrites placeholders, times and numbers; lowercases everything else.
std::string rewrite(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 16);
  std::size_t i = 0;
  while (i < s.size()) {
    if (s.compare(i, 3, "[**") == 0) {
      const std::size_t close = s.find("**]", i + 3);
      if (close != std::string_view::npos) {
        std::string category;
        for (std::size_t k = i + 3; k < close; ++k)
          if (is_alpha(static_cast<unsigned char>(s[k]))) category += lower(static_cast<unsigned char>(s[k]));
        if (category.empty()) category = "deid";
        out += " ##" + category + "## ";
        i = close + 3;
        continue;
      }
    }
    const auto c = static_cast<unsigned char>(s[i]);
    if (is_digit(c)) {
      if (const std::size_t len = match_time(s, i); len > 0) {
        out += " ##time## ";
        i += len;
        continue;
      }
      while (i < s.size() && is_digit(static_cast<unsigned char>(s[i]))) ++i;
      out += " # ";
      continue;
    }
    out += lower(c);
    ++i;
  }
  return out;
}

}  // namespace

StopWords StopWords::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read stop-word file " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    std::string w = line.substr(start);
    for (char& ch : w) ch = lower(static_cast<unsigned char>(ch));
    words.insert(std::move(w));
  }
  return StopWords(std::move(words));
}

const StopWords& StopWords::onix() {
  static const StopWords list = [] {
    std::unordered_set<std::string> words;
    std::istringstream in{std::string(kOnixWords)};
    std::string w;
    while (in >> w) words.insert(w);
    return StopWords(std::move(words));
  }();
  return list;
}

std::vector<std::string> normalize_text(std::string_view text, const StopWords& stop) {
  const std::string rewritten = rewrite(text);
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < rewritten.size()) {
    while (i < rewritten.size() && !is_word_byte(static_cast<unsigned char>(rewritten[i]))) ++i;
    std::size_t j = i;
    while (j < rewritten.size() && is_word_byte(static_cast<unsigned char>(rewritten[j]))) ++j;
    if (j > i) {
      std::string tok = rewritten.substr(i, j - i);
      if (!stop.contains(tok)) tokens.push_back(std::move(tok));
    }
    i = j;
  }
  return tokens;
}

}  // namespace cliniseq::corpus
