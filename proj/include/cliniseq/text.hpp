#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace cliniseq::corpus {

class StopWords {
 public:
  StopWords() = default;
  explicit StopWords(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  // One word per line; blank lines and lines starting with '#' are skipped.
  static StopWords load(const std::filesystem::path& path);
  // The Onix English stop list.
  static const StopWords& onix();
  static StopWords none() { return StopWords{}; }

  bool contains(std::string_view w) const { return words_.count(std::string(w)) > 0; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

// Rewrites de-identification spans "[** ... **]" to "##<category>##", clock
// times to "##time##" and digit runs to "#", lowercases, splits on runs of
// non-alphanumeric bytes and drops stop words. Bytes >= 0x80 count as word
// characters so UTF-8 text stays intact.
std::vector<std::string> normalize_text(std::string_view text, const StopWords& stop = StopWords::onix());

}  // namespace cliniseq::corpus
