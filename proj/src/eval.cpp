#include "cliniseq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cliniseq/corpus_io.hpp"
#include "cliniseq/error.hpp"

namespace cliniseq::eval {

std::optional<double> auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  require_dims(scores.size() == labels.size(), "auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (auto l : labels) n_pos += l ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of (1-based) midranks of the positives.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]]) rank_sum += midrank;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

std::optional<double> AucReport::mean_auc() const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& p : points)
    if (p.auc) {
      s += *p.auc;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

AucReport eval_per_time_point(const std::vector<Vec>& scores, std::span<const std::uint8_t> labels,
                              std::size_t horizon) {
  require_dims(scores.size() == labels.size(), "eval: one label per patient");
  AucReport report;
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  for (std::size_t t = 1; t <= horizon; ++t) {
    s.clear();
    l.clear();
    AucPoint point;
    point.t = t;
    for (std::size_t p = 0; p < scores.size(); ++p) {
      if (scores[p].size() < t) continue;
      s.push_back(scores[p][t - 1]);
      l.push_back(labels[p]);
      (labels[p] ? point.n_pos : point.n_neg) += 1;
    }
    point.auc = auc(s, l);
    report.points.push_back(point);
  }
  return report;
}

std::optional<double> final_time_point_auc(const std::vector<Vec>& scores, std::span<const std::uint8_t> labels) {
  require_dims(scores.size() == labels.size(), "eval: one label per patient");
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  for (std::size_t p = 0; p < scores.size(); ++p) {
    if (scores[p].empty()) continue;
    s.push_back(scores[p].back());
    l.push_back(labels[p]);
  }
  return auc(s, l);
}

std::size_t default_horizon(std::span<const std::size_t> lengths) {
  if (lengths.empty()) return 1;
  std::vector<std::size_t> v(lengths.begin(), lengths.end());
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(v.size())));
  return std::max<std::size_t>(1, v[std::max<std::size_t>(rank, 1) - 1]);
}

std::string format_auc_csv(const AucReport& report, std::string_view task, std::string_view model) {
  std::string out(kAucCsvHeader);
  out += '\n';
  for (const auto& p : report.points) {
    out += std::string(task) + ',' + std::string(model) + ',' + std::to_string(p.t) + ',' + std::to_string(p.n_pos) +
           ',' + std::to_string(p.n_neg) + ',' + (p.auc ? corpus::format_real(*p.auc) : "") + '\n';
  }
  return out;
}

std::vector<RankedWord> top_words(const Tensor& weights, WeightLayout layout, std::size_t k, std::size_t n,
                                  const corpus::Vocab& vocab) {
  require_dims(weights.rank() == 2, "top_words needs a matrix");
  const std::size_t topics = layout == WeightLayout::TopicMajor ? weights.rows() : weights.cols();
  const std::size_t words = layout == WeightLayout::TopicMajor ? weights.cols() : weights.rows();
  if (k >= topics) throw InputError("topic " + std::to_string(k) + " >= " + std::to_string(topics));
  require_dims(words == vocab.size(), "weight matrix has " + std::to_string(words) + " words, vocabulary " +
                                          std::to_string(vocab.size()));
  std::vector<std::size_t> ids(words);
  std::iota(ids.begin(), ids.end(), 0);
  auto weight = [&](std::size_t w) { return layout == WeightLayout::TopicMajor ? weights(k, w) : weights(w, k); };
  const std::size_t take = std::min(n, words);
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double wa = weight(a), wb = weight(b);
                      if (wa != wb) return wa > wb;
                      return vocab.word(static_cast<std::uint32_t>(a)) < vocab.word(static_cast<std::uint32_t>(b));
                    });
  std::vector<RankedWord> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back({vocab.word(static_cast<std::uint32_t>(ids[i])), weight(ids[i])});
  return out;
}

std::string format_topics(const Tensor& weights, WeightLayout layout, std::size_t n, const corpus::Vocab& vocab) {
  const std::size_t topics = layout == WeightLayout::TopicMajor ? weights.rows() : weights.cols();
  std::string out;
  for (std::size_t k = 0; k < topics; ++k) {
    out += "T" + std::to_string(k + 1) + ":";
    const auto words = top_words(weights, layout, k, n, vocab);
    for (std::size_t i = 0; i < words.size(); ++i) out += (i ? ", " : " ") + words[i].word;
    out += '\n';
  }
  return out;
}

std::vector<std::size_t> nearest_neighbors(const std::vector<Vec>& points, std::size_t i, std::size_t k) {
  if (points.size() < k + 1)
    throw InputError("kNN needs at least k+1=" + std::to_string(k + 1) + " vectors, got " +
                     std::to_string(points.size()));
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(points.size() - 1);
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (j == i) continue;
    require_dims(points[j].size() == points[i].size(), "kNN vectors differ in length");
    double d = 0.0;
    for (std::size_t c = 0; c < points[i].size(); ++c) {
      const double diff = points[i][c] - points[j][c];
      d += diff * diff;
    }
    dist.emplace_back(d, j);
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t c = 0; c < k; ++c) out[c] = dist[c].second;
  return out;
}

double knn_overlap_reference(const std::vector<Vec>& candidate, const std::vector<Vec>& reference, std::size_t k) {
  require_dims(candidate.size() == reference.size(), "candidate and reference sets differ in size");
  if (k == 0) throw InputError("kNN needs k >= 1");
  double total = 0.0;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    auto a = nearest_neighbors(candidate, i, k);
    auto b = nearest_neighbors(reference, i, k);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::size_t> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    total += static_cast<double>(common.size()) / static_cast<double>(k);
  }
  return total / static_cast<double>(candidate.size());
}

double knn_overlap_groups(const std::vector<Vec>& latents, const std::vector<std::string>& groups, std::size_t k) {
  require_dims(latents.size() == groups.size(), "one group per latent vector");
  if (k == 0) throw InputError("kNN needs k >= 1");
  double total = 0.0;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    std::size_t same = 0;
    for (auto j : nearest_neighbors(latents, i, k)) same += groups[j] == groups[i] ? 1 : 0;
    total += static_cast<double>(same) / static_cast<double>(k);
  }
  return total / static_cast<double>(latents.size());
}

std::string format_latents(std::span<const LatentRow> rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.patient_id + '\t' + std::to_string(r.t) + '\t' + (r.label ? "1" : "0");
    for (double v : r.z) out += '\t' + corpus::format_real(v);
    out += '\n';
  }
  return out;
}

std::vector<LatentRow> parse_latents(std::string_view content) {
  std::vector<LatentRow> rows;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t s = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', s);
      f.push_back(line.substr(s, tab == std::string_view::npos ? std::string_view::npos : tab - s));
      if (tab == std::string_view::npos) break;
      s = tab + 1;
    }
    if (f.size() < 4) throw InputError("latent row needs patient_id, t, label and at least one value");
    LatentRow r;
    r.patient_id = std::string(f[0]);
    r.t = static_cast<std::size_t>(corpus::parse_real(f[1]));
    r.label = f[2] == "1";
    for (std::size_t i = 3; i < f.size(); ++i) r.z.push_back(corpus::parse_real(f[i]));
    if (!rows.empty() && rows.front().z.size() != r.z.size())
      throw InputError("latent rows differ in dimension");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace cliniseq::eval
