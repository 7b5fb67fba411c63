#include "cliniseq/synth.hpp"

#include <algorithm>
#include <cmath>

#include "cliniseq/error.hpp"
#include "cliniseq/layers.hpp"
#include "cliniseq/parallel.hpp"
#include "cliniseq/rng.hpp"

namespace cliniseq::synth {

void SynthConfig::validate() const {
  if (n_patients == 0 || vocab_size == 0 || n_topics == 0 || doc_len == 0)
    throw InputError("synth: counts must be positive");
  if (vocab_size < n_topics) throw InputError("synth: vocab_size must be >= n_topics");
  if (n_risk_topics >= n_topics) throw InputError("synth: n_risk_topics must be < n_topics");
  if (!(mean_seq_len >= 2.0)) throw InputError("synth: mean_seq_len must be >= 2");
  if (!(empty_rate >= 0.0 && empty_rate <= 1.0)) throw InputError("synth: empty_rate must lie in [0, 1]");
  if (!(risk_strength >= 0.0) || !std::isfinite(risk_strength)) throw InputError("synth: risk_strength must be >= 0");
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) throw InputError("synth: positive_rate must lie in (0, 1)");
  if (!(base_concentration > 0.0) || !(mixture_concentration > 0.0) || !(drift >= 0.0))
    throw InputError("synth: concentrations must be positive and drift >= 0");
}

std::vector<std::size_t> SynthTruth::block(std::size_t k) const {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < phi_star.cols(); ++w)
    if (phi_star(k, w) > 0.0) out.push_back(w);
  return out;
}

std::string synth_word(std::size_t i) {
  std::string letters;
  for (int d = 0; d < 3; ++d) {
    letters.insert(letters.begin(), static_cast<char>('a' + i % 26));
    i /= 26;
  }
  if (i > 0) throw InputError("synth: vocabulary too large for three-letter words");
  return "w" + letters;
}

Tensor planted_phi(std::size_t K, std::size_t V) {
  if (K == 0 || V < K) throw InputError("planted_phi needs 0 < K <= V");
  Tensor phi = Tensor::matrix(K, V);
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t begin = k * V / K, end = (k + 1) * V / K;
    double total = 0.0;
    for (std::size_t w = begin; w < end; ++w) total += 1.0 / static_cast<double>(w - begin + 1);
    for (std::size_t w = begin; w < end; ++w) phi(k, w) = 1.0 / static_cast<double>(w - begin + 1) / total;
  }
  return phi;
}

double calibrate_offset(const std::vector<double>& scores, double target) {
  if (scores.empty()) throw InputError("calibrate_offset needs scores");
  const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
  double lo = *mn - 60.0, hi = *mx + 60.0;
  auto rate = [&](double o) {
    double s = 0.0;
    for (double v : scores) s += sigmoid(v - o);
    return s / static_cast<double>(scores.size());
  };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

struct PatientDraw {
  PatientTruth truth;
  std::vector<corpus::RawNote> notes;
  corpus::MetaRow meta;
  double label_u = 0.0;
  double death_u = 0.0;
  corpus::Timestamp death_offset_30 = 0;
  corpus::Timestamp death_offset_1y = 0;
};

std::string patient_id(std::size_t i, std::size_t n) {
  std::string digits = std::to_string(i + 1);
  const std::string width = std::to_string(n);
  return "S" + std::string(width.size() > digits.size() ? width.size() - digits.size() : 0, '0') + digits;
}

PatientDraw draw_patient(const SynthConfig& cfg, const SynthTruth& truth, std::size_t i,
                         const std::vector<Vec>& word_weights, corpus::Timestamp base_time) {
  constexpr corpus::Timestamp kHour = 3600;
  const std::size_t K = cfg.n_topics;
  Rng rng(mix_seed(cfg.seed, i));
  PatientDraw d;
  PatientTruth& pt = d.truth;
  pt.patient_id = patient_id(i, cfg.n_patients);

  const std::size_t T = 2 + static_cast<std::size_t>(cfg.mean_seq_len > 2.0 ? rng.geometric(1.0 / (cfg.mean_seq_len - 1.0)) : 0);

  const Vec base = rng.dirichlet(Vec(K, cfg.base_concentration / static_cast<double>(K)));
  Vec eta(K);
  for (std::size_t k = 0; k < K; ++k) eta[k] = std::log(base[k] + 1e-3);
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0)
      for (double& e : eta) e += cfg.drift * rng.normal();
    Vec alpha = softmax(eta);
    for (double& a : alpha) a = std::max(a * cfg.mixture_concentration, 1e-3);
    pt.mixtures.push_back(rng.dirichlet(alpha));
    pt.empty.push_back(rng.bernoulli(cfg.empty_rate));
  }
  if (std::all_of(pt.empty.begin(), pt.empty.end(), [](bool e) { return e; })) pt.empty[0] = false;

  Vec late(K, 0.0);
  const std::size_t from = T / 2;
  for (std::size_t t = from; t < T; ++t)
    for (std::size_t k = 0; k < K; ++k) late[k] += pt.mixtures[t][k] / static_cast<double>(T - from);
  for (std::size_t k = 0; k < K; ++k) pt.late_risk += truth.risk[k] * late[k];

  const corpus::Timestamp admit = base_time + static_cast<corpus::Timestamp>(i) * 2 * corpus::kDaySeconds +
                                  static_cast<corpus::Timestamp>(rng.uniform_int(corpus::kDaySeconds));
  const double age = rng.uniform(25.0, 85.0);
  d.meta.patient_id = pt.patient_id;
  // Dates of birth are whole days, as the metadata format stores them.
  const corpus::Timestamp born = admit - static_cast<corpus::Timestamp>(std::llround(age * 365.2425 * corpus::kDaySeconds));
  d.meta.dob = born - ((born % corpus::kDaySeconds) + corpus::kDaySeconds) % corpus::kDaySeconds;
  d.meta.admit_time = admit;
  d.meta.discharge_time = admit + static_cast<corpus::Timestamp>(T - 1) * corpus::kTimePointSeconds + 6 * kHour +
                          static_cast<corpus::Timestamp>(rng.uniform_int(5 * kHour));

  for (std::size_t t = 0; t < T; ++t) {
    if (pt.empty[t]) continue;
    std::string text;
    for (std::size_t n = 0; n < cfg.doc_len; ++n) {
      const std::size_t k = rng.categorical(pt.mixtures[t]);
      const std::size_t w = rng.categorical(word_weights[k]);
      if (n) text += ' ';
      text += truth.words[w];
    }
    corpus::RawNote note;
    note.patient_id = pt.patient_id;
    // Within hours 1-5 of the bucket, so the last note precedes discharge.
    note.chart_time = admit + static_cast<corpus::Timestamp>(t) * corpus::kTimePointSeconds + kHour +
                      static_cast<corpus::Timestamp>(rng.uniform_int(4 * kHour));
    note.category = "Nursing";
    note.text = std::move(text);
    d.notes.push_back(std::move(note));
  }
  if (cfg.discharge_summaries) {
    std::string text;
    for (std::size_t n = 0; n < cfg.doc_len; ++n) {
      if (n) text += ' ';
      text += truth.words[rng.uniform_int(cfg.vocab_size)];
    }
    d.notes.push_back({pt.patient_id, d.meta.discharge_time - kHour, "Discharge summary", std::move(text)});
  }

  d.label_u = rng.uniform();
  d.death_u = rng.uniform();
  d.death_offset_30 = static_cast<corpus::Timestamp>(1 + rng.uniform_int(29)) * corpus::kDaySeconds;
  d.death_offset_1y = static_cast<corpus::Timestamp>(31 + rng.uniform_int(330)) * corpus::kDaySeconds;
  return d;
}

}  // namespace

SynthCorpus gen_corpus(const SynthConfig& cfg) {
  cfg.validate();
  SynthCorpus out;
  SynthTruth& truth = out.truth;
  truth.phi_star = planted_phi(cfg.n_topics, cfg.vocab_size);
  truth.risk.assign(cfg.n_topics, 0.0);
  for (std::size_t k = 0; k < cfg.n_risk_topics; ++k) truth.risk[k] = cfg.risk_strength;
  for (std::size_t w = 0; w < cfg.vocab_size; ++w) truth.words.push_back(synth_word(w));

  std::vector<Vec> word_weights(cfg.n_topics);
  for (std::size_t k = 0; k < cfg.n_topics; ++k)
    word_weights[k].assign(truth.phi_star.row(k).begin(), truth.phi_star.row(k).end());

  const corpus::Timestamp base_time = corpus::parse_timestamp("2150-01-01");
  std::vector<PatientDraw> draws(cfg.n_patients);
  parallel_for(cfg.n_patients,
               [&](std::size_t i) { draws[i] = draw_patient(cfg, truth, i, word_weights, base_time); });

  std::vector<double> scores;
  for (const auto& d : draws) scores.push_back(d.truth.late_risk);
  truth.offset = calibrate_offset(scores, cfg.positive_rate);

  for (auto& d : draws) {
    PatientTruth& pt = d.truth;
    pt.probability = sigmoid(pt.late_risk - truth.offset);
    pt.label = d.label_u < pt.probability;
    if (pt.label) {
      d.meta.death_time = d.meta.discharge_time;
      d.meta.in_hospital_death = true;
    } else if (d.death_u < 0.06) {
      d.meta.death_time = d.meta.discharge_time + d.death_offset_30;
    } else if (d.death_u < 0.14) {
      d.meta.death_time = d.meta.discharge_time + d.death_offset_1y;
    }
    out.meta.push_back(d.meta);
    for (auto& n : d.notes) out.notes.push_back(std::move(n));
    truth.patients.push_back(std::move(pt));
  }
  return out;
}

std::vector<double> oracle_scores(const SynthTruth& truth) {
  std::vector<double> s;
  for (const auto& p : truth.patients) s.push_back(p.late_risk);
  return s;
}

double bayes_auc(const SynthTruth& truth) {
  double num = 0.0, den = 0.0;
  const auto& ps = truth.patients;
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = 0; j < ps.size(); ++j) {
      if (i == j) continue;
      const double w = ps[i].probability * (1.0 - ps[j].probability);
      den += w;
      if (ps[i].probability > ps[j].probability)
        num += w;
      else if (ps[i].probability == ps[j].probability)
        num += 0.5 * w;
    }
  return den > 0.0 ? num / den : 0.5;
}

std::vector<std::vector<std::uint32_t>> planted_documents(const Tensor& phi_star, std::size_t n_docs,
                                                          std::size_t doc_len, double concentration,
                                                          std::uint64_t seed) {
  const std::size_t K = phi_star.rows();
  std::vector<Vec> rows(K);
  for (std::size_t k = 0; k < K; ++k) rows[k].assign(phi_star.row(k).begin(), phi_star.row(k).end());
  Rng rng(seed);
  std::vector<std::vector<std::uint32_t>> docs(n_docs);
  for (auto& doc : docs) {
    const Vec theta = rng.dirichlet(Vec(K, concentration));
    for (std::size_t n = 0; n < doc_len; ++n)
      doc.push_back(static_cast<std::uint32_t>(rng.categorical(rows[rng.categorical(theta)])));
  }
  return docs;
}

}  // namespace cliniseq::synth
