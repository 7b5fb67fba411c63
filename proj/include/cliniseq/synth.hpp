#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cliniseq/corpus.hpp"
#include "cliniseq/corpus_io.hpp"
#include "cliniseq/tensor.hpp"

namespace cliniseq::synth {

struct SynthConfig {
  std::size_t n_patients = 800;
  std::size_t vocab_size = 200;
  std::size_t n_topics = 8;
  std::size_t n_risk_topics = 2;
  double mean_seq_len = 10.0;
  std::size_t doc_len = 60;
  double empty_rate = 0.1;
  double risk_strength = 6.0;
  std::uint64_t seed = 1;
  double positive_rate = 0.25;
  // Patient-level topic preference: Dirichlet(concentration / K) per topic.
  double base_concentration = 0.1;
  // Per-time-point mixture ~ Dirichlet(mixture_concentration * drifting mean).
  double mixture_concentration = 100.0;
  // Standard deviation of the per-step logit random walk.
  double drift = 0.15;
  // Adds a discharge summary note per patient (dropped by preprocessing).
  bool discharge_summaries = false;

  // Throws InputError when inconsistent.
  void validate() const;
};

struct PatientTruth {
  std::string patient_id;
  std::vector<Vec> mixtures;      // true topic mixture per time point, empty or not
  std::vector<bool> empty;        // time points with no note
  double late_risk = 0.0;         // sum_k r_k * mean late-half mixture_k
  double probability = 0.0;       // sigmoid(late_risk - offset)
  bool label = false;             // in-hospital death
};

struct SynthTruth {
  Tensor phi_star;  // K* x V*, each row supported on a disjoint word block
  Vec risk;         // r_k = risk_strength for the first n_risk_topics topics
  double offset = 0.0;
  std::vector<std::string> words;  // word of each vocabulary column
  std::vector<PatientTruth> patients;

  // Word ids of topic k's block.
  std::vector<std::size_t> block(std::size_t k) const;
};

struct SynthCorpus {
  std::vector<corpus::RawNote> notes;
  std::vector<corpus::MetaRow> meta;
  SynthTruth truth;
};

// Word for vocabulary column i; letters only so it survives normalization.
std::string synth_word(std::size_t i);

SynthCorpus gen_corpus(const SynthConfig& config);

// Offset o with mean_i sigmoid(s_i - o) = target, by bisection.
double calibrate_offset(const std::vector<double>& scores, double target);

// Oracle scores: each patient's true late-half risk.
std::vector<double> oracle_scores(const SynthTruth& truth);

// Expected AUC of any scorer that ranks by the true probabilities: the
// Bayes-optimal ceiling for these labels' generating process.
double bayes_auc(const SynthTruth& truth);

// Documents over the planted topics with mixtures drawn from a symmetric
// Dirichlet(concentration), for LDA recovery checks.
std::vector<std::vector<std::uint32_t>> planted_documents(const Tensor& phi_star, std::size_t n_docs,
                                                          std::size_t doc_len, double concentration,
                                                          std::uint64_t seed);

// Disjoint-block topic-word matrix with 1/(j+1) weights within each block.
Tensor planted_phi(std::size_t K, std::size_t V);

}  // namespace cliniseq::synth
