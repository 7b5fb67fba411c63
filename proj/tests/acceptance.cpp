// One PASS/FAIL line per acceptance criterion.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "cli_util.hpp"
#include "model_helpers.hpp"
#include "oracles.hpp"

#include "cliniseq/checkpoint.hpp"
#include "cliniseq/corpus_io.hpp"
#include "cliniseq/eval.hpp"
#include "cliniseq/lda.hpp"
#include "cliniseq/losses.hpp"
#include "cliniseq/model_io.hpp"
#include "cliniseq/svm.hpp"
#include "cliniseq/synth.hpp"

using namespace cliniseq;
using namespace helpers;
using testutil::TempDir;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fixed(double x, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << x;
  return s.str();
}

// Runs a command and records a failure when it exits non-zero.
testutil::RunResult must(Outcome& o, const std::vector<std::string>& args) {
  auto r = testutil::run(args);
  if (r.code != 0) o.require(false, args[0] + " exited " + std::to_string(r.code) + ": " + r.err);
  return r;
}

// Value following `key ` in a line such as "mean_auc 0.8 final_auc 0.9".
double field(const std::string& text, const std::string& key) {
  const auto pos = text.find(key + " ");
  if (pos == std::string::npos) return std::nan("");
  return std::strtod(text.c_str() + pos + key.size() + 1, nullptr);
}

const ModelKind kJointKinds[] = {ModelKind::LstmE, ModelKind::LstmED, ModelKind::LstmETD};

void gradients(Outcome& o) {
  const ModelDims d{20, 4, 5};
  double worst = 0;
  for (ModelKind kind : kJointKinds) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      Rng rng(seed * 13);
      Batch b;
      for (int i = 0; i < 2; ++i) {
        b.inputs.push_back(random_sequence(3, 20, rng));
        b.labels.push_back(i == 0);
      }
      b.inputs[1][1] = SparseVec{};
      TrainConfig cfg;
      cfg.cfn = 2.0;
      if (kind == ModelKind::LstmETD) cfg.lambda2 = 0.5;
      for (const auto& [name, err] : per_tensor_errors(toy_params(kind, d, seed), b, cfg, 1e-4)) {
        worst = std::max(worst, err);
        o.require(err < 1e-4, std::string(kind_name(kind)) + " " + name);
      }
    }
  }
  o.detail << "max relative error " << worst;
}

void oracles(Outcome& o) {
  Rng rng(2024);
  std::size_t auc_mismatch = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_int(80);
    Vec s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.uniform_int(6)) / 5.0;
      y[i] = rng.bernoulli(0.35);
    }
    y[0] = 1;
    y[1] = 0;
    if (*eval::auc(s, y) != oracle::pair_auc(s, y)) ++auc_mismatch;
  }
  o.require(auc_mismatch == 0, "auc vs pair counting");

  double knn_err = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.uniform_int(30), k = 1 + rng.uniform_int(4), dim = 1 + rng.uniform_int(5);
    std::vector<Vec> a(n, Vec(dim)), b(n, Vec(dim));
    for (auto* pts : {&a, &b})
      for (auto& v : *pts)
        for (auto& x : v) x = static_cast<double>(rng.uniform_int(7)) / 3.0;
    knn_err = std::max(knn_err, std::fabs(eval::knn_overlap_reference(a, b, k) - oracle::knn_overlap(a, b, k)));
  }
  o.require(knn_err < 1e-14, "knn overlap vs all pairs");

  double fwd_err = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ModelKind kind = kJointKinds[seed % 3];
    JointModelParams p = toy_params(kind, ModelDims{20, 4, 5}, seed);
    Rng r(seed + 100);
    auto seq = random_sequence(1 + seed % 5, 20, r);
    if (seed % 4 == 0 && seq.size() > 1) seq[1] = SparseVec{};
    auto tr = models::forward(p, seq);
    auto ref = oracle::joint_forward(p, dense(seq, 20));
    for (std::size_t t = 0; t < ref.size(); ++t) {
      fwd_err = std::max(fwd_err, std::fabs(tr.steps[t].yhat - ref[t].yhat));
      for (std::size_t k = 0; k < 4; ++k) fwd_err = std::max(fwd_err, std::fabs(tr.steps[t].z[k] - ref[t].z[k]));
    }
  }
  o.require(fwd_err < 1e-12, "forward vs scalar loops");
  o.detail << "auc mismatches " << auc_mismatch << ", knn max diff " << knn_err << ", forward max diff "
           << fwd_err;
}

void loss_algebra(Outcome& o) {
  const ModelDims d{12, 3, 4};
  TrainData data = toy_data(30, 12, 7);
  TrainConfig z = zero_lambdas();
  z.steps = 40;
  z.batch_size = 4;
  z.eval_every = 10;
  z.lr = 0.01;
  auto e = models::train(data, init_params(ModelKind::LstmE, d, 5), z);
  auto ed = models::train(data, init_params(ModelKind::LstmED, d, 5), z);
  double train_diff = 0;
  for (std::size_t i = 0; i < e.step_losses.size(); ++i)
    train_diff = std::max(train_diff, std::fabs(e.step_losses[i] - ed.step_losses[i]));
  o.require(e.step_losses.size() == ed.step_losses.size() && train_diff <= 1e-12, "LSTM_E_D vs LSTM_E training");

  double ce_diff = 0;
  for (double p = 0.01; p < 1.0; p += 0.07)
    for (double q : {0.0, 0.3, 1.0}) {
      const double plain = -(q * std::log(p) + (1 - q) * std::log(1 - p));
      ce_diff = std::max(ce_diff, std::fabs(weighted_ce(p, q, 1.0) - plain));
    }
  o.require(ce_diff <= 1e-15, "weighted_ce with cfn 1");

  double mask_diff = 0;
  for (ModelKind kind : kJointKinds) {
    Rng rng(99);
    auto seq = random_sequence(4, 20, rng);
    auto padded = seq;
    padded.insert(padded.begin() + 2, SparseVec{});
    padded.insert(padded.begin(), SparseVec{});
    padded.push_back(SparseVec{});
    JointModelParams p = toy_params(kind, ModelDims{20, 4, 5}, 3);
    TrainConfig cfg;
    cfg.lambda2 = 0.3;
    for (bool y : {false, true}) {
      auto [l1, g1] = loss_and_gradient(p, seq, y, cfg);
      auto [l2, g2] = loss_and_gradient(p, padded, y, cfg);
      mask_diff = std::max(mask_diff, std::fabs(l1 - l2));
      Vec a = g1.flatten(), b = g2.flatten();
      for (std::size_t j = 0; j < a.size(); ++j) mask_diff = std::max(mask_diff, std::fabs(a[j] - b[j]));
    }
  }
  o.require(mask_diff <= 1e-12, "empty time points");
  o.detail << "training loss diff " << train_diff << ", ce diff " << ce_diff << ", masking diff " << mask_diff;
}

void lda_recovery(Outcome& o) {
  const Tensor star = synth::planted_phi(4, 100);
  auto docs = synth::planted_documents(star, 400, 60, 0.1, 1);
  lda::LdaModel m = lda::fit_gibbs(docs, 100, 4, lda::default_alpha(4), lda::kDefaultBeta, 300, 1);
  std::vector<Vec> learned, planted;
  for (std::size_t k = 0; k < 4; ++k) {
    learned.emplace_back(m.phi.row(k).begin(), m.phi.row(k).end());
    planted.emplace_back(star.row(k).begin(), star.row(k).end());
  }
  auto [mean_cos, match] = oracle::greedy_match(learned, planted);
  o.require(mean_cos >= 0.8, "mean cosine");
  std::size_t fewest = 10;
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<std::size_t> order(100);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return m.phi(k, a) > m.phi(k, b); });
    std::size_t hits = 0;
    for (std::size_t r = 0; r < 10; ++r) hits += star(match[k], order[r]) > 0;
    fewest = std::min(fewest, hits);
  }
  o.require(fewest >= 8, "top-10 planted words");
  o.detail << "mean cosine " << fixed(mean_cos) << ", fewest planted words in a top 10: " << fewest;
}

constexpr std::size_t kReplicationSteps = 2000;

struct ModelRun {
  std::string name;
  std::vector<double> final_auc;
  std::vector<double> mean_auc;

  double mean_final() const {
    double s = 0;
    for (double v : final_auc) s += v;
    return s / static_cast<double>(final_auc.size());
  }
};

// Trains and evaluates every model on one corpus; returns the eval output per model.
std::map<std::string, std::string> train_all(Outcome& o, const TempDir& dir, const std::string& tag,
                                             std::uint64_t seed, const std::vector<std::string>& models) {
  const std::string s = std::to_string(seed);
  const std::string raw = dir / (tag + "/raw"), corpus = dir / (tag + "/corpus");
  must(o, {"synth", "--out", raw, "--seed", s, "--risk-strength", tag.starts_with("null") ? "0" : "6"});
  must(o, {"preprocess", "--notes", raw + "/notes.csv", "--meta", raw + "/meta.csv", "--out", corpus, "--seed", s});
  const std::string lda = dir / (tag + "/lda");
  must(o, {"train", "--model", "lda", "--corpus", corpus, "--out", lda, "--topics", "8", "--seed", s});
  std::map<std::string, std::string> evals;
  for (const auto& model : models) {
    const std::string out = dir / (tag + "/" + model);
    std::vector<std::string> args{"train", "--model", model, "--corpus", corpus, "--out", out, "--seed", s};
    if (model == "svm_lda" || model == "lstm_lda") args.insert(args.end(), {"--lda", lda + "/model.clnt"});
    if (model != "svm_lda")
      args.insert(args.end(), {"--topics", "8", "--steps", std::to_string(kReplicationSteps), "--eval-every", "100"});
    must(o, args);
    evals[model] = must(o, {"eval", "--checkpoint", out + "/model.clnt", "--corpus", corpus, "--out",
                            out + "/auc.csv"})
                       .out;
  }
  return evals;
}

void replication(Outcome& o) {
  TempDir dir("acceptance_replication");
  const std::vector<std::string> signal_models{"lstm_e", "lstm_lda"};
  const std::vector<std::string> all_models{"svm_lda", "lstm_lda", "lstm_e", "lstm_ed", "lstm_etd"};
  std::map<std::string, ModelRun> signal, null;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (auto& [m, text] : train_all(o, dir, "signal" + std::to_string(seed), seed, signal_models)) {
      signal[m].final_auc.push_back(field(text, "final_auc"));
      signal[m].mean_auc.push_back(field(text, "mean_auc"));
    }
    for (auto& [m, text] : train_all(o, dir, "null" + std::to_string(seed), seed, all_models)) {
      null[m].final_auc.push_back(field(text, "final_auc"));
      null[m].mean_auc.push_back(field(text, "mean_auc"));
    }
  }
  const double e = signal["lstm_e"].mean_final(), l = signal["lstm_lda"].mean_final();
  o.require(e >= 0.85, "LSTM+E final AUC >= 0.85");
  o.require(e >= l - 0.02, "LSTM+E >= LSTM+LDA - 0.02");
  o.detail << "LSTM+E final AUC " << fixed(e) << ", LSTM+LDA " << fixed(l) << "; null:";
  for (const auto& m : all_models) {
    const double v = null[m].mean_final();
    o.require(v >= 0.4 && v <= 0.6, "null " + m);
    o.detail << " " << m << " " << fixed(v);
  }
}

void exclusion(Outcome& o) {
  TempDir dir("acceptance_exclusion");
  std::size_t checked = 0;
  const std::vector<std::vector<std::string>> configs{
      {"--patients", "300"},
      {"--patients", "200", "--mean-seq-len", "4", "--empty-rate", "0.3"},
      {"--patients", "250", "--mean-seq-len", "15", "--positive-rate", "0.5"},
      {"--patients", "150", "--risk-strength", "0", "--seed", "9"}};
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const std::string tag = dir / std::to_string(i);
    std::vector<std::string> args{"synth", "--out", tag + "/raw"};
    args.insert(args.end(), configs[i].begin(), configs[i].end());
    must(o, args);
    must(o, {"preprocess", "--notes", tag + "/raw/notes.csv", "--meta", tag + "/raw/meta.csv", "--out",
             tag + "/corpus"});
    must(o, {"train", "--model", "lda", "--corpus", tag + "/corpus", "--out", tag + "/lda", "--topics", "6",
             "--lda-sweeps", "50"});
    must(o, {"train", "--model", "svm_lda", "--corpus", tag + "/corpus", "--lda", tag + "/lda/model.clnt", "--out",
             tag + "/svm", "--svm-epochs", "5"});
    auto m = ckpt::svm_from_checkpoint(ckpt::load_checkpoint(tag + "/svm/model.clnt"));
    for (std::size_t t = 1; t < m.train_sizes.size(); ++t)
      o.require(m.train_sizes[t] <= m.train_sizes[t - 1], "corpus " + std::to_string(i) + " t=" + std::to_string(t));
    o.require(m.train_sizes.size() > 1, "corpus " + std::to_string(i) + " has several classifiers");
    ++checked;
  }

  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<Vec>> thetas;
    std::vector<std::uint8_t> labels;
    for (int p = 0; p < 40; ++p) {
      thetas.emplace_back(1 + rng.uniform_int(12), Vec{0.5, 0.5});
      labels.push_back(rng.bernoulli(0.3));
    }
    std::size_t prev = thetas.size();
    for (std::size_t t = 1; t <= 13; ++t) {
      const std::size_t n = svm::time_point_set(thetas, labels, t).features.size();
      o.require(n <= prev, "random sequences");
      prev = n;
    }
    ++checked;
  }
  o.detail << checked << " corpora checked";
}

// Every command with fixed seeds, written under root.
std::string run_pipeline(Outcome& o, const std::string& root) {
  std::ostringstream stdout_log;
  auto step = [&](const std::vector<std::string>& args) { stdout_log << must(o, args).out; };
  const std::string raw = root + "/raw", corpus = root + "/corpus";
  step({"synth", "--out", raw, "--patients", "120", "--seed", "4"});
  step({"preprocess", "--notes", raw + "/notes.csv", "--meta", raw + "/meta.csv", "--out", corpus});
  step({"train", "--model", "lda", "--corpus", corpus, "--out", root + "/lda", "--topics", "5", "--lda-sweeps",
        "40"});
  step({"train", "--model", "svm_lda", "--corpus", corpus, "--lda", root + "/lda/model.clnt", "--out",
        root + "/svm_lda", "--svm-epochs", "5"});
  for (const char* m : {"lstm_lda", "lstm_e", "lstm_ed", "lstm_etd"}) {
    std::vector<std::string> args{"train", "--model", m, "--corpus", corpus, "--out", root + "/" + m,
                                  "--topics", "5", "--hidden", "6", "--steps", "30", "--eval-every", "10"};
    if (std::string(m) == "lstm_lda") args.insert(args.end(), {"--lda", root + "/lda/model.clnt"});
    step(args);
  }
  for (const char* m : {"svm_lda", "lstm_lda", "lstm_e", "lstm_ed", "lstm_etd"}) {
    const std::string ck = root + "/" + m + "/model.clnt";
    step({"eval", "--checkpoint", ck, "--corpus", corpus, "--out", root + "/" + m + "/auc.csv"});
    if (std::string(m) != "svm_lda")
      step({"latents", "--checkpoint", ck, "--corpus", corpus, "--out", root + "/" + m + "/latents.tsv"});
  }
  step({"topics", "--checkpoint", root + "/lstm_etd/model.clnt", "--corpus", corpus, "--source", "decoder",
        "--out", root + "/topics.txt"});
  step({"topics", "--checkpoint", root + "/lda/model.clnt", "--corpus", corpus, "--out", root + "/lda_topics.txt"});
  step({"knn", "--latents", root + "/lstm_e/latents.tsv", "--gold", root + "/lstm_lda/latents.tsv", "--k", "5",
        "--out", root + "/knn.txt"});
  return stdout_log.str();
}

void determinism(Outcome& o) {
  TempDir dir("acceptance_determinism");
  const std::string out_a = run_pipeline(o, dir / "a");
  const std::string out_b = run_pipeline(o, dir / "b");
  auto a = testutil::snapshot(dir.path() / "a");
  auto b = testutil::snapshot(dir.path() / "b");
  o.require(a == b, "output files differ");
  o.require(out_a == out_b, "stdout differs");
  std::size_t clnt = 0;
  for (const auto& [name, content] : a) clnt += name.ends_with(".clnt");
  o.detail << a.size() << " files compared, " << clnt << " checkpoints";
}

void round_trips(Outcome& o) {
  TempDir dir("acceptance_roundtrip");
  run_pipeline(o, dir.path().string());
  std::size_t checkpoints = 0;
  for (const auto& [name, bytes] : testutil::snapshot(dir.path())) {
    if (!name.ends_with(".clnt")) continue;
    const auto c = ckpt::load_checkpoint(dir.path() / name);
    const std::string resaved = dir / (name + ".again");
    ckpt::save_checkpoint(resaved, c);
    o.require(testutil::slurp(resaved) == bytes, name + " save/load/save");
    ++checkpoints;
  }

  synth::SynthConfig cfg;
  cfg.n_patients = 120;
  cfg.seed = 4;
  const auto sc = synth::gen_corpus(cfg);
  o.require(corpus::read_notes_csv(dir.path() / "raw/notes.csv") == sc.notes, "notes.csv parse");
  o.require(corpus::read_meta_csv(dir.path() / "raw/meta.csv") == sc.meta, "meta.csv parse");
  const std::string weights = testutil::slurp(dir.path() / "corpus/corpus.tsv");
  const std::string counts = testutil::slurp(dir.path() / "corpus/counts.tsv");
  const auto records = corpus::parse_corpus(weights, counts);
  o.require(corpus::format_corpus(records) == weights, "corpus.tsv round trip");
  o.require(corpus::format_corpus(records, true) == counts, "counts.tsv round trip");

  std::size_t suites = 0;
  for (const char* suite : CLINISEQ_UNIT_SUITES) {
    const std::string cmd = std::string(suite) + " > /dev/null 2>&1";
    o.require(std::system(cmd.c_str()) == 0, std::string(suite));
    ++suites;
  }
  o.detail << checkpoints << " checkpoints, " << suites << " invariant suites";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<void(Outcome&)> check;
  };
  const Criterion criteria[] = {
      {1, "gradient correctness", 30, gradients},
      {2, "oracle equivalence", 60, oracles},
      {3, "loss algebra", 60, loss_algebra},
      {4, "LDA recovery", 120, lda_recovery},
      {5, "end-to-end replication", 1800, replication},
      {6, "baseline exclusion", 300, exclusion},
      {7, "determinism", 600, determinism},
      {8, "format round-trips and invariants", 900, round_trips},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.check(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs < c.budget_seconds, "runtime over " + fixed(c.budget_seconds, 0) + "s");
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail.str()
              << " [" << fixed(secs, 1) << "s]" << std::endl;
  }
  return failed ? 1 : 0;
}
