#include "cliniseq/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>

#include "cliniseq/checkpoint.hpp"
#include "cliniseq/corpus.hpp"
#include "cliniseq/corpus_io.hpp"
#include "cliniseq/error.hpp"
#include "cliniseq/eval.hpp"
#include "cliniseq/lda.hpp"
#include "cliniseq/model_io.hpp"
#include "cliniseq/models.hpp"
#include "cliniseq/pipeline.hpp"
#include "cliniseq/svm.hpp"
#include "cliniseq/synth.hpp"

namespace cliniseq::cli {

namespace fs = std::filesystem;
using corpus::format_real;

namespace {

struct PreprocessOpts {
  std::string notes, meta, out, stop_words;
  std::uint64_t seed = 1;
  std::size_t vocab_cap = 500;
};

struct SynthOpts {
  std::string out;
  synth::SynthConfig config;
};

struct TrainOpts {
  std::string model, corpus, out, task = "hospital", lda;
  std::size_t topics = lda::kDefaultTopics;
  std::size_t hidden = 128;
  std::size_t lda_sweeps = 200;
  std::optional<double> lda_alpha;
  double lda_beta = lda::kDefaultBeta;
  std::size_t fold_burn_in = 20, fold_samples = 30;
  std::size_t svm_epochs = svm::kDefaultEpochs;
  std::size_t svm_max_t = 0;
  bool cfn_grid = false;
  bool no_decoder_l1 = false;
  std::vector<std::string> freeze;
  models::TrainConfig config;
};

struct EvalOpts {
  std::string checkpoint, corpus, out, split = "test", task;
  std::size_t horizon = 0;
};

struct TopicsOpts {
  std::string checkpoint, corpus, out, source;
  std::size_t n = 10;
};

struct LatentsOpts {
  std::string checkpoint, corpus, out, split = "test", task;
};

struct KnnOpts {
  std::string latents, gold, out;
  std::size_t k = 5;
};

// ---------------------------------------------------------------- helpers

ckpt::Checkpoint load_model(const std::string& path) {
  ckpt::Checkpoint c = ckpt::load_checkpoint(path);
  c.require_meta("model");
  return c;
}

std::string model_of(const ckpt::Checkpoint& c) { return c.require_meta("model"); }

lda::FoldInOptions fold_options(const ckpt::Checkpoint& c) {
  lda::FoldInOptions o;
  if (c.meta("fold_burn_in")) o.burn_in = c.meta_size("fold_burn_in");
  if (c.meta("fold_samples")) o.samples = c.meta_size("fold_samples");
  return o;
}

std::uint64_t seed_of(const ckpt::Checkpoint& c) {
  return c.meta("seed") ? static_cast<std::uint64_t>(std::stoull(*c.meta("seed"))) : 1;
}

// LDA part of a checkpoint: bare for model=lda, "lda."-prefixed otherwise.
lda::LdaModel lda_part(const ckpt::Checkpoint& c) {
  const std::string prefix = model_of(c) == "lda" ? "" : "lda.";
  if (!c.has(prefix + "phi")) throw CompatibilityError("checkpoint has no LDA topics");
  return ckpt::lda_from_checkpoint(c, prefix);
}

void check_vocab(std::size_t model_v, const corpus::Vocab& vocab) {
  if (model_v != vocab.size())
    throw CompatibilityError("model vocabulary size " + std::to_string(model_v) + " does not match corpus size " +
                             std::to_string(vocab.size()));
}

corpus::Task task_for(const std::string& flag, const ckpt::Checkpoint& c) {
  if (!flag.empty()) return corpus::parse_task(flag);
  if (auto t = c.meta("task")) return corpus::parse_task(*t);
  return corpus::Task::Hospital;
}

// Topic vectors of patients under the checkpoint's LDA model.
std::vector<std::vector<Vec>> thetas_for(const ckpt::Checkpoint& c, const corpus::CorpusDir& dir,
                                         const std::vector<const corpus::PatientRecord*>& patients) {
  const lda::LdaModel m = lda_part(c);
  check_vocab(m.V, dir.vocab);
  return pipeline::fold_in(m, patients, fold_options(c), seed_of(c));
}

std::vector<Vec> score_patients(const ckpt::Checkpoint& c, const corpus::CorpusDir& dir,
                                const std::vector<const corpus::PatientRecord*>& patients, corpus::Task task) {
  const std::string model = model_of(c);
  if (model == "lda") throw InputError("an lda checkpoint has no outcome classifier");
  if (model == "svm_lda") {
    const auto thetas = thetas_for(c, dir, patients);
    const svm::SvmLdaModel svm = ckpt::svm_from_checkpoint(c);
    std::vector<Vec> out;
    for (const auto& seq : thetas) out.push_back(svm::score_sequence(svm, seq));
    return out;
  }
  const models::JointModelParams params = ckpt::joint_from_checkpoint(c);
  if (params.kind == models::ModelKind::LstmLda) {
    const auto thetas = thetas_for(c, dir, patients);
    return models::predict_all(params, pipeline::make_examples(patients, task, &thetas));
  }
  check_vocab(params.dims.V, dir.vocab);
  return models::predict_all(params, pipeline::make_examples(patients, task));
}

void write_output(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  corpus::write_file(p, content);
}

// ---------------------------------------------------------------- commands

int cmd_preprocess(const PreprocessOpts& o, std::ostream& out) {
  const auto notes = corpus::read_notes_csv(o.notes);
  if (notes.empty()) throw InputError("no patients: " + o.notes + " holds no notes");
  std::vector<corpus::PatientMeta> metas;
  for (const auto& row : corpus::read_meta_csv(o.meta)) metas.push_back(row.to_meta());
  std::optional<corpus::StopWords> stop;
  if (!o.stop_words.empty()) stop = corpus::StopWords::load(o.stop_words);
  corpus::PreprocessOptions options;
  options.seed = o.seed;
  options.vocab_cap = o.vocab_cap;
  options.stop_words = stop ? &*stop : nullptr;
  const corpus::PreprocessResult result = corpus::preprocess(notes, metas, options);
  if (result.patients.empty()) throw InputError("no patients left after filtering");
  corpus::save_corpus_dir(o.out, result);
  out << corpus::format_stats(result.stats);
  return kExitOk;
}

int cmd_synth(const SynthOpts& o, std::ostream& out) {
  const synth::SynthCorpus s = synth::gen_corpus(o.config);
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  corpus::write_file(dir / "notes.csv", corpus::format_notes_csv(s.notes));
  corpus::write_file(dir / "meta.csv", corpus::format_meta_csv(s.meta));
  ckpt::Checkpoint truth;
  const auto& c = o.config;
  truth.metadata = {{"model", "synth_truth"},
                    {"n_patients", std::to_string(c.n_patients)},
                    {"vocab_size", std::to_string(c.vocab_size)},
                    {"n_topics", std::to_string(c.n_topics)},
                    {"n_risk_topics", std::to_string(c.n_risk_topics)},
                    {"mean_seq_len", format_real(c.mean_seq_len)},
                    {"doc_len", std::to_string(c.doc_len)},
                    {"empty_rate", format_real(c.empty_rate)},
                    {"risk_strength", format_real(c.risk_strength)},
                    {"positive_rate", format_real(c.positive_rate)},
                    {"seed", std::to_string(c.seed)},
                    {"offset", format_real(s.truth.offset)}};
  truth.add("phi_star", s.truth.phi_star);
  truth.add("risk", Tensor({s.truth.risk.size()}, s.truth.risk));
  ckpt::save_checkpoint(dir / "truth.clnt", truth);
  std::size_t pos = 0;
  for (const auto& p : s.truth.patients) pos += p.label ? 1 : 0;
  out << "patients " << s.truth.patients.size() << " positives " << pos << " notes " << s.notes.size() << '\n';
  return kExitOk;
}

void record_config(ckpt::Checkpoint& c, const TrainOpts& o) {
  const auto& t = o.config;
  c.metadata["lr"] = format_real(t.lr);
  c.metadata["batch"] = std::to_string(t.batch_size);
  c.metadata["steps"] = std::to_string(t.steps);
  c.metadata["lambda1"] = format_real(t.lambda1);
  c.metadata["lambda2"] = format_real(t.lambda2);
  c.metadata["lambda3"] = format_real(t.lambda3);
  c.metadata["cfn"] = format_real(t.cfn);
  c.metadata["decoder_l1"] = t.decoder_l1 ? "1" : "0";
}

lda::LdaModel obtain_lda(const TrainOpts& o, const corpus::CorpusDir& dir, const pipeline::TaskSplit& split,
                         std::vector<models::MetricsRow>* metrics) {
  if (!o.lda.empty()) {
    const ckpt::Checkpoint c = load_model(o.lda);
    lda::LdaModel m = lda_part(c);
    check_vocab(m.V, dir.vocab);
    return m;
  }
  const auto docs = pipeline::time_point_documents(split.train);
  const double alpha = o.lda_alpha.value_or(lda::default_alpha(o.topics));
  const std::size_t log_every = o.config.log_every;
  return lda::fit_gibbs(docs, dir.vocab.size(), o.topics, alpha, o.lda_beta, o.lda_sweeps,
                        mix_seed(o.config.seed, "lda"), [&](std::size_t sweep, const lda::GibbsState& s) {
                          if (metrics && (sweep % log_every == 0 || sweep == o.lda_sweeps))
                            metrics->push_back({sweep, -s.log_likelihood_per_token(), std::nullopt});
                        });
}

int cmd_train(const TrainOpts& in, std::ostream& out) {
  TrainOpts o = in;
  o.config.decoder_l1 = !o.no_decoder_l1;
  o.config.frozen = std::set<std::string>(o.freeze.begin(), o.freeze.end());
  o.config.validate();
  const corpus::Task task = corpus::parse_task(o.task);
  const corpus::CorpusDir dir = corpus::load_corpus_dir(o.corpus);
  const pipeline::TaskSplit split = pipeline::task_split(dir, task, o.config.seed);
  if (split.train.empty()) throw InputError("training split is empty");

  ckpt::Checkpoint c;
  c.metadata["model"] = o.model;
  c.metadata["task"] = std::string(corpus::task_name(task));
  c.metadata["seed"] = std::to_string(o.config.seed);
  std::vector<models::MetricsRow> metrics;
  std::string summary;

  if (o.model == "lda") {
    const lda::LdaModel m = obtain_lda(o, dir, split, &metrics);
    ckpt::add_lda(c, m);
    c.metadata["sweeps"] = std::to_string(o.lda_sweeps);
    summary = "topics " + std::to_string(m.K);
  } else if (o.model == "svm_lda") {
    const lda::LdaModel m = obtain_lda(o, dir, split, nullptr);
    ckpt::add_lda(c, m, "lda.");
    const lda::FoldInOptions fold{o.fold_burn_in, o.fold_samples};
    c.metadata["fold_burn_in"] = std::to_string(fold.burn_in);
    c.metadata["fold_samples"] = std::to_string(fold.samples);
    const auto train_thetas = pipeline::fold_in(m, split.train, fold, o.config.seed);
    const auto val_thetas = pipeline::fold_in(m, split.validation, fold, o.config.seed);
    svm::SvmLdaOptions so;
    so.epochs = o.svm_epochs;
    so.max_time_points = o.svm_max_t;
    so.seed = mix_seed(o.config.seed, "svm");
    const svm::SvmLdaModel svm = svm::train_svm_lda(train_thetas, pipeline::labels_of(split.train, task),
                                                    val_thetas, pipeline::labels_of(split.validation, task), so);
    ckpt::add_svm(c, svm);
    const auto val_labels = pipeline::labels_of(split.validation, task);
    for (std::size_t t = 1; t <= svm.per_time_point.size(); ++t) {
      const svm::TimePointSet vs = svm::time_point_set(val_thetas, val_labels, t);
      std::vector<double> scores;
      std::vector<std::uint8_t> labels;
      for (std::size_t i = 0; i < vs.features.size(); ++i) {
        scores.push_back(svm::svm_score(svm.per_time_point[t - 1], vs.features[i]));
        labels.push_back(vs.labels[i] > 0 ? 1 : 0);
      }
      metrics.push_back({t, std::nullopt, eval::auc(scores, labels)});
    }
    summary = "classifiers " + std::to_string(svm.per_time_point.size());
  } else {
    const models::ModelKind kind = models::parse_kind(o.model);
    models::TrainData data;
    models::ModelDims dims{dir.vocab.size(), o.topics, o.hidden};
    if (kind == models::ModelKind::LstmLda) {
      const lda::LdaModel m = obtain_lda(o, dir, split, nullptr);
      ckpt::add_lda(c, m, "lda.");
      const lda::FoldInOptions fold{o.fold_burn_in, o.fold_samples};
      c.metadata["fold_burn_in"] = std::to_string(fold.burn_in);
      c.metadata["fold_samples"] = std::to_string(fold.samples);
      const auto train_thetas = pipeline::fold_in(m, split.train, fold, o.config.seed);
      const auto val_thetas = pipeline::fold_in(m, split.validation, fold, o.config.seed);
      data.train = pipeline::make_examples(split.train, task, &train_thetas);
      data.validation = pipeline::make_examples(split.validation, task, &val_thetas);
      dims.K = m.K;
    } else {
      data.train = pipeline::make_examples(split.train, task);
      data.validation = pipeline::make_examples(split.validation, task);
    }
    const models::JointModelParams init = models::init_params(kind, dims, o.config.seed);
    models::TrainResult result;
    if (o.cfn_grid) {
      models::CfnSearchResult search = models::cfn_grid_search(data, init, o.config);
      o.config.cfn = search.best_cfn;
      std::string grid = "cfn,mean_val_auc\n";
      for (const auto& [cfn, auc] : search.mean_val_auc) grid += format_real(cfn) + ',' + format_real(auc) + '\n';
      fs::create_directories(o.out);
      corpus::write_file(fs::path(o.out) / "cfn_search.csv", grid);
      result = std::move(search.best);
    } else {
      result = models::train(data, init, o.config);
    }
    ckpt::add_joint(c, result.params);
    record_config(c, o);
    c.metadata["best_step"] = std::to_string(result.best_step);
    metrics = result.metrics;
    summary = "best_step " + std::to_string(result.best_step) +
              (result.best_val_auc ? " val_auc " + format_real(*result.best_val_auc) : "");
  }

  fs::create_directories(o.out);
  ckpt::save_checkpoint(fs::path(o.out) / "model.clnt", c);
  corpus::write_file(fs::path(o.out) / "metrics.csv", models::format_metrics_csv(metrics));
  out << o.model << ' ' << summary << '\n';
  return kExitOk;
}

int cmd_eval(const EvalOpts& o, std::ostream& out) {
  const ckpt::Checkpoint c = load_model(o.checkpoint);
  const corpus::Task task = task_for(o.task, c);
  const corpus::CorpusDir dir = corpus::load_corpus_dir(o.corpus);
  const pipeline::TaskSplit split = pipeline::task_split(dir, task, seed_of(c));
  const auto patients = pipeline::select_split(dir, split, o.split);
  if (patients.empty()) throw InputError("split '" + o.split + "' is empty");
  const auto scores = score_patients(c, dir, patients, task);
  const auto labels = pipeline::labels_of(patients, task);
  std::vector<std::size_t> lengths;
  for (const auto* p : patients) lengths.push_back(p->bow.length());
  const std::size_t horizon = o.horizon ? o.horizon : eval::default_horizon(lengths);
  const eval::AucReport report = eval::eval_per_time_point(scores, labels, horizon);
  write_output(o.out, eval::format_auc_csv(report, corpus::task_name(task), model_of(c)), out);
  if (!o.out.empty() && o.out != "-") {
    const auto mean = report.mean_auc();
    const auto final_auc = eval::final_time_point_auc(scores, labels);
    out << "mean_auc " << (mean ? format_real(*mean) : "NA") << " final_auc "
        << (final_auc ? format_real(*final_auc) : "NA") << '\n';
  }
  return kExitOk;
}

int cmd_topics(const TopicsOpts& o, std::ostream& out) {
  const ckpt::Checkpoint c = load_model(o.checkpoint);
  const corpus::Vocab vocab = corpus::parse_vocab(corpus::read_file(fs::path(o.corpus) / "vocab.tsv"));
  std::string source = o.source;
  if (source.empty()) source = c.meta("kind") && *c.meta("kind") != "lstm_lda" ? "encoder" : "lda";
  std::string text;
  if (source == "lda") {
    const lda::LdaModel m = lda_part(c);
    text = eval::format_topics(m.phi, eval::WeightLayout::TopicMajor, o.n, vocab);
  } else if (source == "encoder") {
    if (!c.has("encoder.W")) throw CompatibilityError("checkpoint has no encoder");
    text = eval::format_topics(c.tensor("encoder.W"), eval::WeightLayout::TopicMajor, o.n, vocab);
  } else if (source == "decoder") {
    if (!c.has("decoder.W")) throw CompatibilityError("checkpoint has no decoder");
    text = eval::format_topics(c.tensor("decoder.W"), eval::WeightLayout::WordMajor, o.n, vocab);
  } else {
    throw InputError("unknown topic source '" + source + "' (encoder, decoder or lda)");
  }
  write_output(o.out, text, out);
  return kExitOk;
}

int cmd_latents(const LatentsOpts& o, std::ostream& out) {
  const ckpt::Checkpoint c = load_model(o.checkpoint);
  const corpus::Task task = task_for(o.task, c);
  const corpus::CorpusDir dir = corpus::load_corpus_dir(o.corpus);
  const pipeline::TaskSplit split = pipeline::task_split(dir, task, seed_of(c));
  const auto patients = pipeline::select_split(dir, split, o.split);
  std::vector<eval::LatentRow> rows;
  const bool joint_encoder = c.meta("kind") && *c.meta("kind") != "lstm_lda";
  if (joint_encoder) {
    const models::JointModelParams params = ckpt::joint_from_checkpoint(c);
    check_vocab(params.dims.V, dir.vocab);
    for (const auto* p : patients) {
      const models::ForwardTrace trace = models::forward(params, p->bow.vectors);
      for (std::size_t t = 0; t < trace.steps.size(); ++t)
        if (!trace.steps[t].empty) rows.push_back({p->patient_id, t + 1, p->labels.get(task), trace.steps[t].z});
    }
  } else {
    const auto thetas = thetas_for(c, dir, patients);
    for (std::size_t i = 0; i < patients.size(); ++i)
      for (std::size_t t = 0; t < thetas[i].size(); ++t)
        if (!patients[i]->bow.vectors[t].empty())
          rows.push_back({patients[i]->patient_id, t + 1, patients[i]->labels.get(task), thetas[i][t]});
  }
  write_output(o.out, eval::format_latents(rows), out);
  return kExitOk;
}

int cmd_knn(const KnnOpts& o, std::ostream& out) {
  const auto rows = eval::parse_latents(corpus::read_file(o.latents));
  std::vector<Vec> latents;
  for (const auto& r : rows) latents.push_back(r.z);
  double value = 0.0;
  if (o.gold == "patient") {
    std::vector<std::string> groups;
    for (const auto& r : rows) groups.push_back(r.patient_id);
    value = eval::knn_overlap_groups(latents, groups, o.k);
  } else {
    const auto gold = eval::parse_latents(corpus::read_file(o.gold));
    if (gold.size() != rows.size()) throw InputError("candidate and gold latents differ in row count");
    std::vector<Vec> reference;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i].patient_id != rows[i].patient_id || gold[i].t != rows[i].t)
        throw InputError("candidate and gold latents are not aligned at row " + std::to_string(i + 1));
      reference.push_back(gold[i].z);
    }
    value = eval::knn_overlap_reference(latents, reference, o.k);
  }
  std::string line = format_real(value);
  if (line.find_first_of(".e") == std::string::npos) line += ".0";
  line += '\n';
  if (!o.out.empty() && o.out != "-") write_output(o.out, line, out);
  out << line;
  return kExitOk;
}

// ---------------------------------------------------------------- parsing

std::optional<std::string> config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Config-file settings as "--key=value" arguments for sub.
std::vector<std::string> config_args(const std::string& path, CLI::App& sub) {
  const std::string content = corpus::read_file(path);
  std::vector<std::string> out;
  std::size_t start = 0, line_no = 0;
  while (start <= content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    const std::string line = trim(content.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') {
      if (end == content.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError(path + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (key == "config" || !opt)
      throw InputError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "' for " + sub.get_name());
    out.push_back("--" + key + "=" + value);
    if (end == content.size()) break;
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sequential clinical-text outcome prediction", "cliniseq"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  int code = kExitOk;

  PreprocessOpts pre;
  auto* p = app.add_subcommand("preprocess", "Notes and metadata CSVs to a corpus directory");
  p->add_option("--notes", pre.notes, "notes CSV")->required();
  p->add_option("--meta", pre.meta, "patient metadata CSV")->required();
  p->add_option("--out", pre.out, "output corpus directory")->required();
  p->add_option("--seed", pre.seed, "split seed");
  p->add_option("--vocab-cap", pre.vocab_cap, "top tf-idf words kept per training patient");
  p->add_option("--stop-words", pre.stop_words, "stop-word list (default: Onix)");

  SynthOpts syn;
  auto* s = app.add_subcommand("synth", "Generate a planted-topic corpus");
  s->add_option("--out", syn.out, "output directory")->required();
  s->add_option("--patients", syn.config.n_patients);
  s->add_option("--vocab-size", syn.config.vocab_size);
  s->add_option("--topics", syn.config.n_topics);
  s->add_option("--risk-topics", syn.config.n_risk_topics);
  s->add_option("--mean-seq-len", syn.config.mean_seq_len);
  s->add_option("--doc-len", syn.config.doc_len);
  s->add_option("--empty-rate", syn.config.empty_rate);
  s->add_option("--risk-strength", syn.config.risk_strength);
  s->add_option("--positive-rate", syn.config.positive_rate);
  s->add_option("--seed", syn.config.seed);
  s->add_flag("--discharge-summaries", syn.config.discharge_summaries);

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "Train a model on a corpus directory");
  t->add_option("--model", tr.model, "lda, svm_lda, lstm_lda, lstm_e, lstm_ed or lstm_etd")
      ->required()
      ->check(CLI::IsMember({"lda", "svm_lda", "lstm_lda", "lstm_e", "lstm_ed", "lstm_etd"}));
  t->add_option("--corpus", tr.corpus, "corpus directory")->required();
  t->add_option("--out", tr.out, "output directory (model.clnt, metrics.csv)")->required();
  t->add_option("--task", tr.task, "hospital, 30d or 1y");
  t->add_option("--lda", tr.lda, "LDA checkpoint for svm_lda / lstm_lda");
  t->add_option("--topics", tr.topics, "topic layer size K");
  t->add_option("--hidden", tr.hidden, "LSTM hidden size H");
  t->add_option("--lr", tr.config.lr);
  t->add_option("--batch", tr.config.batch_size);
  t->add_option("--steps", tr.config.steps);
  t->add_option("--lambda1", tr.config.lambda1);
  t->add_option("--lambda2", tr.config.lambda2);
  t->add_option("--lambda3", tr.config.lambda3);
  t->add_option("--cfn", tr.config.cfn);
  t->add_flag("--cfn-grid", tr.cfn_grid, "search cfn in {1,2,4,8} on validation");
  t->add_flag("--no-decoder-l1", tr.no_decoder_l1, "drop lambda3 for lstm_ed");
  t->add_option("--freeze", tr.freeze, "tensor names excluded from updates")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  t->add_option("--seed", tr.config.seed);
  t->add_option("--log-every", tr.config.log_every);
  t->add_option("--eval-every", tr.config.eval_every);
  t->add_option("--lda-sweeps", tr.lda_sweeps);
  t->add_option("--lda-alpha", tr.lda_alpha);
  t->add_option("--lda-beta", tr.lda_beta);
  t->add_option("--fold-burn-in", tr.fold_burn_in);
  t->add_option("--fold-samples", tr.fold_samples);
  t->add_option("--svm-epochs", tr.svm_epochs);
  t->add_option("--svm-max-t", tr.svm_max_t, "cap on SVM time points (0: none)");

  EvalOpts ev;
  auto* e = app.add_subcommand("eval", "Per-time-point AUC of a trained model");
  e->add_option("--checkpoint", ev.checkpoint)->required();
  e->add_option("--corpus", ev.corpus)->required();
  e->add_option("--out", ev.out, "auc.csv path (default stdout)");
  e->add_option("--split", ev.split, "train, validation, test or all");
  e->add_option("--task", ev.task, "defaults to the training task");
  e->add_option("--horizon", ev.horizon, "last time point (0: 90th percentile length)");

  TopicsOpts to;
  auto* tp = app.add_subcommand("topics", "Top words per topic");
  tp->add_option("--checkpoint", to.checkpoint)->required();
  tp->add_option("--corpus", to.corpus, "corpus directory holding vocab.tsv")->required();
  tp->add_option("--out", to.out, "topics.txt path (default stdout)");
  tp->add_option("--source", to.source, "encoder, decoder or lda");
  tp->add_option("--n", to.n, "words per topic");

  LatentsOpts la;
  auto* l = app.add_subcommand("latents", "Export topic-layer vectors as TSV");
  l->add_option("--checkpoint", la.checkpoint)->required();
  l->add_option("--corpus", la.corpus)->required();
  l->add_option("--out", la.out, "latents.tsv path (default stdout)");
  l->add_option("--split", la.split);
  l->add_option("--task", la.task);

  KnnOpts kn;
  auto* k = app.add_subcommand("knn", "kNN overlap of latent vectors");
  k->add_option("--latents", kn.latents)->required();
  k->add_option("--gold", kn.gold, "reference latents TSV, or 'patient'")->required();
  k->add_option("--k", kn.k);
  k->add_option("--out", kn.out);

  for (auto* sub : {p, s, t, e, tp, l, k}) sub->add_option("--config", "key=value defaults for this command");

  try {
    std::vector<std::string> argv = args;
    if (!argv.empty()) {
      if (auto path = config_path(argv)) {
        CLI::App* sub = app.get_subcommand_no_throw(argv[0]);
        if (!sub) throw CLI::ExtrasError({argv[0]});
        auto cfg = config_args(*path, *sub);
        argv.insert(argv.begin() + 1, cfg.begin(), cfg.end());
      }
    }
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitInput;
  } catch (const InputError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitInput;
  }

  try {
    if (*p) code = cmd_preprocess(pre, out);
    else if (*s) code = cmd_synth(syn, out);
    else if (*t) code = cmd_train(tr, out);
    else if (*e) code = cmd_eval(ev, out);
    else if (*tp) code = cmd_topics(to, out);
    else if (*l) code = cmd_latents(la, out);
    else if (*k) code = cmd_knn(kn, out);
  } catch (const CompatibilityError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitCompatibility;
  } catch (const NumericError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitNumeric;
  } catch (const InputError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitInput;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitInput;
  }
  return code;
}

}  // namespace cliniseq::cli
