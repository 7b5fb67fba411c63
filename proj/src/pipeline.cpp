#include "cliniseq/pipeline.hpp"

#include <algorithm>

#include "cliniseq/error.hpp"
#include "cliniseq/parallel.hpp"
#include "cliniseq/rng.hpp"

namespace cliniseq::pipeline {

namespace {

std::vector<const PatientRecord*> lookup(const corpus::CorpusDir& dir, std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  std::vector<const PatientRecord*> out;
  for (const auto& id : ids) {
    const PatientRecord* p = dir.find(id);
    if (!p) throw InputError("split lists unknown patient " + id);
    out.push_back(p);
  }
  return out;
}

}  // namespace

TaskSplit task_split(const corpus::CorpusDir& dir, corpus::Task task, std::uint64_t seed) {
  auto is_positive = [&](const std::string& id) {
    const PatientRecord* p = dir.find(id);
    if (!p) throw InputError("split lists unknown patient " + id);
    return p->labels.get(task);
  };
  Rng rng(mix_seed(seed, "downsample"));
  TaskSplit s;
  s.train = lookup(dir, corpus::downsample_negatives(dir.split.train, is_positive, rng));
  s.validation = lookup(dir, dir.split.validation);
  s.test = lookup(dir, dir.split.test);
  return s;
}

std::vector<const PatientRecord*> select_split(const corpus::CorpusDir& dir, const TaskSplit& split,
                                               const std::string& name) {
  if (name == "train") return split.train;
  if (name == "validation") return split.validation;
  if (name == "test") return split.test;
  if (name == "all") {
    std::vector<const PatientRecord*> out;
    for (const auto& p : dir.patients) out.push_back(&p);
    return out;
  }
  throw InputError("unknown split '" + name + "' (train, validation, test or all)");
}

std::vector<std::uint8_t> labels_of(const std::vector<const PatientRecord*>& patients, corpus::Task task) {
  std::vector<std::uint8_t> out;
  for (const auto* p : patients) out.push_back(p->labels.get(task) ? 1 : 0);
  return out;
}

std::vector<lda::Document> time_point_documents(const std::vector<const PatientRecord*>& patients) {
  std::vector<lda::Document> docs;
  for (const auto* p : patients) {
    if (p->bow.counts.size() != p->bow.vectors.size())
      throw InputError("patient " + p->patient_id + " lacks integer counts (counts.tsv)");
    for (const auto& c : p->bow.counts)
      if (!c.empty()) docs.push_back(lda::expand_counts(c));
  }
  return docs;
}

std::vector<std::vector<Vec>> fold_in(const lda::LdaModel& model, const std::vector<const PatientRecord*>& patients,
                                      const lda::FoldInOptions& options, std::uint64_t seed) {
  std::vector<std::vector<Vec>> out(patients.size());
  parallel_for(patients.size(), [&](std::size_t i) {
    const PatientRecord& p = *patients[i];
    if (p.bow.counts.size() != p.bow.vectors.size())
      throw InputError("patient " + p.patient_id + " lacks integer counts (counts.tsv)");
    out[i] = lda::topic_vectors_for_sequence(model, p.bow.counts, options, mix_seed(seed, p.patient_id));
  });
  return out;
}

std::vector<models::Example> make_examples(const std::vector<const PatientRecord*>& patients, corpus::Task task,
                                           const std::vector<std::vector<Vec>>* thetas) {
  std::vector<models::Example> out;
  out.reserve(patients.size());
  for (std::size_t i = 0; i < patients.size(); ++i) {
    models::Example e;
    e.patient_id = patients[i]->patient_id;
    e.label = patients[i]->labels.get(task);
    if (thetas) {
      for (const auto& z : (*thetas)[i]) e.inputs.push_back(SparseVec::from_dense(z));
    } else {
      e.inputs = patients[i]->bow.vectors;
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace cliniseq::pipeline
