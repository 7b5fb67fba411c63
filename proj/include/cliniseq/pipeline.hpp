#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cliniseq/corpus.hpp"
#include "cliniseq/corpus_io.hpp"
#include "cliniseq/lda.hpp"
#include "cliniseq/models.hpp"

namespace cliniseq::pipeline {

using corpus::PatientRecord;

// Patients of one split, in patient-id order.
struct TaskSplit {
  std::vector<const PatientRecord*> train;  // after per-task negative downsampling
  std::vector<const PatientRecord*> validation;
  std::vector<const PatientRecord*> test;
};

TaskSplit task_split(const corpus::CorpusDir& dir, corpus::Task task, std::uint64_t seed);

// "train" | "validation" | "test" | "all"
std::vector<const PatientRecord*> select_split(const corpus::CorpusDir& dir, const TaskSplit& split,
                                               const std::string& name);

std::vector<std::uint8_t> labels_of(const std::vector<const PatientRecord*>& patients, corpus::Task task);

// One document per non-empty time point of the given patients.
std::vector<lda::Document> time_point_documents(const std::vector<const PatientRecord*>& patients);

// Topic vectors per patient; each patient uses a sub-seed keyed by its id.
std::vector<std::vector<Vec>> fold_in(const lda::LdaModel& model, const std::vector<const PatientRecord*>& patients,
                                      const lda::FoldInOptions& options, std::uint64_t seed);

// Inputs for the joint models: normalized bags of words, or topic vectors
// when thetas is given.
std::vector<models::Example> make_examples(const std::vector<const PatientRecord*>& patients, corpus::Task task,
                                           const std::vector<std::vector<Vec>>* thetas = nullptr);

}  // namespace cliniseq::pipeline
