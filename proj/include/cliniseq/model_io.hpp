#pragma once

#include <string>

#include "cliniseq/checkpoint.hpp"
#include "cliniseq/lda.hpp"
#include "cliniseq/models.hpp"
#include "cliniseq/svm.hpp"

namespace cliniseq::ckpt {

// Joint model tensors under their canonical names; metadata gains kind,
// K, H and V.
void add_joint(Checkpoint& c, const models::JointModelParams& params);
// Throws CompatibilityError on a missing or mis-shaped tensor.
models::JointModelParams joint_from_checkpoint(const Checkpoint& c);

// "phi" and "topic_word_counts" (prefixed), scalars K, V, alpha, beta.
void add_lda(Checkpoint& c, const lda::LdaModel& model, const std::string& prefix = "");
lda::LdaModel lda_from_checkpoint(const Checkpoint& c, const std::string& prefix = "");

// svm.t<t>.w tensors; svm.t<t>.{b,C,pos_weight,n_train} metadata.
void add_svm(Checkpoint& c, const svm::SvmLdaModel& model);
svm::SvmLdaModel svm_from_checkpoint(const Checkpoint& c);

}  // namespace cliniseq::ckpt
