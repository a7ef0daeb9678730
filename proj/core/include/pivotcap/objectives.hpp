#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pivotcap/models.hpp"
#include "pivotcap/vocab.hpp"

namespace pivotcap {

// Row pairs (first matrix, second matrix) for every content token two
// vocabularies share, matched by surface string. Reserved tokens are
// excluded: they exist in every vocabulary regardless of the corpora, so
// tying them would add corpus-independent terms.
struct SharedVocabMap {
  std::vector<std::pair<int, int>> pairs;
};
SharedVocabMap build_shared_vocab_map(const Vocab& a, const Vocab& b);

// Mean cross-entropy in nats per unmasked token. logits [T x V], row t
// scored against targets[t] where mask[t] is nonzero.
TensorPtr xe_loss(Tape& tape, const TensorPtr& logits,
                  const std::vector<int>& targets,
                  const std::vector<std::uint8_t>& mask);
TensorPtr xe_loss(Tape& tape, const TeacherBatch& batch);

// Sum over shared rows of sqrt(|a_row - b_row|^2 + eps). Gradient flows
// only into `trainable`; `frozen` is treated as a constant. An empty map
// contributes a constant 0.
TensorPtr embed_align_reg(Tape& tape, const TensorPtr& trainable,
                          const TensorPtr& frozen, const SharedVocabMap& map,
                          double eps = 1e-12);

// Which matrix of each model a regularizer ties. The output projection's
// rows are the default reading of "output embeddings"; the input
// embedding is the alternative site.
enum class TieSite { kOutputProjection, kInputEmbedding };

struct RegConfig {
  double lambda = 1.0;
  double eps = 1e-12;
  // Pivot-side tie: captioner (frozen) vs translator encoder embedding
  // (trainable). The site picks the captioner matrix.
  TieSite pivot_site = TieSite::kOutputProjection;
  // Target-side tie: autoencoder (frozen) vs translator decoder side
  // (trainable). The site picks both matrices.
  TieSite target_site = TieSite::kOutputProjection;
  bool use_pivot = true;
  bool use_target = true;
};

// The regularizer terms on their own, e.g. for logging distances.
// pivot_map pairs (translator source id, captioner id); target_map pairs
// (translator target id, autoencoder id).
TensorPtr pivot_align_reg(Tape& tape, const CaptionerParams& cap,
                          const TranslatorParams& mt,
                          const SharedVocabMap& pivot_map,
                          const RegConfig& reg);
TensorPtr target_align_reg(Tape& tape, const TranslatorParams& mt,
                           const AutoencoderParams& ae,
                           const SharedVocabMap& target_map,
                           const RegConfig& reg);

struct JointLossBreakdown {
  double l_ix = 0.0;
  double l_xy = 0.0;
  double l_yy = 0.0;
  double r_pivot = 0.0;
  double r_target = 0.0;
  double total = 0.0;
};

struct JointLossResult {
  TensorPtr total;  // scalar on the tape, minimization form
  JointLossBreakdown breakdown;
};

// total = xe(cap) + xe(mt) + xe(ae) + lambda * (r_pivot + r_target),
// with regularizer terms dropped when their switch or map is empty.
JointLossResult joint_loss(Tape& tape, const CaptionerParams& cap,
                           const TranslatorParams& mt,
                           const AutoencoderParams& ae,
                           const TeacherBatch& cap_batch,
                           const TeacherBatch& mt_batch,
                           const TeacherBatch& ae_batch,
                           const SharedVocabMap& pivot_map,
                           const SharedVocabMap& target_map,
                           const RegConfig& reg);

// The two-model baseline objective: xe(cap) + xe(mt), nothing else.
TensorPtr pipeline_loss(Tape& tape, const TeacherBatch& cap_batch,
                        const TeacherBatch& mt_batch);

}  // namespace pivotcap
