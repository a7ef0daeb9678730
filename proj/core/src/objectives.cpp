#include "pivotcap/objectives.hpp"

#include <string>

#include "pivotcap/error.hpp"

namespace pivotcap {

namespace {

TensorPtr gather_pairs(Tape& tape, const TensorPtr& m, bool first,
                       const SharedVocabMap& map) {
  std::vector<int> ids;
  ids.reserve(map.pairs.size());
  for (const auto& [a, b] : map.pairs) {
    const int id = first ? a : b;
    if (id < 0 || id >= m->rows())
      throw Error("embed_align_reg: row " + std::to_string(id) +
                  " outside matrix " + m->shape_str());
    ids.push_back(id);
  }
  return tape.embedding_lookup(m, ids);
}

const TensorPtr& cap_site(const CaptionerParams& cap, TieSite site) {
  return site == TieSite::kOutputProjection ? cap.out_proj.w : cap.in_emb;
}

}  // namespace

SharedVocabMap build_shared_vocab_map(const Vocab& a, const Vocab& b) {
  SharedVocabMap map;
  for (int id = kNumReserved; id < a.size(); ++id) {
    const auto& surface = a.token(id);
    if (b.contains(surface)) {
      const int other = b.id(surface);
      if (other >= kNumReserved) map.pairs.emplace_back(id, other);
    }
  }
  return map;
}

TensorPtr xe_loss(Tape& tape, const TensorPtr& logits,
                  const std::vector<int>& targets,
                  const std::vector<std::uint8_t>& mask) {
  const int rows = logits->rows();
  if (static_cast<int>(targets.size()) != rows ||
      static_cast<int>(mask.size()) != rows)
    throw Error("xe_loss: " + std::to_string(rows) + " logit rows vs " +
                std::to_string(targets.size()) + " targets and " +
                std::to_string(mask.size()) + " mask entries");
  long kept = 0;
  for (auto k : mask)
    if (k) ++kept;
  if (kept == 0) throw Error("xe_loss: every position is masked");

  const auto picked = tape.pick(tape.log_softmax(logits), targets);
  std::vector<double> weights(rows, 0.0);
  for (int t = 0; t < rows; ++t)
    if (mask[t]) weights[t] = -1.0 / static_cast<double>(kept);
  return tape.weighted_sum(picked, weights);
}

TensorPtr xe_loss(Tape& tape, const TeacherBatch& batch) {
  return xe_loss(tape, batch.logits, batch.targets, batch.mask);
}

TensorPtr embed_align_reg(Tape& tape, const TensorPtr& trainable,
                          const TensorPtr& frozen, const SharedVocabMap& map,
                          double eps) {
  if (map.pairs.empty()) return make_tensor({1});
  if (trainable->cols() != frozen->cols())
    throw Error("embed_align_reg: width mismatch " + trainable->shape_str() +
                " vs " + frozen->shape_str());
  const auto a = gather_pairs(tape, trainable, true, map);
  const auto b = gather_pairs(tape, tape.stop_gradient(frozen), false, map);
  return tape.sum(tape.l2_rows(tape.sub(a, b), eps));
}

TensorPtr pivot_align_reg(Tape& tape, const CaptionerParams& cap,
                          const TranslatorParams& mt,
                          const SharedVocabMap& pivot_map,
                          const RegConfig& reg) {
  return embed_align_reg(tape, mt.enc_emb, cap_site(cap, reg.pivot_site),
                         pivot_map, reg.eps);
}

TensorPtr target_align_reg(Tape& tape, const TranslatorParams& mt,
                           const AutoencoderParams& ae,
                           const SharedVocabMap& target_map,
                           const RegConfig& reg) {
  const bool out = reg.target_site == TieSite::kOutputProjection;
  return embed_align_reg(tape, out ? mt.out_proj.w : mt.dec_emb,
                         out ? ae.out_proj.w : ae.emb, target_map, reg.eps);
}

JointLossResult joint_loss(Tape& tape, const CaptionerParams& cap,
                           const TranslatorParams& mt,
                           const AutoencoderParams& ae,
                           const TeacherBatch& cap_batch,
                           const TeacherBatch& mt_batch,
                           const TeacherBatch& ae_batch,
                           const SharedVocabMap& pivot_map,
                           const SharedVocabMap& target_map,
                           const RegConfig& reg) {
  if (reg.lambda < 0.0) throw Error("joint_loss: lambda must be >= 0");

  const auto l_ix = xe_loss(tape, cap_batch);
  const auto l_xy = xe_loss(tape, mt_batch);
  const auto l_yy = xe_loss(tape, ae_batch);

  TensorPtr r_pivot = reg.use_pivot
                          ? pivot_align_reg(tape, cap, mt, pivot_map, reg)
                          : make_tensor({1});
  TensorPtr r_target = reg.use_target
                           ? target_align_reg(tape, mt, ae, target_map, reg)
                           : make_tensor({1});

  const auto xe_sum = tape.add(tape.add(l_ix, l_xy), l_yy);
  const auto total = tape.add(
      xe_sum, tape.scale(tape.add(r_pivot, r_target), reg.lambda));

  JointLossResult out;
  out.total = total;
  out.breakdown.l_ix = l_ix->data[0];
  out.breakdown.l_xy = l_xy->data[0];
  out.breakdown.l_yy = l_yy->data[0];
  out.breakdown.r_pivot = r_pivot->data[0];
  out.breakdown.r_target = r_target->data[0];
  out.breakdown.total = total->data[0];
  if (!total->all_finite())
    throw Error("joint_loss: non-finite objective");
  return out;
}

TensorPtr pipeline_loss(Tape& tape, const TeacherBatch& cap_batch,
                        const TeacherBatch& mt_batch) {
  return tape.add(xe_loss(tape, cap_batch), xe_loss(tape, mt_batch));
}

}  // namespace pivotcap
