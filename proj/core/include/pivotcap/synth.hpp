#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pivotcap/metrics.hpp"
#include "pivotcap/rng.hpp"
#include "pivotcap/tensor.hpp"

namespace pivotcap {

// A scene is the latent "image content": one pick from each of four
// small inventories.
struct Scene {
  int subject = 0;
  int verb = 0;
  int object = 0;
  int setting = 0;
};

struct SynthWorldConfig {
  // Inventory sizes, capped by the built-in lexicon (8, 6, 8, 4).
  int n_subjects = 8;
  int n_verbs = 6;
  int n_objects = 8;
  int n_settings = 4;

  // Feature synthesis: one-hot slot encodings through a fixed Gaussian
  // projection identified by proj_seed, plus N(0, sigma^2) noise.
  int feat_dim = 64;
  std::uint64_t proj_seed = 7;
  double noise_sigma = 0.1;

  // Corpus sizes.
  int n_caption_pairs = 2000;
  int n_parallel_pairs = 4000;
  int n_target_captions = 1000;
  int n_eval_scenes = 200;
  int n_eval_refs = 5;

  int vocab_min_freq = 5;
  int max_caption_len = 16;

  // Throws Error on out-of-range fields.
  void validate() const;
};

// The materialized world: lexicons for the two languages, the
// ground-truth word bijection between them, and the caption-domain and
// translation-domain sentence templates. The two domains share every
// content word but use disjoint style-token sets, so their sentences
// differ in register while describing the same scenes.
class SynthWorld {
 public:
  explicit SynthWorld(SynthWorldConfig cfg);

  const SynthWorldConfig& config() const { return cfg_; }

  int caption_template_count() const;
  int translation_template_count() const;

  // Sentence realizations. Pivot templates are the exact word-by-word
  // images of the target templates under the bijection.
  TokenSeq caption_sentence(const Scene& s, int tpl, bool pivot) const;
  std::pair<TokenSeq, TokenSeq> translation_pair(const Scene& s,
                                                 int tpl) const;

  // Ground-truth bijection, applied word by word. Unknown words throw.
  TokenSeq to_target(const TokenSeq& pivot_sentence) const;
  TokenSeq to_pivot(const TokenSeq& target_sentence) const;

  // True iff the sentence is some caption template realized over the
  // configured inventories.
  bool is_caption_sentence(const TokenSeq& s, bool pivot) const;

  // Word inventories for inspection and tests.
  std::vector<std::string> content_words(bool pivot) const;
  const std::vector<std::string>& caption_style(bool pivot) const;
  const std::vector<std::string>& translation_style(bool pivot) const;

  // Dense scene id in [0, #scenes), row ids for feature index files.
  int scene_count() const;
  int scene_id(const Scene& s) const;
  Scene scene_from_id(int id) const;

  int feature_input_dim() const;

 private:
  struct TemplateToken {
    int slot = -1;      // 0..3 = subject/verb/object/setting, -1 = literal
    std::string word;   // literal surface when slot < 0
  };
  using Template = std::vector<TemplateToken>;

  Template parse_template(const std::string& spec, bool pivot) const;
  TokenSeq map_words(const TokenSeq& s, bool to_target) const;

  SynthWorldConfig cfg_;
  // words_[lang][slot], lang 0 = pivot, 1 = target
  std::vector<std::vector<std::string>> words_[2];
  std::vector<std::string> caption_style_[2];
  std::vector<std::string> translation_style_[2];
  std::vector<Template> caption_tpl_[2];
  std::vector<Template> translation_tpl_[2];
};

// Concatenated one-hot slot encodings, projected to cfg.feat_dim by a
// Gaussian matrix drawn from SplitRng(cfg.proj_seed), plus noise drawn
// from rng. Returns a rank-1 tensor [feat_dim]. With sigma = 0 the
// result is a pure function of the scene and projection seed.
TensorPtr scene_to_feature(const Scene& scene, const SynthWorldConfig& cfg,
                           SplitRng& rng);

// Everything gen_corpora produces, in memory. Sentences are surface
// token sequences; encoding to ids is the trainer's business.
struct SynthCorpora {
  std::vector<Scene> cap_scenes;
  TensorPtr cap_feats;                       // [n_caption_pairs x feat_dim]
  std::vector<TokenSeq> cap_pivot;

  std::vector<TokenSeq> mt_src;              // pivot side
  std::vector<TokenSeq> mt_tgt;              // target side

  std::vector<TokenSeq> ae_tgt;

  std::vector<Scene> eval_scenes;            // disjoint from cap_scenes
  TensorPtr eval_feats;                      // [n_eval_scenes x feat_dim]
  std::vector<std::vector<TokenSeq>> eval_refs;  // per scene, n_eval_refs
};

// Deterministic generation: all randomness comes from `seed` through
// labeled substreams, so any two calls with equal (cfg, seed) agree
// element for element.
SynthCorpora gen_corpora(const SynthWorldConfig& cfg, std::uint64_t seed);

}  // namespace pivotcap
