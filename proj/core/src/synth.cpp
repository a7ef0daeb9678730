#include "pivotcap/synth.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "pivotcap/error.hpp"

namespace pivotcap {

namespace {

// Built-in lexicon. Pivot words are constructed forms; target words are
// plain English. Index i of a pivot list translates to index i of the
// matching target list, and the style tokens pair up the same way, which
// is what makes the word-by-word bijection total over both domains.
const std::vector<std::string> kPivotSubjects = {
    "miko", "tasu", "reni", "voba", "kani", "sulo", "pera", "noli"};
const std::vector<std::string> kPivotVerbs = {
    "darev", "temol", "kosun", "valet", "muren", "sabin"};
const std::vector<std::string> kPivotObjects = {
    "golo", "hevi", "lumo", "farnu", "tiko", "brelo", "sonat", "vekun"};
const std::vector<std::string> kPivotSettings = {"arden", "silva", "borna",
                                                 "kelu"};

const std::vector<std::string> kTargetSubjects = {
    "dog", "cat", "bird", "horse", "rabbit", "fox", "bear", "sheep"};
const std::vector<std::string> kTargetVerbs = {
    "chases", "watches", "carries", "finds", "follows", "guards"};
const std::vector<std::string> kTargetObjects = {
    "ball", "stick", "leaf", "stone", "apple", "ribbon", "basket",
    "lantern"};
const std::vector<std::string> kTargetSettings = {"park", "field", "river",
                                                  "garden"};

// Style tokens, paired position by position across languages. The
// caption and translation sets are disjoint within each language; that
// disjointness is what separates the two registers.
const std::vector<std::string> kPivotCaptionStyle = {"lo",   "ximi", "nava",
                                                     "su",   "po",   "ke"};
const std::vector<std::string> kTargetCaptionStyle = {"the",   "at", "there",
                                                      "is",    "a",  "that"};
const std::vector<std::string> kPivotTranslationStyle = {"zana", "bem"};
const std::vector<std::string> kTargetTranslationStyle = {"in", "one"};

// Templates are written in the target language; the pivot versions are
// derived through the bijection. %S %V %O %T mark the content slots.
// The third caption template keeps a four-token content run so that
// 4-gram overlap with references can reward content accuracy alone.
const std::vector<std::string> kCaptionTemplates = {
    "the %S %V the %O",
    "the %S %V the %O at the %T",
    "the %S %V %O %T",
    "there is a %S that %V the %O",
};
const std::vector<std::string> kTranslationTemplates = {
    "%S %V %O",
    "%S %V %O in %T",
    "one %S %V one %O",
    "%S %V %O %T",
};

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

void require_range(const char* name, int value, int lo, int hi) {
  if (value < lo || value > hi) {
    throw Error(std::string("synth config: ") + name + " = " +
                std::to_string(value) + " outside [" + std::to_string(lo) +
                ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

void SynthWorldConfig::validate() const {
  require_range("n_subjects", n_subjects, 1,
                static_cast<int>(kPivotSubjects.size()));
  require_range("n_verbs", n_verbs, 1, static_cast<int>(kPivotVerbs.size()));
  require_range("n_objects", n_objects, 1,
                static_cast<int>(kPivotObjects.size()));
  require_range("n_settings", n_settings, 1,
                static_cast<int>(kPivotSettings.size()));
  require_range("feat_dim", feat_dim, 1, 4096);
  require_range("n_caption_pairs", n_caption_pairs, 1, 1000000);
  require_range("n_parallel_pairs", n_parallel_pairs, 1, 1000000);
  require_range("n_target_captions", n_target_captions, 1, 1000000);
  require_range("n_eval_scenes", n_eval_scenes, 1, 1000000);
  require_range("n_eval_refs", n_eval_refs, 1, 64);
  require_range("vocab_min_freq", vocab_min_freq, 1, 1000000);
  require_range("max_caption_len", max_caption_len, 4, 64);
  if (!(noise_sigma >= 0.0)) {
    throw Error("synth config: noise_sigma must be >= 0");
  }
  const int n_scenes = n_subjects * n_verbs * n_objects * n_settings;
  if (n_eval_scenes >= n_scenes) {
    throw Error("synth config: n_eval_scenes = " +
                std::to_string(n_eval_scenes) +
                " must leave training scenes out of " +
                std::to_string(n_scenes));
  }
}

SynthWorld::SynthWorld(SynthWorldConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();

  auto take = [](const std::vector<std::string>& list, int n) {
    return std::vector<std::string>(list.begin(), list.begin() + n);
  };
  words_[0] = {take(kPivotSubjects, cfg_.n_subjects),
               take(kPivotVerbs, cfg_.n_verbs),
               take(kPivotObjects, cfg_.n_objects),
               take(kPivotSettings, cfg_.n_settings)};
  words_[1] = {take(kTargetSubjects, cfg_.n_subjects),
               take(kTargetVerbs, cfg_.n_verbs),
               take(kTargetObjects, cfg_.n_objects),
               take(kTargetSettings, cfg_.n_settings)};
  caption_style_[0] = kPivotCaptionStyle;
  caption_style_[1] = kTargetCaptionStyle;
  translation_style_[0] = kPivotTranslationStyle;
  translation_style_[1] = kTargetTranslationStyle;

  for (const auto& spec : kCaptionTemplates) {
    caption_tpl_[1].push_back(parse_template(spec, false));
    caption_tpl_[0].push_back(parse_template(spec, true));
  }
  for (const auto& spec : kTranslationTemplates) {
    translation_tpl_[1].push_back(parse_template(spec, false));
    translation_tpl_[0].push_back(parse_template(spec, true));
  }

  for (int lang = 0; lang < 2; ++lang) {
    for (const auto& tpl : caption_tpl_[lang]) {
      if (static_cast<int>(tpl.size()) > cfg_.max_caption_len) {
        throw Error("synth config: caption template longer than " +
                    std::to_string(cfg_.max_caption_len) + " tokens");
      }
    }
  }
}

SynthWorld::Template SynthWorld::parse_template(const std::string& spec,
                                                bool pivot) const {
  Template tpl;
  for (const auto& w : split_words(spec)) {
    TemplateToken t;
    if (w == "%S") {
      t.slot = 0;
    } else if (w == "%V") {
      t.slot = 1;
    } else if (w == "%O") {
      t.slot = 2;
    } else if (w == "%T") {
      t.slot = 3;
    } else {
      t.word = w;
      if (pivot) {
        // Literals are written in the target language; look the pivot
        // form up through the paired style lists.
        bool found = false;
        for (std::size_t i = 0; i < kTargetCaptionStyle.size() && !found;
             ++i) {
          if (kTargetCaptionStyle[i] == w) {
            t.word = kPivotCaptionStyle[i];
            found = true;
          }
        }
        for (std::size_t i = 0; i < kTargetTranslationStyle.size() && !found;
             ++i) {
          if (kTargetTranslationStyle[i] == w) {
            t.word = kPivotTranslationStyle[i];
            found = true;
          }
        }
        if (!found) {
          throw Error("synth template literal without a pivot form: " + w);
        }
      }
    }
    tpl.push_back(std::move(t));
  }
  return tpl;
}

int SynthWorld::caption_template_count() const {
  return static_cast<int>(caption_tpl_[0].size());
}

int SynthWorld::translation_template_count() const {
  return static_cast<int>(translation_tpl_[0].size());
}

TokenSeq SynthWorld::caption_sentence(const Scene& s, int tpl,
                                      bool pivot) const {
  if (tpl < 0 || tpl >= caption_template_count()) {
    throw Error("caption template index out of range: " +
                std::to_string(tpl));
  }
  const int lang = pivot ? 0 : 1;
  const int picks[4] = {s.subject, s.verb, s.object, s.setting};
  for (int k = 0; k < 4; ++k) {
    if (picks[k] < 0 || picks[k] >= static_cast<int>(words_[lang][k].size())) {
      throw Error("scene slot " + std::to_string(k) +
                  " outside its inventory: " + std::to_string(picks[k]));
    }
  }
  TokenSeq out;
  for (const auto& t : caption_tpl_[lang][tpl]) {
    out.push_back(t.slot < 0 ? t.word : words_[lang][t.slot][picks[t.slot]]);
  }
  return out;
}

std::pair<TokenSeq, TokenSeq> SynthWorld::translation_pair(const Scene& s,
                                                           int tpl) const {
  if (tpl < 0 || tpl >= translation_template_count()) {
    throw Error("translation template index out of range: " +
                std::to_string(tpl));
  }
  const int picks[4] = {s.subject, s.verb, s.object, s.setting};
  for (int k = 0; k < 4; ++k) {
    if (picks[k] < 0 || picks[k] >= static_cast<int>(words_[0][k].size())) {
      throw Error("scene slot " + std::to_string(k) +
                  " outside its inventory: " + std::to_string(picks[k]));
    }
  }
  TokenSeq pv, tg;
  for (const auto& t : translation_tpl_[0][tpl]) {
    pv.push_back(t.slot < 0 ? t.word : words_[0][t.slot][picks[t.slot]]);
  }
  for (const auto& t : translation_tpl_[1][tpl]) {
    tg.push_back(t.slot < 0 ? t.word : words_[1][t.slot][picks[t.slot]]);
  }
  return {pv, tg};
}

TokenSeq SynthWorld::map_words(const TokenSeq& s, bool to_target) const {
  const int from = to_target ? 0 : 1;
  const int to = to_target ? 1 : 0;
  std::unordered_map<std::string, std::string> dict;
  for (int k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < words_[from][k].size(); ++i) {
      dict[words_[from][k][i]] = words_[to][k][i];
    }
  }
  for (std::size_t i = 0; i < caption_style_[from].size(); ++i) {
    dict[caption_style_[from][i]] = caption_style_[to][i];
  }
  for (std::size_t i = 0; i < translation_style_[from].size(); ++i) {
    dict[translation_style_[from][i]] = translation_style_[to][i];
  }
  TokenSeq out;
  for (const auto& w : s) {
    auto it = dict.find(w);
    if (it == dict.end()) {
      throw Error("word outside the ground-truth bijection: " + w);
    }
    out.push_back(it->second);
  }
  return out;
}

TokenSeq SynthWorld::to_target(const TokenSeq& pivot_sentence) const {
  return map_words(pivot_sentence, true);
}

TokenSeq SynthWorld::to_pivot(const TokenSeq& target_sentence) const {
  return map_words(target_sentence, false);
}

bool SynthWorld::is_caption_sentence(const TokenSeq& s, bool pivot) const {
  const int lang = pivot ? 0 : 1;
  for (const auto& tpl : caption_tpl_[lang]) {
    if (tpl.size() != s.size()) continue;
    Scene scene;
    int* slots[4] = {&scene.subject, &scene.verb, &scene.object,
                     &scene.setting};
    bool ok = true;
    for (std::size_t i = 0; i < tpl.size() && ok; ++i) {
      if (tpl[i].slot < 0) {
        ok = tpl[i].word == s[i];
        continue;
      }
      const auto& inv = words_[lang][tpl[i].slot];
      auto it = std::find(inv.begin(), inv.end(), s[i]);
      ok = it != inv.end();
      if (ok) *slots[tpl[i].slot] = static_cast<int>(it - inv.begin());
    }
    if (ok) return true;
  }
  return false;
}

std::vector<std::string> SynthWorld::content_words(bool pivot) const {
  const int lang = pivot ? 0 : 1;
  std::vector<std::string> out;
  for (int k = 0; k < 4; ++k) {
    out.insert(out.end(), words_[lang][k].begin(), words_[lang][k].end());
  }
  return out;
}

const std::vector<std::string>& SynthWorld::caption_style(bool pivot) const {
  return caption_style_[pivot ? 0 : 1];
}

const std::vector<std::string>& SynthWorld::translation_style(
    bool pivot) const {
  return translation_style_[pivot ? 0 : 1];
}

int SynthWorld::scene_count() const {
  return cfg_.n_subjects * cfg_.n_verbs * cfg_.n_objects * cfg_.n_settings;
}

int SynthWorld::scene_id(const Scene& s) const {
  return ((s.subject * cfg_.n_verbs + s.verb) * cfg_.n_objects + s.object) *
             cfg_.n_settings +
         s.setting;
}

Scene SynthWorld::scene_from_id(int id) const {
  if (id < 0 || id >= scene_count()) {
    throw Error("scene id out of range: " + std::to_string(id));
  }
  Scene s;
  s.setting = id % cfg_.n_settings;
  id /= cfg_.n_settings;
  s.object = id % cfg_.n_objects;
  id /= cfg_.n_objects;
  s.verb = id % cfg_.n_verbs;
  s.subject = id / cfg_.n_verbs;
  return s;
}

int SynthWorld::feature_input_dim() const {
  return cfg_.n_subjects + cfg_.n_verbs + cfg_.n_objects + cfg_.n_settings;
}

TensorPtr scene_to_feature(const Scene& scene, const SynthWorldConfig& cfg,
                           SplitRng& rng) {
  cfg.validate();
  const int dims[4] = {cfg.n_subjects, cfg.n_verbs, cfg.n_objects,
                       cfg.n_settings};
  const int picks[4] = {scene.subject, scene.verb, scene.object,
                        scene.setting};
  int offset = 0;
  int active[4];
  for (int k = 0; k < 4; ++k) {
    if (picks[k] < 0 || picks[k] >= dims[k]) {
      throw Error("scene slot " + std::to_string(k) +
                  " outside its inventory: " + std::to_string(picks[k]));
    }
    active[k] = offset + picks[k];
    offset += dims[k];
  }
  const int in_dim = offset;

  // The projection is a pure function of proj_seed: the feature of a
  // scene is the sum of the four projection columns its one-hots select.
  // Entries are N(0, 1/4) so features have roughly unit variance.
  SplitRng proj_rng = SplitRng(cfg.proj_seed).split("feature-projection");
  auto out = make_tensor({cfg.feat_dim});
  for (int r = 0; r < cfg.feat_dim; ++r) {
    double acc = 0.0;
    for (int c = 0; c < in_dim; ++c) {
      const double g = proj_rng.normal(0.0, 0.5);
      if (c == active[0] || c == active[1] || c == active[2] ||
          c == active[3]) {
        acc += g;
      }
    }
    out->data[r] = acc;
  }
  if (cfg.noise_sigma > 0.0) {
    for (int r = 0; r < cfg.feat_dim; ++r) {
      out->data[r] += rng.normal(0.0, cfg.noise_sigma);
    }
  }
  return out;
}

SynthCorpora gen_corpora(const SynthWorldConfig& cfg, std::uint64_t seed) {
  SynthWorld world(cfg);
  SynthCorpora out;

  SplitRng root(seed);
  SplitRng scene_rng = root.split("scene-partition");
  SplitRng cap_rng = root.split("caption-corpus");
  SplitRng cap_noise = root.split("caption-noise");
  SplitRng mt_rng = root.split("parallel-corpus");
  SplitRng ae_rng = root.split("target-caption-corpus");
  SplitRng eval_rng = root.split("eval-refs");
  SplitRng eval_noise = root.split("eval-noise");

  // Split the scene space: the eval scenes are held out of the
  // image-caption training pool entirely.
  std::vector<int> ids(static_cast<std::size_t>(world.scene_count()));
  std::iota(ids.begin(), ids.end(), 0);
  scene_rng.shuffle(ids);
  out.eval_scenes.reserve(cfg.n_eval_scenes);
  for (int i = 0; i < cfg.n_eval_scenes; ++i) {
    out.eval_scenes.push_back(world.scene_from_id(ids[i]));
  }
  std::vector<int> train_pool(ids.begin() + cfg.n_eval_scenes, ids.end());

  const int n_cap_tpl = world.caption_template_count();
  const int n_tr_tpl = world.translation_template_count();

  out.cap_feats = make_tensor({cfg.n_caption_pairs, cfg.feat_dim});
  for (int i = 0; i < cfg.n_caption_pairs; ++i) {
    const Scene s = world.scene_from_id(
        train_pool[cap_rng.uniform_int(static_cast<int>(train_pool.size()))]);
    out.cap_scenes.push_back(s);
    out.cap_pivot.push_back(
        world.caption_sentence(s, cap_rng.uniform_int(n_cap_tpl), true));
    TensorPtr f = scene_to_feature(s, cfg, cap_noise);
    std::copy(f->data.begin(), f->data.end(),
              out.cap_feats->data.begin() +
                  static_cast<std::size_t>(i) * cfg.feat_dim);
  }

  for (int i = 0; i < cfg.n_parallel_pairs; ++i) {
    Scene s;
    s.subject = mt_rng.uniform_int(cfg.n_subjects);
    s.verb = mt_rng.uniform_int(cfg.n_verbs);
    s.object = mt_rng.uniform_int(cfg.n_objects);
    s.setting = mt_rng.uniform_int(cfg.n_settings);
    auto pair = world.translation_pair(s, mt_rng.uniform_int(n_tr_tpl));
    out.mt_src.push_back(std::move(pair.first));
    out.mt_tgt.push_back(std::move(pair.second));
  }

  for (int i = 0; i < cfg.n_target_captions; ++i) {
    Scene s;
    s.subject = ae_rng.uniform_int(cfg.n_subjects);
    s.verb = ae_rng.uniform_int(cfg.n_verbs);
    s.object = ae_rng.uniform_int(cfg.n_objects);
    s.setting = ae_rng.uniform_int(cfg.n_settings);
    out.ae_tgt.push_back(
        world.caption_sentence(s, ae_rng.uniform_int(n_cap_tpl), false));
  }

  out.eval_feats = make_tensor({cfg.n_eval_scenes, cfg.feat_dim});
  out.eval_refs.resize(out.eval_scenes.size());
  for (int i = 0; i < cfg.n_eval_scenes; ++i) {
    const Scene& s = out.eval_scenes[i];
    TensorPtr f = scene_to_feature(s, cfg, eval_noise);
    std::copy(f->data.begin(), f->data.end(),
              out.eval_feats->data.begin() +
                  static_cast<std::size_t>(i) * cfg.feat_dim);
    // Each template appears at least once while refs remain 5 per scene,
    // so every reference shape is represented for every image.
    for (int j = 0; j < cfg.n_eval_refs; ++j) {
      const int tpl =
          j < n_cap_tpl ? j : eval_rng.uniform_int(n_cap_tpl);
      out.eval_refs[i].push_back(world.caption_sentence(s, tpl, false));
    }
  }

  return out;
}

}  // namespace pivotcap
