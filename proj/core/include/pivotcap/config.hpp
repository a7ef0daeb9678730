#pragma once

#include <cstdint>
#include <string>

#include "pivotcap/models.hpp"
#include "pivotcap/objectives.hpp"
#include "pivotcap/synth.hpp"

namespace pivotcap {

// Full run configuration. Files are plain "key = value" lines ('#' starts
// a comment); any key not listed below is rejected, and every key has the
// default shown in defaults(). to_text() renders the resolved config in a
// fixed key order, so its hash identifies the configuration exactly.
struct Config {
  std::uint64_t seed = 1;

  SynthWorldConfig world;

  ModelDims dims;  // dims.feat always mirrors world.feat_dim

  struct Train {
    double pretrain_lr = 4e-4;
    int pretrain_batch = 100;
    int pretrain_epochs = 30;
    double joint_lr = 2e-4;
    int joint_batch = 64;
    int joint_epochs = 20;
    double lambda = 1.0;
    double dropout = 0.1;
    double weight_decay = 1e-5;
    double clip_norm = 5.0;
    int patience = 5;
    double val_fraction = 0.1;
  } train;

  struct Decode {
    int beam_pivot = 5;
    int beam_target = 10;
    int max_len_pivot = 16;
    int max_len_target = 20;
  } decode;

  struct Reg {
    bool use_pivot = true;
    bool use_target = true;
    TieSite pivot_site = TieSite::kOutputProjection;
    TieSite target_site = TieSite::kOutputProjection;
  } reg;

  struct Paths {
    std::string data_dir = "data";
    std::string out_dir = "out";
  } paths;

  static Config defaults();
  // defaults() with the file's overrides applied. `origin` names the
  // source in error messages.
  static Config from_file(const std::string& path);
  static Config from_text(const std::string& text, const std::string& origin);

  // One "key = value" line per key, fixed order, shortest round-trip
  // number formatting. parse(to_text()) reproduces the config exactly.
  std::string to_text() const;
  std::uint64_t hash() const;  // fnv1a of to_text()

  // Throws Error when any field is out of range or inconsistent.
  void validate() const;

  // The regularizer switches plus train.lambda, as the objectives take.
  RegConfig reg_config() const;
};

}  // namespace pivotcap
