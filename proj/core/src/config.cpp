#include "pivotcap/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "pivotcap/error.hpp"
#include "pivotcap/hash.hpp"
#include "pivotcap/textfmt.hpp"

namespace pivotcap {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string render(double v) { return format_double(v); }

std::string render(int v) { return std::to_string(v); }
std::string render(std::uint64_t v) { return std::to_string(v); }
std::string render(bool v) { return v ? "true" : "false"; }
std::string render(const std::string& v) { return v; }
std::string render(TieSite v) {
  return v == TieSite::kOutputProjection ? "output" : "input";
}

void parse_into(const std::string& raw, double* out) {
  auto res = std::from_chars(raw.data(), raw.data() + raw.size(), *out);
  if (res.ec != std::errc() || res.ptr != raw.data() + raw.size() ||
      !std::isfinite(*out)) {
    throw Error("config: not a finite number: '" + raw + "'");
  }
}

void parse_into(const std::string& raw, int* out) {
  auto res = std::from_chars(raw.data(), raw.data() + raw.size(), *out);
  if (res.ec != std::errc() || res.ptr != raw.data() + raw.size()) {
    throw Error("config: not an integer: '" + raw + "'");
  }
}

void parse_into(const std::string& raw, std::uint64_t* out) {
  auto res = std::from_chars(raw.data(), raw.data() + raw.size(), *out);
  if (res.ec != std::errc() || res.ptr != raw.data() + raw.size()) {
    throw Error("config: not an unsigned integer: '" + raw + "'");
  }
}

void parse_into(const std::string& raw, bool* out) {
  if (raw == "true") {
    *out = true;
  } else if (raw == "false") {
    *out = false;
  } else {
    throw Error("config: expected true or false, got '" + raw + "'");
  }
}

void parse_into(const std::string& raw, std::string* out) { *out = raw; }

void parse_into(const std::string& raw, TieSite* out) {
  if (raw == "output") {
    *out = TieSite::kOutputProjection;
  } else if (raw == "input") {
    *out = TieSite::kInputEmbedding;
  } else {
    throw Error("config: tie site must be 'output' or 'input', got '" + raw +
                "'");
  }
}

struct Key {
  std::string name;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

template <typename T>
Key make_key(const std::string& name, T Config::* field) {
  return Key{name,
             [field](const Config& c) { return render(c.*field); },
             [field](Config& c, const std::string& raw) {
               parse_into(raw, &(c.*field));
             }};
}

template <typename Outer, typename T>
Key make_key(const std::string& name, Outer Config::* outer,
             T Outer::* field) {
  return Key{name,
             [outer, field](const Config& c) { return render(c.*outer.*field); },
             [outer, field](Config& c, const std::string& raw) {
               parse_into(raw, &(c.*outer.*field));
             }};
}

// The single source of truth for key names, order and binding. The
// rendered order below is the file order of to_text().
const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    k.push_back(make_key("seed", &Config::seed));

    k.push_back(make_key("world.n_subjects", &Config::world,
                         &SynthWorldConfig::n_subjects));
    k.push_back(
        make_key("world.n_verbs", &Config::world, &SynthWorldConfig::n_verbs));
    k.push_back(make_key("world.n_objects", &Config::world,
                         &SynthWorldConfig::n_objects));
    k.push_back(make_key("world.n_settings", &Config::world,
                         &SynthWorldConfig::n_settings));
    k.push_back(
        make_key("world.feat_dim", &Config::world, &SynthWorldConfig::feat_dim));
    k.push_back(make_key("world.proj_seed", &Config::world,
                         &SynthWorldConfig::proj_seed));
    k.push_back(make_key("world.noise_sigma", &Config::world,
                         &SynthWorldConfig::noise_sigma));
    k.push_back(make_key("world.caption_pairs", &Config::world,
                         &SynthWorldConfig::n_caption_pairs));
    k.push_back(make_key("world.parallel_pairs", &Config::world,
                         &SynthWorldConfig::n_parallel_pairs));
    k.push_back(make_key("world.target_captions", &Config::world,
                         &SynthWorldConfig::n_target_captions));
    k.push_back(make_key("world.eval_scenes", &Config::world,
                         &SynthWorldConfig::n_eval_scenes));
    k.push_back(make_key("world.eval_refs", &Config::world,
                         &SynthWorldConfig::n_eval_refs));
    k.push_back(make_key("world.vocab_min_freq", &Config::world,
                         &SynthWorldConfig::vocab_min_freq));
    k.push_back(make_key("world.max_caption_len", &Config::world,
                         &SynthWorldConfig::max_caption_len));

    k.push_back(make_key("model.embed", &Config::dims, &ModelDims::embed));
    k.push_back(make_key("model.hidden", &Config::dims, &ModelDims::hidden));
    k.push_back(make_key("model.attn", &Config::dims, &ModelDims::attn));

    k.push_back(make_key("train.pretrain_lr", &Config::train,
                         &Config::Train::pretrain_lr));
    k.push_back(make_key("train.pretrain_batch", &Config::train,
                         &Config::Train::pretrain_batch));
    k.push_back(make_key("train.pretrain_epochs", &Config::train,
                         &Config::Train::pretrain_epochs));
    k.push_back(
        make_key("train.joint_lr", &Config::train, &Config::Train::joint_lr));
    k.push_back(make_key("train.joint_batch", &Config::train,
                         &Config::Train::joint_batch));
    k.push_back(make_key("train.joint_epochs", &Config::train,
                         &Config::Train::joint_epochs));
    k.push_back(
        make_key("train.lambda", &Config::train, &Config::Train::lambda));
    k.push_back(
        make_key("train.dropout", &Config::train, &Config::Train::dropout));
    k.push_back(make_key("train.weight_decay", &Config::train,
                         &Config::Train::weight_decay));
    k.push_back(make_key("train.clip_norm", &Config::train,
                         &Config::Train::clip_norm));
    k.push_back(
        make_key("train.patience", &Config::train, &Config::Train::patience));
    k.push_back(make_key("train.val_fraction", &Config::train,
                         &Config::Train::val_fraction));

    k.push_back(make_key("decode.beam_pivot", &Config::decode,
                         &Config::Decode::beam_pivot));
    k.push_back(make_key("decode.beam_target", &Config::decode,
                         &Config::Decode::beam_target));
    k.push_back(make_key("decode.max_len_pivot", &Config::decode,
                         &Config::Decode::max_len_pivot));
    k.push_back(make_key("decode.max_len_target", &Config::decode,
                         &Config::Decode::max_len_target));

    k.push_back(
        make_key("reg.use_pivot", &Config::reg, &Config::Reg::use_pivot));
    k.push_back(
        make_key("reg.use_target", &Config::reg, &Config::Reg::use_target));
    k.push_back(
        make_key("reg.pivot_site", &Config::reg, &Config::Reg::pivot_site));
    k.push_back(
        make_key("reg.target_site", &Config::reg, &Config::Reg::target_site));

    k.push_back(
        make_key("paths.data_dir", &Config::paths, &Config::Paths::data_dir));
    k.push_back(
        make_key("paths.out_dir", &Config::paths, &Config::Paths::out_dir));
    return k;
  }();
  return keys;
}

}  // namespace

Config Config::defaults() { return Config(); }

Config Config::from_text(const std::string& text, const std::string& origin) {
  Config cfg = defaults();
  std::map<std::string, const Key*> lookup;
  for (const auto& k : key_table()) lookup[k.name] = &k;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.resize(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(origin + ":" + std::to_string(line_no) +
                  ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = lookup.find(key);
    if (it == lookup.end()) {
      throw Error(origin + ":" + std::to_string(line_no) +
                  ": unknown config key '" + key + "'");
    }
    try {
      it->second->set(cfg, value);
    } catch (const Error& e) {
      throw Error(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.dims.feat = cfg.world.feat_dim;
  cfg.validate();
  return cfg;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), path);
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& k : key_table()) {
    out += k.name;
    out += " = ";
    out += k.get(*this);
    out += '\n';
  }
  return out;
}

std::uint64_t Config::hash() const { return fnv1a(to_text()); }

void Config::validate() const {
  world.validate();
  if (dims.feat != world.feat_dim) {
    throw Error("config: model feature width must equal world.feat_dim");
  }
  if (dims.embed < 1 || dims.hidden < 1 || dims.attn < 1) {
    throw Error("config: model dims must be positive");
  }
  if (dims.embed != dims.hidden) {
    throw Error(
        "config: model.embed must equal model.hidden so embedding rows and "
        "output-projection rows live in the same space");
  }
  if (!(train.pretrain_lr > 0) || !(train.joint_lr > 0)) {
    throw Error("config: learning rates must be positive");
  }
  if (train.pretrain_batch < 1 || train.joint_batch < 1) {
    throw Error("config: batch sizes must be positive");
  }
  if (train.pretrain_epochs < 1 || train.joint_epochs < 0) {
    throw Error("config: epoch counts out of range");
  }
  if (train.lambda < 0) throw Error("config: train.lambda must be >= 0");
  if (train.dropout < 0 || train.dropout >= 1) {
    throw Error("config: train.dropout must be in [0, 1)");
  }
  if (train.weight_decay < 0) {
    throw Error("config: train.weight_decay must be >= 0");
  }
  if (!(train.clip_norm > 0)) {
    throw Error("config: train.clip_norm must be positive");
  }
  if (train.patience < 1) throw Error("config: train.patience must be >= 1");
  if (!(train.val_fraction > 0) || train.val_fraction >= 0.5) {
    throw Error("config: train.val_fraction must be in (0, 0.5)");
  }
  if (decode.beam_pivot < 1 || decode.beam_target < 1 ||
      decode.max_len_pivot < 1 || decode.max_len_target < 1) {
    throw Error("config: decode settings must be positive");
  }
  if (paths.data_dir.empty() || paths.out_dir.empty()) {
    throw Error("config: paths must not be empty");
  }
}

RegConfig Config::reg_config() const {
  RegConfig r;
  r.lambda = train.lambda;
  r.use_pivot = reg.use_pivot;
  r.use_target = reg.use_target;
  r.pivot_site = reg.pivot_site;
  r.target_site = reg.target_site;
  return r;
}

}  // namespace pivotcap
