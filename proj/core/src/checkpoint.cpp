#include "pivotcap/checkpoint.hpp"

#include <charconv>
#include <fstream>

#include "pivotcap/error.hpp"
#include "pivotcap/hash.hpp"
#include "pivotcap/textfmt.hpp"
#include "pivotcap/tensor.hpp"

namespace pivotcap {

namespace {

constexpr const char* kHeader = "pivotcap-ckpt v1";

std::uint64_t parse_hex16(const std::string& s, const std::string& path) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (s.size() != 16 || res.ec != std::errc() ||
      res.ptr != s.data() + s.size()) {
    throw Error(path + ": malformed hash field '" + s + "'");
  }
  return v;
}

std::string shape_token(const std::vector<int>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

std::vector<int> parse_shape(const std::string& token,
                             const std::string& path) {
  std::vector<int> shape;
  std::size_t start = 0;
  while (start <= token.size()) {
    std::size_t x = token.find('x', start);
    std::string part =
        token.substr(start, x == std::string::npos ? x : x - start);
    int d = 0;
    auto res = std::from_chars(part.data(), part.data() + part.size(), d);
    if (part.empty() || res.ec != std::errc() ||
        res.ptr != part.data() + part.size() || d < 1) {
      throw Error(path + ": malformed shape '" + token + "'");
    }
    shape.push_back(d);
    if (x == std::string::npos) break;
    start = x + 1;
  }
  if (shape.empty() || shape.size() > 2) {
    throw Error(path + ": malformed shape '" + token + "'");
  }
  return shape;
}

std::string next_line(std::ifstream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": truncated manifest");
  return line;
}

// Splits "key value" on the first space; both halves must be nonempty.
std::pair<std::string, std::string> split_fields(const std::string& line,
                                                 const std::string& path) {
  std::size_t space = line.find(' ');
  if (space == std::string::npos || space == 0 || space + 1 == line.size()) {
    throw Error(path + ": malformed manifest line '" + line + "'");
  }
  return {line.substr(0, space), line.substr(space + 1)};
}

long parse_long(const std::string& s, const std::string& path) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(path + ": malformed integer field '" + s + "'");
  }
  return v;
}

}  // namespace

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
  for (const CheckpointEntry& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

Checkpoint checkpoint_from_params(const ParamList& params,
                                  std::uint64_t config_hash, long step) {
  Checkpoint ckpt;
  ckpt.config_hash = config_hash;
  ckpt.step = step;
  ckpt.entries.reserve(params.size());
  for (const NamedParam& p : params) {
    ckpt.entries.push_back({p.name, p.tensor->shape, p.tensor->data});
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::vector<double> payload;
  for (const CheckpointEntry& e : ckpt.entries) {
    if (e.name.empty() ||
        e.name.find_first_of(" \n\r") != std::string::npos) {
      throw Error(path + ": entry name not writable: '" + e.name + "'");
    }
    if (e.data.size() != shape_numel(e.shape)) {
      throw Error(path + ": entry " + e.name +
                  " has data size " + std::to_string(e.data.size()) +
                  " for shape " + shape_token(e.shape));
    }
    payload.insert(payload.end(), e.data.begin(), e.data.end());
  }
  const std::size_t payload_bytes = payload.size() * sizeof(double);
  const std::uint64_t payload_hash = fnv1a(payload.data(), payload_bytes);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << kHeader << '\n';
  out << "config " << format_hex16(ckpt.config_hash) << '\n';
  out << "step " << ckpt.step << '\n';
  out << "entries " << ckpt.entries.size() << '\n';
  for (const CheckpointEntry& e : ckpt.entries) {
    out << e.name << ' ' << shape_token(e.shape) << '\n';
  }
  out << "payload " << payload_bytes << ' ' << format_hex16(payload_hash) << '\n';
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload_bytes));
  if (!out) throw Error("write failed on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  if (next_line(in, path) != kHeader) {
    throw Error(path + ": not a checkpoint (bad header)");
  }
  Checkpoint ckpt;

  auto [config_key, config_val] = split_fields(next_line(in, path), path);
  if (config_key != "config") {
    throw Error(path + ": expected config line, got '" + config_key + "'");
  }
  ckpt.config_hash = parse_hex16(config_val, path);

  auto [step_key, step_val] = split_fields(next_line(in, path), path);
  if (step_key != "step") {
    throw Error(path + ": expected step line, got '" + step_key + "'");
  }
  ckpt.step = parse_long(step_val, path);

  auto [count_key, count_val] = split_fields(next_line(in, path), path);
  if (count_key != "entries") {
    throw Error(path + ": expected entries line, got '" + count_key + "'");
  }
  const long n_entries = parse_long(count_val, path);
  if (n_entries < 0) throw Error(path + ": negative entry count");

  std::size_t total = 0;
  ckpt.entries.resize(static_cast<std::size_t>(n_entries));
  for (CheckpointEntry& e : ckpt.entries) {
    auto [name, shape] = split_fields(next_line(in, path), path);
    e.name = name;
    e.shape = parse_shape(shape, path);
    total += shape_numel(e.shape);
  }

  auto [payload_key, payload_val] = split_fields(next_line(in, path), path);
  if (payload_key != "payload") {
    throw Error(path + ": expected payload line, got '" + payload_key + "'");
  }
  auto [bytes_str, hash_str] = split_fields(payload_val, path);
  const long payload_bytes = parse_long(bytes_str, path);
  const std::uint64_t expect_hash = parse_hex16(hash_str, path);
  if (static_cast<std::size_t>(payload_bytes) != total * sizeof(double)) {
    throw Error(path + ": payload length " + std::to_string(payload_bytes) +
                " does not match manifest shapes (" +
                std::to_string(total * sizeof(double)) + " bytes)");
  }

  std::vector<double> payload(total);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(total * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != total * sizeof(double)) {
    throw Error(path + ": truncated payload");
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw Error(path + ": trailing bytes after payload");
  }
  const std::uint64_t got_hash =
      fnv1a(payload.data(), total * sizeof(double));
  if (got_hash != expect_hash) {
    throw Error(path + ": payload hash mismatch (manifest " +
                format_hex16(expect_hash) + ", payload " + format_hex16(got_hash) + ")");
  }

  std::size_t offset = 0;
  for (CheckpointEntry& e : ckpt.entries) {
    const std::size_t n = shape_numel(e.shape);
    e.data.assign(payload.begin() + static_cast<std::ptrdiff_t>(offset),
                  payload.begin() + static_cast<std::ptrdiff_t>(offset + n));
    offset += n;
  }
  return ckpt;
}

void apply_checkpoint(const Checkpoint& ckpt, const ParamList& params) {
  for (const NamedParam& p : params) {
    const CheckpointEntry* e = ckpt.find(p.name);
    if (e == nullptr) {
      throw Error("checkpoint has no entry for parameter " + p.name);
    }
    if (e->shape != p.tensor->shape) {
      throw Error("checkpoint entry " + p.name + " has shape " +
                  shape_token(e->shape) + ", parameter wants " +
                  p.tensor->shape_str());
    }
    p.tensor->data = e->data;
  }
}

}  // namespace pivotcap
