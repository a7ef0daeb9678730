#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pivotcap/layers.hpp"

namespace pivotcap {

// Single-file checkpoint: a text manifest followed by one raw payload of
// 64-bit little-endian floats holding every entry's values in manifest
// order.
//
//   pivotcap-ckpt v1
//   config <16 hex digits>
//   step <n>
//   entries <count>
//   <name> <shape>          one line per entry, shape as "R" or "RxC"
//   payload <bytes> <16 hex digit fnv1a>
//   <raw doubles>
//
// Values are stored unquantized, so save -> load -> save reproduces the
// file byte for byte. The payload hash is validated on load.

struct CheckpointEntry {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;
};

struct Checkpoint {
  std::uint64_t config_hash = 0;
  long step = 0;
  std::vector<CheckpointEntry> entries;

  // Null when the name is absent.
  const CheckpointEntry* find(const std::string& name) const;
};

// Snapshot of a parameter list, entries in list order.
Checkpoint checkpoint_from_params(const ParamList& params,
                                  std::uint64_t config_hash, long step);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Copies each parameter's values from the entry with the same name,
// shape-checked. Entries without a matching parameter are left alone;
// a parameter without a matching entry is an error.
void apply_checkpoint(const Checkpoint& ckpt, const ParamList& params);

}  // namespace pivotcap
