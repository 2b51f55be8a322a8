#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sessrec/io/config.hpp"
#include "sessrec/types.hpp"

namespace sessrec::io {

struct NamedTensor {
  std::string name;
  matrix_t value;
};

/**
 * Versioned training snapshot: the model kind, every named parameter
 * tensor, the item-to-side map, the optimizer moments, the epoch counter,
 * and the effective config that produced it. Tensor payloads are raw
 * little-endian doubles, so a save/load cycle is bit-exact.
 */
struct Checkpoint {
  std::string model_kind;
  int epoch = 0;  // epochs already completed
  KeyValues config;
  std::vector<NamedTensor> tensors;
  std::vector<SideValue> side_map;
  long opt_step = 0;
  std::vector<matrix_t> opt_m;
  std::vector<matrix_t> opt_v;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sessrec::io
