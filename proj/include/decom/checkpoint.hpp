#pragma once

#include <string>
#include <utility>
#include <vector>

#include "decom/tensor.hpp"

namespace decom {

// Versioned parameter container. Each named network maps to an ordered list
// of tensors; the on-disk format is the header line "DECOM-CKPT v1" followed
// by the entries with shape lists and row-major little-endian 64-bit float
// payloads.
struct Checkpoint {
  std::vector<std::pair<std::string, std::vector<Tensor>>> entries;

  void add(const std::string& name, std::vector<Tensor> tensors);
  const std::vector<Tensor>* find(const std::string& name) const;
  bool has(const std::string& name) const { return find(name) != nullptr; }
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace decom
