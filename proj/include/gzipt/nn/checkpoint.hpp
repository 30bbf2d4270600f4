#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "gzipt/nn/tensor.hpp"

namespace gzipt::nn {

// File layout: 8-byte magic "GZIPTCK1", u64 little-endian header length, the
// JSON header, then each parameter's float32 values little-endian in
// declaration order. The header gains a "params" array of shapes.
struct Checkpoint {
  nlohmann::json header;
  std::vector<Tensor> params;
};

void save_checkpoint(const std::filesystem::path& path, nlohmann::json header,
                     std::span<const Tensor* const> params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gzipt::nn
