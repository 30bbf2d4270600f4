#pragma once

#include <cstddef>
#include <vector>

#include "gzipt/common/error.hpp"

namespace gzipt {

// Row-major [rows x cols] matrix of per-frame scores, rows = classes,
// cols = frames.
struct ProbMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  ProbMatrix() = default;
  ProbMatrix(std::size_t r, std::size_t c, float fill = 0.0f) : rows(r), cols(c), values(r * c, fill) {}

  float& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  float at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Per-frame outputs of the two detectors for one piece.
struct DetectorOutput {
  ProbMatrix ipt_probs;            // [n_ipt x T], columns sum to 1
  std::vector<float> onset_probs;  // [T], each in (0, 1)

  std::size_t frames() const { return onset_probs.size(); }
};

}  // namespace gzipt
