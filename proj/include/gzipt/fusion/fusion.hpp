#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gzipt/common/prob_matrix.hpp"
#include "gzipt/data/events.hpp"

namespace gzipt::fusion {

inline constexpr double kDefaultThreshold = 0.5;

// Inclusive frame range [start, end] voted to one class.
struct Segment {
  std::size_t start = 0;
  std::size_t end = 0;
  int class_id = 0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct FusedResult {
  std::size_t n_classes = 0;
  std::size_t n_frames = 0;
  std::vector<std::uint8_t> one_hot;  // row-major [n_classes x n_frames]
  std::vector<Segment> segments;      // partition of [0, n_frames)

  std::vector<int> frame_classes() const;
  friend bool operator==(const FusedResult&, const FusedResult&) = default;
};

// D_onset[i] = 1 iff probs[i] >= theta.
std::vector<std::uint8_t> threshold_onsets(std::span<const float> probs, double theta = kDefaultThreshold);

// Drops any onset within `min_gap` frames after the previously kept one.
// Off by default in the pipeline; min_gap = 0 returns the input unchanged.
std::vector<std::uint8_t> suppress_close_onsets(std::span<const std::uint8_t> onsets, std::size_t min_gap);

// Voting fusion: per-class scores are accumulated frame by frame; when the
// next frame is an onset or the sequence ends, the current segment gets the
// arg-max class (lowest id on ties) and the scores reset. Segment boundaries
// depend on the onsets only.
FusedResult decision_fusion(std::span<const std::uint8_t> onsets, const ProbMatrix& ipt);

// The no-fusion baseline: per-frame arg-max, with segments being the runs of
// equal class.
FusedResult framewise_argmax(const ProbMatrix& ipt);

// Segment [s, e] -> event (s * fd, (e + 1) * fd, class).
std::vector<data::NoteEvent> segments_to_events(const FusedResult& result,
                                                double frame_duration = data::kFrameDuration);

}  // namespace gzipt::fusion
