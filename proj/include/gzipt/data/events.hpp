#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gzipt/data/technique.hpp"

namespace gzipt::data {

inline constexpr double kFrameDuration = 0.05;

struct NoteEvent {
  double onset = 0.0;   // seconds
  double offset = 0.0;  // seconds
  Technique technique = Technique::plucks;

  friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

// Frame index containing time `seconds` on the 0.05 s grid.
std::size_t frame_of(double seconds, double frame_duration = kFrameDuration);

// Throws unless events are sorted, non-overlapping and satisfy 0 <= onset < offset.
void validate_events(std::span<const NoteEvent> events);

}  // namespace gzipt::data
