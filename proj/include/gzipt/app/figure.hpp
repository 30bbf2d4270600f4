#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gzipt/app/png.hpp"
#include "gzipt/dsp/melspec.hpp"

namespace gzipt::app {

struct FigureInput {
  const dsp::Spectrogram* spectrogram = nullptr;
  std::vector<std::uint8_t> onsets;  // thresholded, [T]
  std::vector<int> raw;              // per-frame arg-max class, [T]
  std::vector<int> fused;            // fused class, [T]
  std::optional<std::vector<int>> target;
};

struct Figure {
  Image image;
  int panels = 0;
};

inline constexpr std::size_t kPixelsPerFrame = 2;
inline constexpr std::size_t kClassRowHeight = 5;
inline constexpr std::size_t kOnsetStripHeight = 16;
inline constexpr std::size_t kPanelGap = 4;

// Panels stacked top to bottom on one frame grid: log-mel, onset markers,
// raw arg-max, fused result, then the target when present. Class panels are
// one row per class with the active frame filled in the class colour.
Figure render_figure(const FigureInput& input);

}  // namespace gzipt::app
