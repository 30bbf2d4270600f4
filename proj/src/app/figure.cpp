#include "gzipt/app/figure.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "gzipt/common/error.hpp"
#include "gzipt/data/technique.hpp"

namespace gzipt::app {
namespace {

constexpr Rgb kBackground{24, 24, 28};
constexpr Rgb kGap{90, 90, 96};
constexpr Rgb kOnset{230, 40, 40};

constexpr std::array<Rgb, 8> kClassColours{{
    {31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
    {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {188, 189, 34},
}};

// Dark blue through green to yellow.
Rgb heat(double v) {
  static constexpr std::array<Rgb, 5> anchors{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  v = std::clamp(v, 0.0, 1.0) * (anchors.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(v), anchors.size() - 2);
  const double w = v - static_cast<double>(i);
  auto mix = [w](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround((1.0 - w) * a + w * b));
  };
  return {mix(anchors[i].r, anchors[i + 1].r), mix(anchors[i].g, anchors[i + 1].g), mix(anchors[i].b, anchors[i + 1].b)};
}

void draw_classes(Image& img, std::size_t y0, const std::vector<int>& classes) {
  for (std::size_t t = 0; t < classes.size(); ++t) {
    const int c = classes[t];
    require(c >= 0 && c < static_cast<int>(data::kNumTechniques), "figure: class id out of range");
    img.fill_rect(t * kPixelsPerFrame, y0 + static_cast<std::size_t>(c) * kClassRowHeight, kPixelsPerFrame,
                  kClassRowHeight, kClassColours[c]);
  }
}

}  // namespace

Figure render_figure(const FigureInput& in) {
  require(in.spectrogram != nullptr, "figure: no spectrogram");
  const auto& spec = *in.spectrogram;
  const std::size_t t = spec.n_frames;
  require(t >= 1, "figure: empty spectrogram");
  require(in.onsets.size() == t && in.raw.size() == t && in.fused.size() == t,
          "figure: panels must share the spectrogram's frame count");
  require(!in.target || in.target->size() == t, "figure: target frame count mismatch");

  const std::size_t class_height = data::kNumTechniques * kClassRowHeight;
  const int panels = in.target ? 5 : 4;
  const std::size_t height = spec.n_mels + kOnsetStripHeight + class_height * (panels - 2) + kPanelGap * (panels - 1);
  Figure fig{Image(t * kPixelsPerFrame, height, kBackground), panels};
  Image& img = fig.image;

  const auto [lo_it, hi_it] = std::minmax_element(spec.values.begin(), spec.values.end());
  const double lo = *lo_it, span = std::max(*hi_it - lo, 1e-12);
  for (std::size_t m = 0; m < spec.n_mels; ++m) {
    const std::size_t y = spec.n_mels - 1 - m;  // low frequencies at the bottom
    for (std::size_t f = 0; f < t; ++f) img.fill_rect(f * kPixelsPerFrame, y, kPixelsPerFrame, 1, heat((spec.at(m, f) - lo) / span));
  }

  std::size_t y = spec.n_mels;
  auto gap = [&] {
    img.fill_rect(0, y, img.width, kPanelGap, kGap);
    y += kPanelGap;
  };
  gap();
  for (std::size_t f = 0; f < t; ++f)
    if (in.onsets[f]) img.fill_rect(f * kPixelsPerFrame, y, 1, kOnsetStripHeight, kOnset);
  y += kOnsetStripHeight;

  std::vector<const std::vector<int>*> rows{&in.raw, &in.fused};
  if (in.target) rows.push_back(&*in.target);
  for (const auto* classes : rows) {
    gap();
    draw_classes(img, y, *classes);
    y += class_height;
  }
  return fig;
}

}  // namespace gzipt::app
