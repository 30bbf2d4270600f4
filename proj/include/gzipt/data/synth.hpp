#pragma once

#include <cstddef>
#include <vector>

#include "gzipt/common/rng.hpp"
#include "gzipt/dsp/audio.hpp"
#include "gzipt/data/technique.hpp"

namespace gzipt::data {

// A short recording of a single technique.
struct Clip {
  dsp::AudioBuffer audio;
  Technique technique = Technique::plucks;
  std::size_t id = 0;  // position in its pool; used for sequence signatures

  double duration() const { return audio.duration(); }
};

// Throws unless the clip is 44.1 kHz, finite, and 0.3 s to 15 s long.
void validate(const Clip& clip);

inline constexpr double kSynthMinF0 = 60.0;
inline constexpr double kSynthMaxF0 = 1200.0;
inline constexpr double kSynthMinDuration = 0.5;
inline constexpr double kSynthMaxDuration = 3.0;

// Renders a plucked-string tone whose pitch and amplitude trajectory carries
// the technique:
//   vibrato            ~5 Hz sinusoidal pitch modulation, about +-30 cents
//   up/down_portamento monotone glide of 2..4 semitones after the attack
//   return_portamento  glide up then back down
//   glissando          5 or more short notes on a pentatonic ladder
//   tremolo            10..14 re-attacks per second on one pitch
//   harmonic           two partials, fast decay
//   plucks             one attack, exponential decay
// Peak amplitude is normalised into [0.35, 0.6].
Clip synth_clip(Technique technique, double f0, double duration, Rng& rng);

struct ClipPoolConfig {
  int clips_per_class = 24;
  double min_duration = 0.6;
  double max_duration = 2.6;
  double min_f0 = 90.0;
  double max_f0 = 700.0;
};

// clips_per_class clips for every technique with log-uniform f0 and uniform
// duration; ids are assigned in pool order.
std::vector<Clip> make_clip_pool(const ClipPoolConfig& cfg, Rng& rng);

}  // namespace gzipt::data
