#pragma once

#include <cstddef>
#include <vector>

namespace gzipt::dsp {

inline constexpr int kSampleRate = 44100;

// Mono PCM in [-1, 1]. Storage is 32-bit; all analysis runs in 64-bit.
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Throws ValidationError unless the rate is 44100 Hz and every sample is finite.
void validate(const AudioBuffer& audio);

}  // namespace gzipt::dsp
