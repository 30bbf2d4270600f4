#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "gzipt/dsp/audio.hpp"

namespace gzipt::dsp {

struct MelConfig {
  int n_fft = 2048;
  int hop = 2205;
  int n_mels = 128;
  int sample_rate = kSampleRate;
  double log_floor = 1e-10;

  int n_bins() const { return n_fft / 2 + 1; }
  double frame_duration() const { return static_cast<double>(hop) / sample_rate; }
};

// Throws unless the config is exactly the one the models are trained on:
// 2048-point FFT, 2205-sample hop at 44.1 kHz (0.05 s frames), 128 mel bands.
void validate(const MelConfig& cfg);

// Column-major complex frames: frame t occupies [t * n_bins, (t+1) * n_bins).
struct StftFrames {
  std::size_t n_bins = 0;
  std::size_t n_frames = 0;
  std::vector<std::complex<double>> values;

  std::complex<double> at(std::size_t bin, std::size_t frame) const { return values[frame * n_bins + bin]; }
};

// Row-major [n_mels x n_frames] natural-log mel power.
struct Spectrogram {
  std::size_t n_mels = 0;
  std::size_t n_frames = 0;
  double frame_duration = 0.05;
  std::vector<double> values;

  double at(std::size_t mel, std::size_t frame) const { return values[mel * n_frames + frame]; }
};

// Row-major [n_mels x n_bins] triangular weights.
struct Filterbank {
  std::size_t n_mels = 0;
  std::size_t n_bins = 0;
  std::vector<double> weights;
  std::vector<double> center_hz;

  double at(std::size_t mel, std::size_t bin) const { return weights[mel * n_bins + bin]; }
};

// Symmetric Hann taper of length n.
std::vector<double> hann_window(int n);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// floor(samples / hop) frames, frame t centred on sample t * hop, edges
// reflection padded.
StftFrames stft(const AudioBuffer& audio, const MelConfig& cfg = {});

Filterbank mel_filterbank(const MelConfig& cfg = {});

Spectrogram log_mel(const AudioBuffer& audio, const MelConfig& cfg = {});

}  // namespace gzipt::dsp
