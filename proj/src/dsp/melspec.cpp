#include "gzipt/dsp/melspec.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "gzipt/common/error.hpp"

namespace gzipt::dsp {
namespace {

// FFTW's planner is not reentrant; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
 public:
  explicit RealFft(int n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_.get(), out_.get(), FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_.get(); }
  void run(std::complex<double>* dst) {
    fftw_execute(plan_);
    for (int k = 0; k <= n_ / 2; ++k) dst[k] = {out_.get()[k][0], out_.get()[k][1]};
  }

 private:
  int n_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<fftw_complex, FftwFree> out_;
  fftw_plan plan_;
};

// Mirror index into [0, n) without repeating the edge sample.
std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

void validate(const AudioBuffer& audio) {
  require(audio.sample_rate == kSampleRate,
          "unsupported sample rate " + std::to_string(audio.sample_rate) + " Hz (need 44100)");
  for (float s : audio.samples) require(std::isfinite(s), "audio contains non-finite samples");
}

void validate(const MelConfig& cfg) {
  require(cfg.n_fft == 2048, "n_fft must be 2048");
  require(cfg.hop == 2205, "hop must be 2205");
  require(cfg.n_mels == 128, "n_mels must be 128");
  require(cfg.sample_rate == kSampleRate, "sample_rate must be 44100");
  require(cfg.log_floor > 0.0, "log_floor must be positive");
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n, 1.0);
  if (n == 1) return w;
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

StftFrames stft(const AudioBuffer& audio, const MelConfig& cfg) {
  validate(cfg);
  require(!audio.samples.empty(), "stft: empty audio");
  validate(audio);

  const auto n = static_cast<std::ptrdiff_t>(audio.samples.size());
  const int n_fft = cfg.n_fft;
  const int half = n_fft / 2;
  const auto window = hann_window(n_fft);

  StftFrames frames;
  frames.n_bins = static_cast<std::size_t>(cfg.n_bins());
  frames.n_frames = static_cast<std::size_t>(n / cfg.hop);
  frames.values.resize(frames.n_bins * frames.n_frames);

  RealFft fft(n_fft);
  double* buf = fft.input();
  for (std::size_t t = 0; t < frames.n_frames; ++t) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t) * cfg.hop - half;
    for (int i = 0; i < n_fft; ++i) {
      std::ptrdiff_t idx = start + i;
      if (idx < 0 || idx >= n) idx = reflect(idx, n);
      buf[i] = window[i] * static_cast<double>(audio.samples[idx]);
    }
    fft.run(frames.values.data() + t * frames.n_bins);
  }
  return frames;
}

Filterbank mel_filterbank(const MelConfig& cfg) {
  validate(cfg);
  const std::size_t n_bins = cfg.n_bins();
  const std::size_t n_mels = cfg.n_mels;
  const double nyquist = cfg.sample_rate / 2.0;

  // n_mels + 2 edge points, equally spaced on the mel axis.
  const double mel_hi = hz_to_mel(nyquist);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(n_mels + 1));

  Filterbank fb;
  fb.n_mels = n_mels;
  fb.n_bins = n_bins;
  fb.weights.assign(n_mels * n_bins, 0.0);
  fb.center_hz.resize(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    fb.center_hz[m] = mid;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      fb.weights[m * n_bins + k] = std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

Spectrogram log_mel(const AudioBuffer& audio, const MelConfig& cfg) {
  validate(cfg);
  require(audio.samples.size() >= static_cast<std::size_t>(cfg.hop), "log_mel: audio shorter than one hop");
  const StftFrames frames = stft(audio, cfg);
  const Filterbank fb = mel_filterbank(cfg);

  Spectrogram spec;
  spec.n_mels = fb.n_mels;
  spec.n_frames = frames.n_frames;
  spec.frame_duration = cfg.frame_duration();
  spec.values.resize(spec.n_mels * spec.n_frames);

  const double floor_log = std::log(cfg.log_floor);
  std::vector<double> power(frames.n_bins);
  for (std::size_t t = 0; t < frames.n_frames; ++t) {
    for (std::size_t k = 0; k < frames.n_bins; ++k) power[k] = std::norm(frames.at(k, t));
    for (std::size_t m = 0; m < fb.n_mels; ++m) {
      const double* w = fb.weights.data() + m * fb.n_bins;
      double acc = 0.0;
      for (std::size_t k = 0; k < fb.n_bins; ++k) acc += w[k] * power[k];
      spec.values[m * spec.n_frames + t] = acc > cfg.log_floor ? std::log(acc) : floor_log;
    }
  }
  return spec;
}

}  // namespace gzipt::dsp
