#include "gzipt/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "gzipt/common/error.hpp"

namespace gzipt::data {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRate = dsp::kSampleRate;
constexpr double kMaxPartialHz = 18000.0;

struct NoteShape {
  double amplitude = 1.0;
  double tau = 1.0;          // amplitude decay constant, seconds
  int partials = 8;
  double rolloff = 1.0;      // partial k has weight k^-rolloff
  double partial_damping = 0.6;  // extra decay per partial index, 1/s
  double noise = 0.3;        // pick-noise burst level
  double release = 0.0;      // when > 0, note is choked after this many seconds
};

using PitchCurve = std::function<double(double)>;

// Adds one note starting at `start` (seconds) into `out`.
void render_note(std::vector<double>& out, double start, const PitchCurve& pitch, const NoteShape& shape,
                 Rng& rng) {
  const auto first = static_cast<std::size_t>(std::llround(start * kRate));
  if (first >= out.size()) return;
  std::size_t last = out.size();
  constexpr double kChoke = 0.005;
  if (shape.release > 0.0)
    last = std::min(last, first + static_cast<std::size_t>(std::llround((shape.release + kChoke) * kRate)));

  std::vector<double> weight(shape.partials), offset(shape.partials);
  for (int k = 0; k < shape.partials; ++k) {
    weight[k] = std::pow(k + 1.0, -shape.rolloff);
    offset[k] = rng.uniform(0.0, kTwoPi);
  }
  double phase = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    const double t = static_cast<double>(i - first) / kRate;
    const double f = pitch(t);
    phase += kTwoPi * f / kRate;
    double env = std::exp(-t / shape.tau) * std::min(1.0, t / 0.002);
    if (shape.release > 0.0 && t > shape.release) env *= std::max(0.0, 1.0 - (t - shape.release) / kChoke);
    double v = 0.0;
    for (int k = 0; k < shape.partials; ++k) {
      if ((k + 1) * f > kMaxPartialHz) break;
      v += weight[k] * std::exp(-t * shape.partial_damping * k) * std::sin((k + 1) * phase + offset[k]);
    }
    double burst = 0.0;
    if (t < 0.02) burst = shape.noise * rng.normal() * std::exp(-t / 0.004);
    out[i] += shape.amplitude * (env * v + burst);
  }
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

PitchCurve constant(double f) {
  return [f](double) { return f; };
}

}  // namespace

void validate(const Clip& clip) {
  dsp::validate(clip.audio);
  const double d = clip.duration();
  require(d >= 0.3 - 1e-9 && d <= 15.0 + 1e-9, "clip duration " + std::to_string(d) + " s outside [0.3, 15]");
}

Clip synth_clip(Technique technique, double f0, double duration, Rng& rng) {
  require(f0 >= kSynthMinF0 && f0 <= kSynthMaxF0, "synth_clip: f0 must be in [60, 1200] Hz");
  require(duration >= kSynthMinDuration && duration <= kSynthMaxDuration,
          "synth_clip: duration must be in [0.5, 3.0] s");

  const auto n = static_cast<std::size_t>(std::llround(duration * kRate));
  std::vector<double> out(n, 0.0);
  NoteShape shape;

  switch (technique) {
    case Technique::plucks: {
      shape.tau = rng.uniform(0.45, 0.9);
      render_note(out, 0.0, constant(f0), shape, rng);
      break;
    }
    case Technique::harmonic: {
      shape.tau = rng.uniform(0.15, 0.3);
      shape.partials = 2;
      shape.rolloff = 2.5;
      shape.partial_damping = 2.0;
      shape.noise = 0.08;
      render_note(out, 0.0, constant(f0), shape, rng);
      break;
    }
    case Technique::vibrato: {
      const double rate = rng.uniform(4.5, 5.5);
      const double cents = rng.uniform(25.0, 35.0);
      shape.tau = rng.uniform(1.2, 2.0);
      render_note(out, 0.0,
                  [=](double t) {
                    const double depth = cents * smoothstep(t / 0.1);
                    return f0 * std::exp2(depth / 1200.0 * std::sin(kTwoPi * rate * t));
                  },
                  shape, rng);
      break;
    }
    case Technique::up_portamento:
    case Technique::down_portamento:
    case Technique::return_portamento: {
      // The glide runs at a constant semitone rate over the whole note, so
      // every frame of the note shows moving pitch.
      const bool ret = technique == Technique::return_portamento;
      const double semis = ret ? rng.uniform(1.5, 3.0) : rng.uniform(2.0, 4.0);
      const double sign = technique == Technique::down_portamento ? -1.0 : 1.0;
      const double glide_start = rng.uniform(0.02, 0.05);
      const double glide_len = duration - glide_start - rng.uniform(0.02, 0.05);
      shape.tau = rng.uniform(1.0, 1.8);
      render_note(out, 0.0,
                  [=](double t) {
                    const double x = std::clamp((t - glide_start) / glide_len, 0.0, 1.0);
                    const double s = ret ? 1.0 - std::abs(2.0 * x - 1.0) : x;
                    return f0 * std::exp2(sign * semis * s / 12.0);
                  },
                  shape, rng);
      break;
    }
    case Technique::glissando: {
      static constexpr int kLadder[] = {0, 2, 4, 7, 9, 12, 14, 16, 19, 21, 24, 26, 28, 31};
      const double step = rng.uniform(0.05, 0.09);
      const int notes = std::clamp(static_cast<int>(duration * 0.6 / step), 5, 12);
      const bool up = rng.bernoulli(0.5);
      shape.tau = 0.6;
      shape.noise = 0.4;
      for (int k = 0; k < notes; ++k) {
        const int degree = up ? kLadder[k] : kLadder[notes - 1 - k];
        const double f = std::min(f0 * std::exp2(degree / 12.0), 2400.0);
        render_note(out, k * step, constant(f), shape, rng);
      }
      break;
    }
    case Technique::tremolo: {
      const double rate = rng.uniform(10.0, 14.0);
      const double period = 1.0 / rate;
      shape.tau = 0.3;
      shape.noise = 0.4;
      shape.release = period;
      for (double t = 0.0; t < duration - 0.02; t += period) {
        shape.amplitude = rng.uniform(0.8, 1.0);
        render_note(out, t, constant(f0), shape, rng);
      }
      break;
    }
  }

  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  const double gain = peak > 0.0 ? rng.uniform(0.35, 0.6) / peak : 0.0;

  Clip clip;
  clip.technique = technique;
  clip.audio.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) clip.audio.samples[i] = static_cast<float>(out[i] * gain);
  return clip;
}

std::vector<Clip> make_clip_pool(const ClipPoolConfig& cfg, Rng& rng) {
  require(cfg.clips_per_class > 0, "clips_per_class must be positive");
  require(cfg.min_duration >= kSynthMinDuration && cfg.max_duration <= kSynthMaxDuration &&
              cfg.min_duration <= cfg.max_duration,
          "pool durations must lie in [0.5, 3.0] s");
  require(cfg.min_f0 >= kSynthMinF0 && cfg.max_f0 <= kSynthMaxF0 && cfg.min_f0 <= cfg.max_f0,
          "pool f0 range must lie in [60, 1200] Hz");
  std::vector<Clip> pool;
  pool.reserve(static_cast<std::size_t>(cfg.clips_per_class) * kNumTechniques);
  for (int k = 0; k < cfg.clips_per_class; ++k) {
    for (int c = 0; c < kNumTechniques; ++c) {
      const double f0 = std::exp(rng.uniform(std::log(cfg.min_f0), std::log(cfg.max_f0)));
      const double dur = rng.uniform(cfg.min_duration, cfg.max_duration);
      Rng clip_rng = rng.fork();
      Clip clip = synth_clip(static_cast<Technique>(c), f0, dur, clip_rng);
      clip.id = pool.size();
      pool.push_back(std::move(clip));
    }
  }
  return pool;
}

}  // namespace gzipt::data
