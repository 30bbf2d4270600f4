#include "gzipt/data/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gzipt/common/error.hpp"

namespace gzipt::data {
namespace {

std::size_t seconds_to_samples(double s) { return static_cast<std::size_t>(std::llround(s * dsp::kSampleRate)); }

std::size_t frames_for(std::size_t samples) { return samples / static_cast<std::size_t>(dsp::kSampleRate * kFrameDuration); }

void relabel(SequenceExample& seq) {
  auto labels = quantize_labels(seq.events, frames_for(seq.audio.size()));
  seq.onset_labels = std::move(labels.onset);
  seq.ipt_labels = std::move(labels.ipt);
}

}  // namespace

FrameLabels quantize_labels(std::span<const NoteEvent> events, std::size_t n_frames, double frame_duration) {
  validate_events(events);
  FrameLabels out;
  out.onset.assign(n_frames, 0);
  out.ipt.assign(n_frames, 0);
  if (n_frames == 0) return out;
  require(!events.empty(), "quantize_labels: no events to cover the frames");

  std::vector<std::size_t> starts;
  starts.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::size_t f = frame_of(events[i].onset, frame_duration);
    require(f < n_frames, "event " + std::to_string(i) + " starts beyond the last frame");
    require(starts.empty() || f > starts.back(),
            "events " + std::to_string(i - 1) + " and " + std::to_string(i) + " share an onset frame");
    starts.push_back(f);
    out.onset[f] = 1;
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::size_t from = i == 0 ? 0 : starts[i];
    const std::size_t to = i + 1 < events.size() ? starts[i + 1] : n_frames;
    std::fill(out.ipt.begin() + from, out.ipt.begin() + to, static_cast<std::uint8_t>(id(events[i].technique)));
  }
  return out;
}

std::vector<NoteEvent> labels_to_events(std::span<const std::uint8_t> onset_labels,
                                        std::span<const std::uint8_t> ipt_labels, double frame_duration) {
  require(onset_labels.size() == ipt_labels.size(), "label length mismatch");
  std::vector<NoteEvent> events;
  const std::size_t n = onset_labels.size();
  for (std::size_t t = 0; t < n; ++t) {
    if (!onset_labels[t]) continue;
    if (!events.empty()) events.back().offset = t * frame_duration;
    events.push_back({t * frame_duration, n * frame_duration, technique_from_id(ipt_labels[t])});
  }
  return events;
}

SequenceExample concat_clips(std::span<const Clip* const> clips, double crossfade, double min_length) {
  require(!clips.empty(), "concat_clips: no clips");
  const std::size_t fade = seconds_to_samples(crossfade);
  std::size_t total = 0;
  for (std::size_t k = 0; k < clips.size(); ++k) {
    validate(*clips[k]);
    require(clips[k]->audio.size() >= 2 * fade, "concat_clips: clip shorter than two cross-fades");
    total += clips[k]->audio.size() - (k > 0 ? fade : 0);
  }
  require(static_cast<double>(total) / dsp::kSampleRate > min_length,
          "concat_clips: joined length " + std::to_string(static_cast<double>(total) / dsp::kSampleRate) +
              " s does not exceed " + std::to_string(min_length) + " s");

  std::vector<double> mix(total, 0.0);
  SequenceExample seq;
  std::size_t start = 0;
  for (std::size_t k = 0; k < clips.size(); ++k) {
    const auto& src = clips[k]->audio.samples;
    const std::size_t len = src.size();
    for (std::size_t i = 0; i < len; ++i) {
      double g = 1.0;
      if (k > 0 && i < fade) g = static_cast<double>(i) / fade;
      if (k + 1 < clips.size() && i >= len - fade) g = 1.0 - static_cast<double>(i - (len - fade)) / fade;
      mix[start + i] += g * src[i];
    }
    seq.events.push_back({static_cast<double>(start) / dsp::kSampleRate, 0.0, clips[k]->technique});
    seq.clip_ids.push_back(clips[k]->id);
    start += len - fade;
  }
  for (std::size_t k = 0; k + 1 < seq.events.size(); ++k) seq.events[k].offset = seq.events[k + 1].onset;
  seq.events.back().offset = static_cast<double>(total) / dsp::kSampleRate;

  seq.audio.samples.resize(total);
  for (std::size_t i = 0; i < total; ++i) seq.audio.samples[i] = static_cast<float>(mix[i]);
  relabel(seq);
  return seq;
}

void truncate(SequenceExample& seq, std::size_t samples) {
  if (samples >= seq.audio.size()) return;
  seq.audio.samples.resize(samples);
  const double end = static_cast<double>(samples) / dsp::kSampleRate;
  std::erase_if(seq.events, [end](const NoteEvent& e) { return e.onset >= end; });
  seq.clip_ids.resize(seq.events.size());
  require(!seq.events.empty(), "truncate: no event left");
  seq.events.back().offset = std::min(seq.events.back().offset, end);
  relabel(seq);
}

std::vector<SequenceExample> generate_split(std::span<const Clip> pool, std::size_t count, SplitMode mode,
                                            Rng& rng, const SplitOptions& options) {
  require(!pool.empty(), "generate_split: empty clip pool");
  const std::size_t fade = seconds_to_samples(options.crossfade);
  const auto needed = static_cast<double>(options.min_length) * dsp::kSampleRate;
  {
    double all = 0.0;
    for (std::size_t k = 0; k < pool.size(); ++k)
      all += static_cast<double>(pool[k].audio.size()) - (k > 0 ? static_cast<double>(fade) : 0.0);
    require(all > needed, "generate_split: the whole pool is too short for one sequence");
  }

  std::set<std::vector<std::size_t>> seen;
  std::vector<SequenceExample> out;
  out.reserve(count);
  const std::size_t budget = std::max<std::size_t>(1000, count * static_cast<std::size_t>(options.attempts_per_sequence));
  std::size_t attempts = 0;
  while (out.size() < count) {
    require(attempts++ < budget, "generate_split: requested " + std::to_string(count) +
                                     " unique sequences but the pool yields only " + std::to_string(out.size()) +
                                     " distinct clip orderings");
    std::vector<std::size_t> remaining(pool.size());
    for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
    std::vector<const Clip*> chosen;
    std::vector<std::size_t> signature;
    double length = 0.0;
    while (length <= needed) {
      const std::size_t pick = rng.below(remaining.size());
      const Clip& clip = pool[remaining[pick]];
      remaining[pick] = remaining.back();
      remaining.pop_back();
      length += static_cast<double>(clip.audio.size()) - (chosen.empty() ? 0.0 : static_cast<double>(fade));
      chosen.push_back(&clip);
      signature.push_back(clip.id);
    }
    if (!seen.insert(signature).second) continue;
    SequenceExample seq = concat_clips(chosen, options.crossfade, options.min_length);
    if (mode == SplitMode::train) truncate(seq, seconds_to_samples(options.min_length));
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace gzipt::data
