#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gzipt/common/rng.hpp"
#include "gzipt/data/events.hpp"
#include "gzipt/data/synth.hpp"

namespace gzipt::data {

inline constexpr double kCrossfade = 0.05;
inline constexpr double kTrainLength = 12.8;
inline constexpr std::size_t kTrainSamples = 564480;  // 12.8 s at 44.1 kHz
inline constexpr std::size_t kTrainFrames = 256;      // 12.8 s / 0.05 s

// One concatenated sequence with its annotations on the 0.05 s grid.
struct SequenceExample {
  dsp::AudioBuffer audio;
  std::vector<NoteEvent> events;
  std::vector<std::uint8_t> onset_labels;  // [T], 1 at each event's onset frame
  std::vector<std::uint8_t> ipt_labels;    // [T], technique id per frame
  std::vector<std::size_t> clip_ids;       // ordering signature

  std::size_t frames() const { return ipt_labels.size(); }
};

struct FrameLabels {
  std::vector<std::uint8_t> onset;
  std::vector<std::uint8_t> ipt;
};

// Onset frame = floor(onset / 0.05). Each frame from an event's onset frame up
// to the frame before the next onset frame (or the end) carries that event's
// technique; frames before the first onset belong to the first event.
FrameLabels quantize_labels(std::span<const NoteEvent> events, std::size_t n_frames,
                            double frame_duration = kFrameDuration);

// Inverse of quantize_labels: one event per onset frame, onset = frame * 0.05,
// ending where the next one starts.
std::vector<NoteEvent> labels_to_events(std::span<const std::uint8_t> onset_labels,
                                        std::span<const std::uint8_t> ipt_labels,
                                        double frame_duration = kFrameDuration);

// Joins clips with linear cross-fades of `crossfade` seconds. Each boundary
// shortens the result by one cross-fade; the next clip's onset is the start
// of the overlap. The joined length must exceed `min_length`.
SequenceExample concat_clips(std::span<const Clip* const> clips, double crossfade = kCrossfade,
                             double min_length = kTrainLength);

enum class SplitMode { train, test };

struct SplitOptions {
  double crossfade = kCrossfade;
  double min_length = kTrainLength;
  // Random draws allowed per requested sequence before giving up on finding
  // a new clip ordering.
  int attempts_per_sequence = 200;
};

// Draws clips without replacement until the joined length exceeds 12.8 s.
// Every returned sequence has a distinct clip ordering. `train` sequences are
// cut to exactly 12.8 s / 256 frames; `test` sequences keep their full length.
std::vector<SequenceExample> generate_split(std::span<const Clip> pool, std::size_t count, SplitMode mode,
                                            Rng& rng, const SplitOptions& options = {});

// Cuts a sequence to its first `samples` samples, dropping events that start
// past the cut and re-deriving labels.
void truncate(SequenceExample& seq, std::size_t samples);

}  // namespace gzipt::data
