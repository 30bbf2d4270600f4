#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gzipt/app/run_config.hpp"
#include "gzipt/common/prob_matrix.hpp"
#include "gzipt/data/events.hpp"
#include "gzipt/dsp/audio.hpp"
#include "gzipt/metrics/metrics.hpp"
#include "gzipt/models/detector.hpp"
#include "gzipt/models/train.hpp"

namespace gzipt::app {

// Layout under the configured directories.
std::filesystem::path train_dir(const RunConfig& cfg);
std::filesystem::path test_dir(const RunConfig& cfg);
std::filesystem::path checkpoint_path(const RunConfig& cfg, models::DetectorKind kind);
std::filesystem::path loss_log_path(const RunConfig& cfg, models::DetectorKind kind);
std::filesystem::path report_path(const RunConfig& cfg);

// "seed=<n> config=<hash>", stored in WAV comments and manifests.
std::string provenance(const RunConfig& cfg);

// Synthesises the clip pool, then the train split (12.8 s) and test split
// (full length) with their manifests.
void cmd_generate(const RunConfig& cfg);

// Trains one detector on the stored train split and writes its checkpoint
// and a per-epoch loss CSV.
models::TrainResult cmd_train(const RunConfig& cfg, models::DetectorKind kind, bool verbose = false);

// Scores the test split with both checkpoints and writes the report JSON and
// a one-row summary CSV next to it.
metrics::EvalReport cmd_eval(const RunConfig& cfg);

// Both detectors' outputs for one recording, in a single pass.
DetectorOutput run_detectors(const models::Detector& ipt, const models::Detector& onset, const dsp::AudioBuffer& audio);

struct LoadedModels {
  models::Detector ipt;
  models::Detector onset;
};
LoadedModels load_models(const RunConfig& cfg);

// Events for a recording, sorted by onset; written as JSONL when `out` is
// set. With `probs_dir`, also writes onset.jsonl and ipt.jsonl there.
std::vector<data::NoteEvent> cmd_infer(const RunConfig& cfg, const std::filesystem::path& wav,
                                       const std::optional<std::filesystem::path>& out,
                                       const std::optional<std::filesystem::path>& probs_dir = std::nullopt);

// Fuses stored per-frame probabilities into events.
std::vector<data::NoteEvent> cmd_fuse(const std::filesystem::path& onset_probs, const std::filesystem::path& ipt_probs,
                                      const std::optional<std::filesystem::path>& out,
                                      const metrics::EvalOptions& options);

// Renders log-mel, onset markers, raw arg-max, fused result and, when labels
// are given (.labels.bin or .events.jsonl), the target. Returns the number of
// panels drawn.
int cmd_visualize(const RunConfig& cfg, const std::filesystem::path& wav, const std::filesystem::path& png,
                  const std::optional<std::filesystem::path>& labels = std::nullopt);

// Per-frame probability files: one JSON object per line,
// {"frame": i, "p": x} for onsets and {"frame": i, "probs": [...]} for IPTs.
void write_onset_probs(const std::filesystem::path& path, std::span<const float> probs);
std::vector<float> read_onset_probs(const std::filesystem::path& path);
void write_ipt_probs(const std::filesystem::path& path, const ProbMatrix& probs);
ProbMatrix read_ipt_probs(const std::filesystem::path& path);

}  // namespace gzipt::app
