#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "gzipt/data/synth.hpp"
#include "gzipt/metrics/metrics.hpp"
#include "gzipt/models/config.hpp"
#include "gzipt/models/train.hpp"

namespace gzipt::app {

struct Paths {
  std::filesystem::path corpus = "corpus";
  std::filesystem::path checkpoints = "checkpoints";
  std::filesystem::path reports = "reports";
};

struct DataConfig {
  std::size_t n_train = 200;
  std::size_t n_test = 40;
  data::ClipPoolConfig clips{};
};

struct TrainingConfig {
  double lr = 1e-3;
  std::size_t batch = 8;
  std::size_t ipt_epochs = 30;
  std::size_t onset_epochs = 30;
  double heldout_fraction = 0.1;  // tail of the train split kept for loss logging
};

struct RunConfig {
  std::uint64_t seed = 42;
  Paths paths;
  DataConfig data;
  models::IptDetectorConfig ipt;
  models::OnsetDetectorConfig onset;
  TrainingConfig train;
  metrics::EvalOptions eval;
};

void validate(const RunConfig& cfg);

// Everything except the paths; paths never reach an artifact, so the same
// configuration run in two directories produces identical files.
nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

// Relative paths in the file are taken relative to the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

// Turns relative paths absolute against `base` and checks each one is either
// a directory or creatable.
void resolve_paths(RunConfig& cfg, const std::filesystem::path& base);

// 64-bit FNV-1a of the serialised configuration, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace gzipt::app
