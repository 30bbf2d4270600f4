#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gzipt/common/prob_matrix.hpp"
#include "gzipt/common/rng.hpp"
#include "gzipt/dsp/melspec.hpp"
#include "gzipt/models/config.hpp"
#include "gzipt/nn/graph.hpp"

namespace gzipt::models {

enum class DetectorKind { ipt, onset };

std::string to_string(DetectorKind kind);
DetectorKind parse_detector_kind(const std::string& text);

// Encoder: five modules of (conv3x3, ReLU, conv3x3, ReLU, freq max-pool,
// dropout); 128 bins shrink to 4. Decoder: deconv to 8 bins, skip-add of the
// fourth module's output, deconv to 16 bins, 1x1 conv to the class count,
// frequency mean and softmax over classes.
std::vector<nn::LayerSpec> ipt_layers(const IptDetectorConfig& cfg);

enum class Head { sigmoid, softmax };

// Module 1: three parallel first-layer kernels (3x3, 3x21, 21x3) concatenated
// on channels, conv3x3, pool, dropout. Module 2: conv3x3, pool, dropout.
// Then per-frame FC + ReLU and FC to `outputs` with the given head.
std::vector<nn::LayerSpec> onset_layers(const OnsetDetectorConfig& cfg, std::size_t outputs, Head head);

// Normalised model input [1, 128, T] from a log-mel spectrogram. A fixed
// affine map, so it commutes with cropping and padding in time.
nn::Tensor model_input(const dsp::Spectrogram& spec);

inline constexpr double kLogMelCenter = -5.0;
inline constexpr double kLogMelScale = 8.0;

class Detector {
 public:
  static Detector ipt(const IptDetectorConfig& cfg);
  static Detector onset(const OnsetDetectorConfig& cfg);

  DetectorKind kind() const { return kind_; }
  const IptDetectorConfig& ipt_config() const { return ipt_cfg_; }
  const OnsetDetectorConfig& onset_config() const { return onset_cfg_; }
  nn::Network<float>& network() { return net_; }
  const nn::Network<float>& network() const { return net_; }
  std::size_t outputs() const { return net_.output_shape().channels; }

  void init(Rng& rng) { net_.init(rng); }

  // One [1, 128, T] input to [outputs, 1, T] probabilities.
  const nn::Tensor& forward(const nn::Tensor& input, nn::Mode mode, Rng* rng, nn::Workspace<float>& ws) const;

  // Loss of the detector's output against the matching labels; writes
  // dL/d(output) into `grad` when non-empty.
  double loss(std::span<const float> output, std::span<const std::uint8_t> onset_labels,
              std::span<const std::uint8_t> ipt_labels, std::span<float> grad = {}) const;

  nlohmann::json config_json() const;

 private:
  Detector(DetectorKind kind, IptDetectorConfig ipt, OnsetDetectorConfig onset, std::vector<nn::LayerSpec> layers);

  DetectorKind kind_;
  IptDetectorConfig ipt_cfg_;
  OnsetDetectorConfig onset_cfg_;
  nn::Network<float> net_;
};

// Batched evaluation-mode helpers. Inputs are [1, 128, T_b]; T may differ per
// item. Train mode needs `rng` for dropout.
std::vector<ProbMatrix> ipt_forward(const Detector& det, std::span<const nn::Tensor> batch, bool train_mode = false,
                                    Rng* rng = nullptr);
std::vector<std::vector<float>> onset_forward(const Detector& det, std::span<const nn::Tensor> batch,
                                              bool train_mode = false, Rng* rng = nullptr);

// Checkpoint header: format tag, detector kind, model config, layer specs,
// input shape, plus whatever `extra` carries (seed, training step, hashes).
void save_detector(const std::filesystem::path& path, const Detector& det, const nlohmann::json& extra);

struct LoadedDetector {
  Detector detector;
  nlohmann::json header;
};
LoadedDetector load_detector(const std::filesystem::path& path);

}  // namespace gzipt::models
