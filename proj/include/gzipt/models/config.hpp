#pragma once

#include <array>
#include <cstddef>

#include <nlohmann/json_fwd.hpp>

namespace gzipt::models {

inline constexpr std::size_t kMelBins = 128;
inline constexpr std::size_t kNumIpt = 8;
inline constexpr double kDefaultBeta = 1.94;

// Multi-shape CNN: the onset detector, also reused as the IPT detector in the
// CNN+Onsets ablation.
struct OnsetDetectorConfig {
  std::size_t branch_channels = 8;   // per first-layer kernel shape
  std::size_t conv2_channels = 16;   // 3x3 layer closing module 1
  std::size_t conv3_channels = 16;   // 3x3 layer of module 2
  std::size_t hidden_fc = 64;
  bool multi_shape = true;           // off: one 3x3 layer of 3 * branch_channels
  double beta = kDefaultBeta;        // WBCE positive-class weight, in (0, 2)
  double dropout = 0.25;
};

// Fully convolutional IPT detector.
struct IptDetectorConfig {
  std::array<std::size_t, 5> encoder_channels{8, 16, 32, 64, 128};
  std::size_t n_ipt = kNumIpt;
  double dropout = 0.25;
  bool skip_connection = true;
  // CNN+Onsets ablation: replace the FCN with the onset detector's topology.
  bool cnn_topology = false;
  OnsetDetectorConfig cnn{};
};

void validate(const OnsetDetectorConfig& cfg);
void validate(const IptDetectorConfig& cfg);

void to_json(nlohmann::json& j, const OnsetDetectorConfig& c);
void from_json(const nlohmann::json& j, OnsetDetectorConfig& c);
void to_json(nlohmann::json& j, const IptDetectorConfig& c);
void from_json(const nlohmann::json& j, IptDetectorConfig& c);

}  // namespace gzipt::models
