#include "gzipt/models/detector.hpp"

#include <algorithm>

#include "gzipt/common/error.hpp"
#include "gzipt/models/losses.hpp"
#include "gzipt/nn/checkpoint.hpp"

namespace gzipt::models {
namespace {

using nn::LayerKind;
using nn::LayerSpec;

int push(std::vector<LayerSpec>& layers, LayerSpec spec) {
  layers.push_back(std::move(spec));
  return static_cast<int>(layers.size()) - 1;
}

LayerSpec conv(std::size_t channels, std::size_t kf, std::size_t kt, std::string name, std::vector<int> inputs = {}) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.out_channels = channels;
  s.kernel_freq = kf;
  s.kernel_time = kt;
  s.name = std::move(name);
  s.inputs = std::move(inputs);
  return s;
}

LayerSpec deconv(std::size_t channels, std::string name) {
  LayerSpec s = conv(channels, 3, 3, std::move(name));
  s.kind = LayerKind::deconv2d;
  return s;
}

LayerSpec simple(LayerKind kind, std::vector<int> inputs = {}) {
  LayerSpec s;
  s.kind = kind;
  s.inputs = std::move(inputs);
  return s;
}

LayerSpec dropout(double p) {
  LayerSpec s = simple(LayerKind::dropout);
  s.dropout = p;
  return s;
}

LayerSpec linear(std::size_t features, std::string name) {
  LayerSpec s = simple(LayerKind::linear);
  s.out_channels = features;
  s.name = std::move(name);
  return s;
}

}  // namespace

std::string to_string(DetectorKind kind) { return kind == DetectorKind::ipt ? "ipt" : "onset"; }

DetectorKind parse_detector_kind(const std::string& text) {
  if (text == "ipt") return DetectorKind::ipt;
  if (text == "onset") return DetectorKind::onset;
  fail("unknown detector '" + text + "' (expected ipt or onset)");
}

std::vector<LayerSpec> ipt_layers(const IptDetectorConfig& cfg) {
  validate(cfg);
  if (cfg.cnn_topology) return onset_layers(cfg.cnn, cfg.n_ipt, Head::softmax);

  std::vector<LayerSpec> layers;
  std::array<int, 5> module_out{};
  for (std::size_t m = 0; m < 5; ++m) {
    const std::string tag = "enc" + std::to_string(m + 1);
    push(layers, conv(cfg.encoder_channels[m], 3, 3, tag + ".conv1"));
    push(layers, simple(LayerKind::relu));
    push(layers, conv(cfg.encoder_channels[m], 3, 3, tag + ".conv2"));
    push(layers, simple(LayerKind::relu));
    push(layers, simple(LayerKind::maxpool_freq));
    module_out[m] = push(layers, dropout(cfg.dropout));
  }
  push(layers, deconv(cfg.encoder_channels[3], "dec1"));
  const int dec1 = push(layers, simple(LayerKind::relu));
  if (cfg.skip_connection) {
    LayerSpec skip = simple(LayerKind::add, {dec1, module_out[3]});
    skip.name = "skip";
    push(layers, skip);
  }
  push(layers, deconv(cfg.encoder_channels[2], "dec2"));
  push(layers, simple(LayerKind::relu));
  push(layers, conv(cfg.n_ipt, 1, 1, "head"));
  push(layers, simple(LayerKind::mean_freq));
  push(layers, simple(LayerKind::softmax));
  return layers;
}

std::vector<LayerSpec> onset_layers(const OnsetDetectorConfig& cfg, std::size_t outputs, Head head) {
  std::vector<LayerSpec> layers;
  if (cfg.multi_shape) {
    std::vector<int> branches;
    for (auto [kf, kt] : {std::pair<std::size_t, std::size_t>{3, 3}, {3, 21}, {21, 3}}) {
      push(layers, conv(cfg.branch_channels, kf, kt, "first." + std::to_string(kf) + "x" + std::to_string(kt),
                        {nn::kNetworkInput}));
      branches.push_back(push(layers, simple(LayerKind::relu)));
    }
    push(layers, simple(LayerKind::concat, branches));
  } else {
    push(layers, conv(3 * cfg.branch_channels, 3, 3, "first.3x3"));
    push(layers, simple(LayerKind::relu));
  }
  push(layers, conv(cfg.conv2_channels, 3, 3, "conv2"));
  push(layers, simple(LayerKind::relu));
  push(layers, simple(LayerKind::maxpool_freq));
  push(layers, dropout(cfg.dropout));
  push(layers, conv(cfg.conv3_channels, 3, 3, "conv3"));
  push(layers, simple(LayerKind::relu));
  push(layers, simple(LayerKind::maxpool_freq));
  push(layers, dropout(cfg.dropout));
  push(layers, linear(cfg.hidden_fc, "fc1"));
  push(layers, simple(LayerKind::relu));
  push(layers, linear(outputs, "fc2"));
  push(layers, simple(head == Head::sigmoid ? LayerKind::sigmoid : LayerKind::softmax));
  return layers;
}

nn::Tensor model_input(const dsp::Spectrogram& spec) {
  require(spec.n_mels == kMelBins, "model input needs 128 mel bins, got " + std::to_string(spec.n_mels));
  require(spec.n_frames >= 1, "model input needs at least one frame");
  nn::Tensor x({1, spec.n_mels, spec.n_frames});
  auto d = x.data();
  for (std::size_t i = 0; i < spec.values.size(); ++i)
    d[i] = static_cast<float>((spec.values[i] - kLogMelCenter) / kLogMelScale);
  return x;
}

Detector::Detector(DetectorKind kind, IptDetectorConfig ipt, OnsetDetectorConfig onset,
                   std::vector<nn::LayerSpec> layers)
    : kind_(kind), ipt_cfg_(std::move(ipt)), onset_cfg_(onset), net_(std::move(layers), 1, kMelBins) {}

Detector Detector::ipt(const IptDetectorConfig& cfg) { return Detector(DetectorKind::ipt, cfg, {}, ipt_layers(cfg)); }

Detector Detector::onset(const OnsetDetectorConfig& cfg) {
  validate(cfg);
  return Detector(DetectorKind::onset, {}, cfg, onset_layers(cfg, 1, Head::sigmoid));
}

const nn::Tensor& Detector::forward(const nn::Tensor& input, nn::Mode mode, Rng* rng,
                                    nn::Workspace<float>& ws) const {
  require(input.rank() == 3 && input.dim(1) == kMelBins,
          "detector input must have 128 frequency bins, got " + nn::to_string(input.shape()));
  return net_.forward(input, mode, rng, ws);
}

double Detector::loss(std::span<const float> output, std::span<const std::uint8_t> onset_labels,
                      std::span<const std::uint8_t> ipt_labels, std::span<float> grad) const {
  if (kind_ == DetectorKind::onset) return wbce_loss<float>(output, onset_labels, onset_cfg_.beta, grad);
  return ipt_loss<float>(output, outputs(), ipt_labels, grad);
}

nlohmann::json Detector::config_json() const {
  return kind_ == DetectorKind::ipt ? nlohmann::json(ipt_cfg_) : nlohmann::json(onset_cfg_);
}

std::vector<ProbMatrix> ipt_forward(const Detector& det, std::span<const nn::Tensor> batch, bool train_mode, Rng* rng) {
  require(det.kind() == DetectorKind::ipt, "ipt_forward needs an IPT detector");
  std::vector<ProbMatrix> out;
  nn::Workspace<float> ws;
  for (const auto& x : batch) {
    const auto& y = det.forward(x, train_mode ? nn::Mode::train : nn::Mode::eval, rng, ws);
    ProbMatrix m(y.dim(0), y.dim(2));
    std::copy(y.data().begin(), y.data().end(), m.values.begin());
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<std::vector<float>> onset_forward(const Detector& det, std::span<const nn::Tensor> batch,
                                              bool train_mode, Rng* rng) {
  require(det.kind() == DetectorKind::onset, "onset_forward needs an onset detector");
  std::vector<std::vector<float>> out;
  nn::Workspace<float> ws;
  for (const auto& x : batch) {
    const auto& y = det.forward(x, train_mode ? nn::Mode::train : nn::Mode::eval, rng, ws);
    out.emplace_back(y.data().begin(), y.data().end());
  }
  return out;
}

void save_detector(const std::filesystem::path& path, const Detector& det, const nlohmann::json& extra) {
  nlohmann::json header = extra.is_object() ? extra : nlohmann::json::object();
  header["format"] = "gzipt-detector";
  header["version"] = 1;
  header["detector"] = to_string(det.kind());
  header["config"] = det.config_json();
  header["layers"] = det.network().specs();
  header["input"] = {1, kMelBins};
  const auto params = det.network().parameters();
  nn::save_checkpoint(path, std::move(header), params);
}

LoadedDetector load_detector(const std::filesystem::path& path) {
  nn::Checkpoint ck = nn::load_checkpoint(path);
  const auto& h = ck.header;
  const std::string where = path.string() + ": ";
  require(h.value("format", "") == "gzipt-detector", where + "not a detector checkpoint");
  const DetectorKind kind = parse_detector_kind(h.at("detector").get<std::string>());
  Detector det = kind == DetectorKind::ipt ? Detector::ipt(h.at("config").get<IptDetectorConfig>())
                                           : Detector::onset(h.at("config").get<OnsetDetectorConfig>());
  require(nlohmann::json(det.network().specs()) == h.at("layers"), where + "layer specs do not match the config");
  auto params = det.network().parameters();
  require(params.size() == ck.params.size(), where + "parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i]->shape() == ck.params[i].shape(), where + "parameter " + std::to_string(i) + " shape mismatch");
    std::copy(ck.params[i].data().begin(), ck.params[i].data().end(), params[i]->data().begin());
  }
  return {std::move(det), std::move(ck.header)};
}

}  // namespace gzipt::models
