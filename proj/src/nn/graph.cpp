#include "gzipt/nn/graph.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "gzipt/nn/kernels.hpp"

namespace gzipt::nn {
namespace {

constexpr std::pair<LayerKind, const char*> kKindNames[] = {
    {LayerKind::conv2d, "conv2d"},   {LayerKind::deconv2d, "deconv2d"}, {LayerKind::maxpool_freq, "maxpool_freq"},
    {LayerKind::relu, "relu"},       {LayerKind::dropout, "dropout"},   {LayerKind::linear, "linear"},
    {LayerKind::sigmoid, "sigmoid"}, {LayerKind::softmax, "softmax"},   {LayerKind::add, "add"},
    {LayerKind::concat, "concat"},   {LayerKind::mean_freq, "mean_freq"},
};

std::string where(std::size_t node, const LayerSpec& spec) {
  return "layer " + std::to_string(node) + " (" + to_string(spec.kind) + (spec.name.empty() ? "" : " " + spec.name) +
         "): ";
}

}  // namespace

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

std::string to_string(LayerKind kind) {
  for (const auto& [k, n] : kKindNames)
    if (k == kind) return n;
  return "?";
}

LayerKind parse_layer_kind(const std::string& text) {
  for (const auto& [k, n] : kKindNames)
    if (text == n) return k;
  fail("unknown layer kind '" + text + "'");
}

void to_json(nlohmann::json& j, const LayerSpec& s) {
  j = {{"kind", to_string(s.kind)}, {"name", s.name}, {"inputs", s.inputs}};
  if (s.kind == LayerKind::conv2d || s.kind == LayerKind::deconv2d) {
    j["out_channels"] = s.out_channels;
    j["kernel"] = std::to_string(s.kernel_freq) + "x" + std::to_string(s.kernel_time);
  } else if (s.kind == LayerKind::linear) {
    j["out_features"] = s.out_channels;
  } else if (s.kind == LayerKind::dropout) {
    j["p"] = s.dropout;
  }
}

void from_json(const nlohmann::json& j, LayerSpec& s) {
  s = LayerSpec{};
  s.kind = parse_layer_kind(j.at("kind").get<std::string>());
  s.name = j.value("name", "");
  s.inputs = j.value("inputs", std::vector<int>{});
  if (j.contains("out_channels")) s.out_channels = j.at("out_channels").get<std::size_t>();
  if (j.contains("out_features")) s.out_channels = j.at("out_features").get<std::size_t>();
  if (j.contains("kernel")) {
    const auto text = j.at("kernel").get<std::string>();
    const auto x = text.find('x');
    require(x != std::string::npos, "bad kernel '" + text + "'");
    s.kernel_freq = std::stoul(text.substr(0, x));
    s.kernel_time = std::stoul(text.substr(x + 1));
  }
  s.dropout = j.value("p", 0.0);
}

template <typename T>
Network<T>::Network(std::vector<LayerSpec> specs, std::size_t in_channels, std::size_t in_freq)
    : specs_(std::move(specs)), input_{in_channels, in_freq} {
  require(!specs_.empty(), "network has no layers");
  require(in_channels > 0 && in_freq > 0, "network input must have positive channels and frequency bins");
  const std::size_t n = specs_.size();
  inputs_.resize(n);
  shapes_.resize(n);
  weights_.resize(n);
  biases_.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& s = specs_[i];
    const std::string at = where(i, s);
    auto& ins = inputs_[i];
    ins = s.inputs.empty() ? std::vector<int>{static_cast<int>(i) - 1} : s.inputs;
    for (int src : ins)
      require(src >= kNetworkInput && src < static_cast<int>(i), at + "input index " + std::to_string(src) +
                                                                      " does not refer to an earlier node");
    std::vector<NodeShape> in_shapes;
    for (int src : ins) in_shapes.push_back(src == kNetworkInput ? input_ : shapes_[src]);

    const bool unary = s.kind != LayerKind::add && s.kind != LayerKind::concat;
    if (unary) require(ins.size() == 1, at + "expects exactly one input");
    const NodeShape in0 = in_shapes.front();
    NodeShape out = in0;

    switch (s.kind) {
      case LayerKind::conv2d:
      case LayerKind::deconv2d: {
        require(s.out_channels > 0, at + "out_channels must be positive");
        require(s.kernel_freq > 0 && s.kernel_time > 0 && s.kernel_freq % 2 == 1 && s.kernel_time % 2 == 1,
                at + "kernel dims must be positive and odd");
        const bool deconv = s.kind == LayerKind::deconv2d;
        out = {s.out_channels, deconv ? in0.freq * DeconvGeometry::stride_freq : in0.freq};
        const std::size_t fan = in0.channels * s.kernel_freq * s.kernel_time;
        weights_[i] = BasicTensor<T>(deconv ? Shape{in0.channels, s.out_channels, s.kernel_freq, s.kernel_time}
                                            : Shape{s.out_channels, in0.channels, s.kernel_freq, s.kernel_time});
        biases_[i] = BasicTensor<T>(Shape{s.out_channels});
        require(fan > 0, at + "empty fan-in");
        break;
      }
      case LayerKind::linear:
        require(s.out_channels > 0, at + "out_features must be positive");
        out = {s.out_channels, 1};
        weights_[i] = BasicTensor<T>(Shape{s.out_channels, in0.channels * in0.freq});
        biases_[i] = BasicTensor<T>(Shape{s.out_channels});
        break;
      case LayerKind::maxpool_freq:
        require(in0.freq >= 2, at + "needs at least 2 frequency bins, got " + std::to_string(in0.freq));
        out.freq = in0.freq / 2;
        break;
      case LayerKind::dropout:
        require(s.dropout >= 0.0 && s.dropout < 1.0, at + "dropout probability must be in [0, 1)");
        break;
      case LayerKind::relu:
      case LayerKind::sigmoid:
      case LayerKind::softmax:
        break;
      case LayerKind::mean_freq:
        out.freq = 1;
        break;
      case LayerKind::add:
        require(ins.size() == 2, at + "expects two inputs");
        require(in_shapes[0] == in_shapes[1],
                at + "shape mismatch [" + std::to_string(in_shapes[0].channels) + "," +
                    std::to_string(in_shapes[0].freq) + "] vs [" + std::to_string(in_shapes[1].channels) + "," +
                    std::to_string(in_shapes[1].freq) + "]");
        break;
      case LayerKind::concat:
        require(ins.size() >= 2, at + "expects at least two inputs");
        out.channels = 0;
        for (const auto& sh : in_shapes) {
          require(sh.freq == in0.freq, at + "inputs differ in frequency bins");
          out.channels += sh.channels;
        }
        break;
    }
    for (auto* p : {&weights_[i], &biases_[i]})
      if (p->size() > 0) p->ensure_grad();
    shapes_[i] = out;
  }
}

template <typename T>
void Network<T>::init(Rng& rng) {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (weights_[i].size() == 0) continue;
    const auto& s = specs_[i];
    const NodeShape in0 = inputs_[i][0] == kNetworkInput ? input_ : shapes_[inputs_[i][0]];
    double fan_in = 0.0;
    if (s.kind == LayerKind::linear)
      fan_in = static_cast<double>(in0.channels * in0.freq);
    else if (s.kind == LayerKind::deconv2d)
      fan_in = static_cast<double>(in0.channels * s.kernel_freq * s.kernel_time) / DeconvGeometry::stride_freq;
    else
      fan_in = static_cast<double>(in0.channels * s.kernel_freq * s.kernel_time);
    const double bound = std::sqrt(6.0 / fan_in);
    for (auto& w : weights_[i].data()) w = static_cast<T>(rng.uniform(-bound, bound));
    biases_[i].fill(T{0});
  }
}

template <typename T>
const BasicTensor<T>& Network<T>::input_of(std::size_t node, std::size_t k, const BasicTensor<T>& x,
                                           const Workspace<T>& ws) const {
  const int src = inputs_[node][k];
  return src == kNetworkInput ? x : ws.values[src];
}

template <typename T>
const BasicTensor<T>& Network<T>::forward(const BasicTensor<T>& x, Mode mode, Rng* rng, Workspace<T>& ws) const {
  require(x.rank() == 3 && x.dim(0) == input_.channels && x.dim(1) == input_.freq && x.dim(2) >= 1,
          "network input must be [" + std::to_string(input_.channels) + "," + std::to_string(input_.freq) +
              ",T>=1], got " + to_string(x.shape()));
  const std::size_t nt = x.dim(2);
  const std::size_t n = specs_.size();
  ws.values.resize(n);
  ws.aux.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& s = specs_[i];
    const BasicTensor<T>& in = input_of(i, 0, x, ws);
    const NodeShape ish = inputs_[i][0] == kNetworkInput ? input_ : shapes_[inputs_[i][0]];
    BasicTensor<T>& out = ws.values[i];
    out.resize({shapes_[i].channels, shapes_[i].freq, nt});
    auto y = out.data();
    const auto xin = in.data();

    switch (s.kind) {
      case LayerKind::conv2d:
        kernels::conv2d_forward<T>({ish.channels, s.out_channels, ish.freq, nt, s.kernel_freq, s.kernel_time}, xin,
                                   weights_[i].data(), biases_[i].data(), y);
        break;
      case LayerKind::deconv2d:
        kernels::deconv2d_forward<T>({ish.channels, s.out_channels, ish.freq, nt, s.kernel_freq, s.kernel_time},
                                     xin, weights_[i].data(), biases_[i].data(), y);
        break;
      case LayerKind::linear:
        kernels::linear_forward<T>({ish.channels * ish.freq, s.out_channels, nt}, xin, weights_[i].data(),
                                   biases_[i].data(), y);
        break;
      case LayerKind::maxpool_freq:
        ws.aux[i].resize(out.size());
        kernels::maxpool_freq_forward<T>(ish.channels, ish.freq, nt, xin, y, ws.aux[i]);
        break;
      case LayerKind::relu:
        for (std::size_t k = 0; k < y.size(); ++k) y[k] = xin[k] > T{0} ? xin[k] : T{0};
        break;
      case LayerKind::sigmoid:
        for (std::size_t k = 0; k < y.size(); ++k) y[k] = T{1} / (T{1} + std::exp(-xin[k]));
        break;
      case LayerKind::dropout:
        if (mode == Mode::train && s.dropout > 0.0) {
          require(rng != nullptr, "dropout in train mode needs a random source");
          auto& mask = ws.aux[i];
          mask.resize(out.size());
          const T scale = static_cast<T>(1.0 / (1.0 - s.dropout));
          for (std::size_t k = 0; k < y.size(); ++k) {
            mask[k] = rng->bernoulli(s.dropout) ? 0 : 1;
            y[k] = mask[k] ? xin[k] * scale : T{0};
          }
        } else {
          ws.aux[i].clear();
          std::copy(xin.begin(), xin.end(), y.begin());
        }
        break;
      case LayerKind::softmax: {
        const std::size_t nc = ish.channels, plane = ish.freq * nt;
        for (std::size_t p = 0; p < plane; ++p) {
          T mx = xin[p];
          for (std::size_t c = 1; c < nc; ++c) mx = std::max(mx, xin[c * plane + p]);
          T sum = 0;
          for (std::size_t c = 0; c < nc; ++c) sum += (y[c * plane + p] = std::exp(xin[c * plane + p] - mx));
          for (std::size_t c = 0; c < nc; ++c) y[c * plane + p] /= sum;
        }
        break;
      }
      case LayerKind::mean_freq: {
        const T inv = T{1} / static_cast<T>(ish.freq);
        for (std::size_t c = 0; c < ish.channels; ++c)
          for (std::size_t t = 0; t < nt; ++t) {
            T acc = 0;
            for (std::size_t f = 0; f < ish.freq; ++f) acc += in.at(c, f, t);
            out.at(c, 0, t) = acc * inv;
          }
        break;
      }
      case LayerKind::add: {
        const auto other = input_of(i, 1, x, ws).data();
        for (std::size_t k = 0; k < y.size(); ++k) y[k] = xin[k] + other[k];
        break;
      }
      case LayerKind::concat: {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < inputs_[i].size(); ++k) {
          const auto part = input_of(i, k, x, ws).data();
          std::copy(part.begin(), part.end(), y.begin() + static_cast<std::ptrdiff_t>(offset));
          offset += part.size();
        }
        break;
      }
    }
  }
  return ws.values.back();
}

template <typename T>
void Network<T>::backward(const BasicTensor<T>& x, Workspace<T>& ws, std::span<const T> grad_output,
                          bool want_input_grad) {
  const std::size_t n = specs_.size();
  require(ws.values.size() == n, "backward called before forward");
  require(grad_output.size() == ws.values.back().size(), "gradient does not match the network output");
  const std::size_t nt = x.dim(2);

  ws.grads.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ws.grads[i].resize(ws.values[i].shape());
    ws.grads[i].fill(T{0});
  }
  if (want_input_grad) {
    ws.input_grad.resize(x.shape());
    ws.input_grad.fill(T{0});
  }
  std::copy(grad_output.begin(), grad_output.end(), ws.grads.back().data().begin());

  // Gradient sink for input k of node i, or an empty span if none is needed.
  auto sink = [&](std::size_t i, std::size_t k) -> std::span<T> {
    const int src = inputs_[i][k];
    if (src == kNetworkInput) return want_input_grad ? ws.input_grad.data() : std::span<T>{};
    return ws.grads[src].data();
  };

  for (std::size_t ii = n; ii-- > 0;) {
    const LayerSpec& s = specs_[ii];
    const auto g = std::span<const T>(ws.grads[ii].data());
    const auto y = std::span<const T>(ws.values[ii].data());
    const BasicTensor<T>& in = input_of(ii, 0, x, ws);
    const NodeShape ish = inputs_[ii][0] == kNetworkInput ? input_ : shapes_[inputs_[ii][0]];
    const auto xin = in.data();
    std::span<T> gin = sink(ii, 0);

    switch (s.kind) {
      case LayerKind::conv2d:
        kernels::conv2d_backward<T>({ish.channels, s.out_channels, ish.freq, nt, s.kernel_freq, s.kernel_time}, xin,
                                    weights_[ii].data(), g, gin, weights_[ii].grad(), biases_[ii].grad());
        break;
      case LayerKind::deconv2d:
        kernels::deconv2d_backward<T>({ish.channels, s.out_channels, ish.freq, nt, s.kernel_freq, s.kernel_time},
                                      xin, weights_[ii].data(), g, gin, weights_[ii].grad(), biases_[ii].grad());
        break;
      case LayerKind::linear:
        kernels::linear_backward<T>({ish.channels * ish.freq, s.out_channels, nt}, xin, weights_[ii].data(), g, gin,
                                    weights_[ii].grad(), biases_[ii].grad());
        break;
      case LayerKind::maxpool_freq:
        if (!gin.empty()) kernels::maxpool_freq_backward<T>(ish.channels, ish.freq, nt, g, ws.aux[ii], gin);
        break;
      case LayerKind::relu:
        if (!gin.empty())
          for (std::size_t k = 0; k < g.size(); ++k) gin[k] += xin[k] > T{0} ? g[k] : T{0};
        break;
      case LayerKind::sigmoid:
        if (!gin.empty())
          for (std::size_t k = 0; k < g.size(); ++k) gin[k] += g[k] * y[k] * (T{1} - y[k]);
        break;
      case LayerKind::dropout:
        if (gin.empty()) break;
        if (ws.aux[ii].empty()) {
          for (std::size_t k = 0; k < g.size(); ++k) gin[k] += g[k];
        } else {
          const T scale = static_cast<T>(1.0 / (1.0 - s.dropout));
          for (std::size_t k = 0; k < g.size(); ++k) gin[k] += ws.aux[ii][k] ? g[k] * scale : T{0};
        }
        break;
      case LayerKind::softmax: {
        if (gin.empty()) break;
        const std::size_t nc = ish.channels, plane = ish.freq * nt;
        for (std::size_t p = 0; p < plane; ++p) {
          T dot = 0;
          for (std::size_t c = 0; c < nc; ++c) dot += y[c * plane + p] * g[c * plane + p];
          for (std::size_t c = 0; c < nc; ++c) gin[c * plane + p] += y[c * plane + p] * (g[c * plane + p] - dot);
        }
        break;
      }
      case LayerKind::mean_freq: {
        if (gin.empty()) break;
        const T inv = T{1} / static_cast<T>(ish.freq);
        for (std::size_t c = 0; c < ish.channels; ++c)
          for (std::size_t f = 0; f < ish.freq; ++f)
            for (std::size_t t = 0; t < nt; ++t) gin[(c * ish.freq + f) * nt + t] += g[c * nt + t] * inv;
        break;
      }
      case LayerKind::add:
        for (std::size_t k = 0; k < 2; ++k) {
          auto dst = sink(ii, k);
          if (!dst.empty())
            for (std::size_t e = 0; e < g.size(); ++e) dst[e] += g[e];
        }
        break;
      case LayerKind::concat: {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < inputs_[ii].size(); ++k) {
          auto dst = sink(ii, k);
          const std::size_t len = input_of(ii, k, x, ws).size();
          if (!dst.empty())
            for (std::size_t e = 0; e < len; ++e) dst[e] += g[offset + e];
          offset += len;
        }
        break;
      }
    }
  }
}

template <typename T>
std::vector<BasicTensor<T>*> Network<T>::parameters() {
  std::vector<BasicTensor<T>*> out;
  for (std::size_t i = 0; i < specs_.size(); ++i)
    if (weights_[i].size() > 0) {
      out.push_back(&weights_[i]);
      out.push_back(&biases_[i]);
    }
  return out;
}

template <typename T>
std::vector<const BasicTensor<T>*> Network<T>::parameters() const {
  std::vector<const BasicTensor<T>*> out;
  for (std::size_t i = 0; i < specs_.size(); ++i)
    if (weights_[i].size() > 0) {
      out.push_back(&weights_[i]);
      out.push_back(&biases_[i]);
    }
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->size();
  return n;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template class Network<float>;
template class Network<double>;

}  // namespace gzipt::nn
