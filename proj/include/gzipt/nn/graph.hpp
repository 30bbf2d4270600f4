#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gzipt/common/rng.hpp"
#include "gzipt/nn/tensor.hpp"

namespace gzipt::nn {

enum class LayerKind {
  conv2d,        // "same" zero-padded, kernel N freq bins x M time frames
  deconv2d,      // stride 2 on frequency, doubles F
  maxpool_freq,  // 2x1 max pooling on frequency only
  relu,
  dropout,       // inverted dropout, identity at evaluation
  linear,        // per-frame fully connected over the flattened [C, F] slice
  sigmoid,
  softmax,       // over channels, independently for every (f, t)
  add,           // element-wise sum of two inputs
  concat,        // channel concatenation of inputs with equal F
  mean_freq,     // average over frequency, F -> 1
};

std::string to_string(LayerKind kind);
LayerKind parse_layer_kind(const std::string& text);

inline constexpr int kNetworkInput = -1;

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::string name;
  // Indices of earlier nodes feeding this one; kNetworkInput denotes the
  // network input. Empty means "the previous node" (or the input for node 0).
  std::vector<int> inputs;
  std::size_t out_channels = 0;  // conv2d / deconv2d channels, linear features
  std::size_t kernel_freq = 1;
  std::size_t kernel_time = 1;
  double dropout = 0.0;
};

void to_json(nlohmann::json& j, const LayerSpec& spec);
void from_json(const nlohmann::json& j, LayerSpec& spec);

enum class Mode { eval, train };

// Symbolic [channels, freq] of a node; time is free.
struct NodeShape {
  std::size_t channels = 0;
  std::size_t freq = 0;
  friend bool operator==(const NodeShape&, const NodeShape&) = default;
};

// Per-call scratch: activations, gradients, pooling choices and dropout
// masks. One workspace per concurrent caller; the network itself is only
// read during forward passes.
template <typename T>
struct Workspace {
  std::vector<BasicTensor<T>> values;
  std::vector<BasicTensor<T>> grads;
  std::vector<std::vector<std::uint8_t>> aux;
  BasicTensor<T> input_grad;
};

// A directed acyclic chain of layers executed eagerly in declaration order.
template <typename T>
class Network {
 public:
  Network(std::vector<LayerSpec> specs, std::size_t in_channels, std::size_t in_freq);

  // Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases.
  void init(Rng& rng);

  // x is [in_channels, in_freq, T] for any T >= 1. Train mode draws dropout
  // masks from `rng`, which must then be non-null.
  const BasicTensor<T>& forward(const BasicTensor<T>& x, Mode mode, Rng* rng, Workspace<T>& ws) const;

  // Back-propagates grad_output (shaped like the last node) through the
  // activations left in `ws` by forward(x, ...). Parameter gradients are
  // accumulated; ws.input_grad is filled when want_input_grad is set.
  void backward(const BasicTensor<T>& x, Workspace<T>& ws, std::span<const T> grad_output,
                bool want_input_grad = false);

  std::vector<BasicTensor<T>*> parameters();
  std::vector<const BasicTensor<T>*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

  const std::vector<LayerSpec>& specs() const { return specs_; }
  const NodeShape& shape_of(std::size_t node) const { return shapes_.at(node); }
  const NodeShape& output_shape() const { return shapes_.back(); }
  NodeShape input_shape() const { return input_; }

 private:
  const BasicTensor<T>& input_of(std::size_t node, std::size_t k, const BasicTensor<T>& x,
                                 const Workspace<T>& ws) const;

  std::vector<LayerSpec> specs_;
  std::vector<std::vector<int>> inputs_;
  std::vector<NodeShape> shapes_;
  NodeShape input_;
  std::vector<BasicTensor<T>> weights_;
  std::vector<BasicTensor<T>> biases_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace gzipt::nn
