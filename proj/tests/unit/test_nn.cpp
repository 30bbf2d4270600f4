#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "gradcheck.hpp"
#include "gzipt/common/error.hpp"
#include "gzipt/nn/adam.hpp"
#include "gzipt/nn/checkpoint.hpp"
#include "gzipt/nn/graph.hpp"
#include "gzipt/nn/kernels.hpp"
#include "gzipt/nn/reference_kernels.hpp"
#include "oracles.hpp"

using namespace gzipt;
using namespace gzipt::nn;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, Rng& rng) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.normal());
  return v;
}

template <typename T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

ConvGeometry random_conv(Rng& rng) {
  ConvGeometry g;
  g.in_channels = 1 + rng.below(4);
  g.out_channels = 1 + rng.below(4);
  g.freq = 1 + rng.below(9);
  g.time = 1 + rng.below(23);
  g.kernel_freq = 1 + 2 * rng.below(4);
  g.kernel_time = 1 + 2 * rng.below(4);
  if (rng.bernoulli(0.2)) g.kernel_time = 21;
  if (rng.bernoulli(0.2)) g.kernel_freq = 21;
  return g;
}

}  // namespace

TEST_CASE("conv2d: all-ones 3x3 kernel on all-ones 3x3 input counts neighbours") {
  ConvGeometry g;
  g.freq = g.time = 3;
  const std::vector<double> in(9, 1.0), w(9, 1.0), b(1, 0.0);
  std::vector<double> out(9);
  kernels::conv2d_forward<double>(g, in, w, b, out);
  CHECK(out == std::vector<double>{4, 6, 4, 6, 9, 6, 4, 6, 4});
}

TEST_CASE("conv2d: centred delta kernel is the identity, 1x1 kernel mixes channels") {
  Rng rng(1);
  ConvGeometry g;
  g.in_channels = 2;
  g.out_channels = 1;
  g.freq = 4;
  g.time = 5;
  g.kernel_freq = 1;
  g.kernel_time = 1;
  const auto in = random_vec<double>(g.in_size(), rng);
  std::vector<double> out(g.out_size());
  const std::vector<double> w{2.0, -1.0}, b{0.5};
  kernels::conv2d_forward<double>(g, in, w, b, out);
  for (std::size_t i = 0; i < 20; ++i) CHECK(out[i] == doctest::Approx(2.0 * in[i] - in[20 + i] + 0.5));

  g.in_channels = 1;
  g.kernel_freq = g.kernel_time = 3;
  std::vector<double> delta(9, 0.0);
  delta[4] = 1.0;
  const std::vector<double> no_bias(1, 0.0);
  std::vector<double> same(20);
  kernels::conv2d_forward<double>(g, std::span(in).first(20), delta, no_bias, same);
  for (std::size_t i = 0; i < 20; ++i) CHECK(same[i] == in[i]);
}

TEST_CASE("parallel conv2d matches the serial reference") {
  Rng rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    const auto g = random_conv(rng);
    const auto in = random_vec<double>(g.in_size(), rng);
    const auto w = random_vec<double>(g.weight_count(), rng);
    const auto b = random_vec<double>(g.out_channels, rng);
    const auto go = random_vec<double>(g.out_size(), rng);
    std::vector<double> y1(g.out_size()), y2(g.out_size());
    kernels::conv2d_forward<double>(g, in, w, b, y1);
    reference::conv2d_forward<double>(g, in, w, b, y2);
    CHECK(max_abs_diff(y1, y2) < 1e-12);

    std::vector<double> gi1(g.in_size()), gi2(g.in_size()), gw1(w.size()), gw2(w.size()), gb1(b.size()), gb2(b.size());
    kernels::conv2d_backward<double>(g, in, w, go, gi1, gw1, gb1);
    reference::conv2d_backward<double>(g, in, w, go, gi2, gw2, gb2);
    CHECK(max_abs_diff(gi1, gi2) < 1e-11);
    CHECK(max_abs_diff(gw1, gw2) < 1e-11);
    CHECK(max_abs_diff(gb1, gb2) < 1e-11);
  }
}

TEST_CASE("parallel kernels are deterministic in float") {
  Rng rng(3);
  ConvGeometry g;
  g.in_channels = 8;
  g.out_channels = 16;
  g.freq = 32;
  g.time = 64;
  const auto in = random_vec<float>(g.in_size(), rng);
  const auto w = random_vec<float>(g.weight_count(), rng);
  const auto b = random_vec<float>(g.out_channels, rng);
  std::vector<float> y1(g.out_size()), y2(g.out_size());
  kernels::conv2d_forward<float>(g, in, w, b, y1);
  kernels::conv2d_forward<float>(g, in, w, b, y2);
  CHECK(y1 == y2);
  std::vector<float> yr(g.out_size());
  reference::conv2d_forward<float>(g, in, w, b, yr);
  CHECK(max_abs_diff(y1, yr) < 1e-3);
}

TEST_CASE("deconv2d doubles the frequency axis and is the adjoint of a strided conv") {
  Rng rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    DeconvGeometry g;
    g.in_channels = 1 + rng.below(3);
    g.out_channels = 1 + rng.below(3);
    g.in_freq = 1 + rng.below(6);
    g.time = 1 + rng.below(7);
    g.kernel_freq = 1 + 2 * rng.below(2);
    g.kernel_time = 1 + 2 * rng.below(2);
    CHECK(g.out_freq() == 2 * g.in_freq);
    const auto x = random_vec<double>(g.in_size(), rng);
    const auto y = random_vec<double>(g.out_size(), rng);
    const auto w = random_vec<double>(g.weight_count(), rng);
    const std::vector<double> no_bias;
    std::vector<double> up(g.out_size());
    kernels::deconv2d_forward<double>(g, x, w, no_bias, up);
    // <deconv(x), y> == <x, conv_stride2(y)>
    const auto down = oracle::strided_conv(y, w, g.out_channels, g.in_channels, g.in_freq, g.time, g.kernel_freq,
                                           g.kernel_time);
    const double lhs = std::inner_product(up.begin(), up.end(), y.begin(), 0.0);
    const double rhs = std::inner_product(x.begin(), x.end(), down.begin(), 0.0);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

    std::vector<double> ref(g.out_size());
    reference::deconv2d_forward<double>(g, x, w, no_bias, ref);
    CHECK(max_abs_diff(up, ref) < 1e-12);
    std::vector<double> gi1(x.size()), gi2(x.size()), gw1(w.size()), gw2(w.size()), gb1(g.out_channels),
        gb2(g.out_channels);
    kernels::deconv2d_backward<double>(g, x, w, y, gi1, gw1, gb1);
    reference::deconv2d_backward<double>(g, x, w, y, gi2, gw2, gb2);
    CHECK(max_abs_diff(gi1, gi2) < 1e-11);
    CHECK(max_abs_diff(gw1, gw2) < 1e-11);
    CHECK(max_abs_diff(gb1, gb2) < 1e-11);
  }
}

TEST_CASE("linear kernels match the reference") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    LinearGeometry g;
    g.in_features = 1 + rng.below(40);
    g.out_features = 1 + rng.below(9);
    g.time = 1 + rng.below(20);
    const auto in = random_vec<double>(g.in_features * g.time, rng);
    const auto w = random_vec<double>(g.in_features * g.out_features, rng);
    const auto b = random_vec<double>(g.out_features, rng);
    const auto go = random_vec<double>(g.out_features * g.time, rng);
    std::vector<double> y1(go.size()), y2(go.size());
    kernels::linear_forward<double>(g, in, w, b, y1);
    reference::linear_forward<double>(g, in, w, b, y2);
    CHECK(max_abs_diff(y1, y2) < 1e-12);
    std::vector<double> gi1(in.size()), gi2(in.size()), gw1(w.size()), gw2(w.size()), gb1(b.size()), gb2(b.size());
    kernels::linear_backward<double>(g, in, w, go, gi1, gw1, gb1);
    reference::linear_backward<double>(g, in, w, go, gi2, gw2, gb2);
    CHECK(max_abs_diff(gi1, gi2) < 1e-11);
    CHECK(max_abs_diff(gw1, gw2) < 1e-11);
    CHECK(max_abs_diff(gb1, gb2) < 1e-11);
  }
}

TEST_CASE("max-pool halves frequency and routes gradients to the maxima") {
  // One channel, F = 4, T = 1: [1, 3, 2, 5] -> [3, 5]
  const std::vector<double> in{1, 3, 2, 5};
  std::vector<double> out(2), ref(2);
  std::vector<std::uint8_t> which(2), which_ref(2);
  kernels::maxpool_freq_forward<double>(1, 4, 1, in, out, which);
  reference::maxpool_freq_forward<double>(1, 4, 1, in, ref, which_ref);
  CHECK(out == std::vector<double>{3, 5});
  CHECK(ref == out);
  std::vector<double> gin(4, 0.0);
  const std::vector<double> gout{10, 20};
  kernels::maxpool_freq_backward<double>(1, 4, 1, gout, which, gin);
  CHECK(gin == std::vector<double>{0, 10, 0, 20});
}

TEST_CASE("gradients of every layer kind agree with central differences") {
  Rng rng(6);
  for (auto kind : oracle::all_layer_kinds()) {
    CAPTURE(to_string(kind));
    for (int trial = 0; trial < 20; ++trial) {
      const auto c = oracle::random_case(kind, rng);
      const auto g = oracle::check_case(c, rng);
      CHECK(g.checked > 0);
      CHECK(g.max_rel_error <= 1e-3);
    }
  }
}

TEST_CASE("gradients through a stacked encoder-decoder agree with central differences") {
  Rng rng(7);
  using oracle::spec;
  oracle::LayerCase c;
  c.channels = 1;
  c.freq = 8;
  c.time = 5;
  c.specs = {spec(LayerKind::conv2d, 2, 3, 3),   spec(LayerKind::sigmoid),
             spec(LayerKind::maxpool_freq),      spec(LayerKind::conv2d, 3, 3, 3),
             spec(LayerKind::maxpool_freq),      spec(LayerKind::deconv2d, 2, 3, 3),
             spec(LayerKind::add, 0, 1, 1, {5, 2}), spec(LayerKind::deconv2d, 2, 3, 3),
             spec(LayerKind::mean_freq),         spec(LayerKind::softmax)};
  const auto g = oracle::check_case(c, rng);
  CHECK(g.max_rel_error <= 1e-3);
}

TEST_CASE("dropout: identity at evaluation, inverted scaling in training") {
  auto s = oracle::spec(LayerKind::dropout);
  s.dropout = 0.25;
  Network<float> net({s}, 1, 100);
  Tensor x({1, 100, 100}, 1.0f);
  Workspace<float> ws;
  const auto& y = net.forward(x, Mode::eval, nullptr, ws);
  for (float v : y.data()) CHECK(v == 1.0f);

  Rng rng(8);
  const auto& z = net.forward(x, Mode::train, &rng, ws);
  std::size_t zeros = 0;
  double sum = 0.0;
  for (float v : z.data()) {
    if (v == 0.0f) ++zeros;
    else CHECK(v == doctest::Approx(1.0 / 0.75));
    sum += v;
  }
  // 10000 Bernoulli(0.25) draws: sd of the zero fraction is about 0.0043.
  CHECK(double(zeros) / 10000.0 == doctest::Approx(0.25).epsilon(0.08));
  CHECK(sum / 10000.0 == doctest::Approx(1.0).epsilon(0.03));
  CHECK_THROWS_AS(net.forward(x, Mode::train, nullptr, ws), ValidationError);
}

TEST_CASE("softmax columns sum to one, sigmoid stays inside (0, 1)") {
  Rng rng(9);
  Network<float> sm({oracle::spec(LayerKind::softmax)}, 8, 3);
  Network<float> sg({oracle::spec(LayerKind::sigmoid)}, 1, 3);
  Tensor x({8, 3, 50});
  for (auto& v : x.data()) v = float(20.0 * rng.normal());
  Workspace<float> ws;
  const auto& y = sm.forward(x, Mode::eval, nullptr, ws);
  for (std::size_t f = 0; f < 3; ++f)
    for (std::size_t t = 0; t < 50; ++t) {
      double s = 0.0;
      for (std::size_t c = 0; c < 8; ++c) s += y.at(c, f, t);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
  Tensor z({1, 3, 50});
  for (auto& v : z.data()) v = float(5.0 * rng.normal());
  Workspace<float> ws2;
  for (float v : sg.forward(z, Mode::eval, nullptr, ws2).data()) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
}

TEST_CASE("shape inference rejects bad graphs with the layer position") {
  using oracle::spec;
  CHECK_THROWS_WITH_AS(Network<float>({spec(LayerKind::maxpool_freq)}, 1, 1), doctest::Contains("layer 0"),
                       ValidationError);
  CHECK_THROWS_AS(Network<float>({spec(LayerKind::conv2d, 2, 2, 3)}, 1, 8), ValidationError);
  CHECK_THROWS_AS(Network<float>({spec(LayerKind::maxpool_freq), spec(LayerKind::add, 0, 1, 1, {0, -1})}, 1, 8),
                  ValidationError);
  CHECK_THROWS_AS(Network<float>({spec(LayerKind::relu, 0, 1, 1, {3})}, 1, 8), ValidationError);
  CHECK_THROWS_AS(Network<float>({}, 1, 8), ValidationError);

  Network<float> ok({spec(LayerKind::conv2d, 4, 3, 3), spec(LayerKind::maxpool_freq)}, 1, 8);
  Tensor wrong({1, 7, 10});
  Workspace<float> ws;
  CHECK_THROWS_AS(ok.forward(wrong, Mode::eval, nullptr, ws), ValidationError);
}

TEST_CASE("networks accept any number of frames") {
  using oracle::spec;
  Network<float> net({spec(LayerKind::conv2d, 3, 3, 21), spec(LayerKind::relu), spec(LayerKind::maxpool_freq),
                      spec(LayerKind::linear, 4), spec(LayerKind::sigmoid)},
                     1, 16);
  Rng rng(10);
  net.init(rng);
  for (std::size_t t : {1, 2, 17, 300}) {
    Tensor x({1, 16, t}, 0.5f);
    Workspace<float> ws;
    const auto& y = net.forward(x, Mode::eval, nullptr, ws);
    CHECK(y.shape() == Shape{4, 1, t});
  }
}

TEST_CASE("concurrent forward passes with separate workspaces agree") {
  using oracle::spec;
  Network<float> net({spec(LayerKind::conv2d, 4, 3, 3), spec(LayerKind::relu), spec(LayerKind::maxpool_freq),
                      spec(LayerKind::deconv2d, 2, 3, 3)},
                     1, 8);
  Rng rng(11);
  net.init(rng);
  Tensor x({1, 8, 40});
  for (auto& v : x.data()) v = float(rng.normal());
  Workspace<float> base_ws;
  const std::vector<float> base(net.forward(x, Mode::eval, nullptr, base_ws).data().begin(),
                                net.forward(x, Mode::eval, nullptr, base_ws).data().end());
  std::vector<std::vector<float>> results(8);
#pragma omp parallel for
  for (int i = 0; i < 8; ++i) {
    Workspace<float> ws;
    const auto& y = net.forward(x, Mode::eval, nullptr, ws);
    results[i].assign(y.data().begin(), y.data().end());
  }
  for (const auto& r : results) CHECK(r == base);
}

TEST_CASE("layer specs round-trip through JSON") {
  LayerSpec s = oracle::spec(LayerKind::conv2d, 12, 3, 21, {0, 2});
  s.name = "branch_3x21";
  nlohmann::json j = s;
  CHECK(j.at("kernel") == "3x21");
  const auto back = j.get<LayerSpec>();
  CHECK(back.kind == s.kind);
  CHECK(back.name == s.name);
  CHECK(back.inputs == s.inputs);
  CHECK(back.out_channels == 12);
  CHECK(back.kernel_freq == 3);
  CHECK(back.kernel_time == 21);
  for (auto kind : oracle::all_layer_kinds()) CHECK(parse_layer_kind(to_string(kind)) == kind);
  CHECK_THROWS_AS(parse_layer_kind("lstm"), ValidationError);
}

TEST_CASE("adam: first step moves each weight by lr against the gradient sign") {
  // m = 0.1 * 0.5 = 0.05, v = 0.001 * 0.25; bias-corrected m = 0.5, v = 0.25,
  // so the step is 0.1 * 0.5 / sqrt(0.25) = 0.1.
  Tensor p({2}, std::vector<float>{1.0f, -2.0f});
  p.ensure_grad();
  p.grad()[0] = 0.5f;
  p.grad()[1] = -3.0f;
  Adam<float> opt({&p}, {0.1, 0.9, 0.999, 1e-8});
  opt.step();
  CHECK(p[0] == doctest::Approx(0.9));
  CHECK(p[1] == doctest::Approx(-1.9));
  CHECK(opt.steps() == 1);
  // Same gradient again: the ratio stays 1, so another step of 0.1.
  opt.step();
  CHECK(p[0] == doctest::Approx(0.8));
}

TEST_CASE("adam refuses non-finite gradients and leaves the weights alone") {
  Tensor p({3}, std::vector<float>{1.0f, 2.0f, 3.0f});
  p.ensure_grad();
  p.grad()[1] = std::numeric_limits<float>::quiet_NaN();
  Adam<float> opt({&p}, {});
  CHECK_THROWS_AS(opt.step(), NumericError);
  CHECK(p[0] == 1.0f);
  CHECK(p[1] == 2.0f);
  CHECK(opt.steps() == 0);
  CHECK_THROWS_AS(Adam<float>({&p}, {0.0}), ValidationError);
}

TEST_CASE("adam minimises a quadratic") {
  Tensor p({4}, std::vector<float>{3.0f, -1.0f, 0.5f, 8.0f});
  p.ensure_grad();
  Adam<float> opt({&p}, {0.05});
  for (int i = 0; i < 2000; ++i) {
    for (std::size_t k = 0; k < 4; ++k) p.grad()[k] = 2.0f * (p[k] - float(k));
    opt.step();
  }
  for (std::size_t k = 0; k < 4; ++k) CHECK(p[k] == doctest::Approx(double(k)).epsilon(0.01));
}

TEST_CASE("checkpoints round-trip parameters bit for bit") {
  Rng rng(12);
  std::vector<Tensor> params = {Tensor({3, 2, 3, 3}), Tensor({3}), Tensor({5, 7})};
  for (auto& t : params)
    for (auto& v : t.data()) v = float(rng.normal());
  std::vector<const Tensor*> ptrs;
  for (const auto& t : params) ptrs.push_back(&t);
  const auto path = std::filesystem::temp_directory_path() / "gzipt_test_nn.gzck";
  save_checkpoint(path, {{"seed", 12}}, ptrs);
  const auto ck = load_checkpoint(path);
  CHECK(ck.header.at("seed") == 12);
  REQUIRE(ck.params.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ck.params[i].shape() == params[i].shape());
    CHECK(std::equal(ck.params[i].data().begin(), ck.params[i].data().end(), params[i].data().begin()));
  }
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "GZIPTCK2 garbage";
  }
  CHECK_THROWS_AS(load_checkpoint(path), ValidationError);
}
