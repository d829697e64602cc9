// Copyright 2026 The sslstm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "doctest.h"
#include "sslstm/network.hpp"
#include "test_util.hpp"

using namespace sslstm;
using namespace sslstm::testing;

namespace {

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Scalar re-implementation of one step, reading gate blocks (f, i, g, o)
/// straight out of the packed weights.
void scalar_step(const LstmLayerParams& p, const Matrix& x, const Matrix& h0, const Matrix& c0, Matrix& h1,
                 Matrix& c1) {
  const Index H = p.hidden(), D = p.input_dim();
  h1.resize(x.rows(), H);
  c1.resize(x.rows(), H);
  for (Index b = 0; b < x.rows(); ++b) {
    for (Index j = 0; j < H; ++j) {
      double pre[4];
      for (int g = 0; g < 4; ++g) {
        const Index row = g * H + j;
        double s = p.bias(row, 0);
        for (Index k = 0; k < D; ++k) s += p.w_x(row, k) * x(b, k);
        for (Index k = 0; k < H; ++k) s += p.w_h(row, k) * h0(b, k);
        pre[g] = s;
      }
      const double f = sig(pre[0]), i = sig(pre[1]), g = std::tanh(pre[2]), o = sig(pre[3]);
      c1(b, j) = f * c0(b, j) + i * g;
      h1(b, j) = o * std::tanh(c1(b, j));
    }
  }
}

NetworkDims small_dims() { return {6, 16, 4, 2}; }

std::vector<int> random_targets(RngStream& rng, std::size_t n, int C) {
  std::vector<int> t(n);
  for (auto& v : t) v = static_cast<int>(rng_int(rng, 0, C - 1));
  return t;
}

}  // namespace

TEST_CASE("init_params is deterministic with Glorot weights and unit forget bias") {
  const NetworkDims d{6, 64, 4, 2};
  const NetworkParams a = init_params(d, 11), b = init_params(d, 11), c = init_params(d, 12);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  a.check_shapes();

  for (const auto& layer : a.layers) {
    for (Index r = 0; r < layer.bias.rows(); ++r) {
      const bool forget = r >= kForget * d.hidden && r < (kForget + 1) * d.hidden;
      CHECK(layer.bias(r, 0) == (forget ? 1.0 : 0.0));
    }
  }
  CHECK(a.output.bias_c.isZero());

  const Matrix& w = a.layers[1].w_h;  // 256 x 64
  REQUIRE(w.size() >= 10000);
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  CHECK(w.cwiseAbs().maxCoeff() <= limit);
  const double range = 2.0 * limit;
  CHECK(std::abs(w.mean()) <= 0.01 * range);
}

TEST_CASE("lstm_step with zero parameters stays at zero") {
  const NetworkParams p = NetworkParams::zeros({3, 4, 2, 1});
  auto rng = test_rng(1);
  const Matrix x = random_matrix(rng, 2, 3);
  const auto [next, rec] = lstm_step(p.layers[0], x, LayerState::zeros(2, 4));
  CHECK(next.h.isZero(0.0));
  CHECK(next.c.isZero(0.0));
  CHECK((rec.f.array() == 0.5).all());
}

TEST_CASE("lstm_step with saturated forget gate keeps the cell") {
  NetworkParams p = NetworkParams::zeros({3, 4, 2, 1});
  p.layers[0].bias.middleRows(kForget * 4, 4).setConstant(50.0);
  auto rng = test_rng(2);
  LayerState s = LayerState::zeros(2, 4);
  s.c = random_matrix(rng, 2, 4);
  const auto [next, rec] = lstm_step(p.layers[0], random_matrix(rng, 2, 3), s);
  CHECK(next.c == s.c);
}

TEST_CASE("lstm_step matches a scalar-loop oracle") {
  auto rng = test_rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const NetworkParams p = random_net({5, 7, 3, 1}, rng);
    const Matrix x = random_matrix(rng, 3, 5);
    LayerState s{random_matrix(rng, 3, 7), random_matrix(rng, 3, 7)};
    const auto [next, rec] = lstm_step(p.layers[0], x, s);
    Matrix h1, c1;
    scalar_step(p.layers[0], x, s.h, s.c, h1, c1);
    CHECK((next.h - h1).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((next.c - c1).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("lstm_step rejects mismatched shapes") {
  const NetworkParams p = NetworkParams::zeros({3, 4, 2, 1});
  CHECK_THROWS_AS(lstm_step(p.layers[0], Matrix(Matrix::Zero(2, 5)), LayerState::zeros(2, 4)), ShapeError);
  CHECK_THROWS_AS(lstm_step(p.layers[0], Matrix(Matrix::Zero(2, 3)), LayerState::zeros(3, 4)), ShapeError);
}

TEST_CASE("forward_window matches stepping the layers by hand") {
  auto rng = test_rng(4);
  const NetworkParams net = random_net({4, 5, 3, 2}, rng);
  const SequenceBatch x = random_batch(rng, 2, 6, 4);
  const auto fw = forward_window(net, x, zero_states<double>(net.dims, 2), Mode::infer, 0.0, nullptr);
  Matrix h[2] = {Matrix::Zero(2, 5), Matrix::Zero(2, 5)}, c[2] = {Matrix::Zero(2, 5), Matrix::Zero(2, 5)};
  for (Index t = 0; t < 6; ++t) {
    Matrix in = x.step(t);
    for (int k = 0; k < 2; ++k) {
      Matrix h1, c1;
      scalar_step(net.layers[static_cast<std::size_t>(k)], in, h[k], c[k], h1, c1);
      h[k] = h1;
      c[k] = c1;
      in = h1;
    }
    for (Index b = 0; b < 2; ++b) {
      double logits[3], mx = -1e300, total = 0.0;
      for (Index q = 0; q < 3; ++q) {
        logits[q] = net.output.bias_c(q, 0);
        for (Index j = 0; j < 5; ++j) logits[q] += net.output.w_hc(q, j) * in(b, j);
        mx = std::max(mx, logits[q]);
      }
      for (double v : logits) total += std::exp(v - mx);
      for (Index q = 0; q < 3; ++q) CHECK(std::abs(fw.probs.at(b, t)(0, q) - std::exp(logits[q] - mx) / total) <= 1e-12);
    }
  }
  CHECK((fw.state[1].h - h[1]).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("carried state makes split windows equal the whole window") {
  auto rng = test_rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const NetworkParams net = random_net({3, 6, 4, 2}, rng);
    const Index L = rng_int(rng, 2, 20);
    const SequenceBatch x = random_batch(rng, 3, L, 3);
    const auto whole = forward_window(net, x, zero_states<double>(net.dims, 3), Mode::infer, 0.0, nullptr);
    const Index t = rng_int(rng, 1, L - 1);
    const auto a = forward_window(net, x.slice(0, t), zero_states<double>(net.dims, 3), Mode::infer, 0.0, nullptr);
    const auto b = forward_window(net, x.slice(t, L - t), a.state, Mode::infer, 0.0, nullptr);
    CHECK((a.probs.matrix() - whole.probs.matrix().topRows(t * 3)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((b.probs.matrix() - whole.probs.matrix().bottomRows((L - t) * 3)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("train mode without dropout equals infer mode") {
  auto rng = test_rng(6);
  const NetworkParams net = random_net(small_dims(), rng);
  const SequenceBatch x = random_batch(rng, 3, 8, 6);
  RngStream drop(1, 2);
  const auto a = forward_window(net, x, zero_states<double>(net.dims, 3), Mode::train, 0.0, &drop);
  const auto b = forward_window(net, x, zero_states<double>(net.dims, 3), Mode::infer, 0.0, nullptr);
  CHECK(a.probs.matrix() == b.probs.matrix());
  CHECK(drop.counter() == 0);
}

TEST_CASE("zero parameters give uniform probabilities and rows sum to one") {
  const NetworkParams zero = NetworkParams::zeros({3, 4, 5, 2});
  auto rng = test_rng(7);
  const auto fw = forward_window(zero, random_batch(rng, 2, 4, 3), zero_states<double>(zero.dims, 2), Mode::infer,
                                 0.0, nullptr);
  CHECK((fw.probs.matrix().array() == 0.2).all());

  const NetworkParams net = random_net({3, 4, 5, 2}, rng, 3.0);
  const auto fw2 = forward_window(net, random_batch(rng, 2, 9, 3), zero_states<double>(net.dims, 2), Mode::infer,
                                  0.0, nullptr);
  for (Index r = 0; r < fw2.probs.matrix().rows(); ++r) CHECK(std::abs(fw2.probs.matrix().row(r).sum() - 1.0) <= 1e-12);
}

TEST_CASE("forward_window argument errors") {
  const NetworkParams net = NetworkParams::zeros({3, 4, 2, 2});
  const SequenceBatch x(2, 3, 3);
  RngStream rng(0, 0);
  CHECK_THROWS_AS(forward_window(net, SequenceBatch(2, 3, 4), zero_states<double>(net.dims, 2), Mode::infer, 0.0, nullptr),
                  ShapeError);
  CHECK_THROWS_AS(forward_window(net, x, zero_states<double>(net.dims, 3), Mode::infer, 0.0, nullptr), ShapeError);
  CHECK_THROWS_AS(forward_window(net, x, zero_states<double>({3, 4, 2, 1}, 2), Mode::infer, 0.0, nullptr), ShapeError);
  CHECK_THROWS_AS(forward_window(net, x, zero_states<double>(net.dims, 2), Mode::train, 1.0, &rng), ArgumentError);
  CHECK_THROWS_AS(forward_window(net, x, zero_states<double>(net.dims, 2), Mode::train, -0.1, &rng), ArgumentError);
  CHECK_THROWS_AS(forward_window(net, x, zero_states<double>(net.dims, 2), Mode::train, 0.5, nullptr), ArgumentError);
}

TEST_CASE("dropout masks are constant over the window and rescaled") {
  auto rng = test_rng(8);
  const NetworkParams net = random_net({3, 6, 2, 2}, rng);
  const SequenceBatch x = random_batch(rng, 4, 5, 3);
  RngStream drop(3, 9);
  const auto fw = forward_window(net, x, zero_states<double>(net.dims, 4), Mode::train, 0.25, &drop);
  for (const auto& layer : fw.cache.layers) {
    REQUIRE(layer.mask.rows() == 4);
    for (Index i = 0; i < layer.mask.size(); ++i) {
      const double m = layer.mask.data()[i];
      CHECK((m == 0.0 || m == 1.0 / 0.75));
    }
  }
  // Layer 2 input is layer 1's hidden output times the lane's mask at every step.
  const auto& l0 = fw.cache.layers[0];
  const auto& l1 = fw.cache.layers[1];
  for (Index t = 0; t < 5; ++t)
    for (Index b = 0; b < 4; ++b)
      CHECK(l1.input.row(t * 4 + b) == l0.hidden.row(t * 4 + b).cwiseProduct(l0.mask.row(b)));
}

TEST_CASE("inverted dropout preserves the expected layer output") {
  auto rng = test_rng(9);
  const NetworkParams net = random_net({3, 8, 3, 1}, rng);
  const SequenceBatch x = random_batch(rng, 2, 5, 3);
  const auto ref = forward_window(net, x, zero_states<double>(net.dims, 2), Mode::infer, 0.0, nullptr);
  Matrix sum = Matrix::Zero(ref.cache.logits.rows(), ref.cache.logits.cols());
  RngStream drop(4, 4);
  const int draws = 10000;
  for (int k = 0; k < draws; ++k)
    sum += forward_window(net, x, zero_states<double>(net.dims, 2), Mode::train, 0.3, &drop).cache.logits;
  const Matrix mean = sum / draws;
  const Matrix ref_logits = ref.cache.logits;
  CHECK((mean - ref_logits).norm() / ref_logits.norm() <= 0.02);
}

TEST_CASE("backward_window degenerate cases") {
  auto rng = test_rng(10);
  const NetworkParams net = random_net(small_dims(), rng);
  const SequenceBatch x = random_batch(rng, 3, 8, 6);
  const auto fw = forward_window(net, x, zero_states<double>(net.dims, 3), Mode::train, 0.0, nullptr);
  const auto targets = random_targets(rng, 24, 4);

  const auto none = backward_window(net, fw.cache, targets, std::vector<std::uint8_t>(24, 0));
  CHECK(none.loss == 0.0);
  CHECK(none.counted == 0);
  none.grads.for_each([](const Matrix& m) { CHECK(m.isZero(0.0)); });

  const NetworkParams two = NetworkParams::zeros({2, 3, 2, 2});
  const auto fw2 = forward_window(two, SequenceBatch(1, 1, 2), zero_states<double>(two.dims, 1), Mode::train, 0.0,
                                  nullptr);
  const auto one = backward_window(two, fw2.cache, {0}, {1});
  CHECK(one.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const NetworkParams other = random_net({6, 8, 4, 2}, rng);
  CHECK_THROWS_AS(backward_window(other, fw.cache, targets, std::vector<std::uint8_t>(24, 1)), ContractError);
  CHECK_THROWS_AS(backward_window(net, fw.cache, {0, 1}, {1, 1}), ShapeError);
}

TEST_CASE("targets at masked steps never affect loss or gradients") {
  auto rng = test_rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const NetworkParams net = random_net(small_dims(), rng);
    const SequenceBatch x = random_batch(rng, 3, 8, 6);
    RngStream d1(5, static_cast<std::uint64_t>(trial));
    const auto fw = forward_window(net, x, zero_states<double>(net.dims, 3), Mode::train, 0.3, &d1);
    auto targets = random_targets(rng, 24, 4);
    std::vector<std::uint8_t> mask(24);
    for (auto& m : mask) m = rng_int(rng, 0, 1) ? 1 : 0;
    mask[0] = 1;
    const auto a = backward_window(net, fw.cache, targets, mask);
    for (std::size_t r = 0; r < 24; ++r)
      if (!mask[r]) targets[r] = (targets[r] + 1 + static_cast<int>(r) % 3) % 4;
    const auto b = backward_window(net, fw.cache, targets, mask);
    CHECK(a.loss == b.loss);
    CHECK(a.grads == b.grads);
  }
}

TEST_CASE("backward loss equals the forward cross-entropy") {
  auto rng = test_rng(12);
  const NetworkParams net = random_net(small_dims(), rng);
  const SequenceBatch x = random_batch(rng, 3, 8, 6);
  const auto targets = random_targets(rng, 24, 4);
  std::vector<std::uint8_t> mask(24, 1);
  mask[5] = 0;
  const auto fw = forward_window(net, x, zero_states<double>(net.dims, 3), Mode::train, 0.0, nullptr);
  const auto bw = backward_window(net, fw.cache, targets, mask);
  double ce = 0.0;
  for (std::size_t r = 0; r < 24; ++r)
    if (mask[r]) ce -= std::log(fw.cache.probs(static_cast<Index>(r), targets[r]));
  CHECK(bw.loss == doctest::Approx(ce / 23).epsilon(1e-12));
  CHECK(bw.loss == doctest::Approx(window_loss(net, x, targets, mask)).epsilon(1e-12));
}

TEST_CASE("gradients match central finite differences") {
  for (std::uint64_t seed : {101u, 202u}) {
    auto rng = test_rng(seed);
    const NetworkParams net = init_params(small_dims(), seed);
    const SequenceBatch x = random_batch(rng, 3, 8, 6);
    const auto targets = random_targets(rng, 24, 4);
    const GradCheckResult r = gradient_check(net, x, targets, std::vector<std::uint8_t>(24, 1));
    CHECK(r.checked == net.parameter_count());
    CHECK(r.max_rel_error <= 1e-4);
  }
}

TEST_CASE("gradient checker detects a corrupted recurrent gradient") {
  auto rng = test_rng(13);
  const NetworkParams net = init_params(small_dims(), 13);
  const SequenceBatch x = random_batch(rng, 3, 8, 6);
  const auto targets = random_targets(rng, 24, 4);
  GradCheckOptions opts;
  opts.corrupt_recurrent_scale = 1.01;
  CHECK(gradient_check(net, x, targets, std::vector<std::uint8_t>(24, 1), opts).max_rel_error > 1e-3);
}

TEST_CASE("gradient check on a zero network is well defined") {
  const NetworkParams net = NetworkParams::zeros({2, 3, 3, 2});
  SequenceBatch x(2, 3, 2);
  const std::vector<int> targets{0, 1, 2, 0, 1, 2};
  const GradCheckResult r = gradient_check(net, x, targets, std::vector<std::uint8_t>(6, 1));
  CHECK(std::isfinite(r.max_rel_error));
  CHECK(r.max_rel_error < 1.0);
}

TEST_CASE("gradient check under dropout") {
  auto rng = test_rng(14);
  const NetworkParams net = init_params({4, 6, 3, 2}, 14);
  const SequenceBatch x = random_batch(rng, 2, 5, 4);
  const auto targets = random_targets(rng, 10, 3);
  GradCheckOptions opts;
  opts.dropout_p = 0.4;
  opts.dropout_seed = 77;
  CHECK(gradient_check(net, x, targets, std::vector<std::uint8_t>(10, 1), opts).max_rel_error <= 1e-4);
}

TEST_CASE("checkpoints round-trip exactly and reject damage") {
  auto rng = test_rng(15);
  const NetworkParams net = random_net({5, 7, 3, 2}, rng);
  const auto bytes = encode_checkpoint(net);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "SSLM");
  CHECK(decode_checkpoint(bytes) == net);

  auto flipped = bytes;
  flipped[40] ^= 0x01;
  CHECK_THROWS_AS(decode_checkpoint(flipped), DataError);
  CHECK_THROWS_AS(decode_checkpoint({bytes.begin(), bytes.begin() + 30}), DataError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(magic), DataError);

  const auto dir = scratch_dir("ckpt");
  const std::string path = (dir / "net.sslm").string();
  save_checkpoint(net, path);
  CHECK(load_checkpoint(path) == net);
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.sslm").string()), DataError);
}

TEST_CASE("network dims validation") {
  CHECK_THROWS_AS(NetworkDims({0, 4, 2, 1}).validate(), ArgumentError);
  CHECK_THROWS_AS(NetworkDims({3, 4, 1, 1}).validate(), ArgumentError);
  NetworkParams p = NetworkParams::zeros({3, 4, 2, 2});
  p.layers[1].w_x = Matrix::Zero(16, 3);
  CHECK_THROWS_AS(p.check_shapes(), ShapeError);
}
