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

// Stacked sample-wise LSTM with a softmax head.
//
// Every layer packs its four gates row-wise in the order
// (forget, input, candidate, output):
//
//   f = sigmoid(W_xf x + W_hf h + b_f)      rows [0, H)
//   i = sigmoid(W_xi x + W_hi h + b_i)      rows [H, 2H)
//   g = tanh   (W_xg x + W_hg h + b_g)      rows [2H, 3H)
//   o = sigmoid(W_xo x + W_ho h + b_o)      rows [3H, 4H)
//   c' = f * c + i * g,   h' = o * tanh(c')
//
// The packing order is part of the checkpoint format.
//
// Sequences are processed a window at a time. State values carry over from
// one window to the next; gradients are truncated at the window boundary.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sslstm/numcore.hpp"

namespace sslstm {

enum Gate : Index { kForget = 0, kInput = 1, kCandidate = 2, kOutput = 3 };

struct NetworkDims {
  Index input = 0;    // D
  Index hidden = 0;   // H, shared by all layers
  Index classes = 0;  // C
  Index layers = 2;

  void validate() const {
    if (input < 1 || hidden < 1 || classes < 2 || layers < 1) {
      throw ArgumentError("network dims require D >= 1, H >= 1, C >= 2, layers >= 1; got D=" +
                          std::to_string(input) + " H=" + std::to_string(hidden) +
                          " C=" + std::to_string(classes) + " layers=" + std::to_string(layers));
    }
  }
  friend bool operator==(const NetworkDims&, const NetworkDims&) = default;
};

template <typename Scalar>
struct LstmLayerParamsT {
  MatrixT<Scalar> w_x;   // 4H x D_in
  MatrixT<Scalar> w_h;   // 4H x H
  MatrixT<Scalar> bias;  // 4H x 1

  Index hidden() const { return w_h.cols(); }
  Index input_dim() const { return w_x.cols(); }
};

template <typename Scalar>
struct OutputParamsT {
  MatrixT<Scalar> w_hc;    // C x H
  MatrixT<Scalar> bias_c;  // C x 1
};

template <typename Scalar>
struct NetworkParamsT {
  NetworkDims dims;
  std::vector<LstmLayerParamsT<Scalar>> layers;
  OutputParamsT<Scalar> output;

  static NetworkParamsT zeros(const NetworkDims& d) {
    d.validate();
    NetworkParamsT p;
    p.dims = d;
    for (Index k = 0; k < d.layers; ++k) {
      const Index in = k == 0 ? d.input : d.hidden;
      p.layers.push_back({MatrixT<Scalar>::Zero(4 * d.hidden, in),
                          MatrixT<Scalar>::Zero(4 * d.hidden, d.hidden),
                          MatrixT<Scalar>::Zero(4 * d.hidden, 1)});
    }
    p.output = {MatrixT<Scalar>::Zero(d.classes, d.hidden), MatrixT<Scalar>::Zero(d.classes, 1)};
    return p;
  }

  /// Visits every parameter matrix in checkpoint order.
  template <typename F>
  void for_each(F&& f) {
    for (auto& l : layers) {
      f(l.w_x);
      f(l.w_h);
      f(l.bias);
    }
    f(output.w_hc);
    f(output.bias_c);
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& l : layers) {
      f(l.w_x);
      f(l.w_h);
      f(l.bias);
    }
    f(output.w_hc);
    f(output.bias_c);
  }

  Index parameter_count() const {
    Index n = 0;
    for_each([&](const MatrixT<Scalar>& m) { n += m.size(); });
    return n;
  }

  template <typename T>
  NetworkParamsT<T> cast() const {
    NetworkParamsT<T> out;
    out.dims = dims;
    for (const auto& l : layers)
      out.layers.push_back({l.w_x.template cast<T>(), l.w_h.template cast<T>(), l.bias.template cast<T>()});
    out.output = {output.w_hc.template cast<T>(), output.bias_c.template cast<T>()};
    return out;
  }

  /// Throws ShapeError unless every matrix agrees with `dims`.
  void check_shapes() const {
    dims.validate();
    const Index h4 = 4 * dims.hidden;
    auto expect = [](const MatrixT<Scalar>& m, Index r, Index c, const std::string& what) {
      if (m.rows() != r || m.cols() != c)
        throw ShapeError(what + " is " + shape_string(m) + ", expected " + std::to_string(r) + "x" +
                         std::to_string(c));
    };
    if (static_cast<Index>(layers.size()) != dims.layers)
      throw ShapeError("layer count " + std::to_string(layers.size()) + " != " + std::to_string(dims.layers));
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const Index in = k == 0 ? dims.input : dims.hidden;
      const std::string tag = "layer " + std::to_string(k);
      expect(layers[k].w_x, h4, in, tag + " w_x");
      expect(layers[k].w_h, h4, dims.hidden, tag + " w_h");
      expect(layers[k].bias, h4, 1, tag + " bias");
    }
    expect(output.w_hc, dims.classes, dims.hidden, "w_hc");
    expect(output.bias_c, dims.classes, 1, "bias_c");
  }

  friend bool operator==(const NetworkParamsT& a, const NetworkParamsT& b) {
    if (!(a.dims == b.dims) || a.layers.size() != b.layers.size()) return false;
    for (std::size_t k = 0; k < a.layers.size(); ++k) {
      if (a.layers[k].w_x != b.layers[k].w_x || a.layers[k].w_h != b.layers[k].w_h ||
          a.layers[k].bias != b.layers[k].bias)
        return false;
    }
    return a.output.w_hc == b.output.w_hc && a.output.bias_c == b.output.bias_c;
  }
};

template <typename Scalar>
struct LayerStateT {
  MatrixT<Scalar> h;  // B x H
  MatrixT<Scalar> c;  // B x H

  static LayerStateT zeros(Index lanes, Index hidden) {
    return {MatrixT<Scalar>::Zero(lanes, hidden), MatrixT<Scalar>::Zero(lanes, hidden)};
  }
};

template <typename Scalar>
std::vector<LayerStateT<Scalar>> zero_states(const NetworkDims& d, Index lanes) {
  return std::vector<LayerStateT<Scalar>>(static_cast<std::size_t>(d.layers),
                                          LayerStateT<Scalar>::zeros(lanes, d.hidden));
}

/// A [lanes x steps x width] block stored step-major: row t * lanes + b
/// holds lane b at step t, so one step is a contiguous lanes x width slab.
template <typename Scalar>
class SequenceBatchT {
 public:
  SequenceBatchT() = default;
  SequenceBatchT(Index lanes, Index steps, Index width)
      : lanes_(lanes), steps_(steps), data_(MatrixT<Scalar>::Zero(lanes * steps, width)) {}

  /// Wraps a T x width matrix as a single-lane sequence.
  static SequenceBatchT single_lane(MatrixT<Scalar> rows) {
    SequenceBatchT s;
    s.lanes_ = 1;
    s.steps_ = rows.rows();
    s.data_ = std::move(rows);
    return s;
  }

  Index lanes() const { return lanes_; }
  Index steps() const { return steps_; }
  Index width() const { return data_.cols(); }

  auto step(Index t) { return data_.middleRows(t * lanes_, lanes_); }
  auto step(Index t) const { return data_.middleRows(t * lanes_, lanes_); }
  auto at(Index lane, Index t) { return data_.row(t * lanes_ + lane); }
  auto at(Index lane, Index t) const { return data_.row(t * lanes_ + lane); }

  MatrixT<Scalar>& matrix() { return data_; }
  const MatrixT<Scalar>& matrix() const { return data_; }

  /// Steps [begin, begin + count) of every lane.
  SequenceBatchT slice(Index begin, Index count) const {
    SequenceBatchT s;
    s.lanes_ = lanes_;
    s.steps_ = count;
    s.data_ = data_.middleRows(begin * lanes_, count * lanes_);
    return s;
  }

 private:
  Index lanes_ = 0;
  Index steps_ = 0;
  MatrixT<Scalar> data_;
};

enum class Mode { train, infer };

/// Gate activations of one lstm_step.
template <typename Scalar>
struct StepRecordT {
  MatrixT<Scalar> f, i, g, o;  // each B x H
};

template <typename Scalar>
struct LayerCacheT {
  MatrixT<Scalar> input;   // LB x D_in, after the previous layer's dropout
  MatrixT<Scalar> gates;   // LB x 4H activations (f, i, g, o)
  MatrixT<Scalar> cell;    // LB x H
  MatrixT<Scalar> hidden;  // LB x H, before dropout
  MatrixT<Scalar> h0, c0;  // B x H carried-in state
  MatrixT<Scalar> mask;    // B x H inverted-dropout multipliers; empty when unused
};

template <typename Scalar>
struct ForwardCacheT {
  NetworkDims dims;
  Index lanes = 0;
  Index steps = 0;
  std::vector<LayerCacheT<Scalar>> layers;
  MatrixT<Scalar> head_input;  // LB x H: top hidden after dropout
  MatrixT<Scalar> logits;      // LB x C
  MatrixT<Scalar> probs;       // LB x C
};

template <typename Scalar>
struct ForwardResultT {
  SequenceBatchT<Scalar> probs;  // lanes x steps x C
  std::vector<LayerStateT<Scalar>> state;
  ForwardCacheT<Scalar> cache;
};

template <typename Scalar>
struct BackwardResultT {
  NetworkParamsT<Scalar> grads;
  Scalar loss = Scalar(0);
  Index counted = 0;  // unmasked (lane, step) pairs
};

namespace detail {

/// One recurrent update given the input projection x W_x^T + b (B x 4H) and
/// the transposed recurrent weights (H x 4H).
template <typename Scalar, typename Proj>
void lstm_cell(const Eigen::MatrixBase<Proj>& projected, const MatrixT<Scalar>& w_h_t,
               LayerStateT<Scalar>& state, MatrixT<Scalar>& gates_out) {
  using std::exp;
  using std::tanh;
  const Index B = projected.rows();
  const Index H = w_h_t.rows();
  gates_out = projected + matmul(state.h, w_h_t);
  for (Index b = 0; b < B; ++b) {
    Scalar* gr = gates_out.row(b).data();
    for (Index j = 0; j < H; ++j) {
      const Scalar f = Scalar(1) / (Scalar(1) + exp(-gr[j]));
      const Scalar i = Scalar(1) / (Scalar(1) + exp(-gr[H + j]));
      const Scalar g = tanh(gr[2 * H + j]);
      const Scalar o = Scalar(1) / (Scalar(1) + exp(-gr[3 * H + j]));
      gr[j] = f;
      gr[H + j] = i;
      gr[2 * H + j] = g;
      gr[3 * H + j] = o;
      const Scalar c = f * state.c(b, j) + i * g;
      state.c(b, j) = c;
      state.h(b, j) = o * tanh(c);
    }
  }
}

template <typename Scalar>
MatrixT<Scalar> project_inputs(const MatrixT<Scalar>& x, const LstmLayerParamsT<Scalar>& layer) {
  MatrixT<Scalar> proj = matmul(x, layer.w_x.transpose());
  proj.rowwise() += layer.bias.col(0).transpose();
  return proj;
}

}  // namespace detail

/// A single time step of one layer.
template <typename Scalar>
std::pair<LayerStateT<Scalar>, StepRecordT<Scalar>> lstm_step(const LstmLayerParamsT<Scalar>& layer,
                                                              const MatrixT<Scalar>& x_t,
                                                              const LayerStateT<Scalar>& state) {
  const Index H = layer.hidden();
  if (x_t.cols() != layer.input_dim())
    throw ShapeError("lstm_step: input " + shape_string(x_t) + " vs w_x " + shape_string(layer.w_x));
  if (state.h.rows() != x_t.rows() || state.h.cols() != H || state.c.rows() != x_t.rows() ||
      state.c.cols() != H)
    throw ShapeError("lstm_step: state " + shape_string(state.h) + " does not match input " +
                     shape_string(x_t) + " with H=" + std::to_string(H));
  LayerStateT<Scalar> next = state;
  MatrixT<Scalar> gates;
  const MatrixT<Scalar> w_h_t = layer.w_h.transpose();
  detail::lstm_cell(detail::project_inputs(x_t, layer), w_h_t, next, gates);
  StepRecordT<Scalar> rec{gates.leftCols(H), gates.middleCols(H, H), gates.middleCols(2 * H, H),
                          gates.rightCols(H)};
  return {std::move(next), std::move(rec)};
}

/// Runs a window through all layers and the softmax head.
///
/// In train mode with dropout_p > 0 an inverted-dropout mask is drawn once per
/// lane per layer for the whole window and applied to each layer's output on
/// its way up (the recurrent path sees the undropped h). Infer mode never
/// drops or rescales. `rng` is only consulted when masks are drawn.
template <typename Scalar>
ForwardResultT<Scalar> forward_window(const NetworkParamsT<Scalar>& net, const SequenceBatchT<Scalar>& x,
                                      const std::vector<LayerStateT<Scalar>>& state0, Mode mode,
                                      double dropout_p, RngStream* rng, bool keep_cache = true) {
  const NetworkDims& d = net.dims;
  const Index B = x.lanes(), L = x.steps(), H = d.hidden;
  if (static_cast<Index>(state0.size()) != d.layers)
    throw ShapeError("forward_window: " + std::to_string(state0.size()) + " layer states for a " +
                     std::to_string(d.layers) + "-layer network");
  if (x.width() != d.input)
    throw ShapeError("forward_window: input width " + std::to_string(x.width()) + " != D=" +
                     std::to_string(d.input));
  for (const auto& s : state0)
    if (s.h.rows() != B || s.h.cols() != H || s.c.rows() != B || s.c.cols() != H)
      throw ShapeError("forward_window: state " + shape_string(s.h) + " for " + std::to_string(B) +
                       " lanes of width " + std::to_string(H));
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ArgumentError("dropout_p must lie in [0, 1)");
  const bool drop = mode == Mode::train && dropout_p > 0.0;
  if (drop && rng == nullptr) throw ArgumentError("forward_window: dropout requires an rng");

  ForwardResultT<Scalar> res;
  res.cache.dims = d;
  res.cache.lanes = B;
  res.cache.steps = L;
  res.state = state0;

  MatrixT<Scalar> layer_in = x.matrix();
  MatrixT<Scalar> gates;
  for (Index k = 0; k < d.layers; ++k) {
    const auto& layer = net.layers[static_cast<std::size_t>(k)];
    auto& st = res.state[static_cast<std::size_t>(k)];
    LayerCacheT<Scalar> lc;
    if (keep_cache) {
      lc.h0 = st.h;
      lc.c0 = st.c;
      lc.gates.resize(L * B, 4 * H);
      lc.cell.resize(L * B, H);
    }
    const MatrixT<Scalar> proj = detail::project_inputs(layer_in, layer);
    const MatrixT<Scalar> w_h_t = layer.w_h.transpose();
    MatrixT<Scalar> hidden(L * B, H);
    for (Index t = 0; t < L; ++t) {
      detail::lstm_cell(proj.middleRows(t * B, B), w_h_t, st, gates);
      hidden.middleRows(t * B, B) = st.h;
      if (keep_cache) {
        lc.gates.middleRows(t * B, B) = gates;
        lc.cell.middleRows(t * B, B) = st.c;
      }
    }
    MatrixT<Scalar> out = hidden;
    if (drop) {
      const Scalar keep_scale = Scalar(1) / Scalar(1.0 - dropout_p);
      lc.mask.resize(B, H);
      for (Index b = 0; b < B; ++b)
        for (Index j = 0; j < H; ++j) lc.mask(b, j) = rng_unit(*rng) >= dropout_p ? keep_scale : Scalar(0);
      for (Index t = 0; t < L; ++t) out.middleRows(t * B, B).array() *= lc.mask.array();
    }
    if (keep_cache) {
      lc.input = std::move(layer_in);
      lc.hidden = std::move(hidden);
      res.cache.layers.push_back(std::move(lc));
    }
    layer_in = std::move(out);
  }

  MatrixT<Scalar> logits = matmul(layer_in, net.output.w_hc.transpose());
  logits.rowwise() += net.output.bias_c.col(0).transpose();
  MatrixT<Scalar> probs = softmax_rows(logits);
  res.probs = SequenceBatchT<Scalar>(B, L, d.classes);
  res.probs.matrix() = probs;
  if (keep_cache) {
    res.cache.head_input = std::move(layer_in);
    res.cache.probs = std::move(probs);
  }
  res.cache.logits = std::move(logits);
  return res;
}

/// Mean cross-entropy over unmasked (lane, step) pairs and its gradient by
/// backpropagation through the window. `targets` and `loss_mask` are
/// step-major like SequenceBatch rows (index t * lanes + b); targets at
/// masked positions are ignored.
template <typename Scalar>
BackwardResultT<Scalar> backward_window(const NetworkParamsT<Scalar>& net, const ForwardCacheT<Scalar>& cache,
                                        const std::vector<int>& targets,
                                        const std::vector<std::uint8_t>& loss_mask) {
  const NetworkDims& d = net.dims;
  if (!(cache.dims == d) || static_cast<Index>(cache.layers.size()) != d.layers || cache.probs.rows() == 0)
    throw ContractError("backward_window: cache was not produced by forward_window on this network");
  const Index B = cache.lanes, L = cache.steps, H = d.hidden, C = d.classes;
  const Index n_rows = B * L;
  if (static_cast<Index>(targets.size()) != n_rows || static_cast<Index>(loss_mask.size()) != n_rows)
    throw ShapeError("backward_window: targets/mask length must be lanes*steps = " + std::to_string(n_rows));

  BackwardResultT<Scalar> res;
  res.grads = NetworkParamsT<Scalar>::zeros(d);
  for (Index r = 0; r < n_rows; ++r) {
    if (!loss_mask[static_cast<std::size_t>(r)]) continue;
    const int y = targets[static_cast<std::size_t>(r)];
    if (y < 0 || y >= C) throw ArgumentError("backward_window: target " + std::to_string(y) + " outside [0, C)");
    ++res.counted;
  }
  if (res.counted == 0) return res;

  const Scalar inv_n = Scalar(1) / Scalar(res.counted);
  MatrixT<Scalar> dlogits = MatrixT<Scalar>::Zero(n_rows, C);
  Scalar loss(0);
  for (Index r = 0; r < n_rows; ++r) {
    if (!loss_mask[static_cast<std::size_t>(r)]) continue;
    const int y = targets[static_cast<std::size_t>(r)];
    loss -= log_softmax_at(cache.logits.row(r), y);
    dlogits.row(r) = cache.probs.row(r) * inv_n;
    dlogits(r, y) -= inv_n;
  }
  res.loss = loss * inv_n;

  res.grads.output.w_hc = matmul_tn(dlogits, cache.head_input);
  res.grads.output.bias_c = column_sums(dlogits).transpose();
  MatrixT<Scalar> d_out = matmul(dlogits, net.output.w_hc);  // d(head input)

  for (Index k = d.layers - 1; k >= 0; --k) {
    const auto& layer = net.layers[static_cast<std::size_t>(k)];
    const auto& lc = cache.layers[static_cast<std::size_t>(k)];
    auto& g = res.grads.layers[static_cast<std::size_t>(k)];
    if (lc.mask.size() > 0)
      for (Index t = 0; t < L; ++t) d_out.middleRows(t * B, B).array() *= lc.mask.array();

    MatrixT<Scalar> d_pre(n_rows, 4 * H);
    MatrixT<Scalar> dh_next = MatrixT<Scalar>::Zero(B, H);
    MatrixT<Scalar> dc_next = MatrixT<Scalar>::Zero(B, H);
    for (Index t = L - 1; t >= 0; --t) {
      for (Index b = 0; b < B; ++b) {
        const Index r = t * B + b;
        const Scalar* gr = lc.gates.row(r).data();
        Scalar* dp = d_pre.row(r).data();
        for (Index j = 0; j < H; ++j) {
          const Scalar f = gr[j], i = gr[H + j], gg = gr[2 * H + j], o = gr[3 * H + j];
          const Scalar c = lc.cell(r, j);
          const Scalar c_prev = t > 0 ? lc.cell(r - B, j) : lc.c0(b, j);
          using std::tanh;
          const Scalar tc = tanh(c);
          const Scalar dh = d_out(r, j) + dh_next(b, j);
          const Scalar dc = dc_next(b, j) + dh * o * (Scalar(1) - tc * tc);
          dp[j] = dc * c_prev * f * (Scalar(1) - f);
          dp[H + j] = dc * gg * i * (Scalar(1) - i);
          dp[2 * H + j] = dc * i * (Scalar(1) - gg * gg);
          dp[3 * H + j] = dh * tc * o * (Scalar(1) - o);
          dc_next(b, j) = dc * f;
        }
      }
      dh_next = matmul(d_pre.middleRows(t * B, B), layer.w_h);
    }

    // h_{t-1} for every row, with the carried-in state for t = 0.
    MatrixT<Scalar> h_prev(n_rows, H);
    h_prev.topRows(B) = lc.h0;
    if (L > 1) h_prev.bottomRows((L - 1) * B) = lc.hidden.topRows((L - 1) * B);

    g.w_x = matmul_tn(d_pre, lc.input);
    g.w_h = matmul_tn(d_pre, h_prev);
    g.bias = column_sums(d_pre).transpose();
    if (k > 0) d_out = matmul(d_pre, layer.w_x);
  }
  return res;
}

/// Mean masked cross-entropy of a fresh forward pass from zero state.
template <typename Scalar>
Scalar window_loss(const NetworkParamsT<Scalar>& net, const SequenceBatchT<Scalar>& x,
                   const std::vector<int>& targets, const std::vector<std::uint8_t>& loss_mask,
                   double dropout_p = 0.0, std::uint64_t dropout_seed = 0) {
  RngStream rng(dropout_seed, stream_id(StreamPurpose::dropout));
  const auto fw =
      forward_window(net, x, zero_states<Scalar>(net.dims, x.lanes()), Mode::train, dropout_p, &rng, false);
  Scalar loss(0);
  Index n = 0;
  for (Index r = 0; r < fw.cache.logits.rows(); ++r) {
    if (!loss_mask[static_cast<std::size_t>(r)]) continue;
    loss -= log_softmax_at(fw.cache.logits.row(r), targets[static_cast<std::size_t>(r)]);
    ++n;
  }
  return n == 0 ? Scalar(0) : loss / Scalar(n);
}

using LstmLayerParams = LstmLayerParamsT<double>;
using OutputParams = OutputParamsT<double>;
using NetworkParams = NetworkParamsT<double>;
using LayerState = LayerStateT<double>;
using SequenceBatch = SequenceBatchT<double>;
using ForwardCache = ForwardCacheT<double>;
using ForwardResult = ForwardResultT<double>;
using BackwardResult = BackwardResultT<double>;
using StepRecord = StepRecordT<double>;

/// Glorot-uniform weights, zero biases except the forget-gate slice (1.0).
NetworkParams init_params(const NetworkDims& dims, std::uint64_t seed);

struct GradCheckOptions {
  double epsilon = 1e-5;
  double dropout_p = 0.0;
  std::uint64_t dropout_seed = 0;
  /// Multiplies the analytic recurrent-weight gradients before comparison;
  /// anything other than 1 simulates a broken backward pass.
  double corrupt_recurrent_scale = 1.0;
  double refine_below = 3e-6;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  Index checked = 0;
};

/// Compares backward_window against central finite differences of the loss,
/// parameter by parameter. Relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
///
/// Differences are taken in double first; any entry whose numeric derivative
/// falls below `refine_below` is recomputed with the loss evaluated in long
/// double.
GradCheckResult gradient_check(const NetworkParams& net, const SequenceBatch& x, const std::vector<int>& targets,
                               const std::vector<std::uint8_t>& loss_mask, const GradCheckOptions& opts = {});

// Checkpoint format: "SSLM", u32 version, u32 D/H/C/layers, then each
// parameter matrix (rows u32, cols u32, row-major f64), all little-endian,
// followed by a CRC-32 of everything before it.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const NetworkParams& params);
NetworkParams decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const NetworkParams& params, const std::string& path);
NetworkParams load_checkpoint(const std::string& path);

}  // namespace sslstm
