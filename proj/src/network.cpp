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

#include "sslstm/network.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sslstm {

namespace {

void fill_glorot(Matrix& m, RngStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rng_uniform(rng, -limit, limit);
}

}  // namespace

NetworkParams init_params(const NetworkDims& dims, std::uint64_t seed) {
  NetworkParams p = NetworkParams::zeros(dims);
  RngStream rng(seed, stream_id(StreamPurpose::init));
  for (auto& layer : p.layers) {
    fill_glorot(layer.w_x, rng);
    fill_glorot(layer.w_h, rng);
    layer.bias.middleRows(kForget * dims.hidden, dims.hidden).setOnes();
  }
  fill_glorot(p.output.w_hc, rng);
  return p;
}

GradCheckResult gradient_check(const NetworkParams& net, const SequenceBatch& x, const std::vector<int>& targets,
                               const std::vector<std::uint8_t>& loss_mask, const GradCheckOptions& opts) {
  RngStream rng(opts.dropout_seed, stream_id(StreamPurpose::dropout));
  const auto fw = forward_window(net, x, zero_states<double>(net.dims, x.lanes()), Mode::train,
                                 opts.dropout_p, &rng);
  BackwardResult bw = backward_window(net, fw.cache, targets, loss_mask);
  if (opts.corrupt_recurrent_scale != 1.0)
    for (auto& l : bw.grads.layers) l.w_h *= opts.corrupt_recurrent_scale;

  std::vector<const Matrix*> analytic;
  bw.grads.for_each([&](const Matrix& m) { analytic.push_back(&m); });
  static const char* kNames[] = {"w_x", "w_h", "bias"};

  GradCheckResult res;
  NetworkParams probe = net;
  NetworkParamsT<long double> probe_ext = net.cast<long double>();
  SequenceBatchT<long double> x_ext(x.lanes(), x.steps(), x.width());
  x_ext.matrix() = x.matrix().cast<long double>();
  std::vector<MatrixT<long double>*> ext;
  probe_ext.for_each([&](MatrixT<long double>& m) { ext.push_back(&m); });
  std::size_t which = 0;
  probe.for_each([&](Matrix& m) {
    const Matrix& a = *analytic[which];
    const std::size_t layer = which / 3;
    const std::string name = layer < net.layers.size()
                                 ? "layer" + std::to_string(layer) + "." + kNames[which % 3]
                                 : (which == 3 * net.layers.size() ? "w_hc" : "bias_c");
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        const double saved = m(i, j);
        m(i, j) = saved + opts.epsilon;
        const double up = window_loss(probe, x, targets, loss_mask, opts.dropout_p, opts.dropout_seed);
        m(i, j) = saved - opts.epsilon;
        const double down = window_loss(probe, x, targets, loss_mask, opts.dropout_p, opts.dropout_seed);
        m(i, j) = saved;
        double numeric = (up - down) / (2.0 * opts.epsilon);
        if (std::abs(numeric) < opts.refine_below) {
          auto& e = (*ext[which])(i, j);
          const long double base = e;
          const long double eps = opts.epsilon;
          e = base + eps;
          const long double up_ext = window_loss(probe_ext, x_ext, targets, loss_mask, opts.dropout_p, opts.dropout_seed);
          e = base - eps;
          const long double down_ext = window_loss(probe_ext, x_ext, targets, loss_mask, opts.dropout_p, opts.dropout_seed);
          e = base;
          numeric = static_cast<double>((up_ext - down_ext) / (2.0L * eps));
        }
        const double denom = std::max({std::abs(a(i, j)), std::abs(numeric), 1e-8});
        const double rel = std::abs(a(i, j) - numeric) / denom;
        ++res.checked;
        if (rel > res.max_rel_error) {
          res.max_rel_error = rel;
          res.worst_parameter = name + "(" + std::to_string(i) + "," + std::to_string(j) + ")";
        }
      }
    }
    ++which;
  });
  return res;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(bits >> s));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b, std::size_t end) : bytes_(b), end_(end) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int s = 0; s < 4; ++s) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * s);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int s = 0; s < 8; ++s) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * s);
    return std::bit_cast<double>(v);
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw DataError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const NetworkParams& params) {
  params.check_shapes();
  std::vector<std::uint8_t> out{'S', 'S', 'L', 'M'};
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(params.dims.input));
  put_u32(out, static_cast<std::uint32_t>(params.dims.hidden));
  put_u32(out, static_cast<std::uint32_t>(params.dims.classes));
  put_u32(out, static_cast<std::uint32_t>(params.dims.layers));
  params.for_each([&](const Matrix& m) {
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
  });
  put_u32(out, crc_of(out.data(), out.size()));
  return out;
}

NetworkParams decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 + 4 * 5 + 4 || std::memcmp(bytes.data(), "SSLM", 4) != 0)
    throw DataError("not a checkpoint (bad magic or too short)");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int s = 0; s < 4; ++s) stored |= static_cast<std::uint32_t>(bytes[body + s]) << (8 * s);
  if (stored != crc_of(bytes.data(), body)) throw DataError("checkpoint CRC mismatch");

  Reader r(bytes, body);
  r.u32();  // magic, already checked
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  NetworkDims dims;
  dims.input = r.u32();
  dims.hidden = r.u32();
  dims.classes = r.u32();
  dims.layers = r.u32();
  try {
    dims.validate();
  } catch (const ArgumentError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  NetworkParams p = NetworkParams::zeros(dims);
  p.for_each([&](Matrix& m) {
    const Index rows = r.u32(), cols = r.u32();
    if (rows != m.rows() || cols != m.cols())
      throw DataError("checkpoint matrix is " + std::to_string(rows) + "x" + std::to_string(cols) +
                      ", expected " + shape_string(m));
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = r.f64();
  });
  if (r.pos() != body) throw DataError("checkpoint has trailing bytes");
  return p;
}

void save_checkpoint(const NetworkParams& params, const std::string& path) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("write failed: " + path);
}

NetworkParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace sslstm
