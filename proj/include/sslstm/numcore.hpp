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

// Dense numerics shared by every module.
//
// Storage and elementwise expressions come from Eigen. Products and
// reductions are written out here instead of delegating to Eigen's GEMM:
// every output entry is accumulated over its inner index in ascending order
// starting from zero, so results are bitwise identical to a naive triple
// loop and do not depend on blocking or SIMD width.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>

#include "sslstm/errors.hpp"

namespace sslstm {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = MatrixT<double>;

template <typename Derived>
std::string shape_string(const Eigen::MatrixBase<Derived>& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

namespace detail {

template <typename A, typename B>
void require_same_shape(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b,
                        const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                     shape_string(b));
  }
}

}  // namespace detail

/// a * b with ascending-index accumulation per output entry.
template <typename DA, typename DB>
MatrixT<typename DA::Scalar> matmul(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + shape_string(a) + " by " + shape_string(b));
  }
  // Transposed or strided operands are evaluated once into row-major storage.
  const Eigen::Ref<const MatrixT<Scalar>> bb(b);
  const Index n = a.rows(), inner = a.cols(), m = b.cols();
  MatrixT<Scalar> out = MatrixT<Scalar>::Zero(n, m);
  // i-k-j order: out(i, j) still sees k = 0, 1, ... in sequence, but the
  // innermost loop runs over contiguous memory.
  for (Index i = 0; i < n; ++i) {
    Scalar* row = out.row(i).data();
    for (Index k = 0; k < inner; ++k) {
      const Scalar aik = a(i, k);
      const Scalar* brow = bb.row(k).data();
      for (Index j = 0; j < m; ++j) row[j] += aik * brow[j];
    }
  }
  return out;
}

/// transpose(a) * b, accumulating over the shared row index in ascending order.
template <typename DA, typename DB>
MatrixT<typename DA::Scalar> matmul_tn(const Eigen::MatrixBase<DA>& a,
                                       const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: cannot multiply transpose of " + shape_string(a) + " by " +
                     shape_string(b));
  }
  const Eigen::Ref<const MatrixT<Scalar>> bb(b);
  const Index n = a.cols(), inner = a.rows(), m = b.cols();
  MatrixT<Scalar> out = MatrixT<Scalar>::Zero(n, m);
  for (Index k = 0; k < inner; ++k) {
    const Scalar* brow = bb.row(k).data();
    for (Index i = 0; i < n; ++i) {
      const Scalar aki = a(k, i);
      Scalar* row = out.row(i).data();
      for (Index j = 0; j < m; ++j) row[j] += aki * brow[j];
    }
  }
  return out;
}

/// Sum over rows, ascending; returns a 1 x cols row.
template <typename D>
MatrixT<typename D::Scalar> column_sums(const Eigen::MatrixBase<D>& a) {
  using Scalar = typename D::Scalar;
  MatrixT<Scalar> out = MatrixT<Scalar>::Zero(1, a.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out(0, j) += a(i, j);
  return out;
}

/// Sum of squares of all entries in storage order.
template <typename D>
typename D::Scalar squared_norm(const Eigen::MatrixBase<D>& a) {
  typename D::Scalar s(0);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
  return s;
}

template <typename D>
MatrixT<typename D::Scalar> sigmoid(const Eigen::MatrixBase<D>& x) {
  using Scalar = typename D::Scalar;
  using std::exp;
  return x.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + exp(-v)); });
}

template <typename D>
MatrixT<typename D::Scalar> tanh_m(const Eigen::MatrixBase<D>& x) {
  using Scalar = typename D::Scalar;
  using std::tanh;
  return x.unaryExpr([](Scalar v) { return tanh(v); });
}

template <typename DA, typename DB>
MatrixT<typename DA::Scalar> hadamard(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  detail::require_same_shape(a, b, "hadamard");
  return a.cwiseProduct(b);
}

template <typename DA, typename DB>
MatrixT<typename DA::Scalar> add(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  detail::require_same_shape(a, b, "add");
  return a + b;
}

/// Row-wise softmax with max subtraction.
template <typename D>
MatrixT<typename D::Scalar> softmax_rows(const Eigen::MatrixBase<D>& x) {
  using Scalar = typename D::Scalar;
  using std::exp;
  if (x.rows() < 1 || x.cols() < 1) throw ShapeError("softmax_rows: empty input " + shape_string(x));
  MatrixT<Scalar> out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    Scalar mx = x(i, 0);
    for (Index j = 1; j < x.cols(); ++j) mx = x(i, j) > mx ? x(i, j) : mx;
    Scalar total(0);
    for (Index j = 0; j < x.cols(); ++j) {
      out(i, j) = exp(x(i, j) - mx);
      total += out(i, j);
    }
    for (Index j = 0; j < x.cols(); ++j) out(i, j) /= total;
  }
  return out;
}

/// log(softmax(row)(col)) without forming the probabilities.
template <typename D>
typename D::Scalar log_softmax_at(const Eigen::MatrixBase<D>& row, Index col) {
  using Scalar = typename D::Scalar;
  using std::exp;
  using std::log;
  Scalar mx = row(0, 0);
  for (Index j = 1; j < row.cols(); ++j) mx = row(0, j) > mx ? row(0, j) : mx;
  Scalar total(0);
  for (Index j = 0; j < row.cols(); ++j) total += exp(row(0, j) - mx);
  return row(0, col) - mx - log(total);
}

template <typename D>
bool all_finite(const Eigen::MatrixBase<D>& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(static_cast<double>(m(i, j)))) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Random numbers

/// Counter-based splittable generator. Each draw is a pure function of
/// (seed, stream, counter), so independent consumers (init, dropout,
/// batching, hyperparameter sampling) never perturb one another.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) noexcept
      : seed_(seed), stream_(stream), key_(mix(seed ^ mix(stream + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// A child stream whose draws are independent of this one's.
  RngStream split(std::uint64_t sub) const noexcept {
    return RngStream(seed_, mix(stream_ * 0xD1B54A32D192ED03ULL + sub + 1));
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream ids for the named randomness consumers; combine with an index via
/// stream_id() so e.g. each epoch gets its own dropout stream.
enum class StreamPurpose : std::uint64_t {
  init = 1,
  batching = 2,
  dropout = 3,
  synthetic = 4,
  experiment = 5,
  test = 99,
};

constexpr std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t index = 0) noexcept {
  return (static_cast<std::uint64_t>(purpose) << 40) ^ index;
}

/// Uniform on the open interval (0, 1), 53 bits.
inline double rng_unit(RngStream& s) noexcept {
  return (static_cast<double>(s.next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

inline double rng_uniform(RngStream& s, double lo, double hi) {
  if (!(lo <= hi)) throw ArgumentError("rng_uniform: lo must not exceed hi");
  return lo + (hi - lo) * rng_unit(s);
}

/// Box-Muller; one normal per call so the counter advance is fixed (two words).
inline double rng_normal(RngStream& s, double mean, double sd) {
  if (!(sd >= 0.0)) throw ArgumentError("rng_normal: sd must be nonnegative");
  const double u1 = rng_unit(s);
  const double u2 = rng_unit(s);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + sd * r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Uniform integer in the closed range [lo, hi], unbiased by rejection.
inline std::int64_t rng_int(RngStream& s, std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw ArgumentError("rng_int: lo must not exceed hi");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (span == std::numeric_limits<std::uint64_t>::max()) return static_cast<std::int64_t>(s.next_u64());
  const std::uint64_t range = span + 1;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t v;
  do {
    v = s.next_u64();
  } while (v >= limit);
  return lo + static_cast<std::int64_t>(v % range);
}

}  // namespace sslstm
