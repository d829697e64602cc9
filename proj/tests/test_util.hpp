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

#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "sslstm/data.hpp"
#include "sslstm/network.hpp"
#include "sslstm/numcore.hpp"

namespace sslstm::testing {

inline RngStream test_rng(std::uint64_t seed, std::uint64_t index = 0) {
  return RngStream(seed, stream_id(StreamPurpose::test, index));
}

inline Matrix random_matrix(RngStream& rng, Index rows, Index cols, double sd = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng_normal(rng, 0.0, sd);
  return m;
}

/// A network with every parameter drawn from N(0, sd^2), biases included.
inline NetworkParams random_net(const NetworkDims& dims, RngStream& rng, double sd = 0.5) {
  NetworkParams p = NetworkParams::zeros(dims);
  p.for_each([&](Matrix& m) { m = random_matrix(rng, m.rows(), m.cols(), sd); });
  return p;
}

inline Recording random_recording(RngStream& rng, Index T, Index D, int C, double rate = 30.0) {
  Recording r;
  r.id = "r";
  r.subject = "1";
  r.run = "1";
  r.sample_rate = rate;
  r.features = random_matrix(rng, T, D);
  for (Index t = 0; t < T; ++t) r.labels.push_back(static_cast<int>(rng_int(rng, 0, C - 1)));
  return r;
}

inline SequenceBatch random_batch(RngStream& rng, Index lanes, Index steps, Index width) {
  SequenceBatch x(lanes, steps, width);
  x.matrix() = random_matrix(rng, lanes * steps, width);
  return x;
}

/// A fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sslstm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
}

}  // namespace sslstm::testing
