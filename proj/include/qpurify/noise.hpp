// Copyright 2026 The qpurify Authors
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

#include <cstdint>
#include <random>

namespace qpurify {

/// SplitMix64 finaliser; mixes a 64-bit counter into a well-spread value.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for the stream identified by (seed, stream, channel). Distinct
/// triples give unrelated engines.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t channel);

/// Gaussian/uniform draws for one (trajectory, channel) pair. The same
/// triple reproduces the same sequence on a given platform.
class NoiseSource {
 public:
  NoiseSource(std::uint64_t seed, std::uint64_t stream, std::uint64_t channel = 0)
      : seed_(seed),
        stream_(stream),
        channel_(channel),
        engine_(derive_stream_seed(seed, stream, channel)) {}

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Wiener increment over a step of length dt.
  double wiener(double dt);
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t channel() const { return channel_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t channel_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace qpurify
