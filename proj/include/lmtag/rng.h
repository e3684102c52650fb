// Copyright 2026 The lmtag Authors.
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

#ifndef LMTAG_RNG_H_
#define LMTAG_RNG_H_

#include <cstdint>
#include <random>

namespace lmtag {

// Deterministic random stream.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Distributions are implemented here rather than with the
// <random> distribution templates, whose algorithms are left to the library
// vendor, so a given seed yields the same draws on every platform.
//
//   uniform()   = (next() >> 11) * 2^-53, in [0, 1)
//   below(n)    = rejection sampling on next() for an unbiased [0, n)
//   split(k)    = new stream seeded with splitmix64(seed ^ splitmix64(k))
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next() { return engine_(); }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t below(std::uint64_t n);

  // Independent child stream; does not advance this stream.
  RngStream split(std::uint64_t stream_id) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace lmtag

#endif  // LMTAG_RNG_H_
