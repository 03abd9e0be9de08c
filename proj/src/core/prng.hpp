/*
   Copyright 2026 The convproxy Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cstdint>

namespace convproxy {

// Counter-based splitmix64.  Grid generation must be a pure function of
// (seed, stream, counter) so any column can be produced independently of
// evaluation order; no generator state is ever shared between threads.

inline constexpr std::uint64_t kSplitmixGamma = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix_fin(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// stream separates independent random fields; counter indexes draws within
// a stream.  Two mixing rounds decorrelate adjacent (stream, counter) keys.
inline std::uint64_t rng_u64(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t counter) {
  const std::uint64_t keyed = splitmix_fin(seed + kSplitmixGamma * (stream + 1));
  return splitmix_fin(keyed + kSplitmixGamma * (counter + 1));
}

// Uniform in [0, 1) with 53 random bits.
inline double rng_u01(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t counter) {
  return static_cast<double>(rng_u64(seed, stream, counter) >> 11) * 0x1.0p-53;
}

}  // namespace convproxy
