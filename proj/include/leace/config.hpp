// Copyright 2026 The leace-embed Authors.
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

#ifndef LEACE_CONFIG_HPP_
#define LEACE_CONFIG_HPP_

#include <cstdint>

namespace leace {

inline constexpr const char* kToolName = "leace";
inline constexpr const char* kToolVersion = "1.0.0";

// Seed used by every seeded operation when the caller does not pass one.
inline constexpr std::uint64_t kDefaultSeed = 20240917;

// Every numeric tolerance the library applies by default. Functions take the
// relevant field as an argument so callers can override per call.
struct Tolerances {
  // Eigen/singular values at or below rank_rtol * (largest value) are zero.
  double rank_rtol = 1e-10;
  // Maximum relative asymmetry accepted by the symmetric eigensolver.
  double symmetry_rtol = 1e-10;
  // Ridge strength of the least-squares guardedness probe.
  double probe_ridge = 1e-6;
  // Relative gap below which two probe scores count as tied.
  double probe_tie_rtol = 1e-9;
};

inline constexpr Tolerances kDefaultTolerances{};

}  // namespace leace

#endif  // LEACE_CONFIG_HPP_
