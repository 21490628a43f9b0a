// Copyright 2026 The repchain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "repchain/core.hpp"

#include <cmath>
#include <cstdint>

namespace repchain::testing {

/// Every draw succeeds, no attenuation.
inline HardwareParams forced_params() {
    HardwareParams p;
    p.e_b = 1.0;
    p.e_s = 1.0;
    p.e_m = 1.0;
    p.e_d = 1.0;
    p.alpha_db_per_km = 0.0;
    return p;
}

/// Single-attempt success probability, written out independently of the library.
inline double p1_oracle(const HardwareParams &p, double len_km) {
    return p.e_b * p.e_m * p.e_m * p.e_d * p.e_d * std::pow(10.0, -p.alpha_db_per_km * len_km / 10.0);
}

/// E[max of n iid geometric(p) counts] * p, by summing P(max > k) over k.
inline double mu_exact(int n, double p) {
    double sum = 0.0;
    for (std::uint64_t k = 0;; ++k) {
        const double cdf = 1.0 - std::pow(1.0 - p, static_cast<double>(k));
        const double term = 1.0 - std::pow(cdf, n);
        sum += term;
        if (term < 1e-16 && k > 0) break;
    }
    return sum * p;
}

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::abs(b);
}

}  // namespace repchain::testing
