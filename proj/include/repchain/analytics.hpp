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

#include <cstdint>

/// Closed-form rate models for a repeater chain and the Monte Carlo estimator of
/// the normalized expected maximum of N geometric attempt counts.
///
/// The rate models assume an infinite memory lifetime, except
/// rate_no_repeater() which carries the hard L >= 2 v tau cutoff.
namespace repchain::analytics {

/// Probability that one Barrett-Kok attempt over a link of `link_length_km`
/// heralds entanglement: e_b * e_m^2 * e_d^2 * exp(-gamma L).
double p_single(const HardwareParams &params, double link_length_km);

/// (1 - p1)^(k-1) * p1. Throws std::invalid_argument unless 0 < p1 <= 1 and k >= 1.
double geometric_pmf(double p1, std::uint64_t k);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Mean 1/p1 and standard deviation sqrt(1/p1^2 - 1/p1) of the attempt count.
MeanStd geometric_mean_std(double p1);

/// One link between the end nodes, one attempt every 4L/v. Zero once
/// L >= 2 v tau_mem.
double rate_no_repeater(const HardwareParams &params, double total_length_km);

/// All r+1 links attempted together every 3L/(v(r+1)) + L/v; any failure
/// discards the round. Reduces to rate_no_repeater() at r = 0 (tau = inf).
double rate_synchronous(const HardwareParams &params, double total_length_km, int repeaters);

struct MuEstimate {
    int n = 1;
    double mean_normalized = 0.0;    ///< E[max k_i] * p1
    double stddev_normalized = 0.0;  ///< sample std of max k_i, times p1
    std::uint64_t repetitions = 0;

    bool operator==(const MuEstimate &) const = default;
};

/// Default repetition count of estimate_mu().
inline constexpr std::uint64_t kDefaultMuRepetitions = 1'000'000;

/// Averages max(k_1..k_n) over `repetitions` draws of n i.i.d. geometric(p1)
/// counts and normalizes by 1/p1. Bit-reproducible for a fixed seed.
MuEstimate estimate_mu(int n, double p1, std::uint64_t repetitions, std::uint64_t seed);

/// sqrt(n). Matches the Monte Carlo estimate to within ~5% for n <= 8 only;
/// beyond that the true curve grows like the harmonic number, i.e. slower.
double mu_sqrt_approx(int n);

enum class MuMethod { monte_carlo, sqrt_approx };

struct MuOptions {
    MuMethod method = MuMethod::monte_carlo;
    std::uint64_t repetitions = kDefaultMuRepetitions;
    std::uint64_t seed = 1;
};

/// Value of mu(r+1) used by rate_independent(). The Monte Carlo route samples
/// with the chain's own per-link probability P1(L/(r+1)).
double mu_for_chain(const HardwareParams &params, double total_length_km, int repeaters,
                    const MuOptions &options);

/// Links retry independently every 3L/(v(r+1)) until all are up:
/// [3 mu / (r+1)]^-1 (v/L) e_b e_s^r e_m^2 e_d^2 exp(-gamma L/(r+1)).
double rate_independent(const HardwareParams &params, double total_length_km, int repeaters, double mu);
double rate_independent(const HardwareParams &params, double total_length_km, int repeaters,
                        const MuOptions &options = {});

/// Average age of the oldest memory when the end-to-end pair appears:
/// 1/R_ind + (L/v) log2(r+1).
double oldest_memory_age_from_rate(double rate_independent_per_s, double total_length_km, int repeaters,
                                   double v_km_per_s);
double oldest_memory_age(const HardwareParams &params, double total_length_km, int repeaters,
                         const MuOptions &options = {});

}  // namespace repchain::analytics
