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

#include "repchain/analytics.hpp"

#include "repchain/random.hpp"

#include <cmath>
#include <stdexcept>

namespace repchain::analytics {

namespace {

void require_length(double length_km, bool allow_zero) {
    const bool ok = allow_zero ? length_km >= 0.0 : length_km > 0.0;
    if (!ok || std::isinf(length_km)) {
        throw std::invalid_argument(allow_zero ? "length must be finite and >= 0" : "length must be finite and > 0");
    }
}

void require_repeaters(int repeaters) {
    if (repeaters < 0) {
        throw std::invalid_argument("repeater count must be >= 0");
    }
}

void require_p1(double p1) {
    if (!(p1 > 0.0 && p1 <= 1.0)) {
        throw std::invalid_argument("p1 must lie in (0, 1]");
    }
}

}  // namespace

double p_single(const HardwareParams &params, double link_length_km) {
    require_length(link_length_km, true);
    return params.e_b * params.e_m * params.e_m * params.e_d * params.e_d *
           std::exp(-gamma_per_km(params) * link_length_km);
}

double geometric_pmf(double p1, std::uint64_t k) {
    require_p1(p1);
    if (k < 1) {
        throw std::invalid_argument("geometric_pmf: k must be >= 1");
    }
    return std::pow(1.0 - p1, static_cast<double>(k - 1)) * p1;
}

MeanStd geometric_mean_std(double p1) {
    require_p1(p1);
    const double mean = 1.0 / p1;
    return {mean, std::sqrt(mean * mean - mean)};
}

double rate_no_repeater(const HardwareParams &params, double total_length_km) {
    require_length(total_length_km, false);
    if (total_length_km >= 2.0 * params.v_km_per_s * params.tau_mem_s) {
        return 0.0;
    }
    return params.v_km_per_s / (4.0 * total_length_km) * p_single(params, total_length_km);
}

double rate_synchronous(const HardwareParams &params, double total_length_km, int repeaters) {
    require_length(total_length_km, false);
    require_repeaters(repeaters);
    const double links = repeaters + 1.0;
    const double em_ed = params.e_m * params.e_d;
    return params.v_km_per_s / total_length_km / (3.0 / links + 1.0) * std::pow(params.e_b, links) *
           std::pow(params.e_s, repeaters) * std::pow(em_ed, 2.0 * links) *
           std::exp(-gamma_per_km(params) * total_length_km);
}

MuEstimate estimate_mu(int n, double p1, std::uint64_t repetitions, std::uint64_t seed) {
    if (n < 1) {
        throw std::invalid_argument("estimate_mu: n must be >= 1");
    }
    require_p1(p1);
    if (repetitions == 0) {
        throw std::invalid_argument("estimate_mu: repetitions must be > 0");
    }
    RngStream rng(seed, static_cast<std::uint64_t>(n));
    // Welford on the normalized maximum.
    double mean = 0.0;
    double m2 = 0.0;
    for (std::uint64_t rep = 1; rep <= repetitions; ++rep) {
        std::uint64_t worst = 0;
        for (int i = 0; i < n; ++i) {
            const auto k = rng.geometric(p1);
            worst = k > worst ? k : worst;
        }
        const double x = static_cast<double>(worst) * p1;
        const double delta = x - mean;
        mean += delta / static_cast<double>(rep);
        m2 += delta * (x - mean);
    }
    const double var = repetitions > 1 ? m2 / static_cast<double>(repetitions - 1) : 0.0;
    return {n, mean, std::sqrt(var), repetitions};
}

double mu_sqrt_approx(int n) {
    if (n < 1) {
        throw std::invalid_argument("mu_sqrt_approx: n must be >= 1");
    }
    return std::sqrt(static_cast<double>(n));
}

double mu_for_chain(const HardwareParams &params, double total_length_km, int repeaters,
                    const MuOptions &options) {
    require_length(total_length_km, false);
    require_repeaters(repeaters);
    if (options.method == MuMethod::sqrt_approx) {
        return mu_sqrt_approx(repeaters + 1);
    }
    const double p1 = p_single(params, total_length_km / (repeaters + 1));
    if (p1 <= 0.0) {
        // Never succeeds; the rate is zero whatever mu is.
        return mu_sqrt_approx(repeaters + 1);
    }
    return estimate_mu(repeaters + 1, p1, options.repetitions, options.seed).mean_normalized;
}

double rate_independent(const HardwareParams &params, double total_length_km, int repeaters, double mu) {
    require_length(total_length_km, false);
    require_repeaters(repeaters);
    if (!(mu > 0.0)) {
        throw std::invalid_argument("rate_independent: mu must be > 0");
    }
    const double links = repeaters + 1.0;
    return links / (3.0 * mu) * params.v_km_per_s / total_length_km * params.e_b *
           std::pow(params.e_s, repeaters) * params.e_m * params.e_m * params.e_d * params.e_d *
           std::exp(-gamma_per_km(params) * total_length_km / links);
}

double rate_independent(const HardwareParams &params, double total_length_km, int repeaters,
                        const MuOptions &options) {
    return rate_independent(params, total_length_km, repeaters,
                            mu_for_chain(params, total_length_km, repeaters, options));
}

double oldest_memory_age_from_rate(double rate_independent_per_s, double total_length_km, int repeaters,
                                   double v_km_per_s) {
    require_length(total_length_km, false);
    require_repeaters(repeaters);
    if (!(rate_independent_per_s > 0.0)) {
        throw std::invalid_argument("oldest_memory_age: rate must be > 0");
    }
    return 1.0 / rate_independent_per_s + total_length_km / v_km_per_s * std::log2(repeaters + 1.0);
}

double oldest_memory_age(const HardwareParams &params, double total_length_km, int repeaters,
                         const MuOptions &options) {
    return oldest_memory_age_from_rate(rate_independent(params, total_length_km, repeaters, options),
                                       total_length_km, repeaters, params.v_km_per_s);
}

}  // namespace repchain::analytics
