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

#include "repchain/core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace repchain {

SimTime SimTime::from_seconds(double seconds) {
    if (!(seconds >= 0.0)) {
        throw std::domain_error("SimTime::from_seconds: negative or NaN duration");
    }
    // nearbyint honours the default FE_TONEAREST mode, i.e. half-to-even.
    const double ticks = std::nearbyint(seconds * static_cast<double>(kTicksPerSecond));
    if (ticks >= 9.2e18) {
        throw std::domain_error("SimTime::from_seconds: duration exceeds the 64-bit picosecond range");
    }
    return SimTime{static_cast<rep>(ticks)};
}

SimTime saturating_advance(SimTime base, SimTime step, std::uint64_t count) {
    if (count == 0 || step.ticks() == 0) {
        return base;
    }
    const auto headroom = static_cast<std::uint64_t>(SimTime::max().ticks() - base.ticks());
    const auto per = static_cast<std::uint64_t>(step.ticks());
    if (count > headroom / per) {
        return SimTime::max();
    }
    return SimTime{base.ticks() + static_cast<SimTime::rep>(count * per)};
}

namespace {

void check_probability(double p, const char *name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(std::string("HardwareParams: ") + name + " must lie in [0, 1]");
    }
}

}  // namespace

void HardwareParams::validate() const {
    check_probability(e_b, "e_b");
    check_probability(e_s, "e_s");
    check_probability(e_m, "e_m");
    check_probability(e_d, "e_d");
    if (!(alpha_db_per_km >= 0.0) || std::isinf(alpha_db_per_km)) {
        throw std::invalid_argument("HardwareParams: alpha_db_per_km must be finite and >= 0");
    }
    if (!(v_km_per_s > 0.0) || std::isinf(v_km_per_s)) {
        throw std::invalid_argument("HardwareParams: v_km_per_s must be finite and > 0");
    }
    if (!(tau_mem_s > 0.0)) {
        throw std::invalid_argument("HardwareParams: tau_mem_s must be > 0 (or inf)");
    }
}

double gamma_per_km(const HardwareParams &params) {
    return params.alpha_db_per_km * std::log(10.0) / 10.0;
}

ChainTopology ChainTopology::make(double total_length_km, int num_repeaters) {
    if (!(total_length_km > 0.0) || std::isinf(total_length_km)) {
        throw std::invalid_argument("ChainTopology: total length must be finite and > 0");
    }
    if (num_repeaters < 0) {
        throw std::invalid_argument("ChainTopology: repeater count must be >= 0");
    }
    return ChainTopology{total_length_km, num_repeaters, (num_repeaters + 1) / 2};
}

double TrialStats::rate_per_s() const {
    const double secs = elapsed.seconds();
    if (secs <= 0.0) {
        return 0.0;
    }
    return static_cast<double>(end_to_end_successes) / secs;
}

void TrialStats::record_attempts(int link, std::uint64_t count) {
    const auto idx = static_cast<std::size_t>(link);
    if (attempts_per_link.size() <= idx) {
        attempts_per_link.resize(idx + 1, 0);
    }
    attempts_per_link[idx] += count;
    total_attempts += count;
}

}  // namespace repchain
