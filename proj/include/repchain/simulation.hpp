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

#include "repchain/analytics.hpp"
#include "repchain/core.hpp"
#include "repchain/engine.hpp"
#include "repchain/protocols.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace repchain::simulation {

enum class Protocol { synchronous, independent };

std::string_view to_string(Protocol protocol);
std::optional<Protocol> parse_protocol(std::string_view text);

struct Chain {
    ChainTopology topology;
    HardwareParams params;
    protocols::ChainTiming timing;
};

/// r+1 equal links over L km, C-node in the middle. Throws std::invalid_argument
/// for L <= 0, r < 0 or invalid hardware parameters.
Chain build_chain(double total_length_km, int repeaters, const HardwareParams &params);

/// Default: 1e4 successes or 1e3 simulated seconds, whichever comes first.
/// A zero target means "time limit only".
struct StopSpec {
    std::uint64_t target_successes = 10'000;
    double max_time_s = 1'000.0;

    StopCondition to_condition() const;
    bool operator==(const StopSpec &) const = default;
};

enum class ZeroRateReason { none, memory_cutoff, insufficient_time };
std::string_view to_string(ZeroRateReason reason);

struct RateMeasurement {
    TrialStats stats;
    double rate_per_s = 0.0;
    /// Batch-means standard error; for zero-success runs, the 95% Poisson upper
    /// bound on the rate instead.
    double rate_stderr_per_s = 0.0;
    ZeroRateReason zero_reason = ZeroRateReason::none;
    double mean_dt_s = 0.0;  ///< NaN when there were no successes
};

struct MeasureOptions {
    bool fast_forward = true;
    protocols::SuccessObserver on_success;
    std::ostream *trace = nullptr;
};

RateMeasurement measure_rate(const Chain &chain, Protocol protocol, const StopSpec &stop, std::uint64_t seed,
                             const MeasureOptions &options = {});

/// Standard error of successes/time from `batches` contiguous batches of
/// inter-success gaps. Falls back to rate/sqrt(n) below two successes per batch.
double batch_means_stderr(const std::vector<SimTime> &success_times, int batches = 20);

/// tau = inf model matching the protocol: rate_synchronous() or
/// rate_independent() with Monte Carlo mu.
double model_rate(const HardwareParams &params, double total_length_km, int repeaters, Protocol protocol,
                  const analytics::MuOptions &mu);

struct SweepSpec {
    std::vector<double> lengths_km;
    std::vector<int> repeaters;
    std::vector<double> tau_mem_s;
    Protocol protocol = Protocol::synchronous;
    StopSpec stop;
    std::uint64_t master_seed = 1;
    HardwareParams params;
    bool fast_forward = true;
    std::uint64_t mu_repetitions = analytics::kDefaultMuRepetitions;
    unsigned threads = 1;

    /// Throws std::invalid_argument on empty axes or an unbounded stop condition.
    void validate() const;
};

struct SweepPoint {
    double length_km = 0.0;
    int repeaters = 0;
    double tau_mem_s = 0.0;
    Protocol protocol = Protocol::synchronous;
    std::uint64_t seed = 0;
    double rate_sim_per_s = 0.0;
    double rate_sim_stderr = 0.0;
    double rate_model_per_s = 0.0;
    double rel_dev = 0.0;
    double mean_dt_s = 0.0;
    std::uint64_t successes = 0;
    double mean_attempts_per_link_success = 0.0;
    ZeroRateReason zero_reason = ZeroRateReason::none;
    std::optional<std::string> error;
};

struct SweepResult {
    std::vector<SweepPoint> points;
};

/// Seed of one sweep point; depends on the master seed and the point's own
/// coordinates only.
std::uint64_t point_seed(std::uint64_t master, double length_km, int repeaters, double tau_mem_s, Protocol protocol);

/// Runs every (r, tau, L) point, in that nesting order, on up to spec.threads
/// workers. A failing point carries its error message; the others still run.
SweepResult run_sweep(const SweepSpec &spec);

}  // namespace repchain::simulation
