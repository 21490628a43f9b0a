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

#include "repchain/simulation.hpp"

#include "repchain/random.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace repchain::simulation {

std::string_view to_string(Protocol protocol) {
    return protocol == Protocol::synchronous ? "synchronous" : "independent";
}

std::optional<Protocol> parse_protocol(std::string_view text) {
    if (text == "synchronous" || text == "sync") return Protocol::synchronous;
    if (text == "independent" || text == "ind") return Protocol::independent;
    return std::nullopt;
}

std::string_view to_string(ZeroRateReason reason) {
    switch (reason) {
        case ZeroRateReason::none: return "none";
        case ZeroRateReason::memory_cutoff: return "memory_cutoff";
        case ZeroRateReason::insufficient_time: return "insufficient_time";
    }
    return "none";
}

Chain build_chain(double total_length_km, int repeaters, const HardwareParams &params) {
    params.validate();
    auto topology = ChainTopology::make(total_length_km, repeaters);
    return Chain{topology, params, protocols::ChainTiming::make(topology, params)};
}

StopCondition StopSpec::to_condition() const {
    StopCondition cond;
    if (target_successes > 0) {
        cond.target_successes = target_successes;
    }
    if (std::isfinite(max_time_s)) {
        cond.max_time = SimTime::from_seconds(max_time_s);
    }
    return cond;
}

double batch_means_stderr(const std::vector<SimTime> &success_times, int batches) {
    const auto n = success_times.size();
    if (n == 0 || success_times.back().ticks() == 0) {
        return 0.0;
    }
    const auto b = static_cast<std::size_t>(batches);
    if (batches < 2 || n < 2 * b) {
        const double rate = static_cast<double>(n) / success_times.back().seconds();
        return rate / std::sqrt(static_cast<double>(n));
    }
    std::vector<double> rates;
    rates.reserve(b);
    for (std::size_t k = 0; k < b; ++k) {
        const auto lo = k * n / b;
        const auto hi = (k + 1) * n / b;
        const auto begin = lo == 0 ? SimTime::zero() : success_times[lo - 1];
        const double span = (success_times[hi - 1] - begin).seconds();
        rates.push_back(span > 0.0 ? static_cast<double>(hi - lo) / span : 0.0);
    }
    const double mean = std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(b);
    double ss = 0.0;
    for (double r : rates) {
        ss += (r - mean) * (r - mean);
    }
    return std::sqrt(ss / static_cast<double>(b - 1)) / std::sqrt(static_cast<double>(b));
}

RateMeasurement measure_rate(const Chain &chain, Protocol protocol, const StopSpec &stop, std::uint64_t seed,
                             const MeasureOptions &options) {
    const auto cond = stop.to_condition();
    if (!cond.bounded()) {
        throw std::invalid_argument("measure_rate: stop condition is unbounded");
    }
    protocols::ProtocolOptions popts{options.fast_forward, options.on_success};
    std::unique_ptr<protocols::ChainProtocol> proto;
    if (protocol == Protocol::synchronous) {
        proto = std::make_unique<protocols::SynchronousProtocol>(chain.topology, chain.params, seed, popts);
    } else {
        proto = std::make_unique<protocols::IndependentProtocol>(chain.topology, chain.params, seed, popts);
    }
    Engine engine;
    engine.set_trace(options.trace);
    engine.stats().attempts_per_link.assign(static_cast<std::size_t>(chain.topology.num_links()), 0);
    proto->start(engine);

    RateMeasurement m;
    m.stats = engine.run_until(cond);
    m.rate_per_s = m.stats.rate_per_s();
    const auto &ages = m.stats.oldest_memory_age_samples;
    m.mean_dt_s = ages.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : std::accumulate(ages.begin(), ages.end(), 0.0) / static_cast<double>(ages.size());
    if (m.stats.end_to_end_successes == 0) {
        m.zero_reason = m.stats.expiry_failures > 0 ? ZeroRateReason::memory_cutoff : ZeroRateReason::insufficient_time;
        const double secs = m.stats.elapsed.seconds();
        m.rate_stderr_per_s = secs > 0.0 ? -std::log(0.05) / secs : std::numeric_limits<double>::infinity();
    } else {
        m.rate_stderr_per_s = batch_means_stderr(m.stats.success_times);
    }
    return m;
}

double model_rate(const HardwareParams &params, double total_length_km, int repeaters, Protocol protocol,
                  const analytics::MuOptions &mu) {
    if (protocol == Protocol::synchronous) {
        return analytics::rate_synchronous(params, total_length_km, repeaters);
    }
    return analytics::rate_independent(params, total_length_km, repeaters, mu);
}

void SweepSpec::validate() const {
    if (lengths_km.empty() || repeaters.empty() || tau_mem_s.empty()) {
        throw std::invalid_argument("SweepSpec: every axis needs at least one value");
    }
    if (!stop.to_condition().bounded()) {
        throw std::invalid_argument("SweepSpec: stop condition is unbounded");
    }
    if (mu_repetitions == 0) {
        throw std::invalid_argument("SweepSpec: mu_repetitions must be > 0");
    }
    params.validate();
}

std::uint64_t point_seed(std::uint64_t master, double length_km, int repeaters, double tau_mem_s, Protocol protocol) {
    std::uint64_t key = mix64(std::bit_cast<std::uint64_t>(length_km));
    key = mix64(key ^ static_cast<std::uint64_t>(repeaters));
    key = mix64(key ^ std::bit_cast<std::uint64_t>(tau_mem_s));
    key = mix64(key ^ static_cast<std::uint64_t>(protocol));
    return derive_seed(master, key);
}

namespace {

SweepPoint run_point(const SweepSpec &spec, double length_km, int repeaters, double tau_mem_s) {
    SweepPoint pt;
    pt.length_km = length_km;
    pt.repeaters = repeaters;
    pt.tau_mem_s = tau_mem_s;
    pt.protocol = spec.protocol;
    pt.seed = point_seed(spec.master_seed, length_km, repeaters, tau_mem_s, spec.protocol);
    try {
        auto params = spec.params;
        params.tau_mem_s = tau_mem_s;
        const auto chain = build_chain(length_km, repeaters, params);
        const auto m = measure_rate(chain, spec.protocol, spec.stop, pt.seed, MeasureOptions{spec.fast_forward, {}, nullptr});
        pt.rate_sim_per_s = m.rate_per_s;
        pt.rate_sim_stderr = m.rate_stderr_per_s;
        pt.successes = m.stats.end_to_end_successes;
        pt.mean_dt_s = m.mean_dt_s;
        pt.zero_reason = m.zero_reason;
        std::uint64_t successes = 0;
        std::uint64_t attempts = 0;
        for (const auto &[k, count] : m.stats.attempts_to_success) {
            successes += count;
            attempts += k * count;
        }
        pt.mean_attempts_per_link_success =
            successes > 0 ? static_cast<double>(attempts) / static_cast<double>(successes)
                          : std::numeric_limits<double>::quiet_NaN();
        const analytics::MuOptions mu{analytics::MuMethod::monte_carlo, spec.mu_repetitions, derive_seed(pt.seed, 0)};
        pt.rate_model_per_s = model_rate(params, length_km, repeaters, spec.protocol, mu);
        pt.rel_dev = pt.rate_model_per_s > 0.0 ? (pt.rate_sim_per_s - pt.rate_model_per_s) / pt.rate_model_per_s
                                               : std::numeric_limits<double>::quiet_NaN();
    } catch (const std::exception &e) {
        pt.error = e.what();
    }
    return pt;
}

}  // namespace

SweepResult run_sweep(const SweepSpec &spec) {
    spec.validate();
    struct Coord {
        double length_km;
        int repeaters;
        double tau_mem_s;
    };
    std::vector<Coord> coords;
    for (int r : spec.repeaters) {
        for (double tau : spec.tau_mem_s) {
            for (double len : spec.lengths_km) {
                coords.push_back({len, r, tau});
            }
        }
    }
    SweepResult result;
    result.points.resize(coords.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto i = next.fetch_add(1); i < coords.size(); i = next.fetch_add(1)) {
            result.points[i] = run_point(spec, coords[i].length_km, coords[i].repeaters, coords[i].tau_mem_s);
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(spec.threads, static_cast<unsigned>(coords.size())));
    if (workers == 1) {
        worker();
        return result;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back(worker);
    }
    pool.clear();  // joins
    return result;
}

}  // namespace repchain::simulation
