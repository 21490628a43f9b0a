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

#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace repchain {

/// Simulation clock value: an integer count of picoseconds.
///
/// Every distance/velocity in a run is converted to ticks once, at chain
/// construction, so event ordering never depends on floating accumulation.
class SimTime {
  public:
    using rep = std::int64_t;

    static constexpr rep kTicksPerSecond = 1'000'000'000'000;

    constexpr SimTime() = default;
    constexpr explicit SimTime(rep ticks) : ticks_(ticks) {}

    /// Rounds half-to-even onto the picosecond grid. Throws std::domain_error
    /// for negative, NaN or unrepresentable inputs.
    static SimTime from_seconds(double seconds);
    static constexpr SimTime max() { return SimTime{std::numeric_limits<rep>::max()}; }
    static constexpr SimTime zero() { return SimTime{0}; }

    constexpr rep ticks() const { return ticks_; }
    double seconds() const { return static_cast<double>(ticks_) / static_cast<double>(kTicksPerSecond); }

    constexpr SimTime operator+(SimTime o) const { return SimTime{ticks_ + o.ticks_}; }
    constexpr SimTime operator-(SimTime o) const { return SimTime{ticks_ - o.ticks_}; }
    constexpr SimTime operator*(rep k) const { return SimTime{ticks_ * k}; }
    constexpr SimTime &operator+=(SimTime o) {
        ticks_ += o.ticks_;
        return *this;
    }
    constexpr auto operator<=>(const SimTime &) const = default;

  private:
    rep ticks_ = 0;
};

/// Adds `step * count` to `base`, saturating at SimTime::max().
SimTime saturating_advance(SimTime base, SimTime step, std::uint64_t count);

/// Hardware figures of merit for one chain. All links share them.
struct HardwareParams {
    double e_b = 0.5;               ///< Barrett-Kok heralding success probability
    double e_s = 0.5;               ///< entanglement swapping success probability
    double e_m = 0.9;               ///< memory (photon emission) efficiency
    double e_d = 0.8;               ///< single-photon detector efficiency
    double alpha_db_per_km = 0.2;   ///< fiber attenuation
    double v_km_per_s = 2.0e5;      ///< photon and classical signal velocity
    double tau_mem_s = std::numeric_limits<double>::infinity();  ///< memory lifetime, may be +inf

    /// Throws std::invalid_argument naming the first offending field.
    void validate() const;
    bool infinite_memory() const { return tau_mem_s == std::numeric_limits<double>::infinity(); }

    bool operator==(const HardwareParams &) const = default;
};

/// Attenuation coefficient in 1/km such that exp(-gamma * L) == 10^(-alpha * L / 10).
double gamma_per_km(const HardwareParams &params);

/// Linear chain of `num_repeaters + 2` nodes with equally long elementary links.
/// Node 0 and node r+1 are the end nodes; each link has its BSM station at the
/// fiber midpoint.
struct ChainTopology {
    double total_length_km = 0.0;
    int num_repeaters = 0;
    int c_node_index = 0;

    /// Validates L > 0 and r >= 0 and places the controlling node in the middle
    /// of the chain (lower index on ties).
    static ChainTopology make(double total_length_km, int num_repeaters);

    int num_nodes() const { return num_repeaters + 2; }
    int num_links() const { return num_repeaters + 1; }
    double link_length_km() const { return total_length_km / num_links(); }
    /// Number of elementary links between two nodes.
    static int hops(int a, int b) { return a > b ? a - b : b - a; }

    bool operator==(const ChainTopology &) const = default;
};

/// One memory slot. Slot 0 faces the left neighbour, slot 1 the right one.
struct MemoryId {
    int node = 0;
    int slot = 0;
    auto operator<=>(const MemoryId &) const = default;
};

struct EntanglementRecord {
    MemoryId memory_a;
    MemoryId memory_b;
    SimTime created_at;
    SimTime expires_at = SimTime::max();  ///< SimTime::max() means never
    std::pair<int, int> span;             ///< (left node, right node)

    bool never_expires() const { return expires_at == SimTime::max(); }
    /// An expiry at exactly `now` counts as expired.
    bool alive_at(SimTime now) const { return now < expires_at; }

    bool operator==(const EntanglementRecord &) const = default;
};

/// Counters and timings collected over one simulation run.
struct TrialStats {
    std::uint64_t end_to_end_successes = 0;
    SimTime elapsed;
    /// Elementary attempts started, per link id. Sums to total_attempts.
    std::vector<std::uint64_t> attempts_per_link;
    std::uint64_t total_attempts = 0;
    /// Number of attempts each elementary success took, keyed by attempt count.
    std::map<std::uint64_t, std::uint64_t> attempts_to_success;
    /// Age (s) of the oldest memory engaged in each end-to-end success.
    std::vector<double> oldest_memory_age_samples;
    std::vector<SimTime> success_times;
    /// Attempts, swaps or held records lost to memory expiry.
    std::uint64_t expiry_failures = 0;
    std::uint64_t events_processed = 0;
    /// Queue drained while a success target was still unmet.
    bool livelock = false;

    double rate_per_s() const;
    void record_attempts(int link, std::uint64_t count);

    bool operator==(const TrialStats &) const = default;
};

}  // namespace repchain
