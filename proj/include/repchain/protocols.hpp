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
#include "repchain/engine.hpp"
#include "repchain/random.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace repchain::protocols {

/// Tick-level durations of one chain, fixed at construction.
struct ChainTiming {
    SimTime half_link;   ///< node-to-BSM travel time, len/(2v)
    SimTime tau;         ///< memory lifetime, SimTime::max() if unbounded
    SimTime swap_stage;  ///< one swap stage, L/(2v)

    static ChainTiming make(const ChainTopology &chain, const HardwareParams &params);

    SimTime link() const { return half_link * 2; }
    /// Classical latency between two nodes.
    SimTime between(int a, int b) const { return link() * ChainTopology::hops(a, b); }
    /// t + tau, saturating.
    SimTime expiry_from(SimTime t) const;
};

/// Tracks which memory slots currently hold part of an entanglement record.
class MemoryBank {
  public:
    explicit MemoryBank(int num_nodes) : slots_(static_cast<std::size_t>(num_nodes), {false, false}) {}

    /// Throws std::logic_error if the slot is already taken.
    void occupy(MemoryId id);
    void release(MemoryId id);
    bool occupied(MemoryId id) const { return slots_.at(static_cast<std::size_t>(id.node))[slot(id)]; }
    int occupied_count() const;

  private:
    static std::size_t slot(MemoryId id) { return static_cast<std::size_t>(id.slot); }
    std::vector<std::array<bool, 2>> slots_;
};

enum class LinkState { Idle, AwaitingStart, PhotonsInFlight, AwaitingSecondRound, Done };

/// Per-photon and per-attempt success probabilities of one link. Their product
/// is the single-attempt heralding probability.
struct DrawProbabilities {
    double emission = 0.0;        ///< per photon
    double fiber_survival = 0.0;  ///< per photon, exp(-gamma len/2)
    double detection = 0.0;       ///< per photon
    double heralding = 0.0;       ///< per attempt

    double product() const;
};

/// One elementary link running the two-round Barrett-Kok timeline. Relative to
/// the first emission e (h = len/2v):
///   e       emit, memories excited, expiry e + tau
///   e+h     photons at BSM; emission, fiber and detector draws
///   e+2h    first result at both nodes; second emission, expiry e + 2h + tau
///   e+3h    photons at BSM; heralding draw; record created on success
///   e+4h    final result at both nodes
/// A photon whose memory has expired by the time it reaches the BSM is lost.
class LinkGenerator {
  public:
    using Outcome = std::function<void(LinkGenerator &, bool success)>;

    LinkGenerator(int id, int left_node, double length_km, const HardwareParams &params, const ChainTiming &timing,
                  RngStream rng, MemoryBank *bank);

    int id() const { return id_; }
    int left_node() const { return left_; }
    int right_node() const { return left_ + 1; }
    double length_km() const { return length_km_; }
    LinkState state() const { return state_; }
    const DrawProbabilities &draws() const { return draws_; }

    /// Composed probability of the Bernoulli draws one attempt makes.
    double resolve_success_probability() const { return draws_.product(); }
    /// False when tau <= len/2v: no photon can reach the BSM before its memory expires.
    bool photons_can_survive() const;

    /// Schedules one attempt whose first emission happens at `emit_at`. A forced
    /// attempt skips the Bernoulli draws (fast-forward already decided it
    /// succeeds) but still obeys memory expiry.
    void attempt(Engine &engine, SimTime emit_at, bool forced, Outcome on_outcome);

    /// Starts a new run of attempts towards the next success.
    void begin_sequence(SimTime now);
    SimTime sequence_started_at() const { return sequence_start_; }
    /// Accounts attempts the caller fast-forwarded over.
    void add_skipped_attempts(Engine &engine, std::uint64_t count);

    const std::optional<EntanglementRecord> &record() const { return record_; }
    /// Hands the record (and its memory slots) to the caller.
    EntanglementRecord take_record();
    void discard_record();

    RngStream &rng() { return rng_; }

  private:
    struct Attempt {
        bool forced = false;
        bool photons_ok = true;
        bool expired = false;
        SimTime memory_expiry;
    };

    int id_;
    int left_;
    double length_km_;
    DrawProbabilities draws_;
    ChainTiming timing_;
    RngStream rng_;
    MemoryBank *bank_;
    LinkState state_ = LinkState::Idle;
    SimTime sequence_start_;
    std::uint64_t attempts_in_sequence_ = 0;
    std::uint64_t attempt_counter_ = 0;
    Attempt current_;
    std::optional<EntanglementRecord> record_;
};

/// Merges (a..node) and (node..b) into (a..b) with probability e_s. The merged
/// record expires at the earlier of its parents. Throws std::invalid_argument
/// if the records do not meet at `at_node` or either has expired at `now`.
/// Returns nullopt when the swap fails; both parents are then lost.
std::optional<EntanglementRecord> swap(const EntanglementRecord &left, const EntanglementRecord &right, int at_node,
                                       SimTime now, RngStream &rng, double e_s);

/// Swap nodes per stage. Segments are paired leftmost-first; an odd segment
/// out on the right waits for the next stage.
struct SwapTree {
    int repeaters = 0;
    std::vector<std::vector<int>> stages;

    int num_stages() const { return static_cast<int>(stages.size()); }
};

SwapTree build_swap_tree(int repeaters);

/// Emitted on every end-to-end success.
struct EndToEndSuccess {
    SimTime at;
    EntanglementRecord record;
    std::vector<EntanglementRecord> constituents;  ///< elementary records, left to right
    double oldest_memory_age_s = 0.0;
};

using SuccessObserver = std::function<void(const EndToEndSuccess &)>;

struct ProtocolOptions {
    /// Sample the number of failed attempts/rounds instead of simulating each.
    bool fast_forward = true;
    SuccessObserver on_success;
};

class SwapTreeRunner;

/// Shared state of both chain schedulers.
class ChainProtocol {
  public:
    ChainProtocol(const ChainTopology &chain, const HardwareParams &params, std::uint64_t seed,
                  ProtocolOptions options);
    virtual ~ChainProtocol();
    ChainProtocol(const ChainProtocol &) = delete;
    ChainProtocol &operator=(const ChainProtocol &) = delete;

    /// Schedules the protocol's first events.
    virtual void start(Engine &engine) = 0;

    const ChainTopology &chain() const { return chain_; }
    const ChainTiming &timing() const { return timing_; }
    const SwapTree &swap_tree() const { return tree_; }
    const std::vector<LinkGenerator> &links() const { return links_; }
    const MemoryBank &memories() const { return bank_; }

  protected:
    /// Node of `link` that talks to the C-node (the closer one).
    int notifier(const LinkGenerator &link) const;
    void report_success(Engine &engine, EntanglementRecord record, std::vector<EntanglementRecord> constituents,
                        SimTime oldest_start);
    void release(const EntanglementRecord &record);

    ChainTopology chain_;
    HardwareParams params_;
    ChainTiming timing_;
    SwapTree tree_;
    ProtocolOptions options_;
    MemoryBank bank_;
    std::vector<LinkGenerator> links_;
    RngStream controller_rng_;
    std::unique_ptr<SwapTreeRunner> runner_;
};

/// All links attempt together on a fixed round clock of 3 len/v + L/v; a round
/// with any failed link is discarded, otherwise the swap tree runs from the round
/// boundary and any swap failure discards everything.
class SynchronousProtocol final : public ChainProtocol {
  public:
    using ChainProtocol::ChainProtocol;

    void start(Engine &engine) override;
    SimTime round_period() const;
    /// Probability that every link of a round heralds.
    double round_success_probability() const;

  private:
    void open_round(Engine &engine);
    void run_round(Engine &engine, bool forced);
    void close_round(Engine &engine);

    std::int64_t round_ = 0;
    SimTime round_start_;
    std::vector<int> link_ok_;
};

/// Every link retries on its own 3 len/v cadence and holds its record until the
/// rest are up; an expired record regenerates alone. Once the C-node has
/// completion notices from all links the swap tree runs; a swap failure
/// restarts every link.
class IndependentProtocol final : public ChainProtocol {
  public:
    using ChainProtocol::ChainProtocol;

    void start(Engine &engine) override;
    SimTime attempt_period() const { return timing_.link() * 3; }

  private:
    void launch(Engine &engine, LinkGenerator &link);
    void on_outcome(Engine &engine, LinkGenerator &link, bool success);
    void on_notice(Engine &engine, int link_id, SimTime record_created_at);
    void on_expired(Engine &engine, int link_id);
    void restart_all(Engine &engine);

    std::vector<std::optional<EventHandle>> expiry_events_;
    /// Links whose current record the C-node has heard about.
    std::vector<bool> notified_;
};

}  // namespace repchain::protocols
