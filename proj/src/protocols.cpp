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

#include "repchain/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace repchain::protocols {

// ---------------------------------------------------------------------------
// Timing and memory bookkeeping

ChainTiming ChainTiming::make(const ChainTopology &chain, const HardwareParams &params) {
    ChainTiming timing;
    timing.half_link = SimTime::from_seconds(chain.link_length_km() / (2.0 * params.v_km_per_s));
    if (timing.half_link.ticks() == 0) {
        throw std::invalid_argument("ChainTiming: link too short for the picosecond time grid");
    }
    timing.swap_stage = timing.half_link * chain.num_links();
    // Lifetimes beyond the 64-bit picosecond horizon behave as unbounded.
    constexpr double kHorizonSeconds = 9.0e6;
    timing.tau = params.tau_mem_s >= kHorizonSeconds ? SimTime::max() : SimTime::from_seconds(params.tau_mem_s);
    return timing;
}

SimTime ChainTiming::expiry_from(SimTime t) const {
    if (tau == SimTime::max()) {
        return SimTime::max();
    }
    return saturating_advance(t, tau, 1);
}

void MemoryBank::occupy(MemoryId id) {
    auto &cell = slots_.at(static_cast<std::size_t>(id.node))[slot(id)];
    if (cell) {
        throw std::logic_error("MemoryBank: slot already holds an entanglement record");
    }
    cell = true;
}

void MemoryBank::release(MemoryId id) {
    auto &cell = slots_.at(static_cast<std::size_t>(id.node))[slot(id)];
    if (!cell) {
        throw std::logic_error("MemoryBank: releasing a free slot");
    }
    cell = false;
}

int MemoryBank::occupied_count() const {
    int n = 0;
    for (const auto &node : slots_) {
        n += static_cast<int>(node[0]) + static_cast<int>(node[1]);
    }
    return n;
}

// ---------------------------------------------------------------------------
// Elementary link

double DrawProbabilities::product() const {
    return emission * emission * fiber_survival * fiber_survival * detection * detection * heralding;
}

LinkGenerator::LinkGenerator(int id, int left_node, double length_km, const HardwareParams &params,
                             const ChainTiming &timing, RngStream rng, MemoryBank *bank)
    : id_(id),
      left_(left_node),
      length_km_(length_km),
      draws_{params.e_m, std::exp(-gamma_per_km(params) * length_km / 2.0), params.e_d, params.e_b},
      timing_(timing),
      rng_(rng),
      bank_(bank) {}

bool LinkGenerator::photons_can_survive() const {
    return timing_.half_link < timing_.tau;
}

void LinkGenerator::begin_sequence(SimTime now) {
    sequence_start_ = now;
}

void LinkGenerator::add_skipped_attempts(Engine &engine, std::uint64_t count) {
    attempts_in_sequence_ += count;
    attempt_counter_ += count;
    engine.stats().record_attempts(id_, count);
}

void LinkGenerator::attempt(Engine &engine, SimTime emit_at, bool forced, Outcome on_outcome) {
    if (state_ != LinkState::Idle || record_) {
        throw std::logic_error("LinkGenerator::attempt: link busy");
    }
    state_ = LinkState::AwaitingStart;
    ++attempts_in_sequence_;
    ++attempt_counter_;
    engine.stats().record_attempts(id_, 1);
    current_ = Attempt{forced, true, false, SimTime{}};

    const auto h = timing_.half_link;
    const auto round = static_cast<std::int64_t>(attempt_counter_);
    EventPayload tag;
    tag.link = id_;
    tag.round = round;
    auto *eng = &engine;

    auto second_photons = [this, eng, h, tag, done = std::move(on_outcome)](const Event &) mutable {
        const auto now = eng->now();
        if (!(now < current_.memory_expiry)) {
            current_.expired = true;
        }
        const bool ok = current_.photons_ok && !current_.expired &&
                        (current_.forced || rng_.bernoulli(draws_.heralding));
        if (current_.expired) {
            ++eng->stats().expiry_failures;
        }
        if (ok) {
            record_ = EntanglementRecord{MemoryId{left_, 1}, MemoryId{left_ + 1, 0}, now, current_.memory_expiry,
                                         {left_, left_ + 1}};
            bank_->occupy(record_->memory_a);
            bank_->occupy(record_->memory_b);
        }
        auto result = tag;
        result.ok = ok ? 1 : 0;
        result.note = "round2";
        eng->schedule(now + h, EventKind::BSMResult, result, [this, eng, ok, done = std::move(done)](const Event &) {
            state_ = ok ? LinkState::Done : LinkState::Idle;
            if (ok) {
                ++eng->stats().attempts_to_success[attempts_in_sequence_];
                attempts_in_sequence_ = 0;
            }
            done(*this, ok);
        });
    };

    auto second_emission = [this, eng, h, tag, next = std::move(second_photons)](const Event &) mutable {
        current_.memory_expiry = timing_.expiry_from(eng->now());
        auto p = tag;
        p.note = "round2";
        eng->schedule(eng->now() + h, EventKind::PhotonAtBSM, p, std::move(next));
    };

    auto first_result = [this, eng, tag, next = std::move(second_emission)](const Event &) mutable {
        state_ = LinkState::AwaitingSecondRound;
        auto p = tag;
        p.note = "round2";
        eng->schedule(eng->now(), EventKind::EmitPhotons, p, std::move(next));
    };

    auto first_photons = [this, eng, h, tag, next = std::move(first_result)](const Event &) mutable {
        if (!(eng->now() < current_.memory_expiry)) {
            current_.expired = true;
        }
        if (!current_.forced && current_.photons_ok) {
            current_.photons_ok = rng_.bernoulli(draws_.fiber_survival) && rng_.bernoulli(draws_.fiber_survival) &&
                                  rng_.bernoulli(draws_.detection) && rng_.bernoulli(draws_.detection);
        }
        auto p = tag;
        p.note = "round1";
        p.ok = current_.photons_ok && !current_.expired ? 1 : 0;
        eng->schedule(eng->now() + h, EventKind::BSMResult, p, std::move(next));
    };

    auto first_emission = [this, eng, h, tag, next = std::move(first_photons)](const Event &) mutable {
        state_ = LinkState::PhotonsInFlight;
        current_.memory_expiry = timing_.expiry_from(eng->now());
        if (!current_.forced) {
            current_.photons_ok = rng_.bernoulli(draws_.emission) && rng_.bernoulli(draws_.emission);
        }
        auto p = tag;
        p.note = "round1";
        eng->schedule(eng->now() + h, EventKind::PhotonAtBSM, p, std::move(next));
    };

    auto p = tag;
    p.note = "round1";
    engine.schedule(emit_at, EventKind::EmitPhotons, p, std::move(first_emission));
}

EntanglementRecord LinkGenerator::take_record() {
    if (!record_) {
        throw std::logic_error("LinkGenerator::take_record: no record held");
    }
    auto rec = *record_;
    record_.reset();
    state_ = LinkState::Idle;
    return rec;
}

void LinkGenerator::discard_record() {
    if (record_) {
        bank_->release(record_->memory_a);
        bank_->release(record_->memory_b);
        record_.reset();
    }
    state_ = LinkState::Idle;
}

// ---------------------------------------------------------------------------
// Swapping

std::optional<EntanglementRecord> swap(const EntanglementRecord &left, const EntanglementRecord &right, int at_node,
                                       SimTime now, RngStream &rng, double e_s) {
    if (left.span.second != at_node || right.span.first != at_node) {
        throw std::invalid_argument("swap: records do not meet at the swapping node");
    }
    if (!left.alive_at(now) || !right.alive_at(now)) {
        throw std::invalid_argument("swap: input record has expired");
    }
    if (!rng.bernoulli(e_s)) {
        return std::nullopt;
    }
    return EntanglementRecord{left.memory_a, right.memory_b, now, std::min(left.expires_at, right.expires_at),
                              {left.span.first, right.span.second}};
}

SwapTree build_swap_tree(int repeaters) {
    if (repeaters < 0) {
        throw std::invalid_argument("build_swap_tree: repeater count must be >= 0");
    }
    SwapTree tree{repeaters, {}};
    std::vector<int> bounds(static_cast<std::size_t>(repeaters) + 2);
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        bounds[i] = static_cast<int>(i);
    }
    while (bounds.size() > 2) {
        std::vector<int> stage;
        std::vector<int> next;
        for (std::size_t j = 0; j < bounds.size(); ++j) {
            // Odd interior bounds join segment j-1 with segment j.
            if (j % 2 == 1 && j + 1 < bounds.size()) {
                stage.push_back(bounds[j]);
            } else {
                next.push_back(bounds[j]);
            }
        }
        tree.stages.push_back(std::move(stage));
        bounds = std::move(next);
    }
    return tree;
}

/// Runs the stages of a swap tree as timed classical-message events.
class SwapTreeRunner {
  public:
    using Done = std::function<void(std::optional<EntanglementRecord>)>;

    SwapTreeRunner(const SwapTree &tree, SimTime stage_duration, double e_s, RngStream &rng, MemoryBank &bank)
        : tree_(tree), stage_duration_(stage_duration), e_s_(e_s), rng_(rng), bank_(bank) {}

    bool active() const { return active_; }

    void start(Engine &engine, std::vector<EntanglementRecord> segments, Done done) {
        active_ = true;
        segments_ = std::move(segments);
        done_ = std::move(done);
        schedule_stage(engine, 0);
    }

  private:
    void schedule_stage(Engine &engine, int stage) {
        EventPayload p;
        p.stage = stage;
        p.note = "swap";
        engine.schedule(engine.now() + stage_duration_, EventKind::ClassicalMessage, p,
                        [this, &engine, stage](const Event &) { run_stage(engine, stage); });
    }

    void run_stage(Engine &engine, int stage) {
        const auto now = engine.now();
        for (int node : tree_.stages[static_cast<std::size_t>(stage)]) {
            auto it = std::find_if(segments_.begin(), segments_.end(),
                                   [node](const EntanglementRecord &r) { return r.span.second == node; });
            if (it == segments_.end() || std::next(it) == segments_.end()) {
                throw std::logic_error("SwapTreeRunner: swap tree does not match the segments");
            }
            auto &left = *it;
            auto &right = *std::next(it);
            if (!left.alive_at(now) || !right.alive_at(now)) {
                ++engine.stats().expiry_failures;
                return fail();
            }
            auto merged = swap(left, right, node, now, rng_, e_s_);
            if (!merged) {
                return fail();
            }
            bank_.release(left.memory_b);
            bank_.release(right.memory_a);
            left = *merged;
            segments_.erase(std::next(it));
        }
        if (stage + 1 < tree_.num_stages()) {
            schedule_stage(engine, stage + 1);
            return;
        }
        active_ = false;
        auto result = segments_.front();
        segments_.clear();
        done_(result);
    }

    void fail() {
        for (const auto &seg : segments_) {
            bank_.release(seg.memory_a);
            bank_.release(seg.memory_b);
        }
        segments_.clear();
        active_ = false;
        done_(std::nullopt);
    }

    const SwapTree &tree_;
    SimTime stage_duration_;
    double e_s_;
    RngStream &rng_;
    MemoryBank &bank_;
    bool active_ = false;
    std::vector<EntanglementRecord> segments_;
    Done done_;
};

// ---------------------------------------------------------------------------
// Shared scheduler state

ChainProtocol::ChainProtocol(const ChainTopology &chain, const HardwareParams &params, std::uint64_t seed,
                             ProtocolOptions options)
    : chain_(chain),
      params_(params),
      timing_(ChainTiming::make(chain, params)),
      tree_(build_swap_tree(chain.num_repeaters)),
      options_(std::move(options)),
      bank_(chain.num_nodes()),
      controller_rng_(seed, static_cast<std::uint64_t>(chain.num_links())) {
    params_.validate();
    links_.reserve(static_cast<std::size_t>(chain.num_links()));
    for (int i = 0; i < chain.num_links(); ++i) {
        links_.emplace_back(i, i, chain.link_length_km(), params_, timing_, RngStream(seed, static_cast<std::uint64_t>(i)),
                            &bank_);
    }
    runner_ = std::make_unique<SwapTreeRunner>(tree_, timing_.swap_stage, params_.e_s, controller_rng_, bank_);
}

ChainProtocol::~ChainProtocol() = default;

int ChainProtocol::notifier(const LinkGenerator &link) const {
    const int c = chain_.c_node_index;
    return ChainTopology::hops(link.left_node(), c) <= ChainTopology::hops(link.right_node(), c) ? link.left_node()
                                                                                                  : link.right_node();
}

void ChainProtocol::release(const EntanglementRecord &record) {
    bank_.release(record.memory_a);
    bank_.release(record.memory_b);
}

void ChainProtocol::report_success(Engine &engine, EntanglementRecord record,
                                   std::vector<EntanglementRecord> constituents, SimTime oldest_start) {
    auto &stats = engine.stats();
    const auto now = engine.now();
    ++stats.end_to_end_successes;
    stats.success_times.push_back(now);
    const double age = (now - oldest_start).seconds();
    stats.oldest_memory_age_samples.push_back(age);
    release(record);
    if (options_.on_success) {
        options_.on_success(EndToEndSuccess{now, record, std::move(constituents), age});
    }
}

// ---------------------------------------------------------------------------
// Synchronous scheduler

SimTime SynchronousProtocol::round_period() const {
    return timing_.link() * 3 + timing_.between(0, chain_.num_nodes() - 1);
}

double SynchronousProtocol::round_success_probability() const {
    double p = 1.0;
    for (const auto &link : links_) {
        p *= link.photons_can_survive() ? link.resolve_success_probability() : 0.0;
    }
    return p;
}

void SynchronousProtocol::start(Engine &engine) {
    link_ok_.assign(links_.size(), 0);
    EventPayload p;
    p.round = 0;
    engine.schedule(engine.now(), EventKind::RoundStart, p, [this, &engine](const Event &) {
        open_round(engine);
    });
}

void SynchronousProtocol::open_round(Engine &engine) {
    round_start_ = engine.now();
    const double p_round = round_success_probability();
    if (!options_.fast_forward || p_round <= 0.0) {
        run_round(engine, false);
        return;
    }
    const auto rounds = controller_rng_.geometric(p_round);
    for (auto &link : links_) {
        link.add_skipped_attempts(engine, rounds - 1);
    }
    round_ += static_cast<std::int64_t>(rounds - 1);
    if (rounds == 1) {
        run_round(engine, true);
        return;
    }
    const auto at = saturating_advance(engine.now(), round_period(), rounds - 1);
    if (at == SimTime::max()) {
        return;  // beyond any representable horizon
    }
    EventPayload p;
    p.round = round_ + 1;
    p.note = "fast-forward";
    engine.schedule(at, EventKind::RoundStart, p, [this, &engine](const Event &) {
        round_start_ = engine.now();
        run_round(engine, true);
    });
}

void SynchronousProtocol::run_round(Engine &engine, bool forced) {
    ++round_;
    std::fill(link_ok_.begin(), link_ok_.end(), 0);
    const int c = chain_.c_node_index;
    const int farthest = std::max(c, chain_.num_nodes() - 1 - c);
    const auto emit_at = engine.now() + timing_.link() * farthest;
    for (auto &link : links_) {
        link.begin_sequence(round_start_);
        link.attempt(engine, emit_at, forced, [this, &engine](LinkGenerator &l, bool ok) {
            EventPayload p;
            p.link = l.id();
            p.node = notifier(l);
            p.round = round_;
            p.ok = ok ? 1 : 0;
            p.note = "notice";
            const int id = l.id();
            engine.schedule(engine.now() + timing_.between(notifier(l), chain_.c_node_index),
                            EventKind::ClassicalMessage, p,
                            [this, id, ok](const Event &) { link_ok_[static_cast<std::size_t>(id)] = ok ? 1 : 0; });
        });
    }
    EventPayload p;
    p.round = round_;
    p.note = "close";
    engine.schedule(round_start_ + round_period(), EventKind::RoundStart, p,
                    [this, &engine](const Event &) { close_round(engine); });
}

void SynchronousProtocol::close_round(Engine &engine) {
    const bool all_ok = std::all_of(link_ok_.begin(), link_ok_.end(), [](int ok) { return ok == 1; });
    if (!all_ok) {
        for (auto &link : links_) {
            link.discard_record();
        }
        open_round(engine);
        return;
    }
    std::vector<EntanglementRecord> records;
    records.reserve(links_.size());
    for (auto &link : links_) {
        records.push_back(link.take_record());
    }
    const auto started = round_start_;
    if (chain_.num_repeaters == 0) {
        auto rec = records.front();
        report_success(engine, rec, std::move(records), started);
        open_round(engine);
        return;
    }
    auto constituents = records;
    runner_->start(engine, std::move(records),
                   [this, &engine, started, constituents = std::move(constituents)](std::optional<EntanglementRecord> e2e) {
                       if (e2e) {
                           report_success(engine, *e2e, constituents, started);
                       }
                       EventPayload p;
                       p.round = round_ + 1;
                       engine.schedule(engine.now(), EventKind::RoundStart, p,
                                       [this, &engine](const Event &) { open_round(engine); });
                   });
}

// ---------------------------------------------------------------------------
// Independent scheduler

void IndependentProtocol::start(Engine &engine) {
    expiry_events_.assign(links_.size(), std::nullopt);
    notified_.assign(links_.size(), false);
    for (auto &link : links_) {
        link.begin_sequence(engine.now());
        launch(engine, link);
    }
}

void IndependentProtocol::launch(Engine &engine, LinkGenerator &link) {
    notified_[static_cast<std::size_t>(link.id())] = false;
    // The controlling end tells the far end when to emit: one link of latency.
    auto emit_at = engine.now() + timing_.link();
    bool forced = false;
    const double p = link.resolve_success_probability();
    if (options_.fast_forward && link.photons_can_survive() && p > 0.0) {
        const auto k = link.rng().geometric(p);
        link.add_skipped_attempts(engine, k - 1);
        emit_at = saturating_advance(emit_at, attempt_period(), k - 1);
        if (emit_at == SimTime::max()) {
            return;
        }
        forced = true;
    }
    link.attempt(engine, emit_at, forced,
                 [this, &engine](LinkGenerator &l, bool ok) { on_outcome(engine, l, ok); });
}

void IndependentProtocol::on_outcome(Engine &engine, LinkGenerator &link, bool success) {
    if (!success) {
        launch(engine, link);
        return;
    }
    const auto now = engine.now();
    if (chain_.num_repeaters == 0) {
        auto rec = link.take_record();
        report_success(engine, rec, {rec}, link.sequence_started_at());
        link.begin_sequence(now);
        launch(engine, link);
        return;
    }
    const auto &rec = *link.record();
    if (!rec.alive_at(now)) {
        ++engine.stats().expiry_failures;
        link.discard_record();
        link.begin_sequence(now);
        launch(engine, link);
        return;
    }
    const int id = link.id();
    if (!rec.never_expires()) {
        EventPayload p;
        p.link = id;
        expiry_events_[static_cast<std::size_t>(id)] = engine.schedule(
            rec.expires_at, EventKind::MemoryExpired, p, [this, &engine, id](const Event &) { on_expired(engine, id); });
    }
    EventPayload p;
    p.link = id;
    p.node = notifier(link);
    p.ok = 1;
    p.note = "notice";
    const auto created = rec.created_at;
    engine.schedule(now + timing_.between(notifier(link), chain_.c_node_index), EventKind::ClassicalMessage, p,
                    [this, &engine, id, created](const Event &) { on_notice(engine, id, created); });
}

void IndependentProtocol::on_notice(Engine &engine, int link_id, SimTime record_created_at) {
    const auto &link = links_[static_cast<std::size_t>(link_id)];
    // Stale notice: the record it announced has expired since.
    if (!link.record() || link.record()->created_at != record_created_at) {
        return;
    }
    notified_[static_cast<std::size_t>(link_id)] = true;
    if (runner_->active() || !std::all_of(notified_.begin(), notified_.end(), [](bool b) { return b; })) {
        return;
    }
    std::vector<EntanglementRecord> records;
    records.reserve(links_.size());
    SimTime oldest = engine.now();
    for (auto &l : links_) {
        auto &handle = expiry_events_[static_cast<std::size_t>(l.id())];
        if (handle) {
            engine.cancel(*handle);
            handle.reset();
        }
        oldest = std::min(oldest, l.sequence_started_at());
        records.push_back(l.take_record());
    }
    auto constituents = records;
    runner_->start(engine, std::move(records),
                   [this, &engine, oldest, constituents = std::move(constituents)](std::optional<EntanglementRecord> e2e) {
                       if (e2e) {
                           report_success(engine, *e2e, constituents, oldest);
                       }
                       restart_all(engine);
                   });
}

void IndependentProtocol::on_expired(Engine &engine, int link_id) {
    expiry_events_[static_cast<std::size_t>(link_id)].reset();
    auto &link = links_[static_cast<std::size_t>(link_id)];
    if (link.state() != LinkState::Done) {
        return;
    }
    ++engine.stats().expiry_failures;
    link.discard_record();
    link.begin_sequence(engine.now());
    launch(engine, link);
}

void IndependentProtocol::restart_all(Engine &engine) {
    for (auto &link : links_) {
        link.begin_sequence(engine.now());
        launch(engine, link);
    }
}

}  // namespace repchain::protocols
