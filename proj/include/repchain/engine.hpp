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
#include <functional>
#include <iosfwd>
#include <optional>
#include <queue>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace repchain {

/// Event kinds, declared in same-timestamp priority order: an expiry at t
/// must be seen before a success heralded at t.
enum class EventKind : std::uint8_t {
    MemoryExpired = 0,
    BSMResult,
    PhotonAtBSM,
    ClassicalMessage,
    EmitPhotons,
    RoundStart,
};

std::string_view to_string(EventKind kind);

/// Kind-specific data. Negative fields are unset and omitted from traces.
struct EventPayload {
    int link = -1;
    int node = -1;
    std::int64_t round = -1;
    int stage = -1;
    int ok = -1;
    std::string_view note;  ///< static label, e.g. "notice" or "swap"
};

struct Event {
    SimTime fire_at;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::RoundStart;
    EventPayload payload;
};

struct EventHandle {
    std::uint64_t seq = 0;
    bool operator==(const EventHandle &) const = default;
};

struct StopCondition {
    std::optional<std::uint64_t> target_successes;
    SimTime max_time = SimTime::max();

    bool bounded() const { return target_successes.has_value() || max_time != SimTime::max(); }
};

/// Single-threaded discrete-event core. Events dequeue in
/// (fire_at, kind priority, seq) order; seq is assigned at schedule time, so the
/// order depends only on program order.
class Engine {
  public:
    using Action = std::function<void(const Event &)>;

    /// Throws std::invalid_argument if `fire_at` lies before now().
    EventHandle schedule(SimTime fire_at, EventKind kind, EventPayload payload, Action action);
    /// Returns false if the event already fired or was cancelled.
    bool cancel(EventHandle handle);

    SimTime now() const { return now_; }
    std::size_t pending() const { return pending_.size(); }

    TrialStats &stats() { return stats_; }
    const TrialStats &stats() const { return stats_; }

    /// One tab-separated line per fired event: ticks, kind, payload.
    void set_trace(std::ostream *out) { trace_ = out; }

    /// Drains the queue until the success target is met, max_time passes, or
    /// nothing is left to fire. Sets elapsed and the livelock flag.
    TrialStats run_until(const StopCondition &stop);

  private:
    struct Key {
        SimTime fire_at;
        EventKind kind;
        std::uint64_t seq;
        bool operator>(const Key &o) const {
            if (fire_at != o.fire_at) return fire_at > o.fire_at;
            if (kind != o.kind) return kind > o.kind;
            return seq > o.seq;
        }
    };
    struct Pending {
        Event event;
        Action action;
    };

    void write_trace(const Event &event) const;

    SimTime now_;
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Key, std::vector<Key>, std::greater<>> heap_;
    std::unordered_map<std::uint64_t, Pending> pending_;
    TrialStats stats_;
    std::ostream *trace_ = nullptr;
};

}  // namespace repchain
