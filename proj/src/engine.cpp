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

#include "repchain/engine.hpp"

#include <ostream>
#include <stdexcept>

namespace repchain {

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::MemoryExpired: return "MemoryExpired";
        case EventKind::BSMResult: return "BSMResult";
        case EventKind::PhotonAtBSM: return "PhotonAtBSM";
        case EventKind::ClassicalMessage: return "ClassicalMessage";
        case EventKind::EmitPhotons: return "EmitPhotons";
        case EventKind::RoundStart: return "RoundStart";
    }
    return "Unknown";
}

EventHandle Engine::schedule(SimTime fire_at, EventKind kind, EventPayload payload, Action action) {
    if (fire_at < now_) {
        throw std::invalid_argument("Engine::schedule: event lies in the past");
    }
    const auto seq = next_seq_++;
    heap_.push(Key{fire_at, kind, seq});
    pending_.emplace(seq, Pending{Event{fire_at, seq, kind, payload}, std::move(action)});
    return EventHandle{seq};
}

bool Engine::cancel(EventHandle handle) {
    // The heap entry stays behind and is skipped when it surfaces.
    return pending_.erase(handle.seq) > 0;
}

TrialStats Engine::run_until(const StopCondition &stop) {
    if (!stop.bounded()) {
        throw std::invalid_argument("Engine::run_until: stop condition needs a success target or a time limit");
    }
    auto target_met = [&] {
        return stop.target_successes && stats_.end_to_end_successes >= *stop.target_successes;
    };
    while (!target_met()) {
        while (!heap_.empty() && !pending_.contains(heap_.top().seq)) {
            heap_.pop();
        }
        if (heap_.empty()) {
            if (stop.target_successes) {
                stats_.livelock = true;
            }
            if (stop.max_time != SimTime::max()) {
                now_ = stop.max_time;
            }
            stats_.elapsed = now_;
            return stats_;
        }
        if (heap_.top().fire_at > stop.max_time) {
            now_ = stop.max_time;
            stats_.elapsed = now_;
            return stats_;
        }
        const auto key = heap_.top();
        heap_.pop();
        auto node = pending_.extract(key.seq);
        now_ = key.fire_at;
        ++stats_.events_processed;
        if (trace_ != nullptr) {
            write_trace(node.mapped().event);
        }
        node.mapped().action(node.mapped().event);
    }
    stats_.elapsed = now_;
    return stats_;
}

void Engine::write_trace(const Event &event) const {
    auto &out = *trace_;
    out << event.fire_at.ticks() << '\t' << to_string(event.kind) << '\t';
    bool first = true;
    auto field = [&](std::string_view name, auto value) {
        out << (first ? "" : ";") << name << '=' << value;
        first = false;
    };
    if (!event.payload.note.empty()) field("note", event.payload.note);
    if (event.payload.link >= 0) field("link", event.payload.link);
    if (event.payload.node >= 0) field("node", event.payload.node);
    if (event.payload.round >= 0) field("round", event.payload.round);
    if (event.payload.stage >= 0) field("stage", event.payload.stage);
    if (event.payload.ok >= 0) field("ok", event.payload.ok);
    if (first) out << '-';
    out << '\n';
}

}  // namespace repchain
