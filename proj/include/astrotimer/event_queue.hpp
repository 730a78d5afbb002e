#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace astrotimer {

enum class EventKind : std::uint8_t { MessageArrival, ServiceComplete, TimerExpiry, UePowerOn, BackgroundArrival };

template <class Payload>
struct SimEvent {
    double time = 0.0;
    std::uint64_t sequence = 0;
    EventKind kind = EventKind::MessageArrival;
    Payload payload{};
};

/// Future event list ordered by (time, sequence). Sequence numbers are assigned
/// on push, so simultaneous events pop in insertion order.
template <class Payload>
class EventQueue {
public:
    using Event = SimEvent<Payload>;

    void push(double time, EventKind kind, Payload payload) {
        if (time < now_) throw std::logic_error("event scheduled in the past");
        heap_.push(Event{time, next_sequence_++, kind, std::move(payload)});
    }

    Event pop() {
        Event e = heap_.top();
        heap_.pop();
        now_ = e.time;
        return e;
    }

    const Event& peek() const { return heap_.top(); }
    bool empty() const noexcept { return heap_.empty(); }
    std::size_t size() const noexcept { return heap_.size(); }
    double now() const noexcept { return now_; }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const noexcept {
            if (a.time != b.time) return a.time > b.time;
            return a.sequence > b.sequence;
        }
    };

    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::uint64_t next_sequence_ = 0;
    double now_ = 0.0;
};

}  // namespace astrotimer
