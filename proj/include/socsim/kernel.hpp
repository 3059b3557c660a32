#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace socsim {

/// Simulated seconds since scenario start.
using SimTime = std::int64_t;

struct SimClock {
    SimTime now = 0;
};

template <class Action>
struct SimEvent {
    SimTime at = 0;
    std::string origin;
    std::uint64_t seq = 0; ///< insertion sequence, assigned by the queue
    Action action{};
};

/// Priority queue of simulation events with a total order on
/// (timestamp, origin, insertion sequence). The queue owns the clock; the clock
/// only moves forward inside run_until.
template <class Action>
class EventQueue {
  public:
    using Event = SimEvent<Action>;

    /// Throws std::invalid_argument if `at` lies before the current clock.
    void schedule(SimTime at, std::string origin, Action action)
    {
        if (at < clock_.now) {
            throw std::invalid_argument("schedule: event at t=" + std::to_string(at) +
                                        " is before clock t=" + std::to_string(clock_.now));
        }
        heap_.push(Event{at, std::move(origin), next_seq_++, std::move(action)});
    }

    /// Pops and returns the next event in order. Does not touch the clock.
    Event pop()
    {
        if (heap_.empty()) {
            throw std::logic_error("pop on empty event queue");
        }
        Event e = heap_.top();
        heap_.pop();
        return e;
    }

    /// Processes every event with at <= t_end in order; `handler(event, queue)`
    /// may schedule further events. Leaves the clock at t_end.
    template <class Handler>
    std::size_t run_until(SimTime t_end, Handler&& handler)
    {
        if (t_end < clock_.now) {
            throw std::invalid_argument("run_until: t_end is before the current clock");
        }
        std::size_t processed = 0;
        while (!heap_.empty() && heap_.top().at <= t_end) {
            Event e = pop();
            clock_.now = e.at;
            handler(e, *this);
            ++processed;
        }
        clock_.now = t_end;
        return processed;
    }

    const SimClock& clock() const noexcept { return clock_; }
    SimTime now() const noexcept { return clock_.now; }
    bool empty() const noexcept { return heap_.empty(); }
    std::size_t size() const noexcept { return heap_.size(); }

  private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const
        {
            return std::tie(a.at, a.origin, a.seq) > std::tie(b.at, b.origin, b.seq);
        }
    };

    SimClock clock_;
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
};

} // namespace socsim
