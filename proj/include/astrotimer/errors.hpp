#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace astrotimer {

/// Malformed caller input: bad path shape, negative delay, invalid config.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A node cannot sustain its steady arrival rate (service rate <= steady arrivals).
class UnstableQueueError : public std::domain_error {
public:
    UnstableQueueError(std::size_t node_index, double service_rate, double steady_arrival)
        : std::domain_error("unstable queue at node " + std::to_string(node_index) +
                            ": service rate " + std::to_string(service_rate) +
                            "/s <= steady arrival " + std::to_string(steady_arrival) + "/s"),
          node_index_(node_index) {}

    std::size_t node_index() const noexcept { return node_index_; }

private:
    std::size_t node_index_;
};

/// No route connects the requested origin and responder.
class DisconnectedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace astrotimer
