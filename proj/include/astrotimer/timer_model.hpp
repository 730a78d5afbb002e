#pragma once

// Closed-form sizing of NAS watchdog and backoff timers over a multi-hop path.
//
// A path runs from the origin (the entity running the timer, index 0) to the
// responder (index N). Every node is modelled as a single-server queue with a
// steady-state sojourn term and a burst backlog term; every hop adds its
// propagation delay. A timer covering R message rounds is
//
//   T = R * (sum of link delays + sum of intermediate node delays)
//     + (floor(R/2) + 1) * (alpha * D_origin + beta * D_responder)
//
// All quantities are SI doubles: seconds and jobs per second.

#include <astrotimer/errors.hpp>

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace astrotimer {

using Seconds = double;
using PerSecond = double;

struct NodeLoadProfile {
    PerSecond service_rate = 1.0;    // mu
    PerSecond steady_arrival = 0.0;  // lambda_ss
    PerSecond total_arrival = 0.0;   // lambda (steady + burst)
    Seconds burst_window = 0.0;      // t_brs
};

struct PathSpec {
    std::vector<NodeLoadProfile> nodes;  // 0 = origin, back() = responder
    std::vector<Seconds> link_delays;    // link_delays[i] joins nodes i and i+1

    std::size_t hops() const noexcept { return link_delays.size(); }
};

struct EndpointWeights {
    double alpha = 0.0;  // origin
    double beta = 0.0;   // responder
};

enum class TimerKind { Watchdog, Backoff, Periodic };

inline std::string_view to_string(TimerKind kind) noexcept;

struct SizedTimer {
    std::string name;
    TimerKind kind = TimerKind::Watchdog;
    unsigned rounds = 0;
    Seconds value = 0.0;
};

struct SizedTimerSuite {
    SizedTimer t3510;
    SizedTimer t3511;
    SizedTimer t3550;
    SizedTimer t3560;
};

/// Burst delay together with whether the unphysical negative backlog was clamped.
struct BurstDelay {
    Seconds delay = 0.0;
    bool clamped = false;
};

// ---------------------------------------------------------------------------
// Per-node delay terms

inline void validate(const NodeLoadProfile& p, std::size_t index = 0) {
    if (!(std::isfinite(p.service_rate) && p.service_rate > 0.0))
        throw InputError("node " + std::to_string(index) + ": service rate must be finite and > 0");
    if (!(std::isfinite(p.steady_arrival) && p.steady_arrival >= 0.0))
        throw InputError("node " + std::to_string(index) + ": steady arrival must be finite and >= 0");
    if (!(std::isfinite(p.total_arrival) && p.total_arrival >= p.steady_arrival))
        throw InputError("node " + std::to_string(index) +
                         ": total arrival must be finite and >= steady arrival");
    if (!(std::isfinite(p.burst_window) && p.burst_window >= 0.0))
        throw InputError("node " + std::to_string(index) + ": burst window must be finite and >= 0");
}

/// M/M/1 sojourn 1/(mu - lambda_ss). Throws UnstableQueueError when mu <= lambda_ss.
inline Seconds steady_state_delay(const NodeLoadProfile& p, std::size_t index = 0) {
    if (!(p.service_rate > p.steady_arrival))
        throw UnstableQueueError(index, p.service_rate, p.steady_arrival);
    return 1.0 / (p.service_rate - p.steady_arrival);
}

/// Burst arrival rate: zero below saturation, otherwise the non-steady share of arrivals.
inline PerSecond burst_arrival_rate(const NodeLoadProfile& p) noexcept {
    if (p.total_arrival < p.service_rate) return 0.0;
    return p.total_arrival - p.steady_arrival;
}

inline BurstDelay burst_delay_detail(const NodeLoadProfile& p) noexcept {
    const PerSecond burst = burst_arrival_rate(p);
    if (burst == 0.0) return {};
    if (burst < p.service_rate) return {0.0, true};
    return {(burst - p.service_rate) * p.burst_window / p.service_rate, false};
}

/// Backlog drain time (lambda_brs - mu) * t_brs / mu, never negative.
inline Seconds burst_delay(const NodeLoadProfile& p) noexcept { return burst_delay_detail(p).delay; }

inline Seconds aggregated_delay(const NodeLoadProfile& p, std::size_t index = 0) {
    return steady_state_delay(p, index) + burst_delay(p);
}

// ---------------------------------------------------------------------------
// Path-level sizing

inline void validate(const PathSpec& path) {
    if (path.nodes.size() < 2) throw InputError("path needs an origin and a responder");
    if (path.link_delays.size() + 1 != path.nodes.size())
        throw InputError("path has " + std::to_string(path.nodes.size()) + " nodes but " +
                         std::to_string(path.link_delays.size()) + " link delays");
    for (std::size_t i = 0; i < path.link_delays.size(); ++i) {
        const Seconds d = path.link_delays[i];
        if (!(std::isfinite(d) && d >= 0.0))
            throw InputError("link " + std::to_string(i) + " delay must be finite and >= 0");
    }
}

inline void validate(const EndpointWeights& w) {
    if (!(std::isfinite(w.alpha) && w.alpha >= 0.0 && std::isfinite(w.beta) && w.beta >= 0.0))
        throw InputError("endpoint weights must be finite and >= 0");
}

/// The two round-independent constants of the sizing formula:
/// T(R) = R * one_way + (floor(R/2) + 1) * endpoint.
struct TimerTerms {
    Seconds one_way = 0.0;   // link delays plus intermediate node delays
    Seconds endpoint = 0.0;  // alpha * D_origin + beta * D_responder
};

/// One pass over the path; O(N).
inline TimerTerms timer_terms(const PathSpec& path, const EndpointWeights& w) {
    validate(path);
    validate(w);
    const std::size_t last = path.nodes.size() - 1;
    TimerTerms terms;
    for (std::size_t i = 0; i <= last; ++i) {
        const NodeLoadProfile& node = path.nodes[i];
        validate(node, i);
        const Seconds agg = aggregated_delay(node, i);
        if (i == 0)
            terms.endpoint += w.alpha * agg;
        else if (i == last)
            terms.endpoint += w.beta * agg;
        else
            terms.one_way += agg;
        if (i < last) terms.one_way += path.link_delays[i];
    }
    return terms;
}

inline Seconds timer_value(const TimerTerms& terms, unsigned rounds) noexcept {
    return static_cast<double>(rounds) * terms.one_way +
           static_cast<double>(rounds / 2 + 1) * terms.endpoint;
}

inline Seconds size_timer(const PathSpec& path, unsigned rounds, const EndpointWeights& w) {
    return timer_value(timer_terms(path, w), rounds);
}

/// Per-term view of a sizing, for operator reports.
struct TimerBreakdown {
    unsigned rounds = 0;
    Seconds propagation_sum = 0.0;
    std::vector<Seconds> intermediate_delays;  // D_agg of nodes 1..N-1
    Seconds origin_delay = 0.0;                // D_agg of node 0 (unweighted)
    Seconds responder_delay = 0.0;             // D_agg of node N (unweighted)
    TimerTerms terms;
    Seconds value = 0.0;
    std::vector<std::size_t> clamped_nodes;  // nodes whose burst backlog was clamped to 0
};

inline TimerBreakdown explain_timer(const PathSpec& path, unsigned rounds, const EndpointWeights& w) {
    TimerBreakdown out;
    out.rounds = rounds;
    out.terms = timer_terms(path, w);
    out.value = timer_value(out.terms, rounds);
    const std::size_t last = path.nodes.size() - 1;
    for (Seconds d : path.link_delays) out.propagation_sum += d;
    for (std::size_t i = 0; i <= last; ++i) {
        const Seconds agg = aggregated_delay(path.nodes[i], i);
        if (burst_delay_detail(path.nodes[i]).clamped) out.clamped_nodes.push_back(i);
        if (i == 0)
            out.origin_delay = agg;
        else if (i == last)
            out.responder_delay = agg;
        else
            out.intermediate_delays.push_back(agg);
    }
    return out;
}

inline PathSpec reversed(const PathSpec& path) {
    return {{path.nodes.rbegin(), path.nodes.rend()}, {path.link_delays.rbegin(), path.link_delays.rend()}};
}

inline EndpointWeights swapped(const EndpointWeights& w) noexcept { return {w.beta, w.alpha}; }

/// Registration timers for a UE -> AMF path. T3550/T3560 run on the AMF, so they
/// are sized on the reversed path with the weights following their nodes.
inline SizedTimerSuite size_registration_suite(const PathSpec& ue_to_amf, const EndpointWeights& w) {
    const TimerTerms ue_side = timer_terms(ue_to_amf, w);
    const TimerTerms amf_side = timer_terms(reversed(ue_to_amf), swapped(w));
    SizedTimerSuite suite;
    suite.t3510 = {"T3510", TimerKind::Watchdog, 5, timer_value(ue_side, 5)};
    suite.t3511 = {"T3511", TimerKind::Backoff, 0, timer_value(ue_side, 0)};
    suite.t3550 = {"T3550", TimerKind::Watchdog, 2, timer_value(amf_side, 2)};
    suite.t3560 = {"T3560", TimerKind::Watchdog, 2, timer_value(amf_side, 2)};
    return suite;
}

inline std::string_view to_string(TimerKind kind) noexcept {
    switch (kind) {
        case TimerKind::Watchdog: return "watchdog";
        case TimerKind::Backoff: return "backoff";
        case TimerKind::Periodic: return "periodic";
    }
    return "unknown";
}

}  // namespace astrotimer
