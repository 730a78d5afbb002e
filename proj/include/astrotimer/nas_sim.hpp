#pragma once

// Discrete-event simulation of the 5G NAS initial registration call flow
// between many UEs and one AMF across a multi-hop satellite path.
//
//   UE                          AMF
//   Registration Request  --->        (T3510 starts at the UE)
//                         <---  Authentication Request  (T3560 starts)
//   Authentication Resp.  --->
//                         <---  Registration Accept     (T3550 starts)
//   Registration Complete --->
//
// Every uplink message costs one exponential service at the AMF, which is a
// FIFO single server shared with Poisson background work. Relay satellites add
// a fixed delay. Each end-to-end transmission is lost independently.

#include <astrotimer/errors.hpp>
#include <astrotimer/event_queue.hpp>
#include <astrotimer/rng.hpp>
#include <astrotimer/timer_model.hpp>

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace astrotimer {

enum class TimerId : std::uint8_t { T3510, T3511, T3550, T3560 };
inline constexpr TimerId kAllTimers[] = {TimerId::T3510, TimerId::T3511, TimerId::T3550, TimerId::T3560};

inline std::string_view to_string(TimerId t) noexcept {
    switch (t) {
        case TimerId::T3510: return "T3510";
        case TimerId::T3511: return "T3511";
        case TimerId::T3550: return "T3550";
        case TimerId::T3560: return "T3560";
    }
    return "?";
}

enum class MessageKind : std::uint8_t {
    RegistrationRequest,
    AuthenticationRequest,
    AuthenticationResponse,
    RegistrationAccept,
    RegistrationComplete,
};

inline std::string_view to_string(MessageKind k) noexcept {
    switch (k) {
        case MessageKind::RegistrationRequest: return "RegistrationRequest";
        case MessageKind::AuthenticationRequest: return "AuthenticationRequest";
        case MessageKind::AuthenticationResponse: return "AuthenticationResponse";
        case MessageKind::RegistrationAccept: return "RegistrationAccept";
        case MessageKind::RegistrationComplete: return "RegistrationComplete";
    }
    return "?";
}

inline constexpr bool is_uplink(MessageKind k) noexcept {
    return k == MessageKind::RegistrationRequest || k == MessageKind::AuthenticationResponse ||
           k == MessageKind::RegistrationComplete;
}

struct NasMessage {
    MessageKind kind = MessageKind::RegistrationRequest;
    std::uint32_t ue = 0;
    std::uint32_t attempt = 1;
};

struct EnergyModel {
    double p_active = 1.0;  // W while an attempt is in flight
    double p_idle = 0.05;   // W while backing off
};

struct SimConfig {
    std::uint32_t num_ues = 1;
    double loss_probability = 0.0;
    std::uint32_t max_attempts = 5;
    NodeLoadProfile amf;  // only service_rate drives the simulated server
    Seconds burst_window = 1e-3;
    double background_load_fraction = 0.8;
    std::uint32_t nas_retransmit_limit = 4;
    EnergyModel energy;
    Seconds horizon = 3600.0;
    std::uint64_t seed = 1;
    Seconds ue_processing_delay = 0.0;
    Seconds queue_sample_interval = 0.1;
    // With no UEs, stop once this many background jobs completed (0 = unused).
    std::uint64_t background_job_limit = 0;
    bool record_messages = false;
};

enum class UeState : std::uint8_t { Off, Registering, Backoff, Registered, Failed };

struct UeFsm {
    UeState state = UeState::Off;
    std::uint32_t attempts_used = 0;
    std::uint64_t t3510 = 0;  // running timer token, 0 when idle
    std::uint64_t t3511 = 0;
    Seconds active_time = 0.0;
    Seconds idle_time = 0.0;
    Seconds state_since = 0.0;
    Seconds power_on = 0.0;
};

enum class AmfProcedure : std::uint8_t { None, AwaitingAuthResponse, AwaitingComplete, Done, Cancelled, Aborted };

struct AmfContext {
    std::uint32_t attempt = 0;
    AmfProcedure state = AmfProcedure::None;
    std::uint64_t timer = 0;  // token of the one running watchdog
    TimerId timer_id = TimerId::T3560;
    std::uint32_t t3560_retransmits = 0;
    std::uint32_t t3550_retransmits = 0;
};

enum class Outcome : std::uint8_t { Registered, Failed, Censored };

inline std::string_view to_string(Outcome o) noexcept {
    switch (o) {
        case Outcome::Registered: return "registered";
        case Outcome::Failed: return "failed";
        case Outcome::Censored: return "censored";
    }
    return "?";
}

struct UeRecord {
    std::uint32_t ue_id = 0;
    Outcome outcome = Outcome::Censored;
    std::uint32_t attempts = 0;
    std::optional<Seconds> registration_time;  // power-on to AMF completion, success only
    Seconds active_time = 0.0;
    Seconds idle_time = 0.0;
    double energy = 0.0;  // J
    bool powered_on = false;
};

enum class TimerTransition : std::uint8_t { Started, Stopped, Expired };

struct TimerEvent {
    Seconds time = 0.0;
    TimerId timer = TimerId::T3510;
    std::uint32_t ue = 0;
    TimerTransition transition = TimerTransition::Started;
};

struct QueueSample {
    Seconds time = 0.0;
    std::size_t length = 0;  // jobs waiting plus the one in service
};

enum class MessageFate : std::uint8_t { Sent, Dropped, Delivered };

struct MessageRecord {
    Seconds time = 0.0;
    NasMessage message;
    MessageFate fate = MessageFate::Sent;
};

struct MessageCounters {
    std::uint64_t sent = 0;
    std::uint64_t dropped = 0;
};

struct AmfStats {
    std::uint64_t background_served = 0;
    double background_sojourn_sum = 0.0;
    std::uint64_t nas_served = 0;
    double nas_sojourn_sum = 0.0;
    std::uint64_t stale_discarded = 0;
    std::size_t max_queue_length = 0;

    double mean_background_sojourn() const {
        return background_served ? background_sojourn_sum / static_cast<double>(background_served) : 0.0;
    }
};

struct RunTrace {
    std::uint32_t num_ues = 0;
    double loss_probability = 0.0;
    std::uint64_t seed = 0;
    std::vector<UeRecord> ues;
    std::vector<TimerEvent> timer_events;
    std::vector<QueueSample> queue_samples;
    std::vector<MessageRecord> messages;  // only with SimConfig::record_messages
    MessageCounters transmissions;
    AmfStats amf;
    bool horizon_exceeded = false;
    Seconds end_time = 0.0;
};

/// Fixed one-way UE -> AMF latency: link delays plus relay steady-state delays.
inline Seconds one_way_delay(const PathSpec& path) {
    validate(path);
    Seconds total = 0.0;
    for (Seconds d : path.link_delays) total += d;
    for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) total += steady_state_delay(path.nodes[i], i);
    return total;
}

inline void validate(const SimConfig& c) {
    if (!(c.loss_probability >= 0.0 && c.loss_probability <= 1.0))
        throw InputError("loss probability must be in [0, 1]");
    if (c.max_attempts == 0) throw InputError("max_attempts must be >= 1");
    if (!(std::isfinite(c.amf.service_rate) && c.amf.service_rate > 0.0))
        throw InputError("AMF service rate must be > 0");
    if (!(c.background_load_fraction >= 0.0 && c.background_load_fraction < 1.0))
        throw InputError("background load fraction must be in [0, 1)");
    if (!(std::isfinite(c.burst_window) && c.burst_window >= 0.0)) throw InputError("burst window must be >= 0");
    if (!(std::isfinite(c.horizon) && c.horizon > 0.0)) throw InputError("horizon must be > 0");
    if (!(c.ue_processing_delay >= 0.0)) throw InputError("UE processing delay must be >= 0");
    if (!(c.queue_sample_interval > 0.0)) throw InputError("queue sample interval must be > 0");
    if (!(c.energy.p_active >= 0.0 && c.energy.p_idle >= 0.0)) throw InputError("power draw must be >= 0");
}

inline void validate(const SizedTimerSuite& t) {
    for (const SizedTimer* s : {&t.t3510, &t.t3511, &t.t3550, &t.t3560}) {
        if (!(std::isfinite(s->value) && s->value > 0.0))
            throw InputError("timer " + s->name + " must be finite and > 0 for simulation");
    }
}

/// Independent loss decisions on a dedicated stream.
class LossChannel {
public:
    LossChannel(double probability, std::uint64_t seed) : probability_(probability), rng_(seed, StreamId::Loss) {}

    bool drop() noexcept { return probability_ > 0.0 && rng_.bernoulli(probability_); }

private:
    double probability_;
    RandomStream rng_;
};

/// Power-on instants of every UE, uniform over the burst window.
inline std::vector<Seconds> schedule_power_on(const SimConfig& config) {
    RandomStream rng(config.seed, StreamId::PowerOn);
    std::vector<Seconds> times(config.num_ues);
    for (auto& t : times) t = rng.uniform(0.0, config.burst_window);
    return times;
}

namespace detail {

struct Payload {
    NasMessage message;
    TimerId timer = TimerId::T3510;
    std::uint64_t token = 0;
};

struct AmfJob {
    bool background = false;
    NasMessage message;
    Seconds arrival = 0.0;
};

class RegistrationSimulator {
public:
    RegistrationSimulator(const SimConfig& config, const SizedTimerSuite& timers, const PathSpec& path)
        : config_(config),
          timers_(timers),
          one_way_(one_way_delay(path)),
          loss_(config.loss_probability, config.seed),
          service_rng_(config.seed, StreamId::Service),
          background_rng_(config.seed, StreamId::Background),
          ues_(config.num_ues),
          contexts_(config.num_ues),
          records_(config.num_ues) {
        trace_.num_ues = config.num_ues;
        trace_.loss_probability = config.loss_probability;
        trace_.seed = config.seed;
        unresolved_ = config.num_ues;
    }

    RunTrace run() {
        const std::vector<Seconds> power_on = schedule_power_on(config_);
        for (std::uint32_t ue = 0; ue < config_.num_ues; ++ue)
            events_.push(power_on[ue], EventKind::UePowerOn, Payload{{MessageKind::RegistrationRequest, ue, 0}});
        background_rate_ = config_.background_load_fraction * config_.amf.service_rate;
        if (background_rate_ > 0.0)
            events_.push(background_rng_.exponential(background_rate_), EventKind::BackgroundArrival, {});

        Seconds end = 0.0;
        while (!done() && !events_.empty()) {
            if (events_.peek().time > config_.horizon) {
                end = config_.horizon;
                trace_.horizon_exceeded = unresolved_ > 0;
                break;
            }
            const auto event = events_.pop();
            end = event.time;
            dispatch(event);
        }
        finish(end);
        return std::move(trace_);
    }

private:
    using Event = SimEvent<Payload>;

    bool done() const {
        if (config_.num_ues > 0) return unresolved_ == 0;
        if (config_.background_job_limit > 0) return trace_.amf.background_served >= config_.background_job_limit;
        return true;
    }

    Seconds now() const { return events_.now(); }

    void dispatch(const Event& e) {
        switch (e.kind) {
            case EventKind::UePowerOn: power_on(e.payload.message.ue); break;
            case EventKind::BackgroundArrival:
                enqueue({true, {}, now()});
                events_.push(now() + background_rng_.exponential(background_rate_), EventKind::BackgroundArrival,
                             {});
                break;
            case EventKind::MessageArrival:
                log(e.payload.message, MessageFate::Delivered);
                if (is_uplink(e.payload.message.kind))
                    enqueue({false, e.payload.message, now()});
                else
                    ue_receive(e.payload.message);
                break;
            case EventKind::ServiceComplete: service_complete(); break;
            case EventKind::TimerExpiry: timer_expiry(e.payload); break;
        }
    }

    // -- timers --------------------------------------------------------------

    Seconds duration(TimerId t) const {
        switch (t) {
            case TimerId::T3510: return timers_.t3510.value;
            case TimerId::T3511: return timers_.t3511.value;
            case TimerId::T3550: return timers_.t3550.value;
            case TimerId::T3560: return timers_.t3560.value;
        }
        return 0.0;
    }

    std::uint64_t start_timer(TimerId t, std::uint32_t ue) {
        const std::uint64_t token = ++last_token_;
        trace_.timer_events.push_back({now(), t, ue, TimerTransition::Started});
        Payload p;
        p.message.ue = ue;
        p.timer = t;
        p.token = token;
        events_.push(now() + duration(t), EventKind::TimerExpiry, p);
        return token;
    }

    void stop_timer(std::uint64_t& token, TimerId t, std::uint32_t ue, Seconds at) {
        if (token == 0) return;
        trace_.timer_events.push_back({at, t, ue, TimerTransition::Stopped});
        token = 0;
    }

    void timer_expiry(const Payload& p) {
        const std::uint32_t ue = p.message.ue;
        switch (p.timer) {
            case TimerId::T3510:
                if (ues_[ue].t3510 != p.token) return;
                ues_[ue].t3510 = 0;
                break;
            case TimerId::T3511:
                if (ues_[ue].t3511 != p.token) return;
                ues_[ue].t3511 = 0;
                break;
            case TimerId::T3550:
            case TimerId::T3560:
                if (contexts_[ue].timer != p.token) return;
                contexts_[ue].timer = 0;
                break;
        }
        trace_.timer_events.push_back({now(), p.timer, ue, TimerTransition::Expired});
        switch (p.timer) {
            case TimerId::T3510: on_t3510_expiry(ue); break;
            case TimerId::T3511: on_t3511_expiry(ue); break;
            case TimerId::T3550:
            case TimerId::T3560: on_amf_watchdog_expiry(ue, p.timer); break;
        }
    }

    // -- transport -----------------------------------------------------------

    void log(const NasMessage& m, MessageFate fate) {
        if (config_.record_messages) trace_.messages.push_back({now(), m, fate});
    }

    void transmit(const NasMessage& m, Seconds extra_delay = 0.0) {
        ++trace_.transmissions.sent;
        log(m, MessageFate::Sent);
        if (loss_.drop()) {
            ++trace_.transmissions.dropped;
            log(m, MessageFate::Dropped);
            return;
        }
        Payload p;
        p.message = m;
        events_.push(now() + extra_delay + one_way_, EventKind::MessageArrival, p);
    }

    // -- UE side -------------------------------------------------------------

    void enter(std::uint32_t ue, UeState next) {
        UeFsm& u = ues_[ue];
        const Seconds spent = now() - u.state_since;
        if (u.state == UeState::Registering) u.active_time += spent;
        if (u.state == UeState::Backoff) u.idle_time += spent;
        u.state = next;
        u.state_since = now();
    }

    void power_on(std::uint32_t ue) {
        ues_[ue].power_on = now();
        ues_[ue].state_since = now();
        records_[ue].powered_on = true;
        start_attempt(ue);
    }

    void start_attempt(std::uint32_t ue) {
        UeFsm& u = ues_[ue];
        ++u.attempts_used;
        enter(ue, UeState::Registering);
        u.t3510 = start_timer(TimerId::T3510, ue);
        transmit({MessageKind::RegistrationRequest, ue, u.attempts_used});
    }

    void ue_receive(const NasMessage& m) {
        UeFsm& u = ues_[m.ue];
        if (m.attempt != u.attempts_used) return;  // belongs to an abandoned attempt
        switch (m.kind) {
            case MessageKind::AuthenticationRequest:
                if (u.state == UeState::Registering)
                    transmit({MessageKind::AuthenticationResponse, m.ue, m.attempt}, config_.ue_processing_delay);
                break;
            case MessageKind::RegistrationAccept:
                if (u.state == UeState::Registering) {
                    stop_timer(u.t3510, TimerId::T3510, m.ue, now());
                    enter(m.ue, UeState::Registered);
                }
                // A retransmitted accept is acknowledged again.
                if (u.state == UeState::Registered)
                    transmit({MessageKind::RegistrationComplete, m.ue, m.attempt}, config_.ue_processing_delay);
                break;
            default: break;
        }
    }

    void on_t3510_expiry(std::uint32_t ue) {
        UeFsm& u = ues_[ue];
        cancel_amf_context(ue, u.attempts_used);
        if (u.attempts_used >= config_.max_attempts) {
            enter(ue, UeState::Failed);
            resolve(ue, Outcome::Failed);
            return;
        }
        enter(ue, UeState::Backoff);
        u.t3511 = start_timer(TimerId::T3511, ue);
    }

    void on_t3511_expiry(std::uint32_t ue) {
        if (ues_[ue].attempts_used >= config_.max_attempts) {
            enter(ue, UeState::Failed);
            resolve(ue, Outcome::Failed);
            return;
        }
        start_attempt(ue);
    }

    void resolve(std::uint32_t ue, Outcome outcome) {
        UeRecord& r = records_[ue];
        if (r.outcome != Outcome::Censored) return;
        r.outcome = outcome;
        if (outcome == Outcome::Registered) r.registration_time = now() - ues_[ue].power_on;
        --unresolved_;
    }

    // -- AMF side ------------------------------------------------------------

    void enqueue(AmfJob job) {
        queue_.push_back(std::move(job));
        sample_queue();
        if (!busy_) start_service();
    }

    void start_service() {
        busy_ = true;
        events_.push(now() + service_rng_.exponential(config_.amf.service_rate), EventKind::ServiceComplete, {});
    }

    void sample_queue() {
        const std::size_t length = queue_.size();
        if (length > trace_.amf.max_queue_length) trace_.amf.max_queue_length = length;
        if (now() >= next_sample_) {
            trace_.queue_samples.push_back({now(), length});
            next_sample_ = now() + config_.queue_sample_interval;
        }
    }

    void service_complete() {
        AmfJob job = std::move(queue_.front());
        queue_.pop_front();
        busy_ = false;
        const Seconds sojourn = now() - job.arrival;
        if (job.background) {
            ++trace_.amf.background_served;
            trace_.amf.background_sojourn_sum += sojourn;
        } else {
            ++trace_.amf.nas_served;
            trace_.amf.nas_sojourn_sum += sojourn;
            amf_handle(job.message);
        }
        sample_queue();
        if (!queue_.empty()) start_service();
    }

    void amf_handle(const NasMessage& m) {
        AmfContext& c = contexts_[m.ue];
        switch (m.kind) {
            case MessageKind::RegistrationRequest:
                if (c.state != AmfProcedure::None && c.attempt >= m.attempt) break;
                stop_timer(c.timer, c.timer_id, m.ue, now());  // superseded attempt
                c = AmfContext{};
                c.attempt = m.attempt;
                c.state = AmfProcedure::AwaitingAuthResponse;
                c.timer_id = TimerId::T3560;
                c.timer = start_timer(TimerId::T3560, m.ue);
                transmit({MessageKind::AuthenticationRequest, m.ue, m.attempt});
                return;
            case MessageKind::AuthenticationResponse:
                if (c.attempt != m.attempt || c.state != AmfProcedure::AwaitingAuthResponse) break;
                stop_timer(c.timer, TimerId::T3560, m.ue, now());
                c.state = AmfProcedure::AwaitingComplete;
                c.timer_id = TimerId::T3550;
                c.timer = start_timer(TimerId::T3550, m.ue);
                transmit({MessageKind::RegistrationAccept, m.ue, m.attempt});
                return;
            case MessageKind::RegistrationComplete:
                if (c.attempt != m.attempt || c.state != AmfProcedure::AwaitingComplete) break;
                stop_timer(c.timer, TimerId::T3550, m.ue, now());
                c.state = AmfProcedure::Done;
                resolve(m.ue, Outcome::Registered);
                return;
            default: break;
        }
        ++trace_.amf.stale_discarded;
    }

    /// The UE abandoned `attempt`: drop matching AMF state and remember the
    /// attempt so late requests for it are discarded.
    void cancel_amf_context(std::uint32_t ue, std::uint32_t attempt) {
        AmfContext& c = contexts_[ue];
        if (c.state != AmfProcedure::None && c.attempt > attempt) return;
        stop_timer(c.timer, c.timer_id, ue, now());
        if (c.attempt != attempt) c = AmfContext{};
        c.attempt = attempt;
        c.state = AmfProcedure::Cancelled;
    }

    void on_amf_watchdog_expiry(std::uint32_t ue, TimerId t) {
        AmfContext& c = contexts_[ue];
        std::uint32_t& retransmits = t == TimerId::T3560 ? c.t3560_retransmits : c.t3550_retransmits;
        if (retransmits < config_.nas_retransmit_limit) {
            ++retransmits;
            c.timer = start_timer(t, ue);
            transmit({t == TimerId::T3560 ? MessageKind::AuthenticationRequest : MessageKind::RegistrationAccept, ue,
                      c.attempt});
            return;
        }
        c.state = AmfProcedure::Aborted;
        // The UE may already consider itself registered, but the network never
        // saw the completion.
        if (t == TimerId::T3550 && ues_[ue].state == UeState::Registered) resolve(ue, Outcome::Failed);
    }

    // -- wrap-up -------------------------------------------------------------

    void finish(Seconds end) {
        trace_.end_time = end;
        for (std::uint32_t ue = 0; ue < config_.num_ues; ++ue) {
            UeFsm& u = ues_[ue];
            stop_timer(u.t3510, TimerId::T3510, ue, end);
            stop_timer(u.t3511, TimerId::T3511, ue, end);
            stop_timer(contexts_[ue].timer, contexts_[ue].timer_id, ue, end);
            if (u.state == UeState::Registering) u.active_time += end - u.state_since;
            if (u.state == UeState::Backoff) u.idle_time += end - u.state_since;
            u.state_since = end;

            UeRecord& r = records_[ue];
            r.ue_id = ue;
            r.attempts = u.attempts_used;
            r.active_time = u.active_time;
            r.idle_time = u.idle_time;
            r.energy = config_.energy.p_active * u.active_time + config_.energy.p_idle * u.idle_time;
        }
        trace_.ues = std::move(records_);
    }

    SimConfig config_;
    SizedTimerSuite timers_;
    Seconds one_way_;
    LossChannel loss_;
    RandomStream service_rng_;
    RandomStream background_rng_;
    double background_rate_ = 0.0;

    EventQueue<Payload> events_;
    std::vector<UeFsm> ues_;
    std::vector<AmfContext> contexts_;
    std::vector<UeRecord> records_;
    std::deque<AmfJob> queue_;
    bool busy_ = false;
    Seconds next_sample_ = 0.0;
    std::uint64_t last_token_ = 0;
    std::uint32_t unresolved_ = 0;
    RunTrace trace_;
};

}  // namespace detail

/// Simulates until every UE has an outcome or the horizon is reached. Identical
/// inputs give identical traces.
inline RunTrace run_scenario(const SimConfig& config, const SizedTimerSuite& timers, const PathSpec& path) {
    validate(config);
    validate(timers);
    return detail::RegistrationSimulator(config, timers, path).run();
}

}  // namespace astrotimer
