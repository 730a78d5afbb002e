#pragma once

// Reduction of simulation traces into registration-time, attempt, energy and
// timer-expiry statistics, plus the CSV/JSON artifact writers.

#include <astrotimer/errors.hpp>
#include <astrotimer/nas_sim.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace astrotimer {

struct CdfPoint {
    double value = 0.0;
    double fraction = 0.0;

    friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

using Cdf = std::vector<CdfPoint>;

/// Empirical CDF evaluated at each distinct sample value.
inline Cdf empirical_cdf(std::vector<double> values) {
    Cdf out;
    if (values.empty()) return out;
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
        out.push_back({values[i], static_cast<double>(i + 1) / n});
    }
    out.back().fraction = 1.0;
    return out;
}

/// Right-continuous step evaluation of a CDF at x.
inline double evaluate(const Cdf& cdf, double x) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), x,
                                     [](double v, const CdfPoint& p) { return v < p.value; });
    return it == cdf.begin() ? 0.0 : std::prev(it)->fraction;
}

struct TimerCounts {
    std::uint64_t started = 0;
    std::uint64_t stopped = 0;
    std::uint64_t expired = 0;

    double expired_ratio() const { return started ? static_cast<double>(expired) / static_cast<double>(started) : 0.0; }

    friend bool operator==(const TimerCounts&, const TimerCounts&) = default;
};

inline std::map<std::string, TimerCounts> count_timers(const RunTrace& trace) {
    std::map<std::string, TimerCounts> counts;
    for (TimerId t : kAllTimers) counts[std::string(to_string(t))];
    for (const auto& e : trace.timer_events) {
        auto& c = counts[std::string(to_string(e.timer))];
        switch (e.transition) {
            case TimerTransition::Started: ++c.started; break;
            case TimerTransition::Stopped: ++c.stopped; break;
            case TimerTransition::Expired: ++c.expired; break;
        }
    }
    return counts;
}

struct MetricsBundle {
    Cdf registration_time_cdf;  // successful UEs only
    Cdf attempts_cdf;           // every powered-on UE
    Cdf energy_cdf_all;
    Cdf energy_cdf_registered;
    std::map<std::string, TimerCounts> timers;
    std::map<std::string, double> expired_ratio;
    double overall_expired_ratio = 0.0;
    double success_fraction = 0.0;
    std::uint64_t powered_on = 0;
    std::uint64_t registered = 0;
    std::uint64_t failed = 0;
    std::uint64_t censored = 0;
    double mean_energy = 0.0;
    double mean_attempts = 0.0;
    std::size_t runs = 0;
};

/// Pools per-UE records across seeds of one grid cell.
inline MetricsBundle reduce(std::span<const RunTrace> traces) {
    MetricsBundle m;
    m.runs = traces.size();
    if (traces.empty()) return m;
    for (const auto& t : traces) {
        if (t.num_ues != traces.front().num_ues || t.loss_probability != traces.front().loss_probability)
            throw InputError("reduce: traces come from different grid cells (num_ues or loss differ)");
    }

    std::vector<double> reg_times, attempts, energy_all, energy_reg;
    for (const auto& t : traces) {
        for (const auto& ue : t.ues) {
            if (!ue.powered_on) continue;
            ++m.powered_on;
            attempts.push_back(ue.attempts);
            energy_all.push_back(ue.energy);
            switch (ue.outcome) {
                case Outcome::Registered:
                    ++m.registered;
                    reg_times.push_back(*ue.registration_time);
                    energy_reg.push_back(ue.energy);
                    break;
                case Outcome::Failed: ++m.failed; break;
                case Outcome::Censored: ++m.censored; break;
            }
        }
        for (const auto& [name, c] : count_timers(t)) {
            auto& total = m.timers[name];
            total.started += c.started;
            total.stopped += c.stopped;
            total.expired += c.expired;
        }
    }

    std::uint64_t started = 0, expired = 0;
    for (const auto& [name, c] : m.timers) {
        m.expired_ratio[name] = c.expired_ratio();
        started += c.started;
        expired += c.expired;
    }
    m.overall_expired_ratio = started ? static_cast<double>(expired) / static_cast<double>(started) : 0.0;
    m.success_fraction = m.powered_on ? static_cast<double>(m.registered) / static_cast<double>(m.powered_on) : 0.0;
    if (!energy_all.empty()) {
        double e = 0.0, a = 0.0;
        for (double x : energy_all) e += x;
        for (double x : attempts) a += x;
        m.mean_energy = e / static_cast<double>(energy_all.size());
        m.mean_attempts = a / static_cast<double>(attempts.size());
    }
    m.registration_time_cdf = empirical_cdf(std::move(reg_times));
    m.attempts_cdf = empirical_cdf(std::move(attempts));
    m.energy_cdf_all = empirical_cdf(std::move(energy_all));
    m.energy_cdf_registered = empirical_cdf(std::move(energy_reg));
    return m;
}

// ---------------------------------------------------------------------------
// Artifact writers. Column names and units are part of the file contract.

inline std::string format_number(double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.9g", v);
    return buf.data();
}

inline constexpr const char* kUeCsvHeader = "ue_id,seed,outcome,attempts,registration_time_s,energy_j";
inline constexpr const char* kTimerCsvHeader = "timer,started,expired,stopped";

/// One row per UE per seed; registration_time_s is empty for unsuccessful UEs.
inline void write_ue_csv(std::ostream& out, std::span<const RunTrace> traces) {
    out << kUeCsvHeader << '\n';
    for (const auto& t : traces) {
        for (const auto& ue : t.ues) {
            out << ue.ue_id << ',' << t.seed << ',' << to_string(ue.outcome) << ',' << ue.attempts << ','
                << (ue.registration_time ? format_number(*ue.registration_time) : std::string{}) << ','
                << format_number(ue.energy) << '\n';
        }
    }
}

inline void write_timer_csv(std::ostream& out, const MetricsBundle& m) {
    out << kTimerCsvHeader << '\n';
    for (const auto& [name, c] : m.timers)
        out << name << ',' << c.started << ',' << c.expired << ',' << c.stopped << '\n';
}

inline nlohmann::json cdf_to_json(const Cdf& cdf) {
    auto arr = nlohmann::json::array();
    for (const auto& p : cdf) arr.push_back({p.value, p.fraction});
    return arr;
}

/// Summary numbers of a cell; `cell` carries the full parameter set.
inline nlohmann::json summary_json(const nlohmann::json& cell, const MetricsBundle& m) {
    nlohmann::json ratios = nlohmann::json::object();
    for (const auto& [name, r] : m.expired_ratio) ratios[name] = r;
    return {{"cell", cell},
            {"runs", m.runs},
            {"powered_on", m.powered_on},
            {"registered", m.registered},
            {"failed", m.failed},
            {"censored", m.censored},
            {"success_fraction", m.success_fraction},
            {"expired_ratio", ratios},
            {"overall_expired_ratio", m.overall_expired_ratio},
            {"mean_energy_j", m.mean_energy},
            {"mean_attempts", m.mean_attempts}};
}

}  // namespace astrotimer
