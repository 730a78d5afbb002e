#pragma once

// Scenario grids: (UE count x loss x timer mode) cells, each simulated over a
// list of seeds and reduced into one artifact directory.

#include <astrotimer/errors.hpp>
#include <astrotimer/metrics.hpp>
#include <astrotimer/nas_sim.hpp>
#include <astrotimer/timer_model.hpp>
#include <astrotimer/topology.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace astrotimer {

enum class TimerModeKind { Astro, Fixed3GPP };

inline std::string_view to_string(TimerModeKind m) noexcept {
    return m == TimerModeKind::Astro ? "astro" : "3gpp";
}

inline TimerModeKind parse_mode(const std::string& s) {
    if (s == "astro") return TimerModeKind::Astro;
    if (s == "3gpp") return TimerModeKind::Fixed3GPP;
    throw InputError("unknown timer mode '" + s + "' (expected astro or 3gpp)");
}

/// 3GPP MEO/GEO reference values. T3550/T3560 have no published satellite
/// value; the default applies the 1.8x terrestrial-to-satellite factor to 6 s.
struct Fixed3GppTimers {
    Seconds t3510 = 27.0;
    Seconds t3511 = 18.0;
    Seconds t3550 = 6.0 * 1.8;
    Seconds t3560 = 6.0 * 1.8;
    Seconds t3502 = 720.0;  // carried for completeness; the simulator stops at the attempt cap

    SizedTimerSuite suite() const {
        return {{"T3510", TimerKind::Watchdog, 5, t3510},
                {"T3511", TimerKind::Backoff, 0, t3511},
                {"T3550", TimerKind::Watchdog, 2, t3550},
                {"T3560", TimerKind::Watchdog, 2, t3560}};
    }
};

struct ScenarioGrid {
    std::vector<std::uint32_t> ue_counts{3000, 4000, 5000};
    std::vector<double> loss_probs{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<TimerModeKind> modes{TimerModeKind::Astro, TimerModeKind::Fixed3GPP};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    EndpointWeights weights{0.0, 0.64};
    Fixed3GppTimers fixed;
    SimConfig sim;  // num_ues, loss, seed and amf are filled per run
    std::filesystem::path snapshot;
    std::string origin = "ue";
    std::string responder = "amf";
    std::filesystem::path output_dir = "artifacts";
    unsigned workers = 1;
};

inline void validate(const ScenarioGrid& g) {
    if (g.ue_counts.empty() || g.loss_probs.empty() || g.modes.empty() || g.seeds.empty())
        throw InputError("grid lists must be nonempty");
    for (double p : g.loss_probs)
        if (!(p >= 0.0 && p <= 1.0)) throw InputError("loss probability " + format_number(p) + " not in [0, 1]");
    validate(g.weights);
    if (g.workers == 0) throw InputError("workers must be >= 1");
}

/// Reads the experiment config. Relative snapshot paths resolve against the
/// config file's directory.
inline ScenarioGrid load_grid_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot open config '" + file.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config '" + file.string() + "': " + e.what());
    }
    ScenarioGrid g;
    try {
        if (j.contains("snapshot")) {
            std::filesystem::path snap = j["snapshot"].get<std::string>();
            g.snapshot = snap.is_relative() ? file.parent_path() / snap : snap;
        }
        g.origin = j.value("origin", g.origin);
        g.responder = j.value("responder", g.responder);
        g.weights.alpha = j.value("alpha", g.weights.alpha);
        g.weights.beta = j.value("beta", g.weights.beta);
        if (j.contains("ue_counts")) g.ue_counts = j["ue_counts"].get<std::vector<std::uint32_t>>();
        if (j.contains("loss_probs")) g.loss_probs = j["loss_probs"].get<std::vector<double>>();
        if (j.contains("seeds")) g.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("modes")) {
            g.modes.clear();
            for (const auto& m : j["modes"]) g.modes.push_back(parse_mode(m.get<std::string>()));
        }
        if (j.contains("output_dir")) g.output_dir = j["output_dir"].get<std::string>();
        g.workers = j.value("workers", g.workers);
        if (j.contains("fixed_3gpp")) {
            const auto& f = j["fixed_3gpp"];
            g.fixed.t3510 = f.value("t3510", g.fixed.t3510);
            g.fixed.t3511 = f.value("t3511", g.fixed.t3511);
            g.fixed.t3550 = f.value("t3550", g.fixed.t3550);
            g.fixed.t3560 = f.value("t3560", g.fixed.t3560);
            g.fixed.t3502 = f.value("t3502", g.fixed.t3502);
        }
        if (j.contains("sim")) {
            const auto& s = j["sim"];
            g.sim.max_attempts = s.value("max_attempts", g.sim.max_attempts);
            g.sim.burst_window = s.value("burst_window", g.sim.burst_window);
            g.sim.background_load_fraction = s.value("background_load_fraction", g.sim.background_load_fraction);
            g.sim.nas_retransmit_limit = s.value("nas_retransmit_limit", g.sim.nas_retransmit_limit);
            g.sim.horizon = s.value("horizon", g.sim.horizon);
            g.sim.ue_processing_delay = s.value("ue_processing_delay", g.sim.ue_processing_delay);
            g.sim.energy.p_active = s.value("p_active", g.sim.energy.p_active);
            g.sim.energy.p_idle = s.value("p_idle", g.sim.energy.p_idle);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config '" + file.string() + "': " + e.what());
    }
    return g;
}

struct GridCell {
    std::uint32_t num_ues = 0;
    double loss = 0.0;
    TimerModeKind mode = TimerModeKind::Astro;

    std::string name() const {
        return "ues" + std::to_string(num_ues) + "_loss" + format_number(loss) + "_" + std::string(to_string(mode));
    }
};

inline std::vector<GridCell> enumerate_cells(const ScenarioGrid& g) {
    std::vector<GridCell> cells;
    for (auto n : g.ue_counts)
        for (double p : g.loss_probs)
            for (auto m : g.modes) cells.push_back({n, p, m});
    return cells;
}

/// The responder's load estimate for a burst of `num_ues` power-ons: steady
/// background plus every UE arriving within the burst window.
inline NodeLoadProfile burst_load_estimate(const NodeLoadProfile& amf, std::uint32_t num_ues, const SimConfig& sim) {
    NodeLoadProfile p = amf;
    p.steady_arrival = sim.background_load_fraction * amf.service_rate;
    p.burst_window = sim.burst_window;
    p.total_arrival = p.steady_arrival + (sim.burst_window > 0.0 ? num_ues / sim.burst_window : 0.0);
    return p;
}

inline PathSpec cell_path(const PathSpec& base, std::uint32_t num_ues, const SimConfig& sim) {
    PathSpec path = base;
    path.nodes.back() = burst_load_estimate(base.nodes.back(), num_ues, sim);
    return path;
}

inline SizedTimerSuite cell_timers(const ScenarioGrid& g, const PathSpec& base, const GridCell& cell) {
    if (cell.mode == TimerModeKind::Fixed3GPP) return g.fixed.suite();
    return size_registration_suite(cell_path(base, cell.num_ues, g.sim), g.weights);
}

inline SimConfig cell_sim_config(const ScenarioGrid& g, const PathSpec& base, const GridCell& cell,
                                 std::uint64_t seed) {
    SimConfig c = g.sim;
    c.num_ues = cell.num_ues;
    c.loss_probability = cell.loss;
    c.seed = seed;
    c.amf = base.nodes.back();
    return c;
}

inline nlohmann::json cell_json(const ScenarioGrid& g, const GridCell& cell, const SizedTimerSuite& t) {
    return {{"name", cell.name()},
            {"num_ues", cell.num_ues},
            {"loss_probability", cell.loss},
            {"mode", to_string(cell.mode)},
            {"alpha", g.weights.alpha},
            {"beta", g.weights.beta},
            {"seeds", g.seeds},
            {"timers_s", {{"T3510", t.t3510.value}, {"T3511", t.t3511.value},
                          {"T3550", t.t3550.value}, {"T3560", t.t3560.value}}},
            {"t3502_s", g.fixed.t3502},
            {"max_attempts", g.sim.max_attempts},
            {"burst_window_s", g.sim.burst_window},
            {"background_load_fraction", g.sim.background_load_fraction},
            {"nas_retransmit_limit", g.sim.nas_retransmit_limit},
            {"horizon_s", g.sim.horizon},
            {"ue_processing_delay_s", g.sim.ue_processing_delay},
            {"p_active_w", g.sim.energy.p_active},
            {"p_idle_w", g.sim.energy.p_idle}};
}

struct CellResult {
    GridCell cell;
    MetricsBundle metrics;
    std::string error;  // empty on success
};

struct GridReport {
    std::vector<CellResult> cells;
    std::size_t runs = 0;

    std::vector<std::string> failed_cells() const {
        std::vector<std::string> out;
        for (const auto& c : cells)
            if (!c.error.empty()) out.push_back(c.cell.name() + ": " + c.error);
        return out;
    }
};

/// Runs every (cell, seed) pair on up to `workers` threads, then reduces and
/// writes `<out>/<cell>/{ues.csv,timers.csv,summary.json}`.
inline GridReport run_grid(const ScenarioGrid& g, const PathSpec& base_path) {
    validate(g);
    const std::vector<GridCell> cells = enumerate_cells(g);
    const std::size_t per_cell = g.seeds.size();

    std::vector<SizedTimerSuite> timers(cells.size());
    std::vector<std::string> errors(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        try {
            timers[i] = cell_timers(g, base_path, cells[i]);
            validate(timers[i]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }

    std::vector<RunTrace> traces(cells.size() * per_cell);
    std::vector<std::string> run_errors(traces.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < traces.size(); k = next++) {
            const std::size_t ci = k / per_cell;
            if (!errors[ci].empty()) continue;
            try {
                traces[k] = run_scenario(cell_sim_config(g, base_path, cells[ci], g.seeds[k % per_cell]), timers[ci],
                                         base_path);
            } catch (const std::exception& e) {
                run_errors[k] = e.what();
            }
        }
    };
    const unsigned n_threads = std::min<std::size_t>(g.workers, std::max<std::size_t>(traces.size(), 1));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n_threads; ++i) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    GridReport report;
    report.runs = traces.size();
    std::filesystem::create_directories(g.output_dir);
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        CellResult result{cells[ci], {}, errors[ci]};
        for (std::size_t s = 0; s < per_cell && result.error.empty(); ++s)
            if (!run_errors[ci * per_cell + s].empty()) result.error = run_errors[ci * per_cell + s];
        if (result.error.empty()) {
            try {
                const std::span<const RunTrace> cell_traces(traces.data() + ci * per_cell, per_cell);
                result.metrics = reduce(cell_traces);
                const auto dir = g.output_dir / cells[ci].name();
                std::filesystem::create_directories(dir);
                std::ofstream ue_csv(dir / "ues.csv", std::ios::binary);
                write_ue_csv(ue_csv, cell_traces);
                std::ofstream timer_csv(dir / "timers.csv", std::ios::binary);
                write_timer_csv(timer_csv, result.metrics);
                std::ofstream summary(dir / "summary.json", std::ios::binary);
                summary << summary_json(cell_json(g, cells[ci], timers[ci]), result.metrics).dump(2) << '\n';
                if (!ue_csv || !timer_csv || !summary) throw std::runtime_error("write failed in " + dir.string());
            } catch (const std::exception& e) {
                result.error = e.what();
            }
        }
        report.cells.push_back(std::move(result));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Sweep report over an artifact tree

inline constexpr const char* kSweepCsvHeader =
    "cell,num_ues,loss_probability,mode,success_fraction,overall_expired_ratio,mean_attempts,mean_energy_j,"
    "T3510_expired_ratio,T3511_expired_ratio,T3550_expired_ratio,T3560_expired_ratio";

/// Collects every `<dir>/*/summary.json` (sorted by cell name) into CSV rows.
inline std::vector<std::string> sweep_rows(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw InputError("no artifact directory '" + dir.string() + "'");
    std::vector<std::filesystem::path> summaries;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto s = entry.path() / "summary.json";
        if (entry.is_directory() && std::filesystem::exists(s)) summaries.push_back(s);
    }
    std::sort(summaries.begin(), summaries.end());
    std::vector<std::string> rows;
    for (const auto& path : summaries) {
        std::ifstream in(path);
        nlohmann::json s;
        try {
            s = nlohmann::json::parse(in);
            const auto& cell = s.at("cell");
            const auto& r = s.at("expired_ratio");
            std::string row = cell.at("name").get<std::string>();
            row += ',' + std::to_string(cell.at("num_ues").get<std::uint32_t>());
            row += ',' + format_number(cell.at("loss_probability").get<double>());
            row += ',' + cell.at("mode").get<std::string>();
            for (const char* key : {"success_fraction", "overall_expired_ratio", "mean_attempts", "mean_energy_j"})
                row += ',' + format_number(s.at(key).get<double>());
            for (const char* t : {"T3510", "T3511", "T3550", "T3560"})
                row += ',' + format_number(r.at(t).get<double>());
            rows.push_back(std::move(row));
        } catch (const nlohmann::json::exception& e) {
            throw InputError("bad summary '" + path.string() + "': " + e.what());
        }
    }
    return rows;
}

}  // namespace astrotimer
