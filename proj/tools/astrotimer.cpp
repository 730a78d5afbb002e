// astrotimer: size NAS registration timers for a satellite path and run
// registration stress grids.
//
//   astrotimer size --snapshot net.json --origin ue --responder amf --beta 0.64
//   astrotimer run --config grid.json --out artifacts --ues 4000 --loss 0 0.25 --mode both
//   astrotimer sweep-report --out artifacts
//
// Exit codes: 0 success, 1 run failure, 2 input error.

#include <astrotimer/experiment.hpp>
#include <astrotimer/metrics.hpp>
#include <astrotimer/timer_model.hpp>
#include <astrotimer/topology.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitInputError = 2;

using namespace astrotimer;

struct CommonOptions {
    std::string config;
    std::string snapshot;
    std::string origin;
    std::string responder;
    std::optional<double> alpha;
    std::optional<double> beta;
};

ScenarioGrid resolve_grid(const CommonOptions& o) {
    ScenarioGrid g = o.config.empty() ? ScenarioGrid{} : load_grid_config(o.config);
    if (!o.snapshot.empty()) g.snapshot = o.snapshot;
    if (!o.origin.empty()) g.origin = o.origin;
    if (!o.responder.empty()) g.responder = o.responder;
    if (o.alpha) g.weights.alpha = *o.alpha;
    if (o.beta) g.weights.beta = *o.beta;
    if (g.snapshot.empty()) throw InputError("no snapshot given (use --snapshot or a config with \"snapshot\")");
    return g;
}

std::string seconds(double v, bool round_up) {
    if (round_up) return std::to_string(static_cast<long long>(std::ceil(v))) + " s";
    return format_number(v) + " s";
}

void print_breakdown(const char* label, const RoutedPath& route, const TimerBreakdown& b) {
    std::cout << label << " path: ";
    for (std::size_t i = 0; i < route.node_ids.size(); ++i) std::cout << (i ? " -> " : "") << route.node_ids[i];
    std::cout << "\n  propagation sum      " << format_number(b.propagation_sum) << " s\n";
    for (std::size_t i = 0; i < b.intermediate_delays.size(); ++i)
        std::cout << "  D_agg " << route.node_ids[i + 1] << "  " << format_number(b.intermediate_delays[i]) << " s\n";
    std::cout << "  origin D_agg         " << format_number(b.origin_delay) << " s\n"
              << "  responder D_agg      " << format_number(b.responder_delay) << " s\n"
              << "  per-round path term  " << format_number(b.terms.one_way) << " s\n"
              << "  endpoint term        " << format_number(b.terms.endpoint) << " s\n";
    for (std::size_t n : b.clamped_nodes)
        std::cout << "  note: burst backlog clamped to 0 at " << route.node_ids[n] << '\n';
}

int cmd_size(const CommonOptions& o, bool round_up) {
    const ScenarioGrid g = resolve_grid(o);
    const ConstellationSnapshot snap = load_snapshot(g.snapshot);
    const RoutedPath route = build_path(snap, g.origin, g.responder);
    SizedTimerSuite suite;
    try {
        suite = size_registration_suite(route.path, g.weights);
    } catch (const UnstableQueueError& e) {
        throw InputError("node '" + route.node_ids.at(e.node_index()) + "' is unstable: " + e.what());
    }
    const RoutedPath reverse{reversed(route.path), {route.node_ids.rbegin(), route.node_ids.rend()}};

    std::cout << "alpha " << format_number(g.weights.alpha) << ", beta " << format_number(g.weights.beta) << "\n\n";
    print_breakdown("UE-side (T3510, T3511)", route, explain_timer(route.path, 5, g.weights));
    std::cout << '\n';
    print_breakdown("AMF-side (T3550, T3560)", reverse, explain_timer(reverse.path, 2, swapped(g.weights)));
    std::cout << '\n';
    for (const SizedTimer* t : {&suite.t3510, &suite.t3511, &suite.t3550, &suite.t3560}) {
        std::cout << t->name << "  " << to_string(t->kind) << "  R=" << t->rounds << "  " << seconds(t->value, round_up)
                  << '\n';
    }
    return kExitOk;
}

int cmd_run(const CommonOptions& o, const std::string& out, const std::vector<std::uint64_t>& seeds,
            const std::vector<std::uint32_t>& ues, const std::vector<double>& loss, const std::string& mode,
            std::optional<unsigned> workers) {
    ScenarioGrid g = resolve_grid(o);
    if (!out.empty()) g.output_dir = out;
    if (!seeds.empty()) g.seeds = seeds;
    if (!ues.empty()) g.ue_counts = ues;
    if (!loss.empty()) g.loss_probs = loss;
    if (mode == "both")
        g.modes = {TimerModeKind::Astro, TimerModeKind::Fixed3GPP};
    else if (!mode.empty())
        g.modes = {parse_mode(mode)};
    if (workers) g.workers = *workers;

    const ConstellationSnapshot snap = load_snapshot(g.snapshot);
    const RoutedPath route = build_path(snap, g.origin, g.responder);
    const GridReport report = run_grid(g, route.path);

    for (const auto& c : report.cells) {
        if (!c.error.empty()) continue;
        std::printf("%-28s success %.4f  expired %.4f  attempts %.3f  energy %.3f J\n", c.cell.name().c_str(),
                    c.metrics.success_fraction, c.metrics.overall_expired_ratio, c.metrics.mean_attempts,
                    c.metrics.mean_energy);
    }
    const auto failed = report.failed_cells();
    std::cout << report.runs << " runs, " << report.cells.size() << " cells written to " << g.output_dir.string()
              << '\n';
    if (!failed.empty()) {
        std::cerr << failed.size() << " cell(s) failed:\n";
        for (const auto& f : failed) std::cerr << "  " << f << '\n';
        return kExitRunFailure;
    }
    return kExitOk;
}

int cmd_sweep_report(const std::string& out) {
    const std::filesystem::path dir = out.empty() ? "artifacts" : out;
    const auto rows = sweep_rows(dir);
    std::ofstream csv(dir / "sweep_report.csv", std::ios::binary);
    csv << kSweepCsvHeader << '\n';
    std::cout << kSweepCsvHeader << '\n';
    for (const auto& r : rows) {
        csv << r << '\n';
        std::cout << r << '\n';
    }
    if (!csv) {
        std::cerr << "error: cannot write " << (dir / "sweep_report.csv").string() << '\n';
        return kExitRunFailure;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NAS registration timer sizing and stress simulation for LEO satellite paths"};
    app.require_subcommand(1);

    CommonOptions common;
    auto add_common = [&common](CLI::App* sub) {
        sub->add_option("--config", common.config, "Experiment config (JSON)");
        sub->add_option("--snapshot", common.snapshot, "Constellation snapshot (JSON)");
        sub->add_option("--origin", common.origin, "Origin node id (UE)");
        sub->add_option("--responder", common.responder, "Responder node id (AMF)");
        sub->add_option("--alpha", common.alpha, "Origin endpoint weight");
        sub->add_option("--beta", common.beta, "Responder endpoint weight");
    };

    auto* size = app.add_subcommand("size", "Size T3510/T3511/T3550/T3560 for a snapshot path");
    add_common(size);
    bool round_up = false;
    size->add_flag("--round-up", round_up, "Round timer values up to whole seconds");

    auto* run = app.add_subcommand("run", "Run a scenario grid and write per-cell artifacts");
    add_common(run);
    std::string out, mode;
    std::vector<std::uint64_t> seeds;
    std::vector<std::uint32_t> ues;
    std::vector<double> loss;
    std::optional<unsigned> workers;
    run->add_option("--out", out, "Artifact directory");
    run->add_option("--seeds", seeds, "Seeds (space separated)");
    run->add_option("--ues", ues, "UE counts");
    run->add_option("--loss", loss, "Loss probabilities");
    run->add_option("--mode", mode, "Timer mode")->check(CLI::IsMember({"astro", "3gpp", "both"}));
    run->add_option("--workers", workers, "Parallel runs");

    auto* report = app.add_subcommand("sweep-report", "Tabulate the summaries of an artifact tree");
    report->add_option("--out", out, "Artifact directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInputError;
    }

    try {
        if (size->parsed()) return cmd_size(common, round_up);
        if (run->parsed()) return cmd_run(common, out, seeds, ues, loss, mode, workers);
        return cmd_sweep_report(out);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const UnstableQueueError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const DisconnectedError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRunFailure;
    }
}
