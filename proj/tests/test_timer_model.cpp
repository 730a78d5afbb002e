#include <astrotimer/timer_model.hpp>
#include <astrotimer/topology.hpp>

#include <catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <random>
#include <vector>

using namespace astrotimer;
using Catch::Approx;

namespace {

// Independent re-statement of the sizing formula, term by term, without the
// library's delay helpers.
double oracle_node_delay(const NodeLoadProfile& p) {
    double d = 1.0 / (p.service_rate - p.steady_arrival);
    double burst = p.total_arrival >= p.service_rate ? p.total_arrival - p.steady_arrival : 0.0;
    if (burst > p.service_rate) d += (burst - p.service_rate) * p.burst_window / p.service_rate;
    return d;
}

double oracle_timer(const PathSpec& path, unsigned rounds, EndpointWeights w) {
    const std::size_t n = path.nodes.size() - 1;
    double inner = 0.0;
    for (std::size_t i = 1; i <= n - 1; ++i) inner += oracle_node_delay(path.nodes[i]);
    for (double d : path.link_delays) inner += d;
    const double endpoints = w.alpha * oracle_node_delay(path.nodes[0]) + w.beta * oracle_node_delay(path.nodes[n]);
    return rounds * inner + std::floor(rounds / 2.0 + 1.0) * endpoints;
}

NodeLoadProfile random_profile(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mu(1.0, 1e6), util(0.0, 0.95), window(0.0, 0.01);
    std::bernoulli_distribution bursty(0.3);
    NodeLoadProfile p;
    p.service_rate = mu(rng);
    p.steady_arrival = util(rng) * p.service_rate;
    p.total_arrival = bursty(rng) ? p.steady_arrival + mu(rng) * 10.0 : p.steady_arrival;
    p.burst_window = window(rng);
    return p;
}

PathSpec random_path(std::mt19937_64& rng, std::size_t max_hops) {
    std::uniform_int_distribution<std::size_t> hops(1, max_hops);
    std::uniform_real_distribution<double> delay(0.0, 0.02);
    const std::size_t n = hops(rng);
    PathSpec p;
    for (std::size_t i = 0; i <= n; ++i) p.nodes.push_back(random_profile(rng));
    for (std::size_t i = 0; i < n; ++i) p.link_delays.push_back(delay(rng));
    return p;
}

EndpointWeights random_weights(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> w(0.0, 3.0);
    return {w(rng), w(rng)};
}

// AMF loaded at 80% with 4000 requests arriving in 1 ms; D_agg ~ 12.5 s.
NodeLoadProfile stressed_amf() {
    const double mu = 320.3744;
    return {mu, 0.8 * mu, 0.8 * mu + 4.0e6, 1e-3};
}

NodeLoadProfile negligible_node() { return {1e12, 0.0, 0.0, 0.0}; }

}  // namespace

TEST_CASE("steady-state delay", "[timer_model]") {
    const double diff = 1.0 / 0.3e-6;  // mu - lambda_ss for a 0.3 us sojourn
    CHECK(steady_state_delay({5.0 * diff, 4.0 * diff, 4.0 * diff, 0.0}) == Approx(0.3e-6).epsilon(1e-12));
    CHECK(steady_state_delay({1.6667e7, 0.8 * 1.6667e7, 0.0 + 0.8 * 1.6667e7, 0.0}) == Approx(3.0e-7).epsilon(1e-3));
    CHECK(steady_state_delay({25.0, 20.0, 20.0, 0.0}) == Approx(0.2).epsilon(1e-12));
    CHECK(steady_state_delay({1.0, 0.0, 0.0, 0.0}) == 1.0);
}

TEST_CASE("steady-state delay rejects an unstable node", "[timer_model][errors]") {
    CHECK_THROWS_AS(steady_state_delay({10.0, 10.0, 10.0, 0.0}), UnstableQueueError);
    CHECK_THROWS_AS(steady_state_delay({10.0, 12.0, 12.0, 0.0}), UnstableQueueError);
    try {
        steady_state_delay({10.0, 12.0, 12.0, 0.0}, 7);
        FAIL("expected throw");
    } catch (const UnstableQueueError& e) {
        CHECK(e.node_index() == 7);
    }
}

TEST_CASE("burst arrival rate", "[timer_model]") {
    CHECK(burst_arrival_rate({100.0, 0.0, 10.0, 1e-3}) == 0.0);
    const double steady = 260.16;
    CHECK(burst_arrival_rate({325.2, steady, 4.0e6 + steady, 1e-3}) == Approx(4.0e6).epsilon(1e-12));
    // At lambda == mu the second branch applies.
    CHECK(burst_arrival_rate({50.0, 50.0, 50.0, 1e-3}) == 0.0);
    CHECK(burst_arrival_rate({50.0, 20.0, 50.0, 1e-3}) == 30.0);
}

TEST_CASE("burst delay", "[timer_model]") {
    const double expected = (4.0e6 - 325.2) * 1e-3 / 325.2;  // 12.29912...
    CHECK(burst_delay({325.2, 0.0, 4.0e6, 1e-3}) == Approx(expected).epsilon(1e-12));
    CHECK(burst_delay({325.2, 0.0, 4.0e6, 1e-3}) == Approx(12.3).margin(0.05));
    CHECK(burst_delay({100.0, 0.0, 10.0, 1e-3}) == 0.0);

    const BurstDelay at_boundary = burst_delay_detail({100.0, 0.0, 100.0, 1e-3});
    CHECK(at_boundary.delay == 0.0);
    CHECK_FALSE(at_boundary.clamped);

    // Saturated overall, but the burst share alone is below mu: clamped.
    const BurstDelay clamped = burst_delay_detail({100.0, 50.0, 120.0, 1e-3});
    CHECK(clamped.delay == 0.0);
    CHECK(clamped.clamped);
}

TEST_CASE("aggregated delay", "[timer_model]") {
    const NodeLoadProfile amf = stressed_amf();
    CHECK(aggregated_delay(amf) == steady_state_delay(amf) + burst_delay(amf));
    CHECK(aggregated_delay(amf) == Approx(12.5).epsilon(1e-4));
    const NodeLoadProfile quiet{40.0, 30.0, 30.0, 1e-3};
    CHECK(aggregated_delay(quiet) == steady_state_delay(quiet));
    const double mu = 1.6667e7;
    CHECK(aggregated_delay({mu, 0.8 * mu, 0.8 * mu, 1e-3}) == Approx(0.3e-6).epsilon(1e-3));
    CHECK_THROWS_AS(aggregated_delay({1.0, 2.0, 2.0, 0.0}), UnstableQueueError);
}

TEST_CASE("size_timer worked values", "[timer_model]") {
    const double sat_mu = 1.6667e7;
    const NodeLoadProfile sat{sat_mu, 0.8 * sat_mu, 0.8 * sat_mu, 1e-3};
    const PathSpec path = synth_path(3, 1e-9, sat, negligible_node(), stressed_amf());
    const EndpointWeights w{0.0, 0.64};

    CHECK(size_timer(path, 5, w) == Approx(24.0).epsilon(0.01));
    CHECK(size_timer(path, 2, w) == Approx(16.0).epsilon(0.01));
    CHECK(size_timer(path, 0, w) == Approx(8.0).epsilon(0.01));

    const EndpointWeights w2{0.5, 0.25};
    CHECK(size_timer(path, 0, w2) ==
          w2.alpha * aggregated_delay(path.nodes.front()) + w2.beta * aggregated_delay(path.nodes.back()));
}

TEST_CASE("size_timer input errors", "[timer_model][errors]") {
    const NodeLoadProfile ok{10.0, 1.0, 1.0, 0.0};
    CHECK_THROWS_AS(size_timer({{ok}, {}}, 1, {}), InputError);
    CHECK_THROWS_AS(size_timer({{ok, ok}, {0.1, 0.2}}, 1, {}), InputError);
    CHECK_THROWS_AS(size_timer({{ok, ok}, {-0.1}}, 1, {}), InputError);
    CHECK_THROWS_AS(size_timer({{ok, ok}, {0.1}}, 1, {-1.0, 0.0}), InputError);
    CHECK_THROWS_AS(size_timer({{ok, ok}, {0.1}}, 1, {0.0, NAN}), InputError);

    PathSpec bad = synth_path(4, 0.01, ok, ok, ok);
    bad.nodes[2] = {5.0, 5.0, 5.0, 0.0};
    try {
        size_timer(bad, 5, {1.0, 1.0});
        FAIL("expected throw");
    } catch (const UnstableQueueError& e) {
        CHECK(e.node_index() == 2);
    }
}

TEST_CASE("registration suite", "[timer_model]") {
    const double sat_mu = 1.6667e7;
    const NodeLoadProfile sat{sat_mu, 0.8 * sat_mu, 0.8 * sat_mu, 1e-3};
    const PathSpec path = synth_path(5, 1e-6, sat, negligible_node(), stressed_amf());
    const SizedTimerSuite s = size_registration_suite(path, {0.0, 0.64});

    CHECK(s.t3510.value == Approx(24.0).epsilon(0.05));
    CHECK(s.t3511.value == Approx(8.0).epsilon(0.05));
    CHECK(s.t3550.value == Approx(16.0).epsilon(0.05));
    CHECK(s.t3560.value == Approx(16.0).epsilon(0.05));
    CHECK(s.t3510.rounds == 5);
    CHECK(s.t3550.rounds == 2);
    CHECK(s.t3560.rounds == 2);
    CHECK(s.t3511.rounds == 0);
    CHECK(s.t3511.kind == TimerKind::Backoff);
    CHECK(s.t3510.kind == TimerKind::Watchdog);
    CHECK(s.t3550.kind == TimerKind::Watchdog);

    SECTION("zero delays give zero timers") {
        const SizedTimerSuite z = size_registration_suite({{negligible_node(), stressed_amf()}, {0.0}}, {0.0, 0.0});
        CHECK(z.t3510.value == 0.0);
        CHECK(z.t3511.value == 0.0);
        CHECK(z.t3550.value == 0.0);
        CHECK(z.t3560.value == 0.0);
    }

    SECTION("doubling beta doubles every timer") {
        const PathSpec direct{{negligible_node(), stressed_amf()}, {0.0}};
        const SizedTimerSuite a = size_registration_suite(direct, {0.0, 0.64});
        const SizedTimerSuite b = size_registration_suite(direct, {0.0, 1.28});
        CHECK(b.t3510.value == Approx(2.0 * a.t3510.value).epsilon(1e-12));
        CHECK(b.t3511.value == Approx(2.0 * a.t3511.value).epsilon(1e-12));
        CHECK(b.t3550.value == Approx(2.0 * a.t3550.value).epsilon(1e-12));
        CHECK(b.t3560.value == Approx(2.0 * a.t3560.value).epsilon(1e-12));
    }

    SECTION("AMF-side timers use the reversed path") {
        const PathSpec p = synth_path(3, 0.004, sat, NodeLoadProfile{100.0, 10.0, 10.0, 0.0}, stressed_amf());
        const EndpointWeights w{0.3, 0.7};
        const SizedTimerSuite r = size_registration_suite(p, w);
        CHECK(r.t3550.value == Approx(oracle_timer(reversed(p), 2, {w.beta, w.alpha})).epsilon(1e-12));
        CHECK(r.t3510.value == Approx(oracle_timer(p, 5, w)).epsilon(1e-12));
    }
}

TEST_CASE("size_timer matches the independent oracle", "[timer_model][property]") {
    std::mt19937_64 rng(20240601);
    for (int trial = 0; trial < 2000; ++trial) {
        const PathSpec path = random_path(rng, 40);
        const EndpointWeights w = random_weights(rng);
        const unsigned rounds = static_cast<unsigned>(rng() % 8);
        const double expected = oracle_timer(path, rounds, w);
        const double got = size_timer(path, rounds, w);
        REQUIRE(std::abs(got - expected) <= 1e-9 * std::max(1e-300, std::abs(expected)));
    }
}

TEST_CASE("size_timer is affine in R", "[timer_model][property]") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const PathSpec path = random_path(rng, 20);
        const EndpointWeights w = random_weights(rng);
        double a = 0.0;
        for (double d : path.link_delays) a += d;
        for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) a += oracle_node_delay(path.nodes[i]);
        const double b = w.alpha * oracle_node_delay(path.nodes.front()) + w.beta * oracle_node_delay(path.nodes.back());
        for (unsigned r = 0; r <= 5; ++r)
            REQUIRE(size_timer(path, r, w) == Approx(r * a + (r / 2 + 1) * b).epsilon(1e-10));
    }
}

TEST_CASE("size_timer is monotone in every input", "[timer_model][property]") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> bump(0.0, 0.5);
    for (int trial = 0; trial < 300; ++trial) {
        const PathSpec path = random_path(rng, 12);
        const EndpointWeights w = random_weights(rng);
        const unsigned r = static_cast<unsigned>(rng() % 6);
        const double base = size_timer(path, r, w);
        const double tol = 1e-12 * base;

        REQUIRE(size_timer(path, r + 1, w) >= base - tol);
        REQUIRE(size_timer(path, r, {w.alpha + bump(rng), w.beta}) >= base - tol);
        REQUIRE(size_timer(path, r, {w.alpha, w.beta + bump(rng)}) >= base - tol);

        PathSpec longer = path;
        longer.link_delays[rng() % longer.link_delays.size()] += bump(rng);
        REQUIRE(size_timer(longer, r, w) >= base - tol);

        // Raise one node's D_agg by loading it more heavily.
        PathSpec busier = path;
        NodeLoadProfile& n = busier.nodes[rng() % busier.nodes.size()];
        const double extra = (n.service_rate - n.steady_arrival) * 0.5;
        n.steady_arrival += extra;
        n.total_arrival += extra;
        REQUIRE(size_timer(busier, r, w) >= base - tol);
    }
}

TEST_CASE("delay terms are nonnegative", "[timer_model][property]") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5000; ++trial) {
        NodeLoadProfile p = random_profile(rng);
        // Also cover saturated profiles where the burst share is below mu.
        if (trial % 3 == 0) p.total_arrival = p.service_rate * (1.0 + (rng() % 100) / 50.0);
        REQUIRE(burst_delay(p) >= 0.0);
        REQUIRE(steady_state_delay(p) > 0.0);
        REQUIRE(std::isfinite(steady_state_delay(p)));
    }
}

TEST_CASE("explain_timer agrees with size_timer", "[timer_model]") {
    std::mt19937_64 rng(11);
    const PathSpec path = random_path(rng, 10);
    const TimerBreakdown b = explain_timer(path, 5, {0.2, 0.9});
    CHECK(b.value == size_timer(path, 5, {0.2, 0.9}));
    CHECK(b.intermediate_delays.size() == path.nodes.size() - 2);
    double links = 0.0;
    for (double d : path.link_delays) links += d;
    CHECK(b.propagation_sum == Approx(links));
}

TEST_CASE("size_timer wall time grows linearly in N", "[timer_model][complexity]") {
    const NodeLoadProfile hop{1.6667e7, 0.8 * 1.6667e7, 0.8 * 1.6667e7, 1e-3};
    std::vector<double> ns, ts;
    for (std::size_t n : {std::size_t{10}, std::size_t{1000}, std::size_t{100000}, std::size_t{10000000}}) {
        const PathSpec path = synth_path(n, 1e-3, hop, hop, hop);
        double best = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const double v = size_timer(path, 5, {1.0, 1.0});
            const auto t1 = std::chrono::steady_clock::now();
            REQUIRE(v > 0.0);
            best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
        }
        ns.push_back(static_cast<double>(n));
        ts.push_back(best);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) mx += ns[i], my += ts[i];
    mx /= ns.size();
    my /= ns.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        sxy += (ns[i] - mx) * (ts[i] - my);
        sxx += (ns[i] - mx) * (ns[i] - mx);
        syy += (ts[i] - my) * (ts[i] - my);
    }
    const double r2 = sxy * sxy / (sxx * syy);
    INFO("R^2 = " << r2);
    CHECK(r2 >= 0.99);
}
