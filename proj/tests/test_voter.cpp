#include "test_support.hpp"

#include <numeric>

#include "voterlab/stats.hpp"
#include "voterlab/voter.hpp"

using namespace voterlab;

namespace {

OpinionConfig identity_labels(std::size_t n) {
    OpinionConfig c(n);
    std::iota(c.begin(), c.end(), Opinion{0});
    return c;
}

Tick tick(Vertex from, Vertex to, double time = 1.0) { return {time, {from, to}, Channel::Shared}; }

}  // namespace

TEST_CASE("apply_tick copies along the oriented edge", "[voter]") {
    const auto k2 = complete(2);
    VoterState s(k2, {0, 1});
    REQUIRE(s.discord() == 1);
    s.apply_tick(tick(0, 1));
    REQUIRE(s.config() == OpinionConfig{0, 0});
    REQUIRE(s.discord() == 0);
    REQUIRE(s.absorbed());

    VoterState flat(k2, {0, 0});
    flat.apply_tick(tick(1, 0));
    REQUIRE(flat.config() == OpinionConfig{0, 0});

    const auto p3_graph = path(3);
    VoterState p3(p3_graph, {0, 1, 0});
    REQUIRE(p3.discord() == 2);
    p3.apply_tick(tick(1, 2));
    REQUIRE(p3.config() == OpinionConfig{0, 1, 1});
    REQUIRE(p3.discord() == p3.recount_discord());
    REQUIRE(p3.discord() == 1);
}

TEST_CASE("foreign edges and wrong lengths are rejected", "[voter]") {
    const auto g = path(3);
    VoterState s(g, {0, 1, 0});
    REQUIRE_THROWS_AS(s.apply_tick(tick(0, 2)), SpecError);
    REQUIRE_THROWS_AS(s.apply_tick(tick(1, 1)), SpecError);
    REQUIRE_THROWS_AS(VoterState(g, {0, 1}), SpecError);
}

TEST_CASE("incremental discord equals a full recount after every tick", "[voter][property]") {
    // Random graphs, random multi-label configurations, random valid ticks.
    Rng rng(2024);
    for (int instance = 0; instance < 40; ++instance) {
        const auto g = erdos_renyi_connected(3 + rng.below(10), 0.4, rng());
        OpinionConfig c(g.size());
        for (auto& o : c) o = static_cast<Opinion>(rng.below(3));
        VoterState s(g, c);
        for (int step = 0; step < 300; ++step) {
            const auto& e = g.edges()[rng.below(g.edge_count())];
            s.apply_tick(rng.below(2) ? tick(e.u, e.v) : tick(e.v, e.u));
            REQUIRE(s.discord() == s.recount_discord());
            REQUIRE(s.absorbed() == (s.recount_discord() == 0));
        }
    }
}

TEST_CASE("run_to_absorption on a constant configuration", "[voter]") {
    const auto g = cycle(5);
    CoupledTickSource source(g, 0.0, Rng(1));
    ProjectedSource left(source, Side::Left);
    const auto r = run_to_absorption(g, {1, 1, 1, 1, 1}, left);
    REQUIRE(r.consensus == 1);
    REQUIRE(r.absorption_time == 0.0);
    REQUIRE(r.ticks_consumed == 0);
}

TEST_CASE("consensus is in the support and constant at absorption", "[voter][property]") {
    const auto g = grid2d(3, 3);
    for (std::uint64_t t = 0; t < 200; ++t) {
        Rng rng = derive_stream(77, t);
        OpinionConfig c(g.size());
        for (auto& o : c) o = static_cast<Opinion>(2 * rng.below(3));  // labels {0, 2, 4}
        CoupledTickSource source(g, 0.0, Rng(rng()));
        ProjectedSource left(source, Side::Left);
        const auto r = run_to_absorption(g, c, left);
        REQUIRE(std::find(c.begin(), c.end(), r.consensus) != c.end());
        REQUIRE(r.absorption_time > 0.0);
    }
}

TEST_CASE("P(consensus = 1) equals the initial fraction of ones", "[voter][statistical]") {
    // Duality: f ~ eta0(X) with X uniform; C5 with two ones gives 2/5.
    const auto g = cycle(5);
    const OpinionConfig eta0{1, 0, 1, 0, 0};
    const int trials = 20000;
    int ones = 0;
    auto clocks = std::make_shared<const ClockSampler>(g, DynamicsMode::EdgeRate);
    for (int t = 0; t < trials; ++t) {
        CoupledTickSource source(clocks, 0.0, derive_stream(3, t));
        ProjectedSource left(source, Side::Left);
        ones += run_to_absorption(g, eta0, left).consensus == 1;
    }
    REQUIRE_WITHIN_SIGMA(static_cast<double>(ones) / trials, 0.4, std::sqrt(0.24 / trials), 4.0);
}

TEST_CASE("identity labels give a uniform consensus vertex on a path", "[voter][statistical]") {
    const auto g = path(4);
    std::vector<std::uint64_t> counts(4, 0);
    auto clocks = std::make_shared<const ClockSampler>(g, DynamicsMode::EdgeRate);
    for (int t = 0; t < 20000; ++t) {
        CoupledTickSource source(clocks, 0.0, derive_stream(4, t));
        ProjectedSource left(source, Side::Left);
        ++counts[run_to_absorption(g, identity_labels(4), left).consensus];
    }
    REQUIRE(uniformity_chisq(counts).p_value > 0.001);
}

TEST_CASE("uniform-neighbour dynamics weight vertices by degree", "[voter][statistical]") {
    // For vertex-activated dynamics sum_v deg(v) eta(v) is the martingale, so on
    // star(5) the centre (degree 4 of total 8) wins with probability 1/2.
    const auto g = star(5);
    const int trials = 20000;
    int centre = 0;
    auto clocks = std::make_shared<const ClockSampler>(g, DynamicsMode::UniformNeighbour);
    for (int t = 0; t < trials; ++t) {
        CoupledTickSource source(clocks, 0.0, derive_stream(5, t));
        ProjectedSource left(source, Side::Left);
        centre += run_to_absorption(g, identity_labels(5), left).consensus == 0;
    }
    REQUIRE_WITHIN_SIGMA(static_cast<double>(centre) / trials, 0.5, std::sqrt(0.25 / trials), 4.0);
}

TEST_CASE("eps = 0 couples the two consensus opinions exactly", "[voter]") {
    const auto g = cycle(6);
    for (std::uint64_t t = 0; t < 300; ++t) {
        Rng rng = derive_stream(6, t);
        const auto eta0 = bernoulli_config(g.size(), 0.5, rng);
        const auto o = run_coupled_to_absorption(g, eta0, 0.0, Rng(rng()));
        REQUIRE(o.f_left == o.f_right);
        REQUIRE(o.t_left == o.t_right);
    }
}

TEST_CASE("coupled covariance on K5 matches the closed form", "[voter][statistical]") {
    // p = 1/2, eps = 1/4: 0.25 / (1 + 4 * 0.25) = 0.125.
    const auto g = complete(5);
    auto clocks = std::make_shared<const ClockSampler>(g, DynamicsMode::EdgeRate);
    std::vector<std::pair<double, double>> pairs;
    for (std::uint64_t t = 0; t < 30000; ++t) {
        Rng rng = derive_stream(7, t);
        const auto eta0 = bernoulli_config(5, 0.5, rng);
        const auto o = run_coupled_to_absorption(g, eta0, clocks, 0.25, Rng(rng()));
        pairs.emplace_back(o.f_left, o.f_right);
    }
    const auto s = paired_covariance(pairs);
    REQUIRE_WITHIN_SIGMA(s.covariance, 0.125, s.standard_error, 4.0);
}

TEST_CASE("tick budget aborts with a distinct error", "[voter]") {
    const auto g = cycle(9);
    OpinionConfig eta0{0, 1, 0, 1, 0, 1, 0, 1, 0};
    REQUIRE_THROWS_AS(run_coupled_to_absorption(g, eta0, 0.5, Rng(1), DynamicsMode::EdgeRate, 2), TickBudgetExceeded);
    CoupledTickSource source(g, 0.0, Rng(1));
    ProjectedSource left(source, Side::Left);
    REQUIRE_THROWS_AS(run_to_absorption(g, eta0, left, 3), TickBudgetExceeded);

    const auto log = record_log(g, 0.0, 0.01, Rng(1));
    LogCursor cursor(log.ticks);
    REQUIRE_THROWS_AS(run_to_absorption(g, eta0, cursor), LogExhausted);
}

TEST_CASE("fixed horizon runs", "[voter]") {
    const auto g = cycle(7);
    const OpinionConfig eta0{0, 1, 1, 0, 1, 0, 0};
    const auto log = record_log(g, 0.0, 30.0, Rng(9));

    LogCursor at_zero(log.ticks);
    REQUIRE(run_fixed_horizon(g, eta0, 0.0, at_zero) == eta0);

    LogCursor a(log.ticks);
    LogCursor b(log.ticks);
    REQUIRE(run_fixed_horizon(g, eta0, 12.5, a) == run_fixed_horizon(g, eta0, 12.5, b));

    // Matches replaying the prefix tick by tick.
    VoterState manual(g, eta0);
    for (const auto& t : log.ticks)
        if (t.time <= 12.5) manual.apply_tick(t);
    LogCursor c(log.ticks);
    REQUIRE(run_fixed_horizon(g, eta0, 12.5, c) == manual.config());

    REQUIRE_THROWS_AS(run_fixed_horizon(g, eta0, -1.0, c), SpecError);
}

TEST_CASE("long fixed horizons end in consensus", "[voter]") {
    const auto g = complete(5);
    auto clocks = std::make_shared<const ClockSampler>(g, DynamicsMode::EdgeRate);
    int constant = 0;
    for (std::uint64_t t = 0; t < 500; ++t) {
        Rng rng = derive_stream(10, t);
        const auto eta0 = bernoulli_config(5, 0.5, rng);
        const auto [left, right] = run_coupled_fixed_horizon(g, eta0, 200.0, clocks, 0.25, Rng(rng()));
        constant += std::adjacent_find(left.begin(), left.end(), std::not_equal_to<>()) == left.end();
    }
    REQUIRE(constant == 500);
}

TEST_CASE("majority with documented tie-break", "[voter]") {
    REQUIRE(majority({0, 1, 1}) == 1);
    REQUIRE(majority({0, 0, 1, 1}) == 0);
    REQUIRE(majority({1, 1, 1}) == 1);
    REQUIRE(majority({0, 0, 1}) == 0);
    REQUIRE_THROWS_AS(majority({0, 2, 1}), SpecError);
}
