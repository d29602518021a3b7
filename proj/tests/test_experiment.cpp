#include "test_support.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "voterlab/experiment.hpp"

using namespace voterlab;

namespace {

ExperimentSpec small_spec(ExperimentKind kind, std::string graph, std::string eps) {
    ExperimentSpec spec;
    spec.experiment = kind;
    spec.graph = std::move(graph);
    spec.eps = std::move(eps);
    spec.trials = 400;
    spec.seed = 11;
    return spec;
}

std::string render(const ExperimentOutput& out, bool json = false) {
    std::ostringstream s;
    write_records(s, out.records, json);
    return s.str();
}

}  // namespace

TEST_CASE("graph specs", "[experiment]") {
    const auto sizes = resolve_graphs("cycle:8,16", 1);
    REQUIRE(sizes.size() == 2);
    REQUIRE(sizes[1].graph.size() == 16);
    REQUIRE(sizes[0].descriptor == "cycle:8");
    REQUIRE(resolve_graphs("grid:3x4", 1).front().graph.edge_count() == 17);
    REQUIRE(resolve_graphs("star:6", 1).front().graph.degree(0) == 5);
    const auto er = resolve_graphs("er:12:0.3:7", 1).front();
    REQUIRE(er.graph.size() == 12);
    REQUIRE(er.graph.edge_count() == erdos_renyi_connected(12, 0.3, 7).edge_count());
    REQUIRE(resolve_graphs("er:12:0.3", 5).front().descriptor == "er:12:0.3:5");

    const std::string path = "voterlab_test_graph.txt";
    {
        std::ofstream f(path);
        f << "3 2\n0 1 2.5\n1 2\n";
    }
    const auto file = resolve_graphs("file:" + path, 1).front().graph;
    REQUIRE(file.edge_weight(0, 1) == 2.5);
    std::remove(path.c_str());

    REQUIRE_THROWS_AS(resolve_graphs("cycle", 1), SpecError);
    REQUIRE_THROWS_AS(resolve_graphs("torus:5", 1), SpecError);
    REQUIRE_THROWS_AS(resolve_graphs("cycle:2", 1), SpecError);
    REQUIRE_THROWS_AS(resolve_graphs("cycle:x", 1), SpecError);
    REQUIRE_THROWS_AS(resolve_graphs("grid:3", 1), SpecError);
    REQUIRE_THROWS_AS(resolve_graphs("file:/nonexistent/graph", 1), SpecError);
}

TEST_CASE("eps schedules", "[experiment]") {
    REQUIRE(EpsSchedule::parse("0.1,0.2").resolve(10) == std::vector<double>{0.1, 0.2});
    REQUIRE(EpsSchedule::parse("8/n").resolve(16).front() == Catch::Approx(0.5));
    REQUIRE(EpsSchedule::parse("n^-0.5").resolve(64).front() == Catch::Approx(0.125));
    REQUIRE_THROWS_AS(EpsSchedule::parse("abc"), SpecError);
    REQUIRE_THROWS_AS(EpsSchedule::parse("n^0.5"), SpecError);
}

TEST_CASE("experiment names round-trip", "[experiment]") {
    for (const auto& [name, kind] : experiment_names()) REQUIRE(to_string(parse_experiment(name)) == name);
    REQUIRE_THROWS_AS(parse_experiment("nope"), SpecError);
    REQUIRE_THROWS_AS(parse_mode("fast"), SpecError);
}

TEST_CASE("output is independent of the worker count", "[experiment]") {
    for (auto kind : {ExperimentKind::Stability, ExperimentKind::Sensitivity, ExperimentKind::CoupledWalkSensitivity,
                      ExperimentKind::ConsensusVertex, ExperimentKind::MajorityVoter}) {
        auto spec = small_spec(kind, "cycle:5", "0.3");
        spec.horizons = {0.0, 1.0};
        spec.workers = 1;
        const auto one = render(run_experiment(spec));
        spec.workers = 4;
        REQUIRE(render(run_experiment(spec)) == one);
        spec.seed = 12;
        REQUIRE(render(run_experiment(spec)) != one);
    }
}

TEST_CASE("sensitivity rows carry the exact covariance", "[experiment]") {
    const auto out = run_experiment(small_spec(ExperimentKind::Sensitivity, "complete:5", "0.25,0.5"));
    REQUIRE(out.records.size() == 2);
    REQUIRE(out.records[0]["exact"].get<double>() == Catch::Approx(0.125));
    REQUIRE(out.records[1]["n_trials"].get<std::size_t>() == 400);

    auto uniform = small_spec(ExperimentKind::Sensitivity, "star:5", "0.25");
    uniform.mode = DynamicsMode::UniformNeighbour;
    const auto u = run_experiment(uniform);
    REQUIRE(u.records[0]["exact"].is_null());
}

TEST_CASE("CSV and JSON output", "[experiment]") {
    const auto out = run_experiment(small_spec(ExperimentKind::Stability, "cycle:6", "0.1"));
    const auto csv = render(out);
    REQUIRE(csv.starts_with("experiment,graph,n,eps,p,mode,n_trials,seed,estimate,se,ci_low,ci_high,exact,bound\n"));
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 2);
    const auto json = render(out, true);
    const auto parsed = nlohmann::json::parse(json.substr(0, json.find('\n')));
    REQUIRE(parsed["graph"] == "cycle:6");
    REQUIRE(parsed["exact"].get<double>() == Catch::Approx(0.05));

    auto mv = small_spec(ExperimentKind::MajorityVoter, "complete:5", "0");
    mv.horizons = {1.0};
    const auto rows = render(run_experiment(mv));
    // eps = 0 keeps both copies identical, so the correlation is one and the limit is undefined.
    REQUIRE(rows.find(",,") != std::string::npos);
}

TEST_CASE("pair chain validation rows", "[experiment]") {
    auto spec = small_spec(ExperimentKind::PairchainValidate, "complete:3", "0.5");
    spec.duration = 2e4;
    const auto r = run_experiment(spec).records.front();
    REQUIRE(r["exact"].get<double>() == Catch::Approx(0.5));
    REQUIRE(r["reversibility_violation"].get<double>() <= 1e-12);
    REQUIRE(r["pi_error"].get<double>() <= 1e-10);
    REQUIRE(r["estimate"].get<double>() == Catch::Approx(0.5).margin(0.05));
    spec.mode = DynamicsMode::UniformNeighbour;
    REQUIRE_THROWS_AS(run_experiment(spec), SpecError);
}

TEST_CASE("scaling sweep labels regimes", "[experiment]") {
    auto spec = small_spec(ExperimentKind::ScalingSweep, "cycle:8,16", "8/n");
    spec.trials = 200;
    const auto out = run_experiment(spec);
    REQUIRE(out.records.size() == 2);
    REQUIRE(out.records[0]["regime"] == "persistent");
    REQUIRE(out.records[1]["n_eps"].get<double>() == Catch::Approx(8.0));
}

TEST_CASE("majority voter warns on even n", "[experiment]") {
    auto spec = small_spec(ExperimentKind::MajorityVoter, "cycle:6", "0.2");
    spec.horizons = {0.0};
    const auto out = run_experiment(spec);
    REQUIRE(out.warnings.size() == 1);
    REQUIRE(out.records[0]["estimate"].get<double>() == 1.0);
}

TEST_CASE("invalid specifications", "[experiment]") {
    auto spec = small_spec(ExperimentKind::Sensitivity, "complete:5", "0.25");
    spec.p = 1.5;
    REQUIRE_THROWS_AS(run_experiment(spec), SpecError);
    spec.p = 0.5;
    spec.trials = 2;
    REQUIRE_THROWS_AS(run_experiment(spec), SpecError);
    spec.trials = 10;
    spec.eps = "0";
    REQUIRE_THROWS_AS(run_experiment(spec), SpecError);
    spec.eps = "1.5";
    REQUIRE_THROWS_AS(run_experiment(spec), SpecError);
    spec.eps = "0.25";
    spec.tick_budget = 1;
    REQUIRE_THROWS_AS(run_experiment(spec), TickBudgetExceeded);
}

TEST_CASE("run_trials propagates exceptions", "[experiment]") {
    const auto ok = run_trials<int>(100, 4, [](std::size_t t) { return static_cast<int>(t * t); });
    REQUIRE(ok[9] == 81);
    REQUIRE_THROWS_AS(run_trials<int>(100, 4,
                                      [](std::size_t t) -> int {
                                          if (t == 37) throw SpecError("boom");
                                          return 0;
                                      }),
                      SpecError);
}
