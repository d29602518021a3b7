// voterlab: command-line experiment runner.
//
//   voterlab <experiment> --graph <family:size|file:path> --eps <v|c/n|n^-a> --p <v>
//            --trials <N> --seed <S> [--mode edge|uniform] [--T <grid>] [--out <path>]
//            [--json] [--workers <k>] [--config <file>]
//   voterlab ticks --graph ... --eps ... --horizon H --seed S [--out path]
//
// Exit status: 0 success, 1 invalid specification, 2 tick budget exhausted.

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "voterlab/experiment.hpp"

namespace {

constexpr int kExitSpecError = 1;
constexpr int kExitTickBudget = 2;

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : voterlab::detail::split(text, ',')) out.push_back(voterlab::detail::parse_double(item, "T"));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Voter model noise sensitivity experiments"};
    app.set_config("--config", "", "flat key = value file; command-line flags take precedence");

    std::string command;
    std::string graph = "complete:5";
    std::string eps = "0.25";
    double p = 0.5;
    std::string horizons = "0,0.5,1,2,5,50";
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    std::string mode = "edge";
    std::string out_path;
    bool json = false;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::uint64_t budget = voterlab::kDefaultTickBudget;
    double duration = 2e5;
    double tick_horizon = 10.0;

    std::vector<std::string> commands{"ticks"};
    for (const auto& [name, kind] : voterlab::experiment_names()) commands.push_back(name);
    app.add_option("experiment", command, "experiment to run, or 'ticks' to dump a coupled tick log")
        ->required()
        ->check(CLI::IsMember(commands));
    app.add_option("--graph", graph, "complete:N, cycle:N, path:N, star:N, grid:AxB, er:N:P[:SEED], file:PATH; "
                                     "comma lists of sizes give several graphs");
    app.add_option("--eps", eps, "noise level: value list, c/n, or n^-a");
    app.add_option("--p", p, "Bernoulli parameter of the initial opinions");
    app.add_option("--T", horizons, "majority-voter horizon grid (comma separated)");
    app.add_option("--trials", trials, "trials per output row");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--mode", mode, "dynamics: edge (per-edge clocks) or uniform (uniform neighbour)")
        ->check(CLI::IsMember({"edge", "uniform"}));
    app.add_option("--out", out_path, "output file (default stdout)");
    app.add_flag("--json", json, "emit JSON lines instead of CSV");
    app.add_option("--workers", workers, "worker threads");
    app.add_option("--budget", budget, "tick budget per trial");
    app.add_option("--duration", duration, "pair-walk duration for pairchain-validate");
    app.add_option("--horizon", tick_horizon, "log horizon for 'ticks'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Error& e) {
        app.exit(e);
        return kExitSpecError;
    }

    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) {
            std::cerr << "voterlab: cannot open " << out_path << " for writing\n";
            return kExitSpecError;
        }
    }
    std::ostream& out = out_path.empty() ? std::cout : file;

    try {
        if (command == "ticks") {
            const auto graphs = voterlab::resolve_graphs(graph, seed);
            const auto schedule = voterlab::EpsSchedule::parse(eps);
            const double level = schedule.resolve(graphs.front().graph.size()).front();
            const auto log = voterlab::record_log(graphs.front().graph, level, tick_horizon, voterlab::Rng(seed),
                                                  voterlab::parse_mode(mode));
            voterlab::write_tick_csv(out, log);
            return 0;
        }
        voterlab::ExperimentSpec spec;
        spec.experiment = voterlab::parse_experiment(command);
        spec.graph = graph;
        spec.eps = eps;
        spec.p = p;
        spec.horizons = parse_grid(horizons);
        spec.trials = trials;
        spec.seed = seed;
        spec.mode = voterlab::parse_mode(mode);
        spec.workers = workers;
        spec.tick_budget = budget;
        spec.duration = duration;
        const auto result = voterlab::run_experiment(spec);
        for (const auto& w : result.warnings) std::cerr << "voterlab: warning: " << w << '\n';
        voterlab::write_records(out, result.records, json);
    } catch (const voterlab::TickBudgetExceeded& e) {
        std::cerr << "voterlab: " << e.what() << '\n';
        return kExitTickBudget;
    } catch (const voterlab::SpecError& e) {
        std::cerr << "voterlab: " << e.what() << '\n';
        return kExitSpecError;
    } catch (const std::exception& e) {
        std::cerr << "voterlab: " << e.what() << '\n';
        return kExitSpecError;
    }
    return 0;
}
