#pragma once

// Experiment runners behind the voterlab CLI.
//
// Trial t of output row r draws all of its randomness from
// derive_stream(master_seed, t, r), and results land in slots indexed by t, so
// output is identical for any worker count.

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "voterlab/coalescing.hpp"
#include "voterlab/errors.hpp"
#include "voterlab/graph.hpp"
#include "voterlab/pairchain.hpp"
#include "voterlab/rng.hpp"
#include "voterlab/stats.hpp"
#include "voterlab/ticks.hpp"
#include "voterlab/voter.hpp"

namespace voterlab {

using Record = nlohmann::ordered_json;

enum class ExperimentKind {
    Stability,
    Sensitivity,
    CoupledWalkSensitivity,
    PairchainValidate,
    ConsensusVertex,
    MajorityVoter,
    ScalingSweep,
};

inline const std::vector<std::pair<std::string, ExperimentKind>>& experiment_names() {
    static const std::vector<std::pair<std::string, ExperimentKind>> names = {
        {"stability", ExperimentKind::Stability},
        {"sensitivity", ExperimentKind::Sensitivity},
        {"coupled-walk-sensitivity", ExperimentKind::CoupledWalkSensitivity},
        {"pairchain-validate", ExperimentKind::PairchainValidate},
        {"consensus-vertex", ExperimentKind::ConsensusVertex},
        {"majority-voter", ExperimentKind::MajorityVoter},
        {"scaling-sweep", ExperimentKind::ScalingSweep},
    };
    return names;
}

inline ExperimentKind parse_experiment(const std::string& name) {
    for (const auto& [key, kind] : experiment_names())
        if (key == name) return kind;
    throw SpecError("unknown experiment '" + name + "'");
}

inline std::string to_string(ExperimentKind kind) {
    for (const auto& [key, k] : experiment_names())
        if (k == kind) return key;
    return "?";
}

inline DynamicsMode parse_mode(const std::string& text) {
    if (text == "edge") return DynamicsMode::EdgeRate;
    if (text == "uniform") return DynamicsMode::UniformNeighbour;
    throw SpecError("mode must be 'edge' or 'uniform', got '" + text + "'");
}

namespace detail {

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) out.push_back(item);
    if (!text.empty() && text.back() == sep) out.emplace_back();
    return out;
}

inline double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw SpecError("cannot parse " + what + " '" + text + "' as a number");
    }
}

inline std::size_t parse_size(const std::string& text, const std::string& what) {
    const double v = parse_double(text, what);
    if (v < 0 || v != std::floor(v)) throw SpecError(what + " must be a nonnegative integer, got '" + text + "'");
    return static_cast<std::size_t>(v);
}

/// Shortest text that round-trips to the same double.
inline std::string format_double(double x) {
    char buffer[40];
    const auto end = std::to_chars(buffer, buffer + sizeof buffer, x).ptr;
    return std::string(buffer, end);
}

}  // namespace detail

struct NamedGraph {
    std::string descriptor;
    Graph graph;
};

/// family:size[,size...] for complete, cycle, path, star; grid:AxB[,AxB...];
/// er:n:p[:seed] (seed defaults to the master seed); file:path.
inline std::vector<NamedGraph> resolve_graphs(const std::string& spec, std::uint64_t default_seed) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw SpecError("graph spec '" + spec + "' is not family:size or file:path");
    const std::string family = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);
    std::vector<NamedGraph> out;
    if (family == "file") {
        std::ifstream in(rest);
        if (!in) throw SpecError("cannot open edge list '" + rest + "'");
        out.push_back({spec, read_edge_list(in)});
        return out;
    }
    if (family == "er") {
        const auto parts = detail::split(rest, ':');
        if (parts.size() < 2 || parts.size() > 3) throw SpecError("er graph spec must be er:n:p[:seed]");
        const std::size_t n = detail::parse_size(parts[0], "er size");
        const double p = detail::parse_double(parts[1], "er edge probability");
        const std::uint64_t seed = parts.size() == 3 ? detail::parse_size(parts[2], "er seed") : default_seed;
        out.push_back({"er:" + parts[0] + ":" + parts[1] + ":" + std::to_string(seed), erdos_renyi_connected(n, p, seed)});
        return out;
    }
    for (const auto& item : detail::split(rest, ',')) {
        if (family == "grid") {
            const auto dims = detail::split(item, 'x');
            if (dims.size() != 2) throw SpecError("grid size must be AxB, got '" + item + "'");
            out.push_back({"grid:" + item, grid2d(detail::parse_size(dims[0], "grid side"),
                                                  detail::parse_size(dims[1], "grid side"))});
            continue;
        }
        const std::size_t n = detail::parse_size(item, family + " size");
        if (family == "complete") {
            out.push_back({"complete:" + item, complete(n)});
        } else if (family == "cycle") {
            out.push_back({"cycle:" + item, cycle(n)});
        } else if (family == "path") {
            out.push_back({"path:" + item, path(n)});
        } else if (family == "star") {
            out.push_back({"star:" + item, star(n)});
        } else {
            throw SpecError("unknown graph family '" + family + "'");
        }
    }
    if (out.empty()) throw SpecError("graph spec '" + spec + "' names no graphs");
    return out;
}

/// Noise levels: a comma list of values, "c/n", or "n^-a".
struct EpsSchedule {
    enum class Kind { Values, OverN, Power };
    Kind kind = Kind::Values;
    std::vector<double> values;
    double constant = 0.0;
    std::string text;

    static EpsSchedule parse(const std::string& text) {
        EpsSchedule s;
        s.text = text;
        if (text.size() > 2 && text.ends_with("/n")) {
            s.kind = Kind::OverN;
            s.constant = detail::parse_double(text.substr(0, text.size() - 2), "eps constant");
        } else if (text.starts_with("n^")) {
            s.kind = Kind::Power;
            s.constant = -detail::parse_double(text.substr(2), "eps exponent");
            if (!(s.constant > 0.0)) throw SpecError("eps schedule n^-a needs a > 0");
        } else {
            for (const auto& item : detail::split(text, ',')) s.values.push_back(detail::parse_double(item, "eps"));
            if (s.values.empty()) throw SpecError("empty eps list");
        }
        return s;
    }

    std::vector<double> resolve(std::size_t n) const {
        const auto nd = static_cast<double>(n);
        switch (kind) {
            case Kind::OverN: return {constant / nd};
            case Kind::Power: return {std::pow(nd, -constant)};
            case Kind::Values: return values;
        }
        return {};
    }
};

struct ExperimentSpec {
    ExperimentKind experiment = ExperimentKind::Sensitivity;
    std::string graph = "complete:5";
    std::string eps = "0.25";
    double p = 0.5;
    std::vector<double> horizons = {0.0, 0.5, 1.0, 2.0, 5.0, 50.0};
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    DynamicsMode mode = DynamicsMode::EdgeRate;
    unsigned workers = 1;
    std::uint64_t tick_budget = kDefaultTickBudget;
    /// Length of the coupled pair walk in pairchain-validate.
    double duration = 2e5;
};

struct ExperimentOutput {
    std::vector<Record> records;
    std::vector<std::string> warnings;
};

/// Runs fn(trial) for every trial on `workers` threads; results are indexed by trial.
template <class Result, class Fn>
std::vector<Result> run_trials(std::size_t trials, unsigned workers, Fn&& fn) {
    std::vector<Result> results(trials);
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(trials, 1))));
    if (workers == 1) {
        for (std::size_t t = 0; t < trials; ++t) results[t] = fn(t);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t t = next++; t < trials && !failed; t = next++) {
                try {
                    results[t] = fn(t);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed = true;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return results;
}

namespace detail {

inline void validate(const ExperimentSpec& spec) {
    if (!(spec.p >= 0.0 && spec.p <= 1.0)) throw SpecError("p must lie in [0, 1]");
    if (spec.trials < 3) throw SpecError("need at least 3 trials");
    if (spec.tick_budget == 0) throw SpecError("tick budget must be positive");
    if (spec.workers == 0) throw SpecError("workers must be positive");
}

inline Record base_record(const ExperimentSpec& spec, const NamedGraph& g, double eps, std::size_t trials) {
    Record r;
    r["experiment"] = to_string(spec.experiment);
    r["graph"] = g.descriptor;
    r["n"] = g.graph.size();
    r["eps"] = eps;
    r["p"] = spec.p;
    r["mode"] = to_string(spec.mode);
    r["n_trials"] = trials;
    r["seed"] = spec.seed;
    return r;
}

inline void put_stats(Record& r, double estimate, double se, ConfidenceInterval ci) {
    r["estimate"] = estimate;
    r["se"] = se;
    r["ci_low"] = ci.low;
    r["ci_high"] = ci.high;
}

inline std::optional<double> nullable(double x) {
    if (std::isfinite(x)) return x;
    return std::nullopt;
}

inline void put_optional(Record& r, const char* key, std::optional<double> v) {
    if (v) {
        r[key] = *v;
    } else {
        r[key] = nullptr;
    }
}

inline void require_eps(double eps, bool allow_zero) {
    if (allow_zero) {
        require_noise_level(eps, "experiment");
    } else {
        require_positive_noise(eps, "experiment");
    }
}

inline ExperimentOutput run_stability(const ExperimentSpec& spec) {
    ExperimentOutput out;
    const auto schedule = EpsSchedule::parse(spec.eps);
    std::uint64_t row = 0;
    for (const auto& g : resolve_graphs(spec.graph, spec.seed)) {
        for (double eps : schedule.resolve(g.graph.size())) {
            require_eps(eps, true);
            const std::uint64_t this_row = row++;
            const auto disagree = run_trials<char>(spec.trials, spec.workers, [&](std::size_t t) -> char {
                Rng rng = derive_stream(spec.seed, t, this_row);
                const auto eta0 = bernoulli_config(g.graph.size(), spec.p, rng);
                const auto eta_eps = resample_config(eta0, eps, spec.p, rng);
                const Vertex z = sample_consensus_vertex(g.graph, Rng(rng()), spec.mode, spec.tick_budget);
                return eta0[z] != eta_eps[z];
            });
            std::size_t count = 0;
            for (char d : disagree) count += d != 0;
            const auto s = proportion(count, spec.trials);
            Record r = base_record(spec, g, eps, spec.trials);
            put_stats(r, s.mean, s.standard_error, s.ci);
            r["exact"] = 2.0 * spec.p * (1.0 - spec.p) * eps;
            r["bound"] = eps;
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

/// Coupled voter covariance rows, shared by sensitivity and scaling-sweep.
inline Record sensitivity_row(const ExperimentSpec& spec, const NamedGraph& g, double eps, std::uint64_t row) {
    require_eps(eps, false);
    auto clocks = std::make_shared<const ClockSampler>(g.graph, spec.mode);
    const auto pairs = run_trials<std::pair<double, double>>(spec.trials, spec.workers, [&](std::size_t t) {
        Rng rng = derive_stream(spec.seed, t, row);
        const auto eta0 = bernoulli_config(g.graph.size(), spec.p, rng);
        const auto o = run_coupled_to_absorption(g.graph, eta0, clocks, eps, Rng(rng()), spec.tick_budget);
        return std::pair<double, double>(o.f_left, o.f_right);
    });
    const auto s = paired_covariance(pairs);
    Record r = base_record(spec, g, eps, spec.trials);
    put_stats(r, s.covariance, s.standard_error, s.ci);
    if (spec.mode == DynamicsMode::EdgeRate) {
        const double exact = covariance(g.graph.size(), eps, spec.p);
        r["exact"] = exact;
        put_optional(r, "z", nullable((s.covariance - exact) / s.standard_error));
    } else {
        r["exact"] = nullptr;
        r["z"] = nullptr;
    }
    return r;
}

inline ExperimentOutput run_sensitivity(const ExperimentSpec& spec) {
    ExperimentOutput out;
    const auto schedule = EpsSchedule::parse(spec.eps);
    std::uint64_t row = 0;
    for (const auto& g : resolve_graphs(spec.graph, spec.seed))
        for (double eps : schedule.resolve(g.graph.size())) out.records.push_back(sensitivity_row(spec, g, eps, row++));
    return out;
}

inline ExperimentOutput run_coupled_walk_sensitivity(const ExperimentSpec& spec) {
    ExperimentOutput out;
    const auto schedule = EpsSchedule::parse(spec.eps);
    std::uint64_t row = 0;
    for (const auto& g : resolve_graphs(spec.graph, spec.seed)) {
        auto clocks = std::make_shared<const ClockSampler>(g.graph, spec.mode);
        for (double eps : schedule.resolve(g.graph.size())) {
            require_eps(eps, false);
            const std::uint64_t this_row = row++;
            struct Sample {
                double left = 0.0;
                double right = 0.0;
                bool same = false;
            };
            const auto samples = run_trials<Sample>(spec.trials, spec.workers, [&](std::size_t t) {
                Rng rng = derive_stream(spec.seed, t, this_row);
                const auto eta0 = bernoulli_config(g.graph.size(), spec.p, rng);
                const auto [zl, zr] =
                    sample_coupled_consensus_vertices(g.graph, clocks, eps, Rng(rng()), spec.tick_budget);
                return Sample{static_cast<double>(eta0[zl]), static_cast<double>(eta0[zr]), zl == zr};
            });
            std::vector<std::pair<double, double>> pairs;
            std::size_t same = 0;
            for (const auto& s : samples) {
                pairs.emplace_back(s.left, s.right);
                same += s.same;
            }
            const auto s = paired_covariance(pairs);
            const auto coincide = proportion(same, spec.trials);
            Record r = base_record(spec, g, eps, spec.trials);
            put_stats(r, s.covariance, s.standard_error, s.ci);
            if (spec.mode == DynamicsMode::EdgeRate) {
                const double exact = covariance(g.graph.size(), eps, spec.p);
                r["exact"] = exact;
                put_optional(r, "z", nullable((s.covariance - exact) / s.standard_error));
            } else {
                r["exact"] = nullptr;
                r["z"] = nullptr;
            }
            r["coincidence"] = coincide.mean;
            r["coincidence_se"] = coincide.standard_error;
            put_optional(r, "coincidence_exact",
                         spec.mode == DynamicsMode::EdgeRate ? std::optional(diagonal_mass(g.graph.size(), eps))
                                                             : std::nullopt);
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

inline ExperimentOutput run_pairchain_validate(const ExperimentSpec& spec) {
    ExperimentOutput out;
    if (spec.mode != DynamicsMode::EdgeRate) throw SpecError("pairchain-validate applies to edge-rate dynamics only");
    require_horizon(spec.duration, "pairchain-validate duration");
    const auto schedule = EpsSchedule::parse(spec.eps);
    std::uint64_t row = 0;
    for (const auto& g : resolve_graphs(spec.graph, spec.seed)) {
        for (double eps : schedule.resolve(g.graph.size())) {
            require_eps(eps, false);
            const auto chain = build_pair_chain(g.graph, eps);
            const auto solved = stationary_solve(chain);
            const auto exact_pi = chain.pi();
            double pi_error = 0.0;
            double solved_diagonal = 0.0;
            for (std::size_t x = 0; x < solved.size(); ++x) pi_error = std::max(pi_error, std::abs(solved[x] - exact_pi[x]));
            for (Vertex u = 0; u < chain.n; ++u) solved_diagonal += solved[chain.state(u, u)];
            const double mass = diagonal_mass(chain.n, eps);
            const auto occupation = coupled_pair_walk(g.graph, eps, spec.duration, derive_stream(spec.seed, 0, row++));
            const auto fractions = occupation.fractions();
            double tv = 0.0;
            for (std::size_t x = 0; x < fractions.size(); ++x) tv += std::abs(fractions[x] - exact_pi[x]);
            tv *= 0.5;

            Record r = base_record(spec, g, eps, 1);
            r["estimate"] = occupation.diagonal_fraction();
            r["exact"] = mass;
            r["reversibility_violation"] = check_reversibility(chain);
            r["pi_error"] = pi_error;
            r["diagonal_error"] = std::abs(solved_diagonal - mass);
            r["occupation_tv"] = tv;
            r["duration"] = spec.duration;
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

inline ExperimentOutput run_consensus_vertex(const ExperimentSpec& spec) {
    ExperimentOutput out;
    std::uint64_t row = 0;
    for (const auto& g : resolve_graphs(spec.graph, spec.seed)) {
        for (DynamicsMode mode : {DynamicsMode::EdgeRate, DynamicsMode::UniformNeighbour}) {
            const std::uint64_t this_row = row++;
            const auto zs = run_trials<Vertex>(spec.trials, spec.workers, [&](std::size_t t) {
                return sample_consensus_vertex(g.graph, derive_stream(spec.seed, t, this_row), mode, spec.tick_budget);
            });
            std::vector<std::uint64_t> counts(g.graph.size(), 0);
            for (Vertex z : zs) ++counts[z];
            const auto chi = uniformity_chisq(counts);
            ExperimentSpec row_spec = spec;
            row_spec.mode = mode;
            Record r = base_record(row_spec, g, 0.0, spec.trials);
            r.erase("eps");
            r.erase("p");
            const auto vertex0 = proportion(counts[0], spec.trials);
            put_stats(r, vertex0.mean, vertex0.standard_error, vertex0.ci);
            r["exact"] = 1.0 / static_cast<double>(g.graph.size());
            r["chi2"] = chi.statistic;
            r["dof"] = chi.dof;
            r["p_value"] = chi.p_value;
            std::string joined;
            for (std::size_t v = 0; v < counts.size(); ++v) joined += (v ? ";" : "") + std::to_string(counts[v]);
            r["counts"] = joined;
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

inline ExperimentOutput run_majority_voter(const ExperimentSpec& spec) {
    ExperimentOutput out;
    const auto schedule = EpsSchedule::parse(spec.eps);
    if (spec.horizons.empty()) throw SpecError("majority-voter needs a T grid");
    for (double horizon : spec.horizons)
        if (!(horizon >= 0.0)) throw SpecError("majority-voter: T values must be nonnegative");
    std::uint64_t row = 0;
    for (const auto& g : resolve_graphs(spec.graph, spec.seed)) {
        if (g.graph.size() % 2 == 0) {
            out.warnings.push_back(g.descriptor + ": even n, majority ties resolve to opinion 0");
        }
        auto clocks = std::make_shared<const ClockSampler>(g.graph, spec.mode);
        for (double eps : schedule.resolve(g.graph.size())) {
            require_eps(eps, true);
            for (double horizon : spec.horizons) {
                const std::uint64_t this_row = row++;
                const auto pairs = run_trials<std::pair<double, double>>(spec.trials, spec.workers, [&](std::size_t t) {
                    Rng rng = derive_stream(spec.seed, t, this_row);
                    const auto eta0 = bernoulli_config(g.graph.size(), spec.p, rng);
                    const auto [left, right] = run_coupled_fixed_horizon(g.graph, eta0, horizon, clocks, eps, Rng(rng()));
                    return std::pair<double, double>(majority(left), majority(right));
                });
                const auto c = correlation(pairs);
                Record r = base_record(spec, g, eps, spec.trials);
                r["T"] = horizon;
                put_optional(r, "estimate", nullable(c.correlation));
                put_optional(r, "se", nullable(c.standard_error));
                put_optional(r, "ci_low", nullable(c.ci.low));
                put_optional(r, "ci_high", nullable(c.ci.high));
                if (horizon == 0.0) {
                    r["exact"] = 1.0;
                } else {
                    r["exact"] = nullptr;
                }
                // Correlation of the two consensus opinions, the T -> infinity limit.
                put_optional(r, "consensus_limit",
                             spec.mode == DynamicsMode::EdgeRate && eps > 0.0
                                 ? std::optional(diagonal_mass(g.graph.size(), eps))
                                 : std::nullopt);
                out.records.push_back(std::move(r));
            }
        }
    }
    return out;
}

inline ExperimentOutput run_scaling_sweep(const ExperimentSpec& spec) {
    ExperimentOutput out;
    const auto schedule = EpsSchedule::parse(spec.eps);
    const auto graphs = resolve_graphs(spec.graph, spec.seed);
    const std::size_t sequences = graphs.empty() ? 0 : schedule.resolve(graphs.front().graph.size()).size();
    std::uint64_t row = 0;
    std::vector<std::vector<std::size_t>> seq_n(sequences);
    std::vector<std::vector<double>> seq_eps(sequences);
    for (const auto& g : graphs) {
        const auto values = schedule.resolve(g.graph.size());
        for (std::size_t k = 0; k < values.size(); ++k) {
            Record r = sensitivity_row(spec, g, values[k], row++);
            r["n_eps"] = static_cast<double>(g.graph.size()) * values[k];
            r["sequence"] = k;
            seq_n[k].push_back(g.graph.size());
            seq_eps[k].push_back(values[k]);
            out.records.push_back(std::move(r));
        }
    }
    for (auto& r : out.records) {
        const auto k = r["sequence"].get<std::size_t>();
        r["regime"] = to_string(theorem_threshold(seq_n[k], seq_eps[k], spec.p).regime);
    }
    return out;
}

}  // namespace detail

inline ExperimentOutput run_experiment(const ExperimentSpec& spec) {
    detail::validate(spec);
    switch (spec.experiment) {
        case ExperimentKind::Stability: return detail::run_stability(spec);
        case ExperimentKind::Sensitivity: return detail::run_sensitivity(spec);
        case ExperimentKind::CoupledWalkSensitivity: return detail::run_coupled_walk_sensitivity(spec);
        case ExperimentKind::PairchainValidate: return detail::run_pairchain_validate(spec);
        case ExperimentKind::ConsensusVertex: return detail::run_consensus_vertex(spec);
        case ExperimentKind::MajorityVoter: return detail::run_majority_voter(spec);
        case ExperimentKind::ScalingSweep: return detail::run_scaling_sweep(spec);
    }
    throw SpecError("unhandled experiment");
}

/// CSV with a header taken from the first record, or JSON lines.
inline void write_records(std::ostream& out, const std::vector<Record>& records, bool json_lines) {
    if (json_lines) {
        for (const auto& r : records) out << r.dump() << '\n';
        return;
    }
    if (records.empty()) return;
    bool first = true;
    for (const auto& [key, value] : records.front().items()) {
        out << (first ? "" : ",") << key;
        first = false;
    }
    out << '\n';
    for (const auto& r : records) {
        first = true;
        for (const auto& [key, value] : r.items()) {
            out << (first ? "" : ",");
            first = false;
            if (value.is_null()) continue;
            if (value.is_string()) {
                out << value.get<std::string>();
            } else if (value.is_number_float()) {
                out << detail::format_double(value.get<double>());
            } else {
                out << value.dump();
            }
        }
        out << '\n';
    }
}

}  // namespace voterlab
