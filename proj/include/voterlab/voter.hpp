#pragma once

// Forward voter model driven by clock ticks: a tick on (u, v) sets eta(v) := eta(u).

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "voterlab/errors.hpp"
#include "voterlab/graph.hpp"
#include "voterlab/rng.hpp"
#include "voterlab/ticks.hpp"

namespace voterlab {

using Opinion = std::uint32_t;
using OpinionConfig = std::vector<Opinion>;

/// Anything yielding time-ordered ticks; nullopt means the source is exhausted.
template <class S>
concept TickSourceLike = requires(S s) {
    { s.next() } -> std::same_as<std::optional<Tick>>;
};

class VoterState {
public:
    VoterState(const Graph& graph, OpinionConfig config) : graph_(&graph), config_(std::move(config)) {
        if (config_.size() != graph.size()) {
            throw SpecError("voter: configuration has length " + std::to_string(config_.size()) + " but graph has " +
                            std::to_string(graph.size()) + " vertices");
        }
        discord_ = recount_discord();
    }
    VoterState(Graph&&, OpinionConfig) = delete;

    /// Rejects ticks on directed edges that are not in the graph.
    void apply_tick(const Tick& tick) {
        if (tick.edge.from == tick.edge.to || !graph_->has_edge(tick.edge.from, tick.edge.to)) {
            throw SpecError("voter: tick on foreign edge (" + std::to_string(tick.edge.from) + "," +
                            std::to_string(tick.edge.to) + ")");
        }
        apply_trusted(tick);
    }

    /// O(deg(to)); the edge is assumed valid.
    void apply_trusted(const Tick& tick) {
        clock_ = tick.time;
        const Opinion incoming = config_[tick.edge.from];
        const Opinion current = config_[tick.edge.to];
        if (incoming == current) return;
        for (const auto& nb : graph_->neighbours(tick.edge.to)) {
            const Opinion o = config_[nb.vertex];
            discord_ += static_cast<std::ptrdiff_t>(o != incoming) - static_cast<std::ptrdiff_t>(o != current);
        }
        config_[tick.edge.to] = incoming;
    }

    std::size_t discord() const noexcept { return static_cast<std::size_t>(discord_); }
    bool absorbed() const noexcept { return discord_ == 0; }
    const OpinionConfig& config() const noexcept { return config_; }
    double clock() const noexcept { return clock_; }

    /// Number of discordant edges, from scratch.
    std::size_t recount_discord() const {
        std::size_t count = 0;
        for (const auto& e : graph_->edges()) count += config_[e.u] != config_[e.v];
        return count;
    }

private:
    const Graph* graph_;
    OpinionConfig config_;
    std::ptrdiff_t discord_ = 0;
    double clock_ = 0.0;
};

struct AbsorptionResult {
    Opinion consensus = 0;
    double absorption_time = 0.0;
    std::uint64_t ticks_consumed = 0;
};

/// Runs until the configuration is constant. The dynamics mode is whatever
/// generated the source's ticks. Throws TickBudgetExceeded after `budget`
/// ticks and LogExhausted if a finite source ends first.
template <TickSourceLike Source>
AbsorptionResult run_to_absorption(const Graph& graph, OpinionConfig eta0, Source& source,
                                   std::uint64_t budget = kDefaultTickBudget) {
    VoterState state(graph, std::move(eta0));
    AbsorptionResult result;
    while (!state.absorbed()) {
        if (result.ticks_consumed == budget) throw TickBudgetExceeded(budget);
        const auto tick = source.next();
        if (!tick) throw LogExhausted("run_to_absorption: tick source exhausted before absorption");
        state.apply_tick(*tick);
        ++result.ticks_consumed;
        result.absorption_time = tick->time;
    }
    result.consensus = state.config().front();
    return result;
}

struct CoupledOutcome {
    Opinion f_left = 0;
    Opinion f_right = 0;
    double t_left = 0.0;
    double t_right = 0.0;
    std::uint64_t ticks_consumed = 0;
};

/// Left and right voter models from the same eta0, driven by the two
/// projections of one coupled stream, each run to its own absorption.
inline CoupledOutcome run_coupled_to_absorption(const Graph& graph, const OpinionConfig& eta0,
                                                std::shared_ptr<const ClockSampler> clocks, double eps, Rng rng,
                                                std::uint64_t budget = kDefaultTickBudget) {
    CoupledTickSource source(std::move(clocks), eps, rng);
    VoterState left(graph, eta0);
    VoterState right(graph, eta0);
    CoupledOutcome out;
    while (!left.absorbed() || !right.absorbed()) {
        if (out.ticks_consumed == budget) throw TickBudgetExceeded(budget);
        const Tick tick = source.next();
        ++out.ticks_consumed;
        if (!left.absorbed() && belongs_to(tick.channel, Side::Left)) {
            left.apply_trusted(tick);
            if (left.absorbed()) out.t_left = tick.time;
        }
        if (!right.absorbed() && belongs_to(tick.channel, Side::Right)) {
            right.apply_trusted(tick);
            if (right.absorbed()) out.t_right = tick.time;
        }
    }
    out.f_left = left.config().front();
    out.f_right = right.config().front();
    return out;
}

inline CoupledOutcome run_coupled_to_absorption(const Graph& graph, const OpinionConfig& eta0, double eps, Rng rng,
                                                DynamicsMode mode = DynamicsMode::EdgeRate,
                                                std::uint64_t budget = kDefaultTickBudget) {
    require_noise_level(eps, "run_coupled_to_absorption");
    return run_coupled_to_absorption(graph, eta0, std::make_shared<const ClockSampler>(graph, mode), eps, rng, budget);
}

/// eta_T after every tick with time <= T. A lazy source loses the first tick past T.
template <TickSourceLike Source>
OpinionConfig run_fixed_horizon(const Graph& graph, OpinionConfig eta0, double horizon, Source& source) {
    if (!(horizon >= 0.0)) throw SpecError("run_fixed_horizon: T must be nonnegative");
    VoterState state(graph, std::move(eta0));
    for (auto tick = source.next(); tick && tick->time <= horizon; tick = source.next()) state.apply_tick(*tick);
    return state.config();
}

/// Both projections of one coupled stream, run to the fixed time T.
inline std::pair<OpinionConfig, OpinionConfig> run_coupled_fixed_horizon(
    const Graph& graph, const OpinionConfig& eta0, double horizon, std::shared_ptr<const ClockSampler> clocks,
    double eps, Rng rng) {
    if (!(horizon >= 0.0)) throw SpecError("run_coupled_fixed_horizon: T must be nonnegative");
    CoupledTickSource source(std::move(clocks), eps, rng);
    VoterState left(graph, eta0);
    VoterState right(graph, eta0);
    for (Tick tick = source.next(); tick.time <= horizon; tick = source.next()) {
        if (left.absorbed() && right.absorbed()) break;
        if (belongs_to(tick.channel, Side::Left)) left.apply_trusted(tick);
        if (belongs_to(tick.channel, Side::Right)) right.apply_trusted(tick);
    }
    return {left.config(), right.config()};
}

/// Strict majority of a Boolean configuration; a tie returns 0.
inline Opinion majority(const OpinionConfig& config) {
    std::size_t ones = 0;
    for (Opinion o : config) {
        if (o > 1) throw SpecError("majority: configuration is not Boolean");
        ones += o;
    }
    return 2 * ones > config.size() ? 1 : 0;
}

}  // namespace voterlab
