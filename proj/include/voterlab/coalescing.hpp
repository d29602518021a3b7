#pragma once

// Coalescing random walks on the same clocks as the voter model.
//
// Forward convention: a walker at u jumps to v when (u, v) ticks.
// Backward convention: walking back in time, a walker at v jumps to u when
// (u, v) ticks; these traces recover the origin of each opinion.
//
// The consensus vertex Z (the vertex whose initial opinion wins) is a pathwise
// function of the tick stream: for any horizon H at or beyond the absorption
// time of the identity-labelled voter model, every backward trace from H ends
// at Z. The samplers below extend a stored log by doubling H until all
// backward traces have merged, which returns that pathwise Z exactly.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "voterlab/errors.hpp"
#include "voterlab/graph.hpp"
#include "voterlab/rng.hpp"
#include "voterlab/ticks.hpp"

namespace voterlab {

/// One walker per start vertex; walkers merge on meeting (union-find over start vertices).
class CoalescingWalkers {
public:
    explicit CoalescingWalkers(std::size_t n)
        : occupant_(n), parent_(n), location_(n), clusters_(n) {
        std::iota(occupant_.begin(), occupant_.end(), Vertex{0});
        std::iota(parent_.begin(), parent_.end(), Vertex{0});
        std::iota(location_.begin(), location_.end(), Vertex{0});
    }

    /// Every walker at `from` moves to `to`, merging with any walker there.
    void move(Vertex from, Vertex to) {
        const Vertex walker = occupant_[from];
        if (walker == kEmpty) return;
        occupant_[from] = kEmpty;
        const Vertex resident = occupant_[to];
        if (resident == kEmpty) {
            occupant_[to] = walker;
            location_[walker] = to;
            return;
        }
        parent_[walker] = resident;
        --clusters_;
    }

    void step_forward(const DirectedEdge& e) { move(e.from, e.to); }
    void step_backward(const DirectedEdge& e) { move(e.to, e.from); }

    std::size_t cluster_count() const noexcept { return clusters_; }

    /// Representative of the cluster containing the walker that started at `start`.
    Vertex cluster_of(Vertex start) const {
        while (parent_[start] != start) {
            parent_[start] = parent_[parent_[start]];
            start = parent_[start];
        }
        return start;
    }

    Vertex position_of(Vertex start) const { return location_[cluster_of(start)]; }

    std::vector<Vertex> occupied() const {
        std::vector<Vertex> out;
        for (Vertex v = 0; v < occupant_.size(); ++v)
            if (occupant_[v] != kEmpty) out.push_back(v);
        return out;
    }

private:
    static constexpr Vertex kEmpty = std::numeric_limits<Vertex>::max();

    std::vector<Vertex> occupant_;  // vertex -> cluster representative
    mutable std::vector<Vertex> parent_;
    std::vector<Vertex> location_;  // representative -> vertex
    std::size_t clusters_;
};

/// Forward coalescence time T_C of walkers started at every vertex.
inline double coalescence_time(const Graph& graph, Rng rng, DynamicsMode mode = DynamicsMode::EdgeRate,
                               std::uint64_t budget = kDefaultTickBudget) {
    CoupledTickSource source(graph, 0.0, rng, mode);
    CoalescingWalkers walkers(graph.size());
    for (std::uint64_t used = 0; used < budget; ++used) {
        const Tick tick = source.next();
        walkers.step_forward(tick.edge);
        if (walkers.cluster_count() == 1) return tick.time;
    }
    throw TickBudgetExceeded(budget);
}

/// Pure function of (log, t, start): follows ticks at or before t in
/// decreasing time, jumping v -> u on each tick of (u, v).
inline Vertex backward_trace(const TickLog& log, double t, Vertex start) {
    if (t > log.horizon) throw SpecError("backward_trace: t exceeds the log horizon");
    Vertex position = start;
    for (auto it = log.ticks.rbegin(); it != log.ticks.rend(); ++it) {
        if (it->time > t) continue;
        if (it->edge.to == position) position = it->edge.from;
    }
    return position;
}

/// Backward system from log.horizon on one side of the log: the common
/// endpoint at time 0 if all traces merged, otherwise nullopt.
inline std::optional<Vertex> consensus_vertex_from_log(const TickLog& log, Side side, std::size_t n) {
    std::vector<char> occupied(n, 1);
    std::size_t count = n;
    auto it = log.ticks.rbegin();
    Vertex last = 0;
    for (; it != log.ticks.rend() && count > 1; ++it) {
        if (!belongs_to(it->channel, side)) continue;
        const Vertex from = it->edge.from;
        const Vertex to = it->edge.to;
        if (!occupied[to]) continue;
        occupied[to] = 0;
        if (occupied[from]) {
            --count;
        } else {
            occupied[from] = 1;
        }
        last = from;
    }
    if (count > 1) return std::nullopt;
    // One walker left at `last`; follow it down to time 0.
    for (; it != log.ticks.rend(); ++it) {
        if (belongs_to(it->channel, side) && it->edge.to == last) last = it->edge.from;
    }
    return last;
}

/// Time (measured backwards from log.horizon) at which the backward system
/// becomes a single walker; nullopt if that does not happen by time 0.
inline std::optional<double> backward_coalescence_time(const TickLog& log, Side side, std::size_t n) {
    CoalescingWalkers walkers(n);
    for (auto it = log.ticks.rbegin(); it != log.ticks.rend(); ++it) {
        if (!belongs_to(it->channel, side)) continue;
        walkers.step_backward(it->edge);
        if (walkers.cluster_count() == 1) return log.horizon - it->time;
    }
    return std::nullopt;
}

namespace detail {

/// Grows `log` along `source` until `done(log)` holds, doubling the horizon.
template <class Done>
void extend_until(CoupledTickSource& source, TickLog& log, std::optional<Tick>& pending, std::uint64_t budget,
                  Done&& done) {
    log.horizon = 1.0;
    for (;;) {
        for (;;) {
            if (!pending) pending = source.next();
            if (pending->time > log.horizon) break;
            if (log.ticks.size() == budget) throw TickBudgetExceeded(budget);
            log.ticks.push_back(*pending);
            pending.reset();
        }
        if (done(log)) return;
        log.horizon *= 2.0;
    }
}

}  // namespace detail

/// The vertex whose initial opinion becomes the consensus, for one fresh tick stream.
inline Vertex sample_consensus_vertex(const Graph& graph, Rng rng, DynamicsMode mode = DynamicsMode::EdgeRate,
                                      std::uint64_t budget = kDefaultTickBudget) {
    CoupledTickSource source(graph, 0.0, rng, mode);
    TickLog log;
    std::optional<Tick> pending;
    std::optional<Vertex> z;
    detail::extend_until(source, log, pending, budget, [&](const TickLog& l) {
        z = consensus_vertex_from_log(l, Side::Left, graph.size());
        return z.has_value();
    });
    return *z;
}

/// Consensus vertices of the two projections of one coupled stream.
inline std::pair<Vertex, Vertex> sample_coupled_consensus_vertices(const Graph& graph,
                                                                  std::shared_ptr<const ClockSampler> clocks,
                                                                  double eps, Rng rng,
                                                                  std::uint64_t budget = kDefaultTickBudget) {
    CoupledTickSource source(std::move(clocks), eps, rng);
    TickLog log;
    std::optional<Tick> pending;
    std::optional<Vertex> left;
    std::optional<Vertex> right;
    detail::extend_until(source, log, pending, budget, [&](const TickLog& l) {
        if (!left) left = consensus_vertex_from_log(l, Side::Left, graph.size());
        if (left) right = consensus_vertex_from_log(l, Side::Right, graph.size());
        // A left endpoint found at a shorter horizon stays valid (it is pathwise).
        return left && right;
    });
    return {*left, *right};
}

inline std::pair<Vertex, Vertex> sample_coupled_consensus_vertices(const Graph& graph, double eps, Rng rng,
                                                                  DynamicsMode mode = DynamicsMode::EdgeRate,
                                                                  std::uint64_t budget = kDefaultTickBudget) {
    require_noise_level(eps, "sample_coupled_consensus_vertices");
    return sample_coupled_consensus_vertices(graph, std::make_shared<const ClockSampler>(graph, mode), eps, rng,
                                             budget);
}

/// Time-weighted occupation of V x V; state (u, v) has index u*n + v.
struct PairOccupation {
    std::size_t n = 0;
    double duration = 0.0;
    std::vector<double> time;

    std::vector<double> fractions() const {
        std::vector<double> out(time.size());
        for (std::size_t i = 0; i < time.size(); ++i) out[i] = time[i] / duration;
        return out;
    }

    double diagonal_fraction() const {
        double sum = 0.0;
        for (std::size_t u = 0; u < n; ++u) sum += time[u * n + u];
        return sum / duration;
    }
};

/// Forward pair (X, X^eps) of walkers on the two projections of the coupled
/// clocks (EdgeRate dynamics). Apart, each walker leaves u across each edge at
/// rate w; together they cross each edge jointly at rate (1-eps)w and each
/// alone at rate eps*w. With eps = 0 the diagonal is absorbing.
inline PairOccupation coupled_pair_walk(const Graph& graph, double eps, double duration, Rng rng,
                                        Vertex left_start = 0, Vertex right_start = 0) {
    require_noise_level(eps, "coupled_pair_walk");
    require_horizon(duration, "coupled_pair_walk");
    const std::size_t n = graph.size();
    if (left_start >= n || right_start >= n) throw SpecError("coupled_pair_walk: start vertex out of range");

    auto step_from = [&](Vertex u) {
        const auto nbs = graph.neighbours(u);
        double target = rng.uniform() * graph.strength(u);
        for (const auto& nb : nbs) {
            if (target < nb.weight) return nb.vertex;
            target -= nb.weight;
        }
        return nbs.back().vertex;
    };

    PairOccupation occ{n, duration, std::vector<double>(n * n, 0.0)};
    Vertex left = left_start;
    Vertex right = right_start;
    double clock = 0.0;
    while (clock < duration) {
        const bool together = left == right;
        const double total = together ? (1.0 + eps) * graph.strength(left)
                                      : graph.strength(left) + graph.strength(right);
        const double gap = rng.exponential(total);
        occ.time[left * n + right] += std::min(gap, duration - clock);
        clock += gap;
        if (clock >= duration) break;
        if (together) {
            const Vertex target = step_from(left);
            const double u = rng.uniform() * (1.0 + eps);
            if (u < 1.0 - eps) {
                left = right = target;
            } else if (u < 1.0) {
                left = target;
            } else {
                right = target;
            }
        } else if (rng.uniform() * total < graph.strength(left)) {
            left = step_from(left);
        } else {
            right = step_from(right);
        }
    }
    return occ;
}

}  // namespace voterlab
