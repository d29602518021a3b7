#pragma once

// Poisson clock machinery for the coupled pair (P, P^eps).
//
// Every directed edge with clock rate r carries three independent Poisson
// channels: Shared at rate r(1-eps), LeftOnly at rate r*eps, RightOnly at rate
// r*eps. The left process P is Shared + LeftOnly and the right process P^eps is
// Shared + RightOnly, so each is marginally a rate-r Poisson process and P^eps
// is an eps-thinning of P superposed with fresh rate r*eps ticks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "voterlab/errors.hpp"
#include "voterlab/graph.hpp"
#include "voterlab/rng.hpp"

namespace voterlab {

/// EdgeRate: each orientation of edge e rings at rate w_e.
/// UniformNeighbour: each vertex rings at rate 1 and copies a neighbour chosen
/// proportionally to edge weight (uniformly on unit-weight graphs).
enum class DynamicsMode { EdgeRate, UniformNeighbour };

inline const char* to_string(DynamicsMode mode) {
    return mode == DynamicsMode::EdgeRate ? "edge" : "uniform";
}

/// A tick on (from, to) makes `to` copy the opinion of `from`.
struct DirectedEdge {
    Vertex from = 0;
    Vertex to = 0;

    friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
};

enum class Channel : std::uint8_t { Shared, LeftOnly, RightOnly };
enum class Side { Left, Right };

inline const char* to_string(Channel c) {
    switch (c) {
        case Channel::Shared: return "shared";
        case Channel::LeftOnly: return "left";
        case Channel::RightOnly: return "right";
    }
    return "?";
}

constexpr bool belongs_to(Channel c, Side side) noexcept {
    return c == Channel::Shared || (side == Side::Left ? c == Channel::LeftOnly : c == Channel::RightOnly);
}

struct Tick {
    double time = 0.0;
    DirectedEdge edge;
    Channel channel = Channel::Shared;

    friend bool operator==(const Tick&, const Tick&) = default;
};

/// Ticks of a coupled construction restricted to [0, horizon], in time order.
struct TickLog {
    double horizon = 0.0;
    std::vector<Tick> ticks;

    friend bool operator==(const TickLog&, const TickLog&) = default;
};

inline void require_noise_level(double eps, const char* where) {
    if (!(eps >= 0.0 && eps <= 1.0)) {
        throw SpecError(std::string(where) + ": eps must lie in [0, 1], got " + std::to_string(eps));
    }
}

/// Walker's alias method over a fixed weight vector.
class AliasTable {
public:
    AliasTable() = default;

    explicit AliasTable(std::span<const double> weights) : probability_(weights.size()), alias_(weights.size()) {
        const std::size_t k = weights.size();
        if (k == 0) throw SpecError("AliasTable: empty weight vector");
        double total = 0.0;
        for (double w : weights) total += w;
        std::vector<double> scaled(k);
        std::vector<std::size_t> small;
        std::vector<std::size_t> large;
        for (std::size_t i = 0; i < k; ++i) {
            scaled[i] = weights[i] * static_cast<double>(k) / total;
            (scaled[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            const std::size_t s = small.back();
            small.pop_back();
            const std::size_t l = large.back();
            probability_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (std::size_t i : large) probability_[i] = 1.0;
        for (std::size_t i : small) probability_[i] = 1.0;
    }

    std::size_t size() const noexcept { return probability_.size(); }

    std::size_t sample(Rng& rng) const {
        const std::size_t column = rng.below(probability_.size());
        return rng.uniform() < probability_[column] ? column : alias_[column];
    }

private:
    std::vector<double> probability_;
    std::vector<std::size_t> alias_;
};

/// Chooses which directed edge rings next, proportionally to its clock rate.
class ClockSampler {
public:
    ClockSampler(const Graph& graph, DynamicsMode mode) : graph_(&graph), mode_(mode) {
        if (mode == DynamicsMode::EdgeRate) {
            std::vector<double> weights;
            weights.reserve(graph.edge_count());
            for (const auto& e : graph.edges()) weights.push_back(e.weight);
            edges_ = AliasTable(weights);
            total_rate_ = 2.0 * graph.total_weight();
        } else {
            unit_weight_ = graph.is_unit_weight();
            if (!unit_weight_) {
                cumulative_.resize(graph.size());
                for (Vertex v = 0; v < graph.size(); ++v) {
                    double acc = 0.0;
                    for (const auto& nb : graph.neighbours(v)) cumulative_[v].push_back(acc += nb.weight);
                }
            }
            total_rate_ = static_cast<double>(graph.size());
        }
    }

    const Graph& graph() const noexcept { return *graph_; }
    DynamicsMode mode() const noexcept { return mode_; }

    /// Sum of clock rates over all directed edges.
    double total_rate() const noexcept { return total_rate_; }

    /// Clock rate of one directed edge (0 when it is not an edge).
    double directed_rate(Vertex from, Vertex to) const {
        const auto w = graph_->edge_weight(from, to);
        if (!w) return 0.0;
        return mode_ == DynamicsMode::EdgeRate ? *w : *w / graph_->strength(to);
    }

    DirectedEdge sample(Rng& rng) const {
        if (mode_ == DynamicsMode::EdgeRate) {
            const auto& e = graph_->edges()[edges_.sample(rng)];
            return rng.below(2) == 0 ? DirectedEdge{e.u, e.v} : DirectedEdge{e.v, e.u};
        }
        // The activated vertex copies a neighbour.
        const auto v = static_cast<Vertex>(rng.below(graph_->size()));
        const auto nbs = graph_->neighbours(v);
        std::size_t pick = 0;
        if (unit_weight_) {
            pick = rng.below(nbs.size());
        } else {
            const auto& cum = cumulative_[v];
            const double target = rng.uniform() * cum.back();
            pick = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), target) - cum.begin());
            pick = std::min(pick, nbs.size() - 1);
        }
        return {nbs[pick].vertex, v};
    }

private:
    const Graph* graph_;
    DynamicsMode mode_;
    AliasTable edges_;
    bool unit_weight_ = true;
    std::vector<std::vector<double>> cumulative_;
    double total_rate_ = 0.0;
};

/// Lazy Gillespie generator of the coupled tick stream.
///
/// Gaps are exponential with total rate (1+eps) * sum of directed rates; the
/// directed edge is chosen proportionally to its rate and the channel
/// proportionally to (1-eps, eps, eps). The graph must outlive the source.
class CoupledTickSource {
public:
    CoupledTickSource(std::shared_ptr<const ClockSampler> clocks, double eps, Rng rng)
        : clocks_(std::move(clocks)), eps_(eps), rng_(rng) {
        require_noise_level(eps, "coupled_stream");
        total_rate_ = (1.0 + eps_) * clocks_->total_rate();
    }

    CoupledTickSource(const Graph& graph, double eps, Rng rng, DynamicsMode mode = DynamicsMode::EdgeRate)
        : CoupledTickSource(std::make_shared<const ClockSampler>(graph, mode), eps, rng) {}

    Tick next() {
        time_ += rng_.exponential(total_rate_);
        Tick tick;
        tick.time = time_;
        tick.edge = clocks_->sample(rng_);
        const double u = rng_.uniform() * (1.0 + eps_);
        tick.channel = u < 1.0 - eps_ ? Channel::Shared : (u < 1.0 ? Channel::LeftOnly : Channel::RightOnly);
        return tick;
    }

    double eps() const noexcept { return eps_; }
    double total_rate() const noexcept { return total_rate_; }
    double time() const noexcept { return time_; }
    const ClockSampler& clocks() const noexcept { return *clocks_; }

private:
    std::shared_ptr<const ClockSampler> clocks_;
    double eps_;
    Rng rng_;
    double time_ = 0.0;
    double total_rate_ = 0.0;
};

inline CoupledTickSource coupled_stream(const Graph& graph, double eps, Rng rng,
                                        DynamicsMode mode = DynamicsMode::EdgeRate) {
    return CoupledTickSource(graph, eps, rng, mode);
}

/// One side of a lazy coupled stream. Never runs dry.
class ProjectedSource {
public:
    ProjectedSource(CoupledTickSource& source, Side side) : source_(&source), side_(side) {}

    std::optional<Tick> next() {
        for (;;) {
            Tick t = source_->next();
            if (belongs_to(t.channel, side_)) return t;
        }
    }

private:
    CoupledTickSource* source_;
    Side side_;
};

/// Replays stored ticks in order; returns nullopt once exhausted.
class LogCursor {
public:
    explicit LogCursor(std::span<const Tick> ticks) : ticks_(ticks) {}

    std::optional<Tick> next() {
        if (position_ == ticks_.size()) return std::nullopt;
        return ticks_[position_++];
    }

private:
    std::span<const Tick> ticks_;
    std::size_t position_ = 0;
};

inline void require_horizon(double horizon, const char* where) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw SpecError(std::string(where) + ": horizon must be positive and finite");
    }
}

/// Materialises the coupled stream on [0, horizon].
inline TickLog record_log(const Graph& graph, double eps, double horizon, Rng rng,
                          DynamicsMode mode = DynamicsMode::EdgeRate) {
    require_horizon(horizon, "record_log");
    CoupledTickSource source(graph, eps, rng, mode);
    TickLog log{horizon, {}};
    for (Tick t = source.next(); t.time <= horizon; t = source.next()) log.ticks.push_back(t);
    return log;
}

/// Builds P^eps from a log of the left process alone: each input tick survives
/// independently with probability 1-eps (tagged Shared, else LeftOnly), and an
/// independent rate r*eps process per directed edge is superposed (RightOnly).
inline TickLog thin_and_augment(const Graph& graph, const TickLog& left, double eps, Rng rng,
                                DynamicsMode mode = DynamicsMode::EdgeRate) {
    require_noise_level(eps, "thin_and_augment");
    require_horizon(left.horizon, "thin_and_augment");
    TickLog kept{left.horizon, {}};
    kept.ticks.reserve(left.ticks.size());
    for (const auto& t : left.ticks) {
        if (t.channel == Channel::RightOnly) {
            throw SpecError("thin_and_augment: input must contain left-process ticks only");
        }
        Tick out = t;
        out.channel = rng.uniform() < 1.0 - eps ? Channel::Shared : Channel::LeftOnly;
        kept.ticks.push_back(out);
    }
    std::vector<Tick> fresh;
    if (eps > 0.0) {
        const ClockSampler clocks(graph, mode);
        const double rate = eps * clocks.total_rate();
        for (double time = rng.exponential(rate); time <= left.horizon; time += rng.exponential(rate)) {
            fresh.push_back({time, clocks.sample(rng), Channel::RightOnly});
        }
    }
    TickLog out{left.horizon, {}};
    out.ticks.resize(kept.ticks.size() + fresh.size());
    std::merge(kept.ticks.begin(), kept.ticks.end(), fresh.begin(), fresh.end(), out.ticks.begin(),
               [](const Tick& a, const Tick& b) { return a.time < b.time; });
    return out;
}

/// Left = Shared + LeftOnly, right = Shared + RightOnly, order preserved.
inline TickLog project(const TickLog& log, Side side) {
    TickLog out{log.horizon, {}};
    for (const auto& t : log.ticks)
        if (belongs_to(t.channel, side)) out.ticks.push_back(t);
    return out;
}

/// Debug dump: columns time, from, to, channel.
inline void write_tick_csv(std::ostream& out, const TickLog& log) {
    out << "time,from,to,channel\n";
    char buffer[32];
    for (const auto& t : log.ticks) {
        std::snprintf(buffer, sizeof buffer, "%.17g", t.time);
        out << buffer << ',' << t.edge.from << ',' << t.edge.to << ',' << to_string(t.channel) << '\n';
    }
}

}  // namespace voterlab
