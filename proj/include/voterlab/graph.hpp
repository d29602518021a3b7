#pragma once

// Finite connected weighted graphs and the standard generators.
//
// Vertices are dense integers 0..n-1. Every edge is undirected and carries a
// single positive weight, so both orientations share the same clock rate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "voterlab/errors.hpp"
#include "voterlab/rng.hpp"

namespace voterlab {

using Vertex = std::uint32_t;

struct WeightedEdge {
    Vertex u = 0;
    Vertex v = 0;
    double weight = 1.0;

    friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

struct Neighbour {
    Vertex vertex = 0;
    double weight = 1.0;
};

class Graph {
public:
    /// Validates every invariant; each violation raises a GraphError of its own kind.
    static Graph from_edge_list(std::size_t n, std::vector<WeightedEdge> edges) {
        if (n < 2) {
            throw GraphError(GraphErrorKind::TooSmall, "need at least 2 vertices, got " + std::to_string(n));
        }
        Graph g;
        g.adjacency_.resize(n);
        for (auto& e : edges) {
            if (e.u >= n || e.v >= n) {
                throw GraphError(GraphErrorKind::VertexOutOfRange,
                                 "edge {" + std::to_string(e.u) + "," + std::to_string(e.v) + "} with n=" +
                                     std::to_string(n));
            }
            if (e.u == e.v) {
                throw GraphError(GraphErrorKind::SelfLoop, "at vertex " + std::to_string(e.u));
            }
            if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
                throw GraphError(GraphErrorKind::NonPositiveWeight,
                                 "edge {" + std::to_string(e.u) + "," + std::to_string(e.v) + "}");
            }
            if (e.u > e.v) std::swap(e.u, e.v);
        }
        std::vector<std::size_t> order(edges.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::pair(edges[a].u, edges[a].v) < std::pair(edges[b].u, edges[b].v);
        });
        for (std::size_t i = 1; i < order.size(); ++i) {
            const auto& a = edges[order[i - 1]];
            const auto& b = edges[order[i]];
            if (a.u == b.u && a.v == b.v) {
                throw GraphError(GraphErrorKind::DuplicateEdge,
                                 "{" + std::to_string(a.u) + "," + std::to_string(a.v) + "}");
            }
        }
        for (const auto& e : edges) {
            g.adjacency_[e.u].push_back({e.v, e.weight});
            g.adjacency_[e.v].push_back({e.u, e.weight});
            g.total_weight_ += e.weight;
        }
        for (auto& list : g.adjacency_) {
            std::sort(list.begin(), list.end(), [](const Neighbour& a, const Neighbour& b) { return a.vertex < b.vertex; });
        }
        g.edges_ = std::move(edges);
        if (!g.is_connected()) {
            throw GraphError(GraphErrorKind::Disconnected, std::to_string(n) + " vertices");
        }
        g.strength_.resize(n);
        for (std::size_t v = 0; v < n; ++v) {
            for (const auto& nb : g.adjacency_[v]) g.strength_[v] += nb.weight;
        }
        return g;
    }

    std::size_t size() const noexcept { return adjacency_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<WeightedEdge>& edges() const noexcept { return edges_; }

    std::span<const Neighbour> neighbours(Vertex v) const { return adjacency_[v]; }
    std::size_t degree(Vertex v) const { return adjacency_[v].size(); }

    /// Sum of incident edge weights.
    double strength(Vertex v) const { return strength_[v]; }

    /// Sum of w_e over undirected edges.
    double total_weight() const noexcept { return total_weight_; }

    bool is_unit_weight() const noexcept {
        return std::all_of(edges_.begin(), edges_.end(), [](const WeightedEdge& e) { return e.weight == 1.0; });
    }

    std::optional<double> edge_weight(Vertex u, Vertex v) const {
        if (u >= size() || v >= size()) return std::nullopt;
        const auto& list = adjacency_[u];
        auto it = std::lower_bound(list.begin(), list.end(), v,
                                   [](const Neighbour& nb, Vertex x) { return nb.vertex < x; });
        if (it == list.end() || it->vertex != v) return std::nullopt;
        return it->weight;
    }

    bool has_edge(Vertex u, Vertex v) const { return edge_weight(u, v).has_value(); }

    /// Writes the "n m" / "u v w" edge-list text format.
    void write_edge_list(std::ostream& out) const {
        out << size() << ' ' << edge_count() << '\n';
        for (const auto& e : edges_) out << e.u << ' ' << e.v << ' ' << e.weight << '\n';
    }

private:
    Graph() = default;

    bool is_connected() const {
        std::vector<char> seen(size(), 0);
        std::vector<Vertex> stack{0};
        seen[0] = 1;
        std::size_t reached = 1;
        while (!stack.empty()) {
            const Vertex v = stack.back();
            stack.pop_back();
            for (const auto& nb : adjacency_[v]) {
                if (!seen[nb.vertex]) {
                    seen[nb.vertex] = 1;
                    ++reached;
                    stack.push_back(nb.vertex);
                }
            }
        }
        return reached == size();
    }

    std::vector<std::vector<Neighbour>> adjacency_;
    std::vector<WeightedEdge> edges_;
    std::vector<double> strength_;
    double total_weight_ = 0.0;
};

namespace detail {
inline void require_size(std::size_t n, std::size_t minimum, const char* name) {
    if (n < minimum) {
        throw GraphError(GraphErrorKind::TooSmall,
                         std::string(name) + " needs n >= " + std::to_string(minimum) + ", got " + std::to_string(n));
    }
}
}  // namespace detail

inline Graph complete(std::size_t n) {
    detail::require_size(n, 2, "complete");
    std::vector<WeightedEdge> edges;
    for (Vertex u = 0; u < n; ++u)
        for (Vertex v = u + 1; v < n; ++v) edges.push_back({u, v, 1.0});
    return Graph::from_edge_list(n, std::move(edges));
}

/// C_n; n >= 3 since C_2 would need a doubled edge.
inline Graph cycle(std::size_t n) {
    detail::require_size(n, 3, "cycle");
    std::vector<WeightedEdge> edges;
    for (Vertex v = 0; v < n; ++v) edges.push_back({v, static_cast<Vertex>((v + 1) % n), 1.0});
    return Graph::from_edge_list(n, std::move(edges));
}

inline Graph path(std::size_t n) {
    detail::require_size(n, 2, "path");
    std::vector<WeightedEdge> edges;
    for (Vertex v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1, 1.0});
    return Graph::from_edge_list(n, std::move(edges));
}

/// Centre 0 joined to leaves 1..n-1.
inline Graph star(std::size_t n) {
    detail::require_size(n, 2, "star");
    std::vector<WeightedEdge> edges;
    for (Vertex v = 1; v < n; ++v) edges.push_back({0, v, 1.0});
    return Graph::from_edge_list(n, std::move(edges));
}

/// a x b lattice; vertex (i, j) is i*b + j.
inline Graph grid2d(std::size_t a, std::size_t b) {
    if (a == 0 || b == 0 || a * b < 2) {
        throw GraphError(GraphErrorKind::TooSmall,
                         "grid2d needs a*b >= 2, got " + std::to_string(a) + "x" + std::to_string(b));
    }
    std::vector<WeightedEdge> edges;
    for (std::size_t i = 0; i < a; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            const auto v = static_cast<Vertex>(i * b + j);
            if (i + 1 < a) edges.push_back({v, static_cast<Vertex>(v + b), 1.0});
            if (j + 1 < b) edges.push_back({v, v + 1, 1.0});
        }
    }
    return Graph::from_edge_list(a * b, std::move(edges));
}

/// G(n, p) conditioned on connectivity, by whole-graph rejection.
///
/// The expected number of attempts is 1 / P(G(n,p) connected), which blows up
/// for edge_prob well below log(n)/n; callers pick parameters accordingly.
inline Graph erdos_renyi_connected(std::size_t n, double edge_prob, std::uint64_t seed) {
    detail::require_size(n, 2, "erdos_renyi_connected");
    if (!(edge_prob > 0.0 && edge_prob <= 1.0)) {
        throw SpecError("erdos_renyi_connected: edge_prob must lie in (0, 1]");
    }
    Rng rng(seed);
    for (;;) {
        std::vector<WeightedEdge> edges;
        for (Vertex u = 0; u < n; ++u)
            for (Vertex v = u + 1; v < n; ++v)
                if (rng.bernoulli(edge_prob)) edges.push_back({u, v, 1.0});
        try {
            return Graph::from_edge_list(n, std::move(edges));
        } catch (const GraphError& e) {
            if (e.kind() != GraphErrorKind::Disconnected) throw;
        }
    }
}

/// Parses "n m" followed by m lines "u v [w]" (w defaults to 1).
inline Graph read_edge_list(std::istream& in) {
    std::size_t n = 0;
    std::size_t m = 0;
    if (!(in >> n >> m)) throw SpecError("edge list: expected header 'n m'");
    std::string line;
    std::getline(in, line);
    std::vector<WeightedEdge> edges;
    edges.reserve(m);
    while (edges.size() < m && std::getline(in, line)) {
        std::istringstream fields(line);
        long long u = -1;
        long long v = -1;
        if (!(fields >> u)) continue;  // blank line
        if (!(fields >> v) || u < 0 || v < 0) {
            throw SpecError("edge list: malformed edge line '" + line + "'");
        }
        double w = 1.0;
        if (!(fields >> w)) {
            if (!fields.eof()) throw SpecError("edge list: malformed weight in '" + line + "'");
            w = 1.0;
        }
        edges.push_back({static_cast<Vertex>(u), static_cast<Vertex>(v), w});
    }
    if (edges.size() != m) {
        throw SpecError("edge list: header promised " + std::to_string(m) + " edges, found " +
                        std::to_string(edges.size()));
    }
    return Graph::from_edge_list(n, std::move(edges));
}

}  // namespace voterlab
