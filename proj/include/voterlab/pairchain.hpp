#pragma once

// Exact analysis of the coupled two-walker chain on V x V.
//
// Off-diagonal rates of Q, for an edge {x, y} of weight w:
//   (u,u) -> (u',u')  (1-eps) w   both walkers cross u ~ u' together
//   (u,u) -> (u',u)   eps w       left walker alone
//   (u,u) -> (u,v')   eps w       right walker alone
//   (u,v) -> (u',v)   w           u != v, left moves
//   (u,v) -> (u,v')   w           u != v, right moves
// nu(u,v) = 1 if u == v else eps is reversible for Q, so the stationary law is
// pi = nu / (n + (n^2 - n) eps).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "voterlab/errors.hpp"
#include "voterlab/graph.hpp"

namespace voterlab {

struct Transition {
    std::size_t from = 0;
    std::size_t to = 0;
    double rate = 0.0;
};

struct PairChain {
    std::size_t n = 0;
    double eps = 0.0;
    /// Off-diagonal entries sorted by (from, to); row x occupies [row_begin[x], row_begin[x+1]).
    std::vector<Transition> transitions;
    std::vector<std::size_t> row_begin;
    /// -Q(x, x).
    std::vector<double> exit_rate;
    std::vector<double> nu;
    double normalizer = 0.0;

    std::size_t state_count() const noexcept { return n * n; }
    std::size_t state(Vertex u, Vertex v) const noexcept { return static_cast<std::size_t>(u) * n + v; }

    double rate(std::size_t x, std::size_t y) const {
        if (x == y) return -exit_rate[x];
        const auto first = transitions.begin() + static_cast<std::ptrdiff_t>(row_begin[x]);
        const auto last = transitions.begin() + static_cast<std::ptrdiff_t>(row_begin[x + 1]);
        const auto it = std::lower_bound(first, last, y, [](const Transition& t, std::size_t target) { return t.to < target; });
        return it != last && it->to == y ? it->rate : 0.0;
    }

    std::vector<double> pi() const {
        std::vector<double> out(nu.size());
        for (std::size_t i = 0; i < nu.size(); ++i) out[i] = nu[i] / normalizer;
        return out;
    }
};

inline constexpr std::size_t kDefaultPairStateCap = 250'000;

inline void require_positive_noise(double eps, const char* where) {
    if (!(eps > 0.0 && eps <= 1.0)) {
        throw SpecError(std::string(where) + ": eps must lie in (0, 1], got " + std::to_string(eps) +
                        " (at eps = 0 the diagonal is a closed class)");
    }
}

inline PairChain build_pair_chain(const Graph& graph, double eps, std::size_t max_states = kDefaultPairStateCap) {
    require_positive_noise(eps, "build_pair_chain");
    const std::size_t n = graph.size();
    if (n * n > max_states) {
        throw SpecError("build_pair_chain: " + std::to_string(n * n) + " states exceed the cap of " +
                        std::to_string(max_states));
    }
    PairChain chain;
    chain.n = n;
    chain.eps = eps;
    chain.row_begin.assign(n * n + 1, 0);
    chain.exit_rate.assign(n * n, 0.0);
    chain.nu.assign(n * n, eps);

    std::vector<Transition> row;
    for (Vertex u = 0; u < n; ++u) {
        for (Vertex v = 0; v < n; ++v) {
            const std::size_t x = chain.state(u, v);
            row.clear();
            if (u == v) {
                chain.nu[x] = 1.0;
                for (const auto& nb : graph.neighbours(u)) {
                    row.push_back({x, chain.state(nb.vertex, nb.vertex), (1.0 - eps) * nb.weight});
                    row.push_back({x, chain.state(nb.vertex, u), eps * nb.weight});
                    row.push_back({x, chain.state(u, nb.vertex), eps * nb.weight});
                }
            } else {
                for (const auto& nb : graph.neighbours(u)) row.push_back({x, chain.state(nb.vertex, v), nb.weight});
                for (const auto& nb : graph.neighbours(v)) row.push_back({x, chain.state(u, nb.vertex), nb.weight});
            }
            std::sort(row.begin(), row.end(), [](const Transition& a, const Transition& b) { return a.to < b.to; });
            for (const auto& t : row) {
                if (t.rate == 0.0) continue;  // eps = 1 leaves no joint moves
                if (!chain.transitions.empty() && chain.transitions.back().from == x &&
                    chain.transitions.back().to == t.to) {
                    chain.transitions.back().rate += t.rate;
                } else {
                    chain.transitions.push_back(t);
                }
                chain.exit_rate[x] += t.rate;
            }
            chain.row_begin[x + 1] = chain.transitions.size();
        }
    }
    chain.normalizer = static_cast<double>(n) + static_cast<double>(n * n - n) * eps;
    return chain;
}

/// max over x != y of |nu(x) Q(x,y) - nu(y) Q(y,x)|.
inline double check_reversibility(const PairChain& chain) {
    double worst = 0.0;
    for (const auto& t : chain.transitions) {
        const double forward = chain.nu[t.from] * t.rate;
        const double backward = chain.nu[t.to] * chain.rate(t.to, t.from);
        worst = std::max(worst, std::abs(forward - backward));
    }
    return worst;
}

/// max_y |(pi Q)(y)|.
inline double stationary_residual(const PairChain& chain, const std::vector<double>& pi) {
    std::vector<double> flow(chain.state_count(), 0.0);
    for (std::size_t x = 0; x < chain.state_count(); ++x) flow[x] -= pi[x] * chain.exit_rate[x];
    for (const auto& t : chain.transitions) flow[t.to] += pi[t.from] * t.rate;
    double worst = 0.0;
    for (double f : flow) worst = std::max(worst, std::abs(f));
    return worst;
}

struct StationaryOptions {
    /// Chains with at most this many states use a dense LU solve.
    std::size_t dense_limit = 4096;
    double tolerance = 1e-12;
    std::uint64_t max_iterations = 1'000'000;
};

/// Solves pi Q = 0, sum pi = 1 without using nu.
inline std::vector<double> stationary_solve(const PairChain& chain, const StationaryOptions& options = {}) {
    const std::size_t size = chain.state_count();
    std::vector<double> pi(size, 1.0 / static_cast<double>(size));
    if (size <= options.dense_limit) {
        // Q^T pi = 0 with the last balance equation replaced by normalisation.
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
        for (std::size_t x = 0; x < size; ++x) a(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)) = -chain.exit_rate[x];
        for (const auto& t : chain.transitions) {
            a(static_cast<Eigen::Index>(t.to), static_cast<Eigen::Index>(t.from)) += t.rate;
        }
        a.row(static_cast<Eigen::Index>(size) - 1).setOnes();
        Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
        b(static_cast<Eigen::Index>(size) - 1) = 1.0;
        const Eigen::VectorXd solution = a.partialPivLu().solve(b);
        for (std::size_t x = 0; x < size; ++x) pi[x] = solution(static_cast<Eigen::Index>(x));
        const double residual = stationary_residual(chain, pi);
        if (!(residual <= 1e3 * options.tolerance)) throw ConvergenceError("stationary_solve: dense solve inaccurate", residual);
        return pi;
    }

    // Power iteration on the uniformised kernel I + Q / lambda.
    const double lambda = 1.01 * *std::max_element(chain.exit_rate.begin(), chain.exit_rate.end());
    std::vector<double> next(size);
    double residual = 0.0;
    for (std::uint64_t it = 0; it < options.max_iterations; ++it) {
        for (std::size_t x = 0; x < size; ++x) next[x] = pi[x] * (1.0 - chain.exit_rate[x] / lambda);
        for (const auto& t : chain.transitions) next[t.to] += pi[t.from] * t.rate / lambda;
        double total = 0.0;
        for (double p : next) total += p;
        for (std::size_t x = 0; x < size; ++x) pi[x] = next[x] / total;
        if (it % 64 == 63 || it + 1 == options.max_iterations) {
            residual = stationary_residual(chain, pi);
            if (residual <= options.tolerance) return pi;
        }
    }
    throw ConvergenceError("stationary_solve: power iteration hit the iteration cap", residual);
}

/// pi(X = X') = 1 / (1 + (n-1) eps).
inline double diagonal_mass(std::size_t n, double eps) {
    if (n < 2) throw SpecError("diagonal_mass: n must be at least 2");
    require_positive_noise(eps, "diagonal_mass");
    return 1.0 / (1.0 + static_cast<double>(n - 1) * eps);
}

namespace detail {
inline void require_closed_form_args(std::size_t n, double eps, double p, const char* where) {
    if (n < 1) throw SpecError(std::string(where) + ": n must be positive");
    if (!(eps >= 0.0 && eps <= 1.0)) throw SpecError(std::string(where) + ": eps must lie in [0, 1]");
    if (!(p >= 0.0 && p <= 1.0)) throw SpecError(std::string(where) + ": p must lie in [0, 1]");
}
}  // namespace detail

/// E[f(eta0, P) f(eta0, P^eps)] for Bernoulli(p) initial opinions.
inline double product_moment(std::size_t n, double eps, double p) {
    detail::require_closed_form_args(n, eps, p, "product_moment");
    return p * p + (p - p * p) / (1.0 + static_cast<double>(n - 1) * eps);
}

inline double covariance(std::size_t n, double eps, double p) {
    detail::require_closed_form_args(n, eps, p, "covariance");
    return p * (1.0 - p) / (1.0 + static_cast<double>(n - 1) * eps);
}

enum class ThresholdRegime { Vanishing, Persistent, Inconclusive };

inline const char* to_string(ThresholdRegime r) {
    switch (r) {
        case ThresholdRegime::Vanishing: return "vanishing";
        case ThresholdRegime::Persistent: return "persistent";
        case ThresholdRegime::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct ThresholdReport {
    std::vector<double> covariances;
    std::vector<double> n_eps;
    ThresholdRegime regime = ThresholdRegime::Inconclusive;
    /// p(1-p) / (1 + max n*eps): a floor for every covariance in the sequence.
    double covariance_floor = 0.0;
};

/// Numeric illustration of the threshold on n*eps_n, not a proof.
///
/// Persistent: n*eps stays within a factor 2 of its first value, so the
/// covariances are bounded below by covariance_floor. Vanishing: n*eps is
/// nondecreasing and grows by at least a factor 4 over the sequence.
inline ThresholdReport theorem_threshold(const std::vector<std::size_t>& ns, const std::vector<double>& eps, double p) {
    if (ns.size() != eps.size()) throw SpecError("theorem_threshold: sequences differ in length");
    ThresholdReport report;
    double max_product = 0.0;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        report.covariances.push_back(covariance(ns[k], eps[k], p));
        report.n_eps.push_back(static_cast<double>(ns[k]) * eps[k]);
        max_product = std::max(max_product, report.n_eps.back());
    }
    report.covariance_floor = p * (1.0 - p) / (1.0 + max_product);
    if (report.n_eps.size() < 2 || report.n_eps.front() <= 0.0) return report;
    const double first = report.n_eps.front();
    const bool bounded = std::all_of(report.n_eps.begin(), report.n_eps.end(),
                                     [&](double m) { return m <= 2.0 * first && m >= 0.5 * first; });
    const bool growing = std::is_sorted(report.n_eps.begin(), report.n_eps.end()) && report.n_eps.back() >= 4.0 * first;
    if (bounded) {
        report.regime = ThresholdRegime::Persistent;
    } else if (growing) {
        report.regime = ThresholdRegime::Vanishing;
    }
    return report;
}

}  // namespace voterlab
