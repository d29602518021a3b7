#pragma once

// Random configurations and the estimators used by the experiments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "voterlab/errors.hpp"
#include "voterlab/rng.hpp"
#include "voterlab/voter.hpp"

namespace voterlab {

inline constexpr double kZ95 = 1.959963984540054;

inline OpinionConfig bernoulli_config(std::size_t n, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw SpecError("bernoulli_config: p must lie in [0, 1]");
    OpinionConfig config(n);
    for (auto& o : config) o = rng.bernoulli(p) ? 1 : 0;
    return config;
}

/// Each coordinate is independently replaced, with probability eps, by a fresh Bernoulli(p) bit.
inline OpinionConfig resample_config(const OpinionConfig& eta, double eps, double p, Rng& rng) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw SpecError("resample_config: eps must lie in [0, 1]");
    if (!(p >= 0.0 && p <= 1.0)) throw SpecError("resample_config: p must lie in [0, 1]");
    OpinionConfig out(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) {
        if (eta[i] > 1) throw SpecError("resample_config: configuration is not Boolean");
        const bool resample = rng.bernoulli(eps);
        const bool fresh = rng.bernoulli(p);
        out[i] = resample ? static_cast<Opinion>(fresh) : eta[i];
    }
    return out;
}

struct ConfidenceInterval {
    double low = 0.0;
    double high = 0.0;
};

struct SummaryStats {
    std::size_t n_trials = 0;
    double mean = 0.0;
    double variance = 0.0;
    double covariance = 0.0;
    double standard_error = 0.0;
    ConfidenceInterval ci;
};

inline SummaryStats summarize(std::span<const double> samples) {
    if (samples.size() < 2) throw SpecError("summarize: need at least 2 samples");
    SummaryStats s;
    s.n_trials = samples.size();
    const auto n = static_cast<double>(samples.size());
    double sum = 0.0;
    for (double x : samples) sum += x;
    s.mean = sum / n;
    double ss = 0.0;
    for (double x : samples) ss += (x - s.mean) * (x - s.mean);
    s.variance = ss / (n - 1.0);
    s.standard_error = std::sqrt(s.variance / n);
    s.ci = {s.mean - kZ95 * s.standard_error, s.mean + kZ95 * s.standard_error};
    return s;
}

/// Proportion with plug-in variance p(1-p) and a Wilson score interval.
inline SummaryStats proportion(std::size_t successes, std::size_t trials) {
    if (trials == 0 || successes > trials) throw SpecError("proportion: need 0 <= successes <= trials, trials > 0");
    SummaryStats s;
    s.n_trials = trials;
    const auto n = static_cast<double>(trials);
    s.mean = static_cast<double>(successes) / n;
    s.variance = s.mean * (1.0 - s.mean);
    s.standard_error = std::sqrt(s.variance / n);
    const double z2 = kZ95 * kZ95;
    const double centre = (s.mean + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = kZ95 / (1.0 + z2 / n) * std::sqrt(s.variance / n + z2 / (4.0 * n * n));
    s.ci = {std::min(centre - half, s.mean), std::max(centre + half, s.mean)};
    return s;
}

/// Unbiased sample covariance (n-1 normalisation). The standard error is the
/// plug-in one: the sample standard deviation of (x_i - xbar)(y_i - ybar)
/// over sqrt(N). `variance` holds that product variance.
inline SummaryStats paired_covariance(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 2) throw SpecError("paired_covariance: need at least 2 pairs");
    const auto n = static_cast<double>(pairs.size());
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& [x, y] : pairs) {
        sx += x;
        sy += y;
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sum = 0.0;
    for (const auto& [x, y] : pairs) sum += (x - mx) * (y - my);
    const double mean_product = sum / n;
    double ss = 0.0;
    for (const auto& [x, y] : pairs) {
        const double d = (x - mx) * (y - my) - mean_product;
        ss += d * d;
    }
    SummaryStats s;
    s.n_trials = pairs.size();
    s.covariance = sum / (n - 1.0);
    s.mean = s.covariance;
    s.variance = ss / (n - 1.0);
    s.standard_error = std::sqrt(s.variance / n);
    s.ci = {s.covariance - kZ95 * s.standard_error, s.covariance + kZ95 * s.standard_error};
    return s;
}

struct CorrelationEstimate {
    std::size_t n_trials = 0;
    double correlation = std::numeric_limits<double>::quiet_NaN();
    /// Jackknife standard error.
    double standard_error = std::numeric_limits<double>::quiet_NaN();
    ConfidenceInterval ci;
};

/// Pearson correlation; NaN when either coordinate is constant.
inline CorrelationEstimate correlation(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 3) throw SpecError("correlation: need at least 3 pairs");
    double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pairs) {
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    auto pearson = [](double n, double sx, double sy, double sxx, double syy, double sxy) {
        const double cxy = sxy - sx * sy / n;
        const double cxx = sxx - sx * sx / n;
        const double cyy = syy - sy * sy / n;
        if (!(cxx > 0.0 && cyy > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return cxy / std::sqrt(cxx * cyy);
    };
    const auto n = static_cast<double>(pairs.size());
    CorrelationEstimate out;
    out.n_trials = pairs.size();
    out.correlation = pearson(n, sx, sy, sxx, syy, sxy);
    if (std::isnan(out.correlation)) return out;

    std::vector<double> leave_out(pairs.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [x, y] = pairs[i];
        leave_out[i] = pearson(n - 1.0, sx - x, sy - y, sxx - x * x, syy - y * y, sxy - x * y);
        mean += leave_out[i];
    }
    mean /= n;
    double ss = 0.0;
    for (double r : leave_out) ss += (r - mean) * (r - mean);
    out.standard_error = std::isnan(ss) ? std::numeric_limits<double>::quiet_NaN() : std::sqrt((n - 1.0) / n * ss);
    out.ci = {out.correlation - kZ95 * out.standard_error, out.correlation + kZ95 * out.standard_error};
    return out;
}

/// Regularised upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
/// Series for x < a + 1, Lentz continued fraction otherwise.
inline double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw SpecError("regularized_gamma_q: need a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
    constexpr double kEps = 1e-16;
    constexpr int kMaxIter = 100000;
    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        for (int k = 1; k < kMaxIter; ++k) {
            term *= x / (a + k);
            sum += term;
            if (std::abs(term) < std::abs(sum) * kEps) break;
        }
        return 1.0 - sum * std::exp(log_prefix);
    }
    constexpr double kTiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return std::exp(log_prefix) * h;
}

/// P(chi^2_dof >= x).
inline double chi_square_sf(double x, std::size_t dof) {
    if (dof == 0) throw SpecError("chi_square_sf: dof must be positive");
    return regularized_gamma_q(0.5 * static_cast<double>(dof), 0.5 * std::max(x, 0.0));
}

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
};

/// Pearson goodness of fit of counts against the uniform law; needs sum >= 5 * cells.
inline ChiSquareResult uniformity_chisq(std::span<const std::uint64_t> counts) {
    if (counts.size() < 2) throw SpecError("uniformity_chisq: need at least 2 cells");
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    if (total < 5 * counts.size()) {
        throw SpecError("uniformity_chisq: " + std::to_string(total) + " samples is fewer than 5 per cell");
    }
    const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
    ChiSquareResult r;
    for (auto c : counts) {
        const double d = static_cast<double>(c) - expected;
        r.statistic += d * d / expected;
    }
    r.dof = counts.size() - 1;
    r.p_value = chi_square_sf(r.statistic, r.dof);
    return r;
}

/// Pearson test of homogeneity for a rows x columns count table. All-zero
/// columns are dropped.
inline ChiSquareResult contingency_chisq(const std::vector<std::vector<std::uint64_t>>& table) {
    if (table.size() < 2) throw SpecError("contingency_chisq: need at least 2 rows");
    const std::size_t cols = table.front().size();
    for (const auto& row : table)
        if (row.size() != cols) throw SpecError("contingency_chisq: ragged table");
    std::vector<double> row_sum(table.size(), 0.0);
    std::vector<double> col_sum(cols, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const auto c = static_cast<double>(table[i][j]);
            row_sum[i] += c;
            col_sum[j] += c;
            total += c;
        }
    }
    std::size_t live_cols = 0;
    for (double c : col_sum) live_cols += c > 0.0;
    if (live_cols < 2) throw SpecError("contingency_chisq: need at least 2 nonempty columns");
    for (double r : row_sum)
        if (r == 0.0) throw SpecError("contingency_chisq: empty row");
    ChiSquareResult r;
    for (std::size_t i = 0; i < table.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (col_sum[j] == 0.0) continue;
            const double expected = row_sum[i] * col_sum[j] / total;
            const double d = static_cast<double>(table[i][j]) - expected;
            r.statistic += d * d / expected;
        }
    }
    r.dof = (table.size() - 1) * (live_cols - 1);
    r.p_value = chi_square_sf(r.statistic, r.dof);
    return r;
}

/// Kolmogorov distribution tail P(K > lambda).
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against Exponential(rate).
inline KsResult ks_exponential(std::vector<double> samples, double rate) {
    if (samples.empty()) throw SpecError("ks_exponential: no samples");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = -std::expm1(-rate * samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    const double root = std::sqrt(n);
    return {d, kolmogorov_sf((root + 0.12 + 0.11 / root) * d)};
}

/// Two-sample Kolmogorov-Smirnov test.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw SpecError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d)};
}

}  // namespace voterlab
