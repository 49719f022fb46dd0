#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace drtox {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

inline double normal_logpdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
}

inline double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("logit: p outside (0,1)");
    return std::log(p / (1.0 - p));
}

inline double inv_logit(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log of Gamma(shape, rate) density
inline double gamma_logpdf(double x, double shape, double rate) {
    if (x <= 0.0) return -kInf;
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) -
           rate * x;
}

// log density of half-Cauchy(0, scale) on x > 0
inline double half_cauchy_logpdf(double x, double scale) {
    if (x <= 0.0) return -kInf;
    return std::log(2.0 / M_PI) - std::log(scale) - std::log1p((x / scale) * (x / scale));
}

inline double mean(const Eigen::VectorXd& v) { return v.mean(); }

inline double sample_variance(const Eigen::VectorXd& v) {
    if (v.size() < 2) return 0.0;
    const double m = v.mean();
    return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

inline double sample_sd(const Eigen::VectorXd& v) { return std::sqrt(sample_variance(v)); }

// Linear-interpolation quantile (R type 7). p in [0,1].
inline double quantile(Eigen::VectorXd v, double p) {
    if (v.size() == 0) throw std::invalid_argument("quantile: empty sample");
    std::sort(v.data(), v.data() + v.size());
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<Eigen::Index>(std::floor(h));
    const auto hi = std::min<Eigen::Index>(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(const Eigen::VectorXd& v) { return quantile(v, 0.5); }

// Two-sample Kolmogorov-Smirnov distance.
inline double ks_distance(Eigen::VectorXd a, Eigen::VectorXd b) {
    std::sort(a.data(), a.data() + a.size());
    std::sort(b.data(), b.data() + b.size());
    double d = 0.0;
    Eigen::Index i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        const double fa = static_cast<double>(i) / static_cast<double>(a.size());
        const double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

struct BetaMatch {
    double a = 0.0;
    double b = 0.0;
    bool feasible = false;
    double ess() const { return a + b; }
};

// Moment-match a Beta distribution to (mean, variance). Infeasible when
// v >= m(1-m) (no Beta has that much spread) or v == 0.
inline BetaMatch beta_moment_match(double m, double v) {
    BetaMatch out;
    if (!(m > 0.0 && m < 1.0) || v <= 0.0 || v >= m * (1.0 - m)) return out;
    const double nu = m * (1.0 - m) / v - 1.0;
    out.a = m * nu;
    out.b = (1.0 - m) * nu;
    out.feasible = true;
    return out;
}

}  // namespace drtox
