#pragma once

// Streaming statistics, confidence intervals and the log-log least squares
// fit used by the scaling-law checks.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace iunorm {

// One-pass mean/variance (Welford), with a deterministic pairwise combine so
// chunked parallel accumulation reproduces the serial result.
struct MeanVarAccumulator {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    void combine(const MeanVarAccumulator& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double d = o.mean - mean;
        const std::int64_t t = n + o.n;
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / static_cast<double>(t);
        mean += d * static_cast<double>(o.n) / static_cast<double>(t);
        n = t;
    }

    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double stderr_of_mean() const {
        return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }
};

struct TrialEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::int64_t trials = 0;
    std::string norm_label;
    std::uint64_t seed = 0;

    static TrialEstimate from(const MeanVarAccumulator& acc, std::string label, std::uint64_t seed) {
        TrialEstimate e;
        e.mean = acc.mean;
        e.stderr_ = acc.stderr_of_mean();
        e.ci_low = e.mean - 1.96 * e.stderr_;
        e.ci_high = e.mean + 1.96 * e.stderr_;
        e.trials = acc.n;
        e.norm_label = std::move(label);
        e.seed = seed;
        return e;
    }
};

// Wilson score interval for a binomial proportion; better behaved than the
// Wald interval near 0 and 1.
struct ProportionEstimate {
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::int64_t successes = 0;
    std::int64_t trials = 0;
};

inline ProportionEstimate wilson_interval(std::int64_t successes, std::int64_t trials,
                                          double z = 1.96) {
    if (trials <= 0) throw std::invalid_argument("wilson_interval: trials must be positive");
    ProportionEstimate e;
    e.successes = successes;
    e.trials = trials;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    e.p_hat = p;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    e.ci_low = std::max(0.0, center - half);
    e.ci_high = std::min(1.0, center + half);
    return e;
}

struct ScalingFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double residual_max = 0.0;
    std::string x_descriptor;
};

// Ordinary least squares of log y on log x.
inline ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& points,
                              std::string x_descriptor = "x") {
    if (points.size() < 3) throw std::invalid_argument("scaling_fit: need at least 3 points");
    for (const auto& [x, y] : points)
        if (!(x > 0.0) || !(y > 0.0))
            throw std::invalid_argument("scaling_fit: inputs must be positive");
    const double n = static_cast<double>(points.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    ScalingFit fit;
    fit.x_descriptor = std::move(x_descriptor);
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("scaling_fit: degenerate abscissae");
    fit.exponent = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.exponent * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / n;
    for (const auto& [x, y] : points) {
        const double ly = std::log(y);
        const double resid = ly - (fit.intercept + fit.exponent * std::log(x));
        ss_res += resid * resid;
        ss_tot += (ly - ybar) * (ly - ybar);
        fit.residual_max = std::max(fit.residual_max, std::abs(resid));
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

} // namespace iunorm
