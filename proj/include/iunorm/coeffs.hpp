#pragma once

// Independent symmetric coefficient models with mean 0 and unit variance,
// sampled counter-based so the i-th draw depends only on (seed, i).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rng.hpp"
#include "step_function.hpp"

namespace iunorm {

enum class CoeffLaw { rademacher, gaussian, uniform_sym, two_point_sym };

struct CoeffModel {
    CoeffLaw law = CoeffLaw::rademacher;
    double v = 1.0; // two-point magnitude, ignored otherwise

    static CoeffModel rademacher() { return {CoeffLaw::rademacher, 1.0}; }
    static CoeffModel gaussian() { return {CoeffLaw::gaussian, 1.0}; }
    static CoeffModel uniform_sym() { return {CoeffLaw::uniform_sym, 1.0}; }
    static CoeffModel two_point(double v) {
        if (!(v >= 1.0))
            throw std::invalid_argument("two-point model needs v >= 1 (atom probability 1/(2v^2))");
        return {CoeffLaw::two_point_sym, v};
    }

    // "rademacher" | "gaussian" | "uniform-sym" | "two-point:v"
    static CoeffModel parse(std::string_view tag) {
        if (tag == "rademacher") return rademacher();
        if (tag == "gaussian") return gaussian();
        if (tag == "uniform-sym") return uniform_sym();
        if (tag.rfind("two-point:", 0) == 0)
            return two_point(std::stod(std::string(tag.substr(10))));
        throw std::invalid_argument("unknown coefficient model: " + std::string(tag));
    }

    std::string name() const {
        switch (law) {
            case CoeffLaw::rademacher: return "rademacher";
            case CoeffLaw::gaussian: return "gaussian";
            case CoeffLaw::uniform_sym: return "uniform-sym";
            case CoeffLaw::two_point_sym: return "two-point:" + std::to_string(v);
        }
        return "?";
    }

    // E|xi|^3 in closed form (all models have mean 0 and E|xi|^2 = 1).
    double third_abs_moment() const {
        switch (law) {
            case CoeffLaw::rademacher: return 1.0;
            case CoeffLaw::gaussian: return 2.0 * std::sqrt(2.0 / std::numbers::pi);
            case CoeffLaw::uniform_sym: return 3.0 * std::sqrt(3.0) / 4.0;
            case CoeffLaw::two_point_sym: return v;
        }
        return 0.0;
    }

    // Qualifies for the subgaussian tail hypothesis of the upper estimates.
    bool subgaussian() const { return law != CoeffLaw::two_point_sym; }

    double sample(std::uint64_t seed, std::uint64_t index) const {
        const std::uint64_t word = rng::at(seed, index);
        switch (law) {
            case CoeffLaw::rademacher:
                return (word >> 63) ? 1.0 : -1.0;
            case CoeffLaw::gaussian: {
                // avoid the exact endpoints of (0,1)
                const double u = (static_cast<double>(word >> 11) + 0.5) * 0x1.0p-53;
                return rng::inverse_normal_cdf(u);
            }
            case CoeffLaw::uniform_sym:
                return (2.0 * rng::to_unit(word) - 1.0) * std::sqrt(3.0);
            case CoeffLaw::two_point_sym: {
                const double u = rng::to_unit(word);
                const double q = 0.5 / (v * v);
                if (u < q) return v;
                if (u >= 1.0 - q) return -v;
                return 0.0;
            }
        }
        return 0.0;
    }
};

inline std::vector<double> sample_coeffs(const CoeffModel& model, std::size_t n, std::uint64_t seed) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = model.sample(seed, i);
    return out;
}

// R({a_i}) = (sum |a_i|^2)^2 / sum |a_i|^4, the effective dimension of a
// weight vector; always in [1, n].
inline double effective_dimension(const std::vector<cplx>& a) {
    double s2 = 0.0, s4 = 0.0;
    for (const cplx& c : a) {
        const double m2 = std::norm(c);
        s2 += m2;
        s4 += m2 * m2;
    }
    if (s4 == 0.0) throw std::invalid_argument("effective_dimension: zero weight vector");
    return s2 * s2 / s4;
}

inline double effective_dimension(const std::vector<double>& a) {
    std::vector<cplx> c(a.begin(), a.end());
    return effective_dimension(c);
}

// P = min(m, R) + 1, the parameter governing the logarithmic gain.
inline double log_gain_parameter(long m, double r_eff) {
    return std::min(static_cast<double>(m), r_eff) + 1.0;
}

struct MomentAudit {
    long trials = 0;
    double mean = 0.0, mean_se = 0.0;
    double second = 0.0, second_se = 0.0;
    double third_abs = 0.0, third_abs_se = 0.0;
    bool mean_ok = false, second_ok = false, third_ok = false;
};

// Empirical mean, second moment and third absolute moment versus the
// declared values; a deviation beyond 4 standard errors raises a flag.
inline MomentAudit moment_audit(const CoeffModel& model, long trials, std::uint64_t seed) {
    if (trials < 10000)
        throw std::invalid_argument("moment_audit: need at least 1e4 trials");
    MomentAudit a;
    a.trials = trials;
    double s1 = 0, s2 = 0, s3 = 0, q1 = 0, q2 = 0, q3 = 0;
    for (long i = 0; i < trials; ++i) {
        const double x = model.sample(seed, static_cast<std::uint64_t>(i));
        const double ax = std::abs(x);
        const double x2 = x * x, x3 = ax * ax * ax;
        s1 += x;  q1 += x2;
        s2 += x2; q2 += x2 * x2;
        s3 += x3; q3 += x3 * x3;
    }
    const double t = static_cast<double>(trials);
    auto finish = [t](double s, double q, double& m, double& se) {
        m = s / t;
        const double var = std::max(q / t - m * m, 0.0);
        se = std::sqrt(var / t);
    };
    finish(s1, q1, a.mean, a.mean_se);
    finish(s2, q2, a.second, a.second_se);
    finish(s3, q3, a.third_abs, a.third_abs_se);
    auto within = [](double emp, double decl, double se) {
        return std::abs(emp - decl) <= 4.0 * std::max(se, 1e-15);
    };
    a.mean_ok = within(a.mean, 0.0, a.mean_se);
    a.second_ok = within(a.second, 1.0, a.second_se);
    a.third_ok = within(a.third_abs, model.third_abs_moment(), a.third_abs_se);
    return a;
}

} // namespace iunorm
