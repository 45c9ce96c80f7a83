#pragma once

// The norm family on step functions: L_p, the integral-uniform norm
// ||f||_{m,infty}, the relative norms ||f||*_m and ||f||'_m, and the
// Marcinkiewicz norm.  All of them act through the decreasing rearrangement,
// so the core routines take a Rearrangement; StepFunction overloads are thin
// wrappers.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>

#include "step_function.hpp"

namespace iunorm {

// Increasing concave profile phi: [0,1] -> [0,1] with phi(0)=0, phi(1)=1.
// Either a power t^gamma with gamma in (0,1], or a tabulated piecewise-linear
// function.  validate() checks monotonicity and midpoint concavity on a
// 1e4-point grid.
struct ConcaveProfile {
    enum class Kind { power, table };
    Kind kind = Kind::power;
    double gamma = 1.0;
    std::shared_ptr<const std::vector<std::pair<double, double>>> table; // (t, phi) sorted

    static ConcaveProfile power(double gamma) {
        if (!(gamma > 0.0 && gamma <= 1.0))
            throw std::invalid_argument("ConcaveProfile: gamma must be in (0,1]");
        ConcaveProfile p;
        p.kind = Kind::power;
        p.gamma = gamma;
        return p;
    }

    static ConcaveProfile tabulated(std::vector<std::pair<double, double>> pts) {
        ConcaveProfile p;
        p.kind = Kind::table;
        p.table = std::make_shared<const std::vector<std::pair<double, double>>>(std::move(pts));
        p.validate();
        return p;
    }

    double operator()(double t) const {
        if (kind == Kind::power) return std::pow(t, gamma);
        const auto& pts = *table;
        if (t <= pts.front().first) return pts.front().second;
        if (t >= pts.back().first) return pts.back().second;
        auto it = std::upper_bound(pts.begin(), pts.end(), t,
                                   [](double x, const auto& p) { return x < p.first; });
        const auto& [t1, y1] = *it;
        const auto& [t0, y0] = *(it - 1);
        return y0 + (y1 - y0) * (t - t0) / (t1 - t0);
    }

    void validate() const {
        const ConcaveProfile& phi = *this;
        if (kind == Kind::table) {
            const auto& pts = *table;
            if (pts.size() < 2) throw std::invalid_argument("profile table too short");
            for (std::size_t i = 0; i + 1 < pts.size(); ++i)
                if (!(pts[i].first < pts[i + 1].first))
                    throw std::invalid_argument("profile table abscissae must increase");
            if (pts.front().first != 0.0 || pts.back().first != 1.0)
                throw std::invalid_argument("profile table must span [0,1]");
        }
        if (std::abs(phi(0.0)) > 1e-12 || std::abs(phi(1.0) - 1.0) > 1e-12)
            throw std::invalid_argument("profile must satisfy phi(0)=0, phi(1)=1");
        const int grid = 10000;
        double prev = 0.0;
        for (int i = 1; i <= grid; ++i) {
            const double v = phi(static_cast<double>(i) / grid);
            if (v < prev - 1e-12)
                throw std::invalid_argument("profile must be nondecreasing");
            prev = v;
        }
        for (int i = 0; i + 2 <= grid; ++i) {
            const double a = static_cast<double>(i) / grid;
            const double b = static_cast<double>(i + 2) / grid;
            if (phi(0.5 * (a + b)) < 0.5 * (phi(a) + phi(b)) - 1e-12)
                throw std::invalid_argument("profile fails midpoint concavity");
        }
    }

    std::string label() const {
        if (kind == Kind::power) return "power:" + std::to_string(gamma);
        return "table";
    }
};

inline double lp_norm(const Rearrangement& r, double p) {
    if (!(p >= 1.0))
        throw std::invalid_argument("lp_norm: p must be >= 1");
    if (std::isinf(p)) return r.values.empty() ? 0.0 : r.values.front();
    double acc = 0.0;
    for (std::size_t j = 0; j < r.plateaus(); ++j)
        acc += r.widths[j] * std::pow(r.values[j], p);
    return std::pow(acc, 1.0 / p);
}

inline double lp_norm(const StepFunction& f, double p) { return lp_norm(rearrangement(f), p); }

// ||f||_{m,infty} via the distribution integral
//    int_0^inf (1 - (1 - lambda_f(t))^m) dt,
// reduced to the exact finite sum over plateaus of the rearrangement.
inline double integral_uniform(const Rearrangement& r, long m) {
    if (m < 1) throw std::invalid_argument("integral_uniform: m must be >= 1");
    double acc = 0.0, cum = 0.0;
    const double md = static_cast<double>(m);
    for (std::size_t j = 0; j < r.plateaus(); ++j) {
        cum += r.widths[j];
        const double next = (j + 1 < r.plateaus()) ? r.values[j + 1] : 0.0;
        const double drop = r.values[j] - next;
        if (drop != 0.0) acc += drop * (1.0 - std::pow(1.0 - cum, md));
    }
    return acc;
}

// Same norm as the expected maximum of m i.i.d. uniform samples of |f|:
//    E max(u_1..u_m) = sum_k a_k (F_k^m - F_{k-1}^m)
// over ascending values a_k with cumulative measures F_k.  Kept as an
// independent algebraic route; the two must agree to ~1e-10 relative.
inline double integral_uniform_expected_max(const Rearrangement& r, long m) {
    if (m < 1) throw std::invalid_argument("integral_uniform: m must be >= 1");
    const double md = static_cast<double>(m);
    // value v_j is the maximum iff all m samples land in {|f| <= v_j}: with
    // tail measures S_j = P(|f| <= v_j) the contribution is v_j (S_j^m - S_{j+1}^m)
    double acc = 0.0, tail = 1.0, pow_hi = 1.0;
    for (std::size_t j = 0; j < r.plateaus(); ++j) {
        tail -= r.widths[j];
        const double pow_lo = std::pow(std::max(tail, 0.0), md);
        acc += r.values[j] * (pow_hi - pow_lo);
        pow_hi = pow_lo;
    }
    return acc;
}

// ||f||'_m = m * int_0^{1/m} f*(s) ds, exact via plateau prefix sums.
inline double relative_prime(const Rearrangement& r, long m) {
    if (m < 1) throw std::invalid_argument("relative_prime: m must be >= 1");
    const double cut = 1.0 / static_cast<double>(m);
    double acc = 0.0, pos = 0.0;
    for (std::size_t j = 0; j < r.plateaus() && pos < cut; ++j) {
        const double w = std::min(r.widths[j], cut - pos);
        acc += r.values[j] * w;
        pos += w;
    }
    return static_cast<double>(m) * acc;
}

struct StarResult {
    double value = 0.0;
    double argmax = 1.0; // smallest maximizing delta
};

namespace detail {

// g(delta) = (1 - (1-delta)^m)/delta * I(delta) restricted to one plateau,
// where I(delta) = v*delta + b is the prefix integral of f*.  The derivative
// sign is that of  m (1-delta)^{m-1} (v delta^2 + b delta) - (1-(1-delta)^m) b.
struct StarPlateau {
    double v, b, m;
    double operator()(double delta) const {
        return (1.0 - std::pow(1.0 - delta, m)) * (v + b / delta);
    }
    double dsign(double delta) const {
        const double u = 1.0 - delta;
        return m * std::pow(u, m - 1.0) * (v * delta * delta + b * delta) -
               (1.0 - std::pow(u, m)) * b;
    }
};

} // namespace detail

// ||f||*_m = sup_{delta in (0,1]} ((1-(1-delta)^m)/delta) * int_0^delta f*.
// The optimizing set is a superlevel set, so the sup reduces to this one
// real variable.  On the first plateau the objective is v*(1-(1-delta)^m),
// increasing, so only the right endpoint matters.  On later plateaus the
// derivative sign is scanned at a density matched to the scale on which the
// objective varies; every +/- change brackets an interior maximum, which is
// then pinned by bisection.
inline StarResult relative_star_max(const Rearrangement& r, long m) {
    if (m < 1) throw std::invalid_argument("relative_star: m must be >= 1");
    StarResult best{-1.0, 1.0};
    auto consider = [&best](double val, double arg) {
        if (val > best.value || (val == best.value && arg < best.argmax)) {
            best.value = val;
            best.argmax = arg;
        }
    };
    double left = 0.0, integral = 0.0;
    const double md = static_cast<double>(m);
    for (std::size_t j = 0; j < r.plateaus(); ++j) {
        const double right = (j + 1 == r.plateaus()) ? 1.0 : left + r.widths[j];
        const double v = r.values[j];
        const double b = integral - v * left;
        detail::StarPlateau g{v, b, md};
        consider(g(right), right);
        if (j > 0 && b > 0.0 && right > left) {
            const double scale = std::max(md, 1.0 / left);
            const int npts = static_cast<int>(
                std::clamp(std::ceil(8.0 * scale * (right - left)), 8.0, 4096.0));
            double prev_t = left, prev_s = g.dsign(left);
            for (int i = 1; i <= npts; ++i) {
                const double t = left + (right - left) * i / npts;
                const double s = g.dsign(t);
                if (prev_s > 0.0 && s <= 0.0) {
                    // bisect the bracketed maximum
                    double lo = prev_t, hi = t;
                    for (int it = 0; it < 100 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
                        const double mid = 0.5 * (lo + hi);
                        if (g.dsign(mid) > 0.0) lo = mid;
                        else hi = mid;
                    }
                    const double arg = 0.5 * (lo + hi);
                    consider(g(arg), arg);
                }
                prev_t = t;
                prev_s = s;
            }
        }
        integral += v * (right - left);
        left = right;
    }
    if (best.value < 0.0) best = {0.0, 1.0};
    return best;
}

inline double relative_star(const Rearrangement& r, long m) { return relative_star_max(r, m).value; }

struct MarcResult {
    double value = 0.0;
    double argmax = 0.0; // smallest maximizer; 0 means the sup is the t->0+ limit
};

// ||f||_{M(phi)} = sup_{0<t<=1} I(t)/phi(t) with I the prefix integral of f*.
// Candidates: all plateau breakpoints, a 1e4-point grid, per-plateau
// stationary points for power profiles, table kinks, and the t->0+ limit
// (nonzero only for phi(t) = t, where it equals f*(0)).
// Profiles are validated by their factories, so no re-validation here.
inline MarcResult marcinkiewicz_max(const Rearrangement& r, const ConcaveProfile& phi) {
    MarcResult best{-1.0, 1.0};
    // cumulative widths and integrals, so every prefix integral is one search
    std::vector<double> cum_w(r.plateaus() + 1, 0.0), cum_i(r.plateaus() + 1, 0.0);
    for (std::size_t j = 0; j < r.plateaus(); ++j) {
        cum_w[j + 1] = cum_w[j] + r.widths[j];
        cum_i[j + 1] = cum_i[j] + r.values[j] * r.widths[j];
    }
    auto prefix_integral = [&](double t) {
        auto it = std::lower_bound(cum_w.begin(), cum_w.end(), t);
        std::size_t j = static_cast<std::size_t>(it - cum_w.begin());
        if (j == 0) return 0.0;
        if (j > r.plateaus()) j = r.plateaus();
        return cum_i[j - 1] + r.values[j - 1] * (std::min(t, cum_w[r.plateaus()]) - cum_w[j - 1]);
    };
    // ties within rounding noise resolve toward the smaller argmax
    auto consider = [&](double t) {
        if (!(t > 0.0 && t <= 1.0)) return;
        const double pv = phi(t);
        if (pv <= 0.0) return;
        const double val = prefix_integral(t) / pv;
        const double eps = 1e-12 * std::max(std::abs(val), std::abs(best.value));
        if (val > best.value + eps) {
            best.value = val;
            best.argmax = t;
        } else if (val >= best.value - eps) {
            best.value = std::max(best.value, val);
            if (t < best.argmax) best.argmax = t;
        }
    };
    double pos = 0.0, integral = 0.0;
    for (std::size_t j = 0; j < r.plateaus(); ++j) {
        const double lo = pos, hi = (j + 1 == r.plateaus()) ? 1.0 : pos + r.widths[j];
        consider(hi);
        if (phi.kind == ConcaveProfile::Kind::power && phi.gamma < 1.0 && r.values[j] > 0.0) {
            const double b = integral - r.values[j] * lo;
            const double t_star = phi.gamma * b / (r.values[j] * (1.0 - phi.gamma));
            if (t_star > lo && t_star < hi) consider(t_star);
        }
        integral += r.values[j] * (hi - lo);
        pos = hi;
    }
    for (int i = 1; i <= 10000; ++i) consider(static_cast<double>(i) / 10000.0);
    if (phi.kind == ConcaveProfile::Kind::table)
        for (const auto& [t, y] : *phi.table) consider(t);
    // t -> 0+ limit: I(t)/phi(t) -> f*(0) when phi has unit slope at 0 (the
    // power profile with gamma == 1); otherwise the limit is 0.
    if (phi.kind == ConcaveProfile::Kind::power && phi.gamma == 1.0 && !r.values.empty()) {
        const double limit = r.values.front();
        if (limit >= best.value - 1e-12 * std::max(limit, best.value))
            best = {std::max(limit, best.value), 0.0};
    }
    if (best.value < 0.0) best = {0.0, 1.0};
    return best;
}

inline double marcinkiewicz(const Rearrangement& r, const ConcaveProfile& phi) {
    return marcinkiewicz_max(r, phi).value;
}

struct ChainReport {
    double prime = 0.0;
    double star = 0.0;
    double m_infty = 0.0;
    bool lower_ok = false; // (1 - 1/e) prime <= star
    bool mid_ok = false;   // star <= m_infty
    bool upper_ok = false; // m_infty <= 2 prime
    bool all_ok() const { return lower_ok && mid_ok && upper_ok; }
};

inline ChainReport chain_report(const Rearrangement& r, long m) {
    ChainReport rep;
    rep.prime = relative_prime(r, m);
    rep.star = relative_star(r, m);
    rep.m_infty = integral_uniform(r, m);
    auto leq = [](double a, double b) {
        return a <= b + 1e-9 * std::max({std::abs(a), std::abs(b), 1.0});
    };
    rep.lower_ok = leq((1.0 - std::exp(-1.0)) * rep.prime, rep.star);
    rep.mid_ok = leq(rep.star, rep.m_infty);
    rep.upper_ok = leq(rep.m_infty, 2.0 * rep.prime);
    return rep;
}

// StepFunction wrappers.
inline double integral_uniform(const StepFunction& f, long m) { return integral_uniform(rearrangement(f), m); }
inline double integral_uniform_expected_max(const StepFunction& f, long m) { return integral_uniform_expected_max(rearrangement(f), m); }
inline double relative_prime(const StepFunction& f, long m) { return relative_prime(rearrangement(f), m); }
inline double relative_star(const StepFunction& f, long m) { return relative_star(rearrangement(f), m); }
inline StarResult relative_star_max(const StepFunction& f, long m) { return relative_star_max(rearrangement(f), m); }
inline double marcinkiewicz(const StepFunction& f, const ConcaveProfile& phi) { return marcinkiewicz(rearrangement(f), phi); }
inline MarcResult marcinkiewicz_max(const StepFunction& f, const ConcaveProfile& phi) { return marcinkiewicz_max(rearrangement(f), phi); }
inline ChainReport chain_report(const StepFunction& f, long m) { return chain_report(rearrangement(f), m); }

// Norm selector used by the Monte Carlo layer and the CLI.
struct NormKind {
    enum class Tag { lp, integral_uniform, relative_star, relative_prime, marcinkiewicz };
    Tag tag = Tag::lp;
    double p = 1.0;
    long m = 1;
    ConcaveProfile profile = ConcaveProfile::power(1.0);

    static NormKind lp(double p) {
        if (!(p >= 1.0)) throw std::invalid_argument("NormKind: p must be >= 1");
        NormKind k; k.tag = Tag::lp; k.p = p; return k;
    }
    static NormKind sup() { return lp(std::numeric_limits<double>::infinity()); }
    static NormKind m_infty(long m) {
        if (m < 1) throw std::invalid_argument("NormKind: m must be >= 1");
        NormKind k; k.tag = Tag::integral_uniform; k.m = m; return k;
    }
    static NormKind star(long m) {
        if (m < 1) throw std::invalid_argument("NormKind: m must be >= 1");
        NormKind k; k.tag = Tag::relative_star; k.m = m; return k;
    }
    static NormKind prime(long m) {
        if (m < 1) throw std::invalid_argument("NormKind: m must be >= 1");
        NormKind k; k.tag = Tag::relative_prime; k.m = m; return k;
    }
    static NormKind marc(ConcaveProfile prof) {
        NormKind k; k.tag = Tag::marcinkiewicz; k.profile = std::move(prof); return k;
    }

    NormKind with_m(long mm) const { NormKind k = *this; k.m = mm; return k; }
    bool uses_m() const {
        return tag == Tag::integral_uniform || tag == Tag::relative_star || tag == Tag::relative_prime;
    }

    double evaluate(const Rearrangement& r) const {
        switch (tag) {
            case Tag::lp: return lp_norm(r, p);
            case Tag::integral_uniform: return integral_uniform(r, m);
            case Tag::relative_star: return relative_star(r, m);
            case Tag::relative_prime: return relative_prime(r, m);
            case Tag::marcinkiewicz: return marcinkiewicz(r, profile);
        }
        return 0.0;
    }

    std::string label() const {
        switch (tag) {
            case Tag::lp:
                if (std::isinf(p)) return "sup";
                if (p == 1.0) return "l1";
                if (p == 2.0) return "l2";
                return "lp:" + std::to_string(p);
            case Tag::integral_uniform: return "m-infty";
            case Tag::relative_star: return "star";
            case Tag::relative_prime: return "prime";
            case Tag::marcinkiewicz: return "marc:" + profile.label();
        }
        return "?";
    }
};

} // namespace iunorm
