#pragma once

// Constructors for the function systems used throughout (trigonometric
// midpoint samples, Rademacher signs, disjoint indicators, the mixed
// r_i + n^q chi_i family) and checkers for the regularity hypotheses on
// sign combinations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "coeffs.hpp"
#include "norms.hpp"
#include "rng.hpp"
#include "step_function.hpp"

namespace iunorm {

enum class Normalization { none, l1, l2 };

inline std::string to_string(Normalization n) {
    switch (n) {
        case Normalization::none: return "none";
        case Normalization::l1: return "L1";
        case Normalization::l2: return "L2";
    }
    return "none";
}

inline Normalization normalization_from_string(const std::string& s) {
    if (s == "none") return Normalization::none;
    if (s == "L1" || s == "l1") return Normalization::l1;
    if (s == "L2" || s == "l2") return Normalization::l2;
    throw std::invalid_argument("unknown normalization: " + s);
}

struct FunctionSystem {
    std::vector<StepFunction> functions; // all share one partition
    std::string label;
    Normalization normalization = Normalization::none;

    std::size_t size() const { return functions.size(); }
    const StepFunction& operator[](std::size_t i) const { return functions[i]; }
};

inline StepFunction linear_combination(const std::vector<cplx>& coeffs, const FunctionSystem& sys) {
    return linear_combination(coeffs, sys.functions);
}

// x -> e^{2 pi i k x} sampled at cell midpoints of a uniform partition with
// factor * n cells, k = 1..n (or k = -n..n when two_sided).  Oversampling
// factor >= 4 keeps the sampled system exactly orthonormal in discrete L2.
inline FunctionSystem trig_system(int n, int factor, bool two_sided = false) {
    if (n < 1) throw std::invalid_argument("trig_system: n must be >= 1");
    if (factor < 4) throw std::invalid_argument("trig_system: oversampling factor must be >= 4");
    const int cells = factor * n;
    std::vector<double> bp(static_cast<std::size_t>(cells) + 1);
    for (int j = 0; j <= cells; ++j)
        bp[static_cast<std::size_t>(j)] = (j == cells) ? 1.0 : static_cast<double>(j) / cells;
    FunctionSystem sys;
    sys.label = two_sided ? "trig2" : "trig";
    sys.normalization = Normalization::l2;
    const int k_lo = two_sided ? -n : 1;
    const int k_hi = n;
    for (int k = k_lo; k <= k_hi; ++k) {
        StepFunction f;
        f.breakpoints = bp;
        f.values.reserve(static_cast<std::size_t>(cells));
        for (int j = 0; j < cells; ++j) {
            const double x = (j + 0.5) / cells;
            const double th = 2.0 * std::numbers::pi * k * x;
            f.values.emplace_back(std::cos(th), std::sin(th));
        }
        sys.functions.push_back(std::move(f));
    }
    return sys;
}

// r_i as +-1 steps on the dyadic partition with 2^n cells; r_1 = (+,+,..,-,-),
// r_n alternates every cell.  ||r_i||_1 = ||r_i||_2 = 1.
inline FunctionSystem rademacher_system(int n) {
    if (n < 1) throw std::invalid_argument("rademacher_system: n must be >= 1");
    if (n > 24) throw std::invalid_argument("rademacher_system: n > 24 would need 2^n cells");
    const std::size_t cells = std::size_t{1} << n;
    std::vector<double> bp(cells + 1);
    for (std::size_t j = 0; j <= cells; ++j)
        bp[j] = (j == cells) ? 1.0 : static_cast<double>(j) / static_cast<double>(cells);
    FunctionSystem sys;
    sys.label = "rademacher";
    sys.normalization = Normalization::l1;
    for (int i = 1; i <= n; ++i) {
        StepFunction f;
        f.breakpoints = bp;
        f.values.reserve(cells);
        for (std::size_t j = 0; j < cells; ++j) {
            const bool minus = (j >> (n - i)) & 1u;
            f.values.emplace_back(minus ? -1.0 : 1.0, 0.0);
        }
        sys.functions.push_back(std::move(f));
    }
    return sys;
}

// f_i = n * chi_{((i-1)/n, i/n)}, so ||f_i||_1 = 1 with disjoint supports.
inline FunctionSystem indicator_system(int n) {
    if (n < 1) throw std::invalid_argument("indicator_system: n must be >= 1");
    std::vector<double> bp(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j)
        bp[static_cast<std::size_t>(j)] = (j == n) ? 1.0 : static_cast<double>(j) / n;
    FunctionSystem sys;
    sys.label = "indicator";
    sys.normalization = Normalization::l1;
    for (int i = 0; i < n; ++i) {
        StepFunction f;
        f.breakpoints = bp;
        f.values.assign(static_cast<std::size_t>(n), cplx{});
        f.values[static_cast<std::size_t>(i)] = cplx(static_cast<double>(n), 0.0);
        sys.functions.push_back(std::move(f));
    }
    return sys;
}

// f_i = r_i + n^q chi_i on the common refinement of the dyadic and uniform
// partitions.  The parameter range (1/3, 7/12) is where the family is
// interesting: the sign bound holds with exponent max{0, q - 1/2} while the
// third-moment ratio degenerates pointwise.
inline FunctionSystem mixed_system(int n, double q, bool normalize) {
    if (n < 1 || n > 20) throw std::invalid_argument("mixed_system: n must be in [1, 20]");
    if (!(q > 1.0 / 3.0 && q < 7.0 / 12.0))
        throw std::invalid_argument("mixed_system: q outside (1/3, 7/12)");
    FunctionSystem rad = rademacher_system(n);
    FunctionSystem ind = indicator_system(n);
    const double scale = std::pow(static_cast<double>(n), q);
    std::vector<StepFunction> fs;
    fs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto [r, c] = common_refinement(rad.functions[static_cast<std::size_t>(i)],
                                        ind.functions[static_cast<std::size_t>(i)]);
        StepFunction f = r;
        for (std::size_t k = 0; k < f.cells(); ++k)
            f.values[k] += (scale / n) * c.values[k]; // c is n*chi_i, so this adds n^q chi_i
        fs.push_back(std::move(f));
    }
    fs = common_refinement(std::move(fs));
    if (normalize)
        for (auto& f : fs) {
            const double nrm = lp_norm(f, 1.0);
            for (auto& v : f.values) v /= nrm;
        }
    FunctionSystem sys;
    sys.functions = std::move(fs);
    sys.label = "mixed:q=" + std::to_string(q);
    sys.normalization = normalize ? Normalization::l1 : Normalization::none;
    return sys;
}

// sqrt(sum_i |f_i|^2) computed exactly cellwise.
inline StepFunction square_function(const FunctionSystem& sys) {
    if (sys.size() == 0) throw std::invalid_argument("square_function: empty system");
    StepFunction out;
    out.breakpoints = sys.functions.front().breakpoints;
    out.values.assign(sys.functions.front().cells(), cplx{});
    for (const auto& f : sys.functions)
        for (std::size_t k = 0; k < f.cells(); ++k)
            out.values[k] += std::norm(f.values[k]);
    for (auto& v : out.values) v = cplx(std::sqrt(v.real()), 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Sign maximization: exhaustive Gray-code enumeration when 2^(n-1) * cells
// stays affordable (the objective is sign-flip symmetric, so one sign can be
// pinned), otherwise seeded random draws plus single-flip hill climbing.

struct SignSearchResult {
    std::vector<int> signs;   // +-1
    double value = 0.0;
    bool exhaustive = false;
    long evaluations = 0;
};

namespace detail {

// Objective = norm of sum_i theta_i f_i, with incremental single-flip
// updates of the cellwise sum.
class SignCombinationObjective {
public:
    SignCombinationObjective(const FunctionSystem& sys, double p) : sys_(sys), p_(p) {
        widths_.reserve(sys.functions.front().cells());
        const auto& bp = sys.functions.front().breakpoints;
        for (std::size_t k = 0; k + 1 < bp.size(); ++k) widths_.push_back(bp[k + 1] - bp[k]);
    }

    void init(const std::vector<int>& signs) {
        signs_ = signs;
        sum_.assign(widths_.size(), cplx{});
        for (std::size_t i = 0; i < sys_.size(); ++i) {
            const double s = signs[i] > 0 ? 1.0 : -1.0;
            const auto& v = sys_.functions[i].values;
            for (std::size_t k = 0; k < sum_.size(); ++k) sum_[k] += s * v[k];
        }
    }

    void flip(std::size_t i) {
        const double delta = signs_[i] > 0 ? -2.0 : 2.0;
        signs_[i] = -signs_[i];
        const auto& v = sys_.functions[i].values;
        for (std::size_t k = 0; k < sum_.size(); ++k) sum_[k] += delta * v[k];
    }

    double value() const {
        if (std::isinf(p_)) {
            double mx = 0.0;
            for (const cplx& z : sum_) mx = std::max(mx, std::abs(z));
            return mx;
        }
        double acc = 0.0;
        if (p_ == 1.0) {
            for (std::size_t k = 0; k < sum_.size(); ++k) acc += widths_[k] * std::abs(sum_[k]);
            return acc;
        }
        if (p_ == 2.0) {
            for (std::size_t k = 0; k < sum_.size(); ++k) acc += widths_[k] * std::norm(sum_[k]);
            return std::sqrt(acc);
        }
        for (std::size_t k = 0; k < sum_.size(); ++k)
            acc += widths_[k] * std::pow(std::abs(sum_[k]), p_);
        return std::pow(acc, 1.0 / p_);
    }

    const std::vector<int>& signs() const { return signs_; }
    std::size_t n() const { return sys_.size(); }
    std::size_t cells() const { return widths_.size(); }

private:
    const FunctionSystem& sys_;
    double p_;
    std::vector<double> widths_;
    std::vector<cplx> sum_;
    std::vector<int> signs_;
};

// Gray-code walk over {+-1}^(n-1) with the last sign pinned to +1.
template <class Objective>
SignSearchResult maximize_signs_exhaustive(Objective& obj) {
    const std::size_t n = obj.n();
    std::vector<int> signs(n, 1);
    obj.init(signs);
    SignSearchResult best{signs, obj.value(), true, 1};
    if (n == 1) return best;
    const std::uint64_t total = std::uint64_t{1} << (n - 1);
    for (std::uint64_t g = 1; g < total; ++g) {
        // flip the bit that changes between consecutive Gray codes
        const std::uint64_t bit = static_cast<std::uint64_t>(__builtin_ctzll(g));
        obj.flip(static_cast<std::size_t>(bit));
        ++best.evaluations;
        const double val = obj.value();
        if (val > best.value) {
            best.value = val;
            best.signs = obj.signs();
        }
    }
    return best;
}

template <class Objective>
SignSearchResult maximize_signs_heuristic(Objective& obj, long budget, std::uint64_t seed) {
    const std::size_t n = obj.n();
    SignSearchResult best;
    best.exhaustive = false;
    std::vector<int> signs(n, 1);
    const long draws = std::max<long>(2 * budget, 1);
    for (long d = 0; d < draws; ++d) {
        const std::uint64_t key = rng::derive(seed, static_cast<std::uint64_t>(d));
        for (std::size_t i = 0; i < n; ++i)
            signs[i] = (rng::at(key, i) >> 63) ? 1 : -1;
        if (d == 0) std::fill(signs.begin(), signs.end(), 1); // always try all-ones
        obj.init(signs);
        ++best.evaluations;
        double val = obj.value();
        // single-flip hill climbing to a local maximum
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::size_t i = 0; i < n; ++i) {
                obj.flip(i);
                ++best.evaluations;
                const double cand = obj.value();
                if (cand > val + 1e-15 * std::abs(val)) {
                    val = cand;
                    improved = true;
                } else {
                    obj.flip(i);
                }
            }
        }
        if (best.signs.empty() || val > best.value) {
            best.value = val;
            best.signs = obj.signs();
        }
    }
    return best;
}

} // namespace detail

// Maximize ||sum theta_i f_i||_p over sign vectors.
inline SignSearchResult maximize_sign_norm(const FunctionSystem& sys, double p, long budget,
                                           std::uint64_t seed) {
    if (sys.size() == 0) throw std::invalid_argument("maximize_sign_norm: empty system");
    detail::SignCombinationObjective obj(sys, p);
    const std::size_t n = sys.size();
    const double exhaustive_cost =
        (n <= 20) ? std::ldexp(static_cast<double>(obj.cells()), static_cast<int>(n - 1)) : 1e30;
    if (exhaustive_cost <= 2e8) return detail::maximize_signs_exhaustive(obj);
    return detail::maximize_signs_heuristic(obj, budget, seed);
}

// ---------------------------------------------------------------------------
// Hypothesis checkers

enum class ConditionTag { b, b_prime, d, d_prime };

inline std::string to_string(ConditionTag t) {
    switch (t) {
        case ConditionTag::b: return "b";
        case ConditionTag::b_prime: return "bprime";
        case ConditionTag::d: return "d";
        case ConditionTag::d_prime: return "dprime";
    }
    return "?";
}

inline ConditionTag condition_from_string(const std::string& s) {
    if (s == "b") return ConditionTag::b;
    if (s == "bprime" || s == "b'") return ConditionTag::b_prime;
    if (s == "d") return ConditionTag::d;
    if (s == "dprime" || s == "d'") return ConditionTag::d_prime;
    throw std::invalid_argument("unknown condition tag: " + s);
}

struct HypothesisReport {
    ConditionTag condition = ConditionTag::d;
    long n = 0;
    double max_norm = 0.0;            // max over the searched family
    std::vector<double> grid_p;       // {0, 1/24, ..., 1/2}
    std::vector<double> grid_M;       // max_norm / n^{1/2 + p}
    double fitted_p = 0.0;            // minimal grid p with M <= 1 (else 1/2)
    double fitted_M = 0.0;
    // second component of (d'): the square-function bound and its p_2
    double square_norm = 0.0;
    double fitted_p2 = 0.0;
    double fitted_M2 = 0.0;
    std::vector<int> witness_signs;   // for d, b', d'
    std::vector<cplx> witness_coeffs; // for b
    long trials_used = 0;
    bool exhaustive = false;
};

namespace detail {

inline void fill_grid(HypothesisReport& rep, double max_norm, double base) {
    rep.max_norm = max_norm;
    for (int i = 0; i <= 12; ++i) {
        const double p = static_cast<double>(i) / 24.0;
        rep.grid_p.push_back(p);
        rep.grid_M.push_back(max_norm / std::pow(base, p));
    }
    rep.fitted_p = 0.5;
    rep.fitted_M = rep.grid_M.back();
    for (std::size_t i = 0; i < rep.grid_p.size(); ++i)
        if (rep.grid_M[i] <= 1.0 + 1e-9) {
            rep.fitted_p = rep.grid_p[i];
            rep.fitted_M = rep.grid_M[i];
            break;
        }
}

} // namespace detail

// For (d) and (b'): maximize the L1 (resp. L2) norm of sign combinations and
// tabulate M(p) = max / n^{1/2+p}.  For (d'): the same sign maximization in
// L1, plus the exact norm ||(sum |f_i|^2)^{1/2}||_1 against n^{1/2+p_2}.
// For (b): sample unit coefficient vectors and tabulate the max L2 ratio
// against R^p with R = n (all-ones weights).
inline HypothesisReport check_condition(const FunctionSystem& sys, ConditionTag tag,
                                        long sign_budget, std::uint64_t seed) {
    if (sys.size() == 0) throw std::invalid_argument("check_condition: empty system");
    const long n = static_cast<long>(sys.size());
    const double nd = static_cast<double>(n);
    HypothesisReport rep;
    rep.condition = tag;
    rep.n = n;
    switch (tag) {
        case ConditionTag::d:
        case ConditionTag::b_prime:
        case ConditionTag::d_prime: {
            const double p = (tag == ConditionTag::b_prime) ? 2.0 : 1.0;
            SignSearchResult sr = maximize_sign_norm(sys, p, sign_budget, seed);
            // base n^{1/2+p}: M(p) = max / (sqrt(n) * n^p)
            detail::fill_grid(rep, sr.value / std::sqrt(nd), nd);
            // grid stores max / n^{1/2+p}; undo the extra sqrt division in max_norm
            rep.max_norm = sr.value;
            rep.witness_signs = std::move(sr.signs);
            rep.trials_used = sr.evaluations;
            rep.exhaustive = sr.exhaustive;
            if (tag == ConditionTag::d_prime) {
                rep.square_norm = lp_norm(square_function(sys), 1.0);
                const double base = rep.square_norm / std::sqrt(nd);
                rep.fitted_p2 = 0.5;
                rep.fitted_M2 = base / std::pow(nd, 0.5);
                for (int i = 0; i <= 12; ++i) {
                    const double p2 = static_cast<double>(i) / 24.0;
                    const double m2 = base / std::pow(nd, p2);
                    if (m2 <= 1.0 + 1e-9) {
                        rep.fitted_p2 = p2;
                        rep.fitted_M2 = m2;
                        break;
                    }
                }
            }
            break;
        }
        case ConditionTag::b: {
            const long budget = std::max<long>(sign_budget, 1);
            double best = -1.0;
            std::vector<cplx> best_coeffs;
            std::vector<cplx> c(sys.size());
            for (long t = 0; t < budget; ++t) {
                const std::uint64_t key = rng::derive(seed, static_cast<std::uint64_t>(t));
                double norm2 = 0.0;
                for (std::size_t i = 0; i < sys.size(); ++i) {
                    const double u = (static_cast<double>(rng::at(key, i) >> 11) + 0.5) * 0x1.0p-53;
                    c[i] = cplx(rng::inverse_normal_cdf(u), 0.0);
                    norm2 += std::norm(c[i]);
                }
                const double inv = 1.0 / std::sqrt(norm2);
                for (auto& z : c) z *= inv;
                const double val = lp_norm(linear_combination(c, sys), 2.0);
                if (val > best) {
                    best = val;
                    best_coeffs = c;
                }
            }
            detail::fill_grid(rep, best, nd); // R = n for all-ones fixed weights
            rep.witness_coeffs = std::move(best_coeffs);
            rep.trials_used = budget;
            rep.exhaustive = false;
            break;
        }
    }
    return rep;
}

} // namespace iunorm
