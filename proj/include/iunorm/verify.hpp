#pragma once

// Brute-force and Monte Carlo oracles for the auxiliary probabilistic
// results: the generalized Borel-Cantelli inequality, the shift lemma, the
// indicator-sum lemma, the convex-geometry lemma, the CLT error rate in
// Kolmogorov distance, and the Gaussian pairwise-exceedance comparison.
// The finite-space oracles are exact enumerations; a reported conclusion
// violation on a valid instance means an implementation bug, not a failure
// of the statement being checked.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "coeffs.hpp"
#include "mc.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace iunorm::verify {

// Finite probability space on up to 64 atoms; events are bitmasks.
struct FiniteSpace {
    std::vector<double> probs;
    std::vector<std::uint64_t> events;

    void validate() const {
        if (probs.empty() || probs.size() > 64)
            throw std::invalid_argument("FiniteSpace: need 1..64 atoms");
        double total = 0.0;
        for (double p : probs) {
            if (!(p > 0.0)) throw std::invalid_argument("FiniteSpace: atom probabilities must be positive");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("FiniteSpace: atom probabilities must sum to 1");
        if (probs.size() < 64)
            for (std::uint64_t e : events)
                if (e >> probs.size())
                    throw std::invalid_argument("FiniteSpace: event mask outside atom range");
    }

    double prob(std::uint64_t mask) const {
        double acc = 0.0;
        for (std::size_t a = 0; a < probs.size(); ++a)
            if ((mask >> a) & 1u) acc += probs[a];
        return acc;
    }
};

struct Lemma1Report {
    double kappa = 0.0;
    double pair_sum = 0.0;     // sum_{j,k} P(O_j and O_k)
    double single_sum_sq = 0.0; // (sum_j P(O_j))^2
    double union_prob = 0.0;
    bool hypothesis_ok = false;
    bool conclusion_ok = false;
};

// Hypothesis (1-kappa) * pair_sum <= single_sum^2 implies P(union) >= 1-kappa.
inline Lemma1Report lemma1_check(const FiniteSpace& space, double kappa) {
    if (!(kappa > 0.0 && kappa < 1.0))
        throw std::invalid_argument("lemma1_check: kappa must be in (0,1)");
    space.validate();
    Lemma1Report rep;
    rep.kappa = kappa;
    double single = 0.0;
    std::uint64_t all = 0;
    for (std::uint64_t e : space.events) {
        single += space.prob(e);
        all |= e;
        for (std::uint64_t f : space.events) rep.pair_sum += space.prob(e & f);
    }
    rep.single_sum_sq = single * single;
    rep.union_prob = space.prob(all);
    rep.hypothesis_ok = (1.0 - kappa) * rep.pair_sum <= rep.single_sum_sq + 1e-12;
    rep.conclusion_ok = rep.union_prob >= 1.0 - kappa - 1e-12;
    return rep;
}

// Finite discrete distribution on the line.
struct DiscreteDist {
    std::vector<double> values;
    std::vector<double> probs;

    void validate() const {
        if (values.size() != probs.size() || values.empty())
            throw std::invalid_argument("DiscreteDist: values/probs mismatch");
        double total = 0.0;
        for (double p : probs) {
            if (p < 0.0) throw std::invalid_argument("DiscreteDist: negative probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("DiscreteDist: probabilities must sum to 1");
    }
};

struct ShiftLemmaReport {
    double sup_shift_prob = 0.0; // sup_v P(eta + v in B)
    double best_shift = 0.0;
    double conv_prob = 0.0;      // P(eta + eta^c in B)
    bool conclusion_ok = false;
};

// B is a finite union of closed intervals.  The shifted probability
// v -> P(eta + v in B) is piecewise constant with closed plateaus, so its
// sup is attained at a shift aligning some atom with an interval endpoint.
inline ShiftLemmaReport shift_lemma_check(const DiscreteDist& eta, const DiscreteDist& etac,
                                          const std::vector<std::pair<double, double>>& intervals) {
    eta.validate();
    etac.validate();
    for (const auto& [lo, hi] : intervals)
        if (!(lo <= hi)) throw std::invalid_argument("shift_lemma_check: empty interval");
    auto in_b = [&intervals](double x) {
        for (const auto& [lo, hi] : intervals)
            if (x >= lo && x <= hi) return true;
        return false;
    };
    auto shifted_prob = [&](double v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < eta.values.size(); ++i)
            if (in_b(eta.values[i] + v)) acc += eta.probs[i];
        return acc;
    };
    ShiftLemmaReport rep;
    rep.sup_shift_prob = -1.0;
    for (const auto& [lo, hi] : intervals)
        for (double a : eta.values)
            for (double cand : {lo - a, hi - a}) {
                const double p = shifted_prob(cand);
                if (p > rep.sup_shift_prob) {
                    rep.sup_shift_prob = p;
                    rep.best_shift = cand;
                }
            }
    if (rep.sup_shift_prob < 0.0) { // no intervals: B empty
        rep.sup_shift_prob = 0.0;
        rep.best_shift = 0.0;
    }
    for (std::size_t i = 0; i < eta.values.size(); ++i)
        for (std::size_t j = 0; j < etac.values.size(); ++j)
            if (in_b(eta.values[i] + etac.values[j])) rep.conv_prob += eta.probs[i] * etac.probs[j];
    rep.conclusion_ok = rep.conv_prob <= rep.sup_shift_prob + 1e-12;
    return rep;
}

struct IndicatorSumReport {
    double total = 0.0;     // T = sum T_l
    double prob_low = 0.0;  // P(sum T_l 1_{O_l} <= T/2)
    double p = 0.0;
    bool hypothesis_ok = false; // P(O_l) >= 1-p for all l
    bool conclusion_ok = false; // prob_low <= 2p
};

inline IndicatorSumReport indicator_sum_check(const std::vector<double>& T,
                                              const FiniteSpace& space, double p) {
    space.validate();
    if (T.size() != space.events.size())
        throw std::invalid_argument("indicator_sum_check: need one weight per event");
    IndicatorSumReport rep;
    rep.p = p;
    rep.hypothesis_ok = true;
    for (std::size_t l = 0; l < T.size(); ++l) {
        if (T[l] < 0.0) throw std::invalid_argument("indicator_sum_check: weights must be >= 0");
        rep.total += T[l];
        if (space.prob(space.events[l]) < 1.0 - p - 1e-12) rep.hypothesis_ok = false;
    }
    for (std::size_t a = 0; a < space.probs.size(); ++a) {
        double s = 0.0;
        for (std::size_t l = 0; l < T.size(); ++l)
            if ((space.events[l] >> a) & 1u) s += T[l];
        if (s <= rep.total / 2.0 + 1e-12) rep.prob_low += space.probs[a];
    }
    rep.conclusion_ok = rep.prob_low <= 2.0 * p + 1e-12;
    return rep;
}

// ---------------------------------------------------------------------------
// Convex-geometry lemma

using VectorNorm = std::function<double(const std::vector<double>&)>;

inline VectorNorm norm_l1() {
    return [](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += std::abs(x);
        return acc;
    };
}

inline VectorNorm norm_l2() {
    return [](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x * x;
        return std::sqrt(acc);
    };
}

inline VectorNorm norm_linf() {
    return [](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc = std::max(acc, std::abs(x));
        return acc;
    };
}

// Weighted L1, e.g. cell widths of a step-function representation.
inline VectorNorm norm_l1_weighted(std::vector<double> weights) {
    return [w = std::move(weights)](const std::vector<double>& v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) acc += w[i] * std::abs(v[i]);
        return acc;
    };
}

struct GeomLemmaReport {
    double beta = 0.0;
    double hypothesis_c = 0.0;   // max over signs of ||sum theta w|| / n^{1/2+beta}
    bool hypothesis_exhaustive = false;
    double max_ratio = 0.0;      // max over sampled unit a of ||sum a w|| / n^{1/4+beta/2}
    std::vector<double> best_coeffs;
    long coeff_trials = 0;
};

// Certifies the sign-bound constant c, then samples unit coefficient vectors
// (random plus structured: spikes, flats, geometric decay) and reports the
// largest ||sum a_i w_i|| / n^{1/4+beta/2}.  The reported ratio is an
// empirical lower bound for the constant in the conclusion.
inline GeomLemmaReport geom_lemma_ratio(const std::vector<std::vector<double>>& w,
                                        const VectorNorm& norm, double beta, long coeff_budget,
                                        std::uint64_t seed) {
    if (w.empty()) throw std::invalid_argument("geom_lemma_ratio: empty vector set");
    if (!(beta >= 0.0 && beta < 0.5))
        throw std::invalid_argument("geom_lemma_ratio: beta must be in [0, 1/2)");
    const std::size_t n = w.size();
    const std::size_t dim = w.front().size();
    for (const auto& wi : w) {
        if (wi.size() != dim) throw std::invalid_argument("geom_lemma_ratio: dimension mismatch");
        if (std::abs(norm(wi) - 1.0) > 1e-9)
            throw std::invalid_argument("geom_lemma_ratio: vectors must have unit norm");
    }
    GeomLemmaReport rep;
    rep.beta = beta;
    const double nd = static_cast<double>(n);

    std::vector<double> sum(dim);
    auto combo_norm = [&](const std::vector<double>& a) {
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < dim; ++d) sum[d] += a[i] * w[i][d];
        return norm(sum);
    };

    // hypothesis constant over signs
    std::vector<double> signs(n, 1.0);
    double worst = combo_norm(signs);
    if (n <= 20 && std::ldexp(static_cast<double>(dim) * nd, static_cast<int>(n - 1)) <= 2e8) {
        rep.hypothesis_exhaustive = true;
        const std::uint64_t total = std::uint64_t{1} << (n - 1);
        std::uint64_t gray_prev = 0;
        for (std::uint64_t g = 1; g < total; ++g) {
            const std::uint64_t gray = g ^ (g >> 1);
            const int bit = __builtin_ctzll(gray ^ gray_prev);
            gray_prev = gray;
            signs[static_cast<std::size_t>(bit)] = -signs[static_cast<std::size_t>(bit)];
            worst = std::max(worst, combo_norm(signs));
        }
    } else {
        rep.hypothesis_exhaustive = false;
        for (long d = 0; d < 2 * coeff_budget; ++d) {
            const std::uint64_t key = rng::derive(seed, 0x51680000ULL + static_cast<std::uint64_t>(d));
            for (std::size_t i = 0; i < n; ++i)
                signs[i] = (rng::at(key, i) >> 63) ? 1.0 : -1.0;
            worst = std::max(worst, combo_norm(signs));
        }
    }
    rep.hypothesis_c = worst / std::pow(nd, 0.5 + beta);

    // coefficient sampling (unit euclidean norm)
    const double denom = std::pow(nd, 0.25 + 0.5 * beta);
    std::vector<std::vector<double>> candidates;
    {
        std::vector<double> a(n, 0.0);
        a[0] = 1.0;
        candidates.push_back(a); // spike
        std::fill(a.begin(), a.end(), 1.0 / std::sqrt(nd));
        candidates.push_back(a); // flat
        double norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = std::pow(0.7, static_cast<double>(i));
            norm2 += a[i] * a[i];
        }
        for (auto& x : a) x /= std::sqrt(norm2);
        candidates.push_back(a); // geometric decay
    }
    rep.max_ratio = -1.0;
    auto consider = [&](const std::vector<double>& a) {
        const double ratio = combo_norm(a) / denom;
        ++rep.coeff_trials;
        if (ratio > rep.max_ratio) {
            rep.max_ratio = ratio;
            rep.best_coeffs = a;
        }
    };
    for (const auto& a : candidates) consider(a);
    std::vector<double> a(n);
    for (long t = 0; t < coeff_budget; ++t) {
        const std::uint64_t key = rng::derive(seed, static_cast<std::uint64_t>(t));
        double norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (static_cast<double>(rng::at(key, i) >> 11) + 0.5) * 0x1.0p-53;
            a[i] = rng::inverse_normal_cdf(u);
            norm2 += a[i] * a[i];
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& x : a) x *= inv;
        consider(a);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// CLT error in Kolmogorov distance

struct CltReport {
    int dim = 1;
    long n_terms = 0;
    double distance = 0.0;     // d(N)
    double distance_4n = 0.0;  // d(4N)
    double ratio = 0.0;        // d(4N)/d(N)
    bool exact = true;         // dim 1 is exact; dim 2 is Monte Carlo
};

namespace detail {

// Exact distribution of sum of N iid copies of an atomic model, as
// (value, prob) sorted ascending.
inline DiscreteDist exact_sum_distribution(const CoeffModel& model, long n_terms) {
    std::vector<double> atoms, weights;
    switch (model.law) {
        case CoeffLaw::rademacher:
            atoms = {-1.0, 1.0};
            weights = {0.5, 0.5};
            break;
        case CoeffLaw::two_point_sym: {
            const double q = 0.5 / (model.v * model.v);
            atoms = {-model.v, 0.0, model.v};
            weights = {q, 1.0 - 2.0 * q, q};
            break;
        }
        default:
            throw std::invalid_argument(
                "exact sum distribution available for atomic models only");
    }
    // n-fold convolution on the lattice of attained sums
    std::map<long long, double> lattice; // index in units of the atom step
    // represent atoms as integer multiples of g = gcd-scale; both models use
    // values in {-v, 0, v}, so index by count difference
    lattice[0] = 1.0;
    for (long step = 0; step < n_terms; ++step) {
        std::map<long long, double> next;
        for (const auto& [idx, p] : lattice)
            for (std::size_t a = 0; a < atoms.size(); ++a) {
                const long long shift = (atoms[a] > 0) ? 1 : (atoms[a] < 0 ? -1 : 0);
                next[idx + shift] += p * weights[a];
            }
        lattice.swap(next);
    }
    const double v = (model.law == CoeffLaw::rademacher) ? 1.0 : model.v;
    DiscreteDist out;
    for (const auto& [idx, p] : lattice) {
        out.values.push_back(v * static_cast<double>(idx));
        out.probs.push_back(p);
    }
    return out;
}

// sup_x |F(x) - Phi(x)| for an atomic distribution, checking both one-sided
// limits at every atom.
inline double kolmogorov_distance_to_normal(const DiscreteDist& dist, double scale) {
    double cdf = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < dist.values.size(); ++i) {
        const double x = dist.values[i] / scale;
        worst = std::max(worst, std::abs(cdf - rng::normal_cdf(x))); // left limit
        cdf += dist.probs[i];
        worst = std::max(worst, std::abs(cdf - rng::normal_cdf(x))); // right value
    }
    return worst;
}

inline double clt_distance_dim1(const CoeffModel& model, long n_terms) {
    if (model.law == CoeffLaw::gaussian) return 0.0; // normal sums are normal
    const DiscreteDist dist = exact_sum_distribution(model, n_terms);
    return kolmogorov_distance_to_normal(dist, std::sqrt(static_cast<double>(n_terms)));
}

// Fixed family of about 10^3 rectangles and half-planes.
struct ConvexFamily {
    std::vector<std::array<double, 4>> rects;      // x_lo, x_hi, y_lo, y_hi
    std::vector<std::array<double, 3>> halfplanes; // cos t, sin t, offset

    static ConvexFamily standard() {
        ConvexFamily fam;
        const std::vector<double> grid{-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0};
        for (std::size_t i = 0; i < grid.size(); ++i)
            for (std::size_t j = i + 1; j < grid.size(); ++j)
                for (std::size_t k = 0; k < grid.size(); ++k)
                    for (std::size_t l = k + 1; l < grid.size(); ++l)
                        if (((i * 7 + j * 5 + k * 3 + l) & 1) == 0) // thin to ~650
                            fam.rects.push_back({grid[i], grid[j], grid[k], grid[l]});
        for (int t = 0; t < 18; ++t)
            for (int c = 0; c < 20; ++c) {
                const double th = std::numbers::pi * t / 18.0;
                fam.halfplanes.push_back({std::cos(th), std::sin(th), -2.85 + 0.3 * c});
            }
        return fam;
    }

    std::size_t size() const { return rects.size() + halfplanes.size(); }
};

inline double clt_distance_dim2(const CoeffModel& model, long n_terms, long trials,
                                std::uint64_t seed) {
    const ConvexFamily fam = ConvexFamily::standard();
    std::vector<double> counts(fam.size(), 0.0);
    for (long t = 0; t < trials; ++t) {
        const std::uint64_t key = rng::derive(seed, static_cast<std::uint64_t>(t));
        double sx = 0.0, sy = 0.0;
        for (long i = 0; i < n_terms; ++i) {
            sx += model.sample(key, static_cast<std::uint64_t>(2 * i));
            sy += model.sample(key, static_cast<std::uint64_t>(2 * i + 1));
        }
        const double inv = 1.0 / std::sqrt(static_cast<double>(n_terms));
        sx *= inv;
        sy *= inv;
        std::size_t idx = 0;
        for (const auto& r : fam.rects) {
            if (sx >= r[0] && sx <= r[1] && sy >= r[2] && sy <= r[3]) counts[idx] += 1.0;
            ++idx;
        }
        for (const auto& h : fam.halfplanes) {
            if (h[0] * sx + h[1] * sy <= h[2]) counts[idx] += 1.0;
            ++idx;
        }
    }
    double worst = 0.0;
    std::size_t idx = 0;
    for (const auto& r : fam.rects) {
        const double exact = (rng::normal_cdf(r[1]) - rng::normal_cdf(r[0])) *
                             (rng::normal_cdf(r[3]) - rng::normal_cdf(r[2]));
        worst = std::max(worst, std::abs(counts[idx] / static_cast<double>(trials) - exact));
        ++idx;
    }
    for (const auto& h : fam.halfplanes) {
        const double exact = rng::normal_cdf(h[2]); // rotation invariance of the Gaussian
        worst = std::max(worst, std::abs(counts[idx] / static_cast<double>(trials) - exact));
        ++idx;
    }
    return worst;
}

} // namespace detail

// dim 1: exact Kolmogorov distance between the normalized N-term sum and the
// standard normal (no Monte Carlo noise; recomputation is bit-identical).
// dim 2: Monte Carlo sup over a fixed family of rectangles and half-planes,
// a tractable subclass of the convex sets, sufficient to exhibit the rate.
inline CltReport clt_error(const CoeffModel& model, long n_terms, int dim, std::uint64_t seed,
                           long dim2_trials = 20000) {
    if (dim < 1 || dim > 2) throw std::invalid_argument("clt_error: dim must be 1 or 2");
    if (n_terms < 4) throw std::invalid_argument("clt_error: N must be >= 4");
    CltReport rep;
    rep.dim = dim;
    rep.n_terms = n_terms;
    if (dim == 1) {
        rep.exact = true;
        rep.distance = detail::clt_distance_dim1(model, n_terms);
        rep.distance_4n = detail::clt_distance_dim1(model, 4 * n_terms);
    } else {
        rep.exact = false;
        rep.distance = detail::clt_distance_dim2(model, n_terms, dim2_trials, seed);
        rep.distance_4n = detail::clt_distance_dim2(model, 4 * n_terms, dim2_trials,
                                                    rng::derive(seed, 4));
    }
    rep.ratio = rep.distance > 0.0 ? rep.distance_4n / rep.distance : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Gaussian pairwise comparison

// P(X > a, Y > b) for standard bivariate normal with correlation rho, by
// adaptive Simpson quadrature over the conditional tail.
inline double bivariate_normal_upper(double a, double b, double rho) {
    if (!(rho > -1.0 && rho < 1.0)) {
        if (rho >= 1.0) return rng::normal_upper(std::max(a, b));
        // Y = -X: the event is a < X < -b
        return std::max(0.0, rng::normal_upper(a) - rng::normal_upper(-b));
    }
    const double s = std::sqrt(1.0 - rho * rho);
    auto integrand = [&](double x) {
        const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        return phi * rng::normal_upper((b - rho * x) / s);
    };
    std::function<double(double, double, double, double, double, double, int)> simpson =
        [&](double lo, double hi, double flo, double fmid, double fhi, double whole,
            int depth) -> double {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = integrand(lm), frm = integrand(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (depth <= 0 || std::abs(left + right - whole) < 1e-13)
            return left + right + (left + right - whole) / 15.0;
        return simpson(lo, mid, flo, flm, fmid, left, depth - 1) +
               simpson(mid, hi, fmid, frm, fhi, right, depth - 1);
    };
    const double hi = std::max({a, b, 0.0}) + 12.0;
    if (hi <= a) return 0.0;
    const double mid = 0.5 * (a + hi);
    const double fa = integrand(a), fm = integrand(mid), fb = integrand(hi);
    const double whole = (hi - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(a, hi, fa, fm, fb, whole, 48);
}

struct GaussianCompareConfig {
    int m = 2;
    // either a full covariance matrix (small m) ...
    std::vector<std::vector<double>> covariance;
    // ... or the equicorrelated shortcut: D on the diagonal, v off-diagonal
    bool equicorrelated = false;
    double diag = 1.0;
    double offdiag = 0.0;
    double r2 = 1.0;     // lower bound on the diagonal
    double r_eff = 1.0;  // R
    double delta = 1.0;
    double c0 = 1.0;
    double alpha = 1.0;  // threshold multiplier

    double cov(int j, int k) const {
        if (equicorrelated) return j == k ? diag : offdiag;
        return covariance[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
    }
};

struct GaussianCompareReport {
    double log_gain = 0.0;       // P = min(R, m) + 1
    double threshold_z = 0.0;    // alpha * sqrt(log P)
    double lhs_pair_sum = 0.0;   // estimate of sum_{j,k} P(Psi_j and Psi_k)
    double rhs_single_sq = 0.0;  // (sum_j P(Psi_j))^2
    double ratio = 0.0;
    double ratio_stderr = 0.0;
    double avg_offdiag = 0.0;    // (1/m^2) sum_{j != k} |v_{jk}|
    bool constraint_ok = false;  // avg_offdiag <= c0 R^{-delta} r^2
    std::int64_t trials = 0;
    // per-pair joint and marginal frequencies, filled when m <= 32
    std::vector<std::vector<double>> pair_freq;
    std::vector<double> marginal_freq;
};

namespace detail {

// Symmetric Jacobi eigendecomposition; A is overwritten with rotations.
// Returns eigenvalues; V receives eigenvectors in columns.
inline std::vector<double> jacobi_eigen(std::vector<std::vector<double>> a,
                                        std::vector<std::vector<double>>& v) {
    const std::size_t n = a.size();
    v.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-18) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
    return eig;
}

// B with B B^T = V (spectral square root; small negative eigenvalues from
// rounding are clamped, residual checked to 1e-10).
inline std::vector<std::vector<double>> psd_sqrt(const std::vector<std::vector<double>>& cov) {
    const std::size_t n = cov.size();
    std::vector<std::vector<double>> vecs;
    std::vector<double> eig = jacobi_eigen(cov, vecs);
    double scale = 1e-30;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(eig[i]));
    for (double& e : eig) {
        if (e < -1e-9 * scale)
            throw std::invalid_argument("covariance is not positive semidefinite");
        e = std::sqrt(std::max(e, 0.0));
    }
    std::vector<std::vector<double>> b(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) b[i][j] = vecs[i][j] * eig[j];
    // residual check
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += b[i][k] * b[j][k];
            worst = std::max(worst, std::abs(acc - cov[i][j]));
        }
    if (worst > 1e-10 * std::max(scale, 1.0))
        throw std::runtime_error("covariance factorization residual too large");
    return b;
}

} // namespace detail

// Samples Gaussian vectors with the configured covariance, counts threshold
// exceedances Psi_j = {h_j > alpha sqrt(D_j log P)}, and compares the pair
// sum with the squared single sum.  The pair sum is accumulated as E[K^2]
// where K is the per-sample exceedance count, so the cost per sample is O(m).
inline GaussianCompareReport gaussian_comparison(const GaussianCompareConfig& cfg,
                                                 std::int64_t trials, std::uint64_t seed,
                                                 int threads = 0) {
    if (cfg.m < 2) throw std::invalid_argument("gaussian_comparison: m must be >= 2");
    if (trials < 100) throw std::invalid_argument("gaussian_comparison: too few trials");
    const int m = cfg.m;
    if (!cfg.equicorrelated) {
        if (static_cast<int>(cfg.covariance.size()) != m)
            throw std::invalid_argument("gaussian_comparison: covariance size mismatch");
        if (m > 64)
            throw std::invalid_argument("gaussian_comparison: full covariance limited to m <= 64");
    } else if (cfg.offdiag < 0.0) {
        throw std::invalid_argument("equicorrelated shortcut needs offdiag >= 0");
    }

    GaussianCompareReport rep;
    rep.trials = trials;
    rep.log_gain = std::min(cfg.r_eff, static_cast<double>(m)) + 1.0;
    rep.threshold_z = cfg.alpha * std::sqrt(std::log(rep.log_gain));

    double avg = 0.0;
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
            if (j != k) avg += std::abs(cfg.cov(j, k));
    rep.avg_offdiag = avg / (static_cast<double>(m) * static_cast<double>(m));
    rep.constraint_ok = rep.avg_offdiag <= cfg.c0 * std::pow(cfg.r_eff, -cfg.delta) * cfg.r2 + 1e-12;

    std::vector<double> thresholds(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const double dj = cfg.cov(j, j);
        if (!(dj >= cfg.r2 - 1e-12))
            throw std::invalid_argument("gaussian_comparison: diagonal below r^2");
        thresholds[static_cast<std::size_t>(j)] = cfg.alpha * std::sqrt(dj * std::log(rep.log_gain));
    }

    std::vector<std::vector<double>> factor;
    if (!cfg.equicorrelated) factor = detail::psd_sqrt(cfg.covariance);
    const bool small = m <= 32;

    struct Acc {
        double k1 = 0.0, k2 = 0.0;            // sums of K and K^2
        std::vector<double> marg;             // per-coordinate exceedance counts
        std::vector<double> pair;             // flattened m*m joint counts (small m)
        std::vector<double> batch_k1, batch_k2, batch_n;
        std::int64_t count = 0;
    };

    const std::int64_t chunk = 4096;
    Acc total = run_chunked<Acc>(
        trials, chunk, threads,
        [&](std::int64_t lo, std::int64_t hi) {
            Acc a;
            a.marg.assign(static_cast<std::size_t>(m), 0.0);
            if (small) a.pair.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
            std::vector<double> z(static_cast<std::size_t>(m)), h(static_cast<std::size_t>(m));
            std::vector<int> hit(static_cast<std::size_t>(m));
            double bk1 = 0.0, bk2 = 0.0;
            for (std::int64_t t = lo; t < hi; ++t) {
                const std::uint64_t key = rng::derive(seed, static_cast<std::uint64_t>(t));
                if (cfg.equicorrelated) {
                    const double shared = std::sqrt(cfg.offdiag) *
                                          rng::inverse_normal_cdf(
                                              (static_cast<double>(rng::at(key, 1000000) >> 11) + 0.5) * 0x1.0p-53);
                    const double own = std::sqrt(cfg.diag - cfg.offdiag);
                    for (int j = 0; j < m; ++j) {
                        const double u = (static_cast<double>(rng::at(key, static_cast<std::uint64_t>(j)) >> 11) + 0.5) * 0x1.0p-53;
                        h[static_cast<std::size_t>(j)] = own * rng::inverse_normal_cdf(u) + shared;
                    }
                } else {
                    for (int j = 0; j < m; ++j) {
                        const double u = (static_cast<double>(rng::at(key, static_cast<std::uint64_t>(j)) >> 11) + 0.5) * 0x1.0p-53;
                        z[static_cast<std::size_t>(j)] = rng::inverse_normal_cdf(u);
                    }
                    for (int j = 0; j < m; ++j) {
                        double acc = 0.0;
                        for (int k = 0; k < m; ++k)
                            acc += factor[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] *
                                   z[static_cast<std::size_t>(k)];
                        h[static_cast<std::size_t>(j)] = acc;
                    }
                }
                int count = 0;
                for (int j = 0; j < m; ++j) {
                    hit[static_cast<std::size_t>(j)] =
                        h[static_cast<std::size_t>(j)] > thresholds[static_cast<std::size_t>(j)] ? 1 : 0;
                    count += hit[static_cast<std::size_t>(j)];
                    a.marg[static_cast<std::size_t>(j)] += hit[static_cast<std::size_t>(j)];
                }
                const double kd = static_cast<double>(count);
                a.k1 += kd;
                a.k2 += kd * kd;
                bk1 += kd;
                bk2 += kd * kd;
                if (small && count >= 1)
                    for (int j = 0; j < m; ++j)
                        if (hit[static_cast<std::size_t>(j)])
                            for (int k = 0; k < m; ++k)
                                if (hit[static_cast<std::size_t>(k)])
                                    a.pair[static_cast<std::size_t>(j * m + k)] += 1.0;
            }
            a.count = hi - lo;
            a.batch_k1.push_back(bk1);
            a.batch_k2.push_back(bk2);
            a.batch_n.push_back(static_cast<double>(hi - lo));
            return a;
        },
        [&](Acc& a, const Acc& b) {
            if (b.count == 0) return;
            if (a.count == 0) {
                a = b;
                return;
            }
            a.k1 += b.k1;
            a.k2 += b.k2;
            for (std::size_t i = 0; i < a.marg.size(); ++i) a.marg[i] += b.marg[i];
            if (small)
                for (std::size_t i = 0; i < a.pair.size(); ++i) a.pair[i] += b.pair[i];
            a.batch_k1.insert(a.batch_k1.end(), b.batch_k1.begin(), b.batch_k1.end());
            a.batch_k2.insert(a.batch_k2.end(), b.batch_k2.begin(), b.batch_k2.end());
            a.batch_n.insert(a.batch_n.end(), b.batch_n.begin(), b.batch_n.end());
            a.count += b.count;
        });

    const double t = static_cast<double>(trials);
    rep.lhs_pair_sum = total.k2 / t;
    const double mean_k = total.k1 / t;
    rep.rhs_single_sq = mean_k * mean_k;
    rep.ratio = rep.rhs_single_sq > 0.0 ? rep.lhs_pair_sum / rep.rhs_single_sq : 0.0;

    // jackknife over chunks for the ratio's standard error
    const std::size_t nb = total.batch_k1.size();
    if (nb >= 2 && rep.rhs_single_sq > 0.0) {
        double acc = 0.0;
        std::vector<double> jack(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            const double bt = t - total.batch_n[b];
            const double k1 = (total.k1 - total.batch_k1[b]) / bt;
            const double k2 = (total.k2 - total.batch_k2[b]) / bt;
            jack[b] = k1 > 0.0 ? k2 / (k1 * k1) : 0.0;
            acc += jack[b];
        }
        const double jbar = acc / static_cast<double>(nb);
        double var = 0.0;
        for (double jv : jack) var += (jv - jbar) * (jv - jbar);
        var *= (static_cast<double>(nb) - 1.0) / static_cast<double>(nb);
        rep.ratio_stderr = std::sqrt(var);
    }

    rep.marginal_freq.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
        rep.marginal_freq[static_cast<std::size_t>(j)] = total.marg[static_cast<std::size_t>(j)] / t;
    if (small) {
        rep.pair_freq.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m), 0.0));
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                rep.pair_freq[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
                    total.pair[static_cast<std::size_t>(j * m + k)] / t;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Transfer comparison: empirical eta_j = n^{-1/2} sum_i xi_i f_i(x_j) versus
// the Gaussian vector with the identical covariance (computed exactly from
// the basis values at the sampled points).  Marginal and pairwise Gaussian
// probabilities are closed-form / quadrature, so only the eta side is
// Monte Carlo.

struct TransferReport {
    int m_points = 0;
    double log_gain = 0.0;        // P = min(n, m) + 1
    double max_marginal_gap = 0.0;
    double max_marginal_stderr = 0.0;
    double max_joint_gap = 0.0;
    double max_joint_stderr = 0.0;
    std::vector<double> eta_freq;    // empirical P(U_j)
    std::vector<double> gauss_prob;  // exact P(Psi_j)
    std::vector<int> excluded;       // points with degenerate variance
};

inline TransferReport transfer_comparison(const mc::Ensemble& ens, const CoeffModel& model,
                                          int m_points, double alpha, std::int64_t trials,
                                          std::uint64_t seed, int threads = 0) {
    if (m_points < 1) throw std::invalid_argument("transfer_comparison: need m >= 1");
    if (trials < 100) throw std::invalid_argument("transfer_comparison: too few trials");
    const long n = ens.size();
    TransferReport rep;
    rep.m_points = m_points;
    rep.log_gain = std::min(static_cast<double>(n), static_cast<double>(m_points)) + 1.0;

    // basis values at the sampled points
    std::vector<std::vector<cplx>> pts;
    for (int j = 0; j < m_points; ++j)
        pts.push_back(ens.values_at_random_point(rng::derive(seed, 0x9057u), static_cast<std::uint64_t>(j)));

    // exact covariance of eta (real part; the shipped models are real)
    std::vector<std::vector<double>> cov(static_cast<std::size_t>(m_points),
                                         std::vector<double>(static_cast<std::size_t>(m_points), 0.0));
    for (int j = 0; j < m_points; ++j)
        for (int k = j; k < m_points; ++k) {
            double acc = 0.0;
            for (long i = 0; i < n; ++i)
                acc += pts[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)].real() *
                       pts[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)].real();
            cov[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
                cov[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] =
                    acc / static_cast<double>(n);
        }
    for (int j = 0; j < m_points; ++j)
        if (cov[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] <= 0.0)
            rep.excluded.push_back(j);

    std::vector<double> thresholds(static_cast<std::size_t>(m_points), 0.0);
    const double logp = std::log(rep.log_gain);
    for (int j = 0; j < m_points; ++j)
        thresholds[static_cast<std::size_t>(j)] =
            alpha * std::sqrt(std::max(cov[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)], 0.0) * logp);

    // eta side: Monte Carlo over coefficient draws
    struct Acc {
        std::vector<double> marg;
        std::vector<double> joint; // flattened
        std::int64_t count = 0;
    };
    const std::size_t mp = static_cast<std::size_t>(m_points);
    Acc total = run_chunked<Acc>(
        trials, 4096, threads,
        [&](std::int64_t lo, std::int64_t hi) {
            Acc a;
            a.marg.assign(mp, 0.0);
            a.joint.assign(mp * mp, 0.0);
            std::vector<double> eta(mp);
            std::vector<int> hit(mp);
            const double inv = 1.0 / std::sqrt(static_cast<double>(n));
            for (std::int64_t t = lo; t < hi; ++t) {
                const std::uint64_t key = rng::derive(seed, static_cast<std::uint64_t>(t));
                std::fill(eta.begin(), eta.end(), 0.0);
                for (long i = 0; i < n; ++i) {
                    const double xi = model.sample(key, static_cast<std::uint64_t>(i));
                    if (xi == 0.0) continue;
                    for (std::size_t j = 0; j < mp; ++j)
                        eta[j] += xi * pts[j][static_cast<std::size_t>(i)].real();
                }
                for (std::size_t j = 0; j < mp; ++j) {
                    hit[j] = (eta[j] * inv) > thresholds[j] ? 1 : 0;
                    a.marg[j] += hit[j];
                }
                for (std::size_t j = 0; j < mp; ++j)
                    if (hit[j])
                        for (std::size_t k = 0; k < mp; ++k)
                            if (hit[k]) a.joint[j * mp + k] += 1.0;
            }
            a.count = hi - lo;
            return a;
        },
        [&](Acc& a, const Acc& b) {
            if (b.count == 0) return;
            if (a.count == 0) {
                a = b;
                return;
            }
            for (std::size_t i = 0; i < a.marg.size(); ++i) a.marg[i] += b.marg[i];
            for (std::size_t i = 0; i < a.joint.size(); ++i) a.joint[i] += b.joint[i];
            a.count += b.count;
        });

    const double t = static_cast<double>(trials);
    rep.eta_freq.resize(mp);
    rep.gauss_prob.resize(mp);
    const double z = alpha * std::sqrt(logp);
    for (std::size_t j = 0; j < mp; ++j) {
        rep.eta_freq[j] = total.marg[j] / t;
        const bool ok = cov[j][j] > 0.0;
        rep.gauss_prob[j] = ok ? rng::normal_upper(z) : 0.0;
        if (!ok) continue;
        const double gap = std::abs(rep.eta_freq[j] - rep.gauss_prob[j]);
        const double se = std::sqrt(std::max(rep.eta_freq[j] * (1.0 - rep.eta_freq[j]), 1e-12) / t);
        if (gap > rep.max_marginal_gap) rep.max_marginal_gap = gap;
        rep.max_marginal_stderr = std::max(rep.max_marginal_stderr, se);
    }
    for (std::size_t j = 0; j < mp; ++j)
        for (std::size_t k = j + 1; k < mp; ++k) {
            if (cov[j][j] <= 0.0 || cov[k][k] <= 0.0) continue;
            const double rho = cov[j][k] / std::sqrt(cov[j][j] * cov[k][k]);
            const double exact = bivariate_normal_upper(z, z, std::clamp(rho, -1.0, 1.0));
            const double emp = total.joint[j * mp + k] / t;
            const double gap = std::abs(emp - exact);
            const double se = std::sqrt(std::max(emp * (1.0 - emp), 1e-12) / t);
            if (gap > rep.max_joint_gap) rep.max_joint_gap = gap;
            rep.max_joint_stderr = std::max(rep.max_joint_stderr, se);
        }
    return rep;
}

} // namespace iunorm::verify
