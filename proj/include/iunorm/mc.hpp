#pragma once

// Monte Carlo estimation of expected norms of random polynomials
// sum_i a_i xi_i f_i, tail probabilities, scaling-law sweeps, the upper-bound
// ratio, the Marcinkiewicz gap and the sign search.
//
// Systems enter through an Ensemble, which provides the per-trial modulus
// distribution of the combination:
//   - explicit: any FunctionSystem, cellwise arithmetic;
//   - dyadic:   the Rademacher system for arbitrary n.  A sign pattern is a
//     measure-preserving relabeling of the dyadic cells, so for coefficients
//     of one common modulus the combination is equimeasurable with that
//     modulus times |n - 2*Binomial(n, 1/2)|, which is exact at any n.
//     Other coefficient vectors are enumerated when n <= 16;
//   - trig:     midpoint-sampled exponentials evaluated by FFT.
// The dyadic and trig routes agree with the explicit route on small n; this
// is covered by tests.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "coeffs.hpp"
#include "fft.hpp"
#include "norms.hpp"
#include "parallel.hpp"
#include "stats.hpp"
#include "step_function.hpp"
#include "systems.hpp"

namespace iunorm::mc {

struct SystemSpec {
    enum class Kind { rademacher, trig, indicator, mixed, file };
    Kind kind = Kind::rademacher;
    long n = 1;
    int factor = 4;       // trig oversampling
    bool two_sided = false; // trig frequencies -n..n instead of 1..n
    double q = 0.5;       // mixed exponent
    bool normalize = false;
    std::string path;

    // "rademacher" | "trig" | "trig2" | "indicator" | "mixed:q=0.55[,normalize]"
    // | "file:PATH"
    static SystemSpec parse(const std::string& text) {
        SystemSpec s;
        if (text == "rademacher") { s.kind = Kind::rademacher; return s; }
        if (text == "trig") { s.kind = Kind::trig; return s; }
        if (text == "trig2") { s.kind = Kind::trig; s.two_sided = true; return s; }
        if (text == "indicator") { s.kind = Kind::indicator; return s; }
        if (text.rfind("mixed:q=", 0) == 0) {
            s.kind = Kind::mixed;
            std::string rest = text.substr(8);
            const auto comma = rest.find(',');
            if (comma != std::string::npos) {
                if (rest.substr(comma + 1) != "normalize")
                    throw std::invalid_argument("unknown mixed-system option: " + rest.substr(comma + 1));
                s.normalize = true;
                rest = rest.substr(0, comma);
            }
            s.q = std::stod(rest);
            return s;
        }
        if (text.rfind("file:", 0) == 0) {
            s.kind = Kind::file;
            s.path = text.substr(5);
            return s;
        }
        throw std::invalid_argument("unknown system spec: " + text);
    }

    std::string label() const {
        switch (kind) {
            case Kind::rademacher: return "rademacher";
            case Kind::trig: return two_sided ? "trig2" : "trig";
            case Kind::indicator: return "indicator";
            case Kind::mixed: {
                char buf[48];
                std::snprintf(buf, sizeof buf, "mixed:q=%g%s", q, normalize ? ",normalize" : "");
                return buf;
            }
            case Kind::file: return "file:" + path;
        }
        return "?";
    }
};

class Ensemble {
public:
    enum class Kind { explicit_fns, dyadic, trig };

    static Ensemble explicit_system(FunctionSystem sys) {
        Ensemble e;
        e.kind_ = Kind::explicit_fns;
        e.label_ = sys.label;
        e.n_ = static_cast<long>(sys.size());
        e.sys_ = std::move(sys);
        return e;
    }

    static Ensemble rademacher(long n) {
        if (n < 1) throw std::invalid_argument("Ensemble::rademacher: n must be >= 1");
        Ensemble e;
        e.kind_ = Kind::dyadic;
        e.label_ = "rademacher";
        e.n_ = n;
        e.binom_pmf_ = binomial_pmf(n);
        return e;
    }

    static Ensemble trig(long n, int factor, bool two_sided) {
        if (n < 1) throw std::invalid_argument("Ensemble::trig: n must be >= 1");
        if (factor < 4) throw std::invalid_argument("Ensemble::trig: factor must be >= 4");
        Ensemble e;
        e.kind_ = Kind::trig;
        e.label_ = two_sided ? "trig2" : "trig";
        e.n_ = two_sided ? 2 * n + 1 : n;
        e.trig_kmin_ = two_sided ? -static_cast<int>(n) : 1;
        e.trig_cells_ = static_cast<std::size_t>(factor) * static_cast<std::size_t>(n);
        return e;
    }

    static Ensemble from_spec(const SystemSpec& spec, long n) {
        switch (spec.kind) {
            case SystemSpec::Kind::rademacher: return rademacher(n);
            case SystemSpec::Kind::trig: return trig(n, spec.factor, spec.two_sided);
            case SystemSpec::Kind::indicator:
                return explicit_system(indicator_system(static_cast<int>(n)));
            case SystemSpec::Kind::mixed:
                return explicit_system(mixed_system(static_cast<int>(n), spec.q, spec.normalize));
            case SystemSpec::Kind::file:
                throw std::invalid_argument("file-backed systems must be loaded explicitly");
        }
        throw std::invalid_argument("bad system spec");
    }

    Kind kind() const { return kind_; }
    long size() const { return n_; }
    const std::string& label() const { return label_; }
    const FunctionSystem& system() const { return sys_; }

    // Discrete L2 orthonormality holds for the dyadic and sampled
    // trigonometric systems, enabling the exact Parseval route for p = 2.
    bool orthonormal() const { return kind_ != Kind::explicit_fns; }

    // Modulus/width pairs of sum_i coeffs[i] f_i (unsorted).
    void combination_moduli(const std::vector<cplx>& coeffs,
                            std::vector<std::pair<double, double>>& out) const {
        if (static_cast<long>(coeffs.size()) != n_)
            throw std::invalid_argument("Ensemble: coefficient count mismatch");
        out.clear();
        switch (kind_) {
            case Kind::explicit_fns: {
                // local buffer: ensembles are shared across trial threads
                const auto& fns = sys_.functions;
                const std::size_t cells = fns.front().cells();
                std::vector<cplx> sum(cells, cplx{});
                for (std::size_t i = 0; i < fns.size(); ++i) {
                    const cplx c = coeffs[i];
                    if (c == cplx{}) continue;
                    const auto& v = fns[i].values;
                    for (std::size_t k = 0; k < cells; ++k) sum[k] += c * v[k];
                }
                const auto& bp = fns.front().breakpoints;
                out.reserve(cells);
                for (std::size_t k = 0; k < cells; ++k)
                    out.emplace_back(std::abs(sum[k]), bp[k + 1] - bp[k]);
                return;
            }
            case Kind::dyadic: {
                // zero coefficients drop out of the sum entirely
                double common = -1.0;
                long nonzero = 0;
                bool uniform_modulus = true;
                for (const cplx& c : coeffs) {
                    if (c == cplx{}) continue;
                    if (c.imag() != 0.0) { uniform_modulus = false; break; }
                    const double a = std::abs(c.real());
                    ++nonzero;
                    if (common < 0.0) common = a;
                    else if (std::abs(a - common) > 1e-12 * std::max(1.0, common)) {
                        uniform_modulus = false;
                        break;
                    }
                }
                if (uniform_modulus && nonzero == 0) {
                    out.emplace_back(0.0, 1.0);
                    return;
                }
                if (uniform_modulus) {
                    // equimeasurable with common * |n' - 2k|, k ~ Binomial(n', 1/2)
                    std::vector<double> reduced;
                    const std::vector<double>* pmf = &binom_pmf_;
                    if (nonzero != n_) {
                        reduced = binomial_pmf(nonzero);
                        pmf = &reduced;
                    }
                    out.reserve(pmf->size());
                    for (std::size_t k = 0; k < pmf->size(); ++k)
                        out.emplace_back(
                            common * std::abs(static_cast<double>(nonzero) - 2.0 * static_cast<double>(k)),
                            (*pmf)[k]);
                    return;
                }
                if (n_ > 16)
                    throw std::invalid_argument(
                        "Rademacher ensemble with non-uniform coefficient moduli needs n <= 16");
                const std::size_t patterns = std::size_t{1} << n_;
                const double w = 1.0 / static_cast<double>(patterns);
                out.reserve(patterns);
                cplx sum{};
                for (const cplx& c : coeffs) sum += c; // pattern 0: all +1
                std::uint64_t gray_prev = 0;
                for (std::size_t g = 0;; ++g) {
                    out.emplace_back(std::abs(sum), w);
                    if (g + 1 == patterns) break;
                    const std::uint64_t gray = (g + 1) ^ ((g + 1) >> 1);
                    const std::uint64_t changed = gray ^ gray_prev;
                    const int bit = __builtin_ctzll(changed);
                    gray_prev = gray;
                    sum += ((gray >> bit) & 1u) ? -2.0 * coeffs[static_cast<std::size_t>(bit)]
                                                : 2.0 * coeffs[static_cast<std::size_t>(bit)];
                }
                return;
            }
            case Kind::trig: {
                auto vals = eval_exponential_sum(coeffs, trig_kmin_, trig_cells_);
                const double w = 1.0 / static_cast<double>(trig_cells_);
                out.reserve(vals.size());
                for (const auto& z : vals) out.emplace_back(std::abs(z), w);
                return;
            }
        }
    }

    Rearrangement combination_rearrangement(const std::vector<cplx>& coeffs) const {
        std::vector<std::pair<double, double>> pairs;
        combination_moduli(coeffs, pairs);
        std::sort(pairs.begin(), pairs.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        return rearrangement_of_pairs(std::move(pairs));
    }

    // Rearrangement of sqrt(sum_i |f_i|^2).
    Rearrangement square_function_rearrangement() const {
        if (kind_ == Kind::explicit_fns) return rearrangement(square_function(sys_));
        // dyadic: sum r_i^2 = n; trig: sum |e^{ikx}|^2 = n (function count)
        Rearrangement r;
        r.values.push_back(std::sqrt(static_cast<double>(n_)));
        r.widths.push_back(1.0);
        return r;
    }

    // Basis values at a uniformly chosen point, counter-seeded per point
    // index.  For the dyadic backend the vector (r_i(x))_i at uniform x is an
    // i.i.d. sign vector, which is sampled directly (a literal double could
    // carry only 53 dyadic bits).
    std::vector<cplx> values_at_random_point(std::uint64_t seed, std::uint64_t point_index) const {
        std::vector<cplx> out(static_cast<std::size_t>(n_));
        const std::uint64_t key = rng::derive(seed, point_index);
        switch (kind_) {
            case Kind::explicit_fns: {
                const double x = rng::uniform01(key, 0);
                for (std::size_t i = 0; i < out.size(); ++i)
                    out[i] = sys_.functions[i].value_at(x);
                return out;
            }
            case Kind::dyadic: {
                for (std::size_t i = 0; i < out.size(); ++i)
                    out[i] = cplx((rng::at(key, i) >> 63) ? 1.0 : -1.0, 0.0);
                return out;
            }
            case Kind::trig: {
                const double x = rng::uniform01(key, 0);
                const auto cell = static_cast<std::size_t>(
                    std::min(x * static_cast<double>(trig_cells_),
                             static_cast<double>(trig_cells_ - 1)));
                const double mid = (static_cast<double>(cell) + 0.5) / static_cast<double>(trig_cells_);
                for (std::size_t i = 0; i < out.size(); ++i) {
                    const double th = 2.0 * std::numbers::pi * (trig_kmin_ + static_cast<double>(i)) * mid;
                    out[i] = cplx(std::cos(th), std::sin(th));
                }
                return out;
            }
        }
        return out;
    }

private:
    static std::vector<double> binomial_pmf(long n) {
        std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
        const double lg_n = std::lgamma(static_cast<double>(n) + 1.0);
        const double ln2 = std::log(2.0);
        double total = 0.0;
        for (long k = 0; k <= n; ++k) {
            const double lp = lg_n - std::lgamma(static_cast<double>(k) + 1.0) -
                              std::lgamma(static_cast<double>(n - k) + 1.0) -
                              static_cast<double>(n) * ln2;
            pmf[static_cast<std::size_t>(k)] = std::exp(lp);
            total += pmf[static_cast<std::size_t>(k)];
        }
        for (double& p : pmf) p /= total;
        return pmf;
    }

    Kind kind_ = Kind::dyadic;
    std::string label_;
    long n_ = 0;
    FunctionSystem sys_;
    std::vector<double> binom_pmf_;
    int trig_kmin_ = 1;
    std::size_t trig_cells_ = 0;
};

namespace detail {

inline std::vector<cplx> resolve_weights(const Ensemble& ens, const std::vector<cplx>& weights) {
    if (weights.empty()) return std::vector<cplx>(static_cast<std::size_t>(ens.size()), cplx(1.0, 0.0));
    if (static_cast<long>(weights.size()) != ens.size())
        throw std::invalid_argument("weights length must match the system size");
    return weights;
}

// One random polynomial draw: coefficient i of trial t is a pure function of
// (seed, t, i).
inline void trial_coefficients(const CoeffModel& model, const std::vector<cplx>& weights,
                               std::uint64_t seed, std::int64_t trial, std::vector<cplx>& out) {
    const std::uint64_t key = rng::derive(seed, static_cast<std::uint64_t>(trial));
    out.resize(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        out[i] = weights[i] * model.sample(key, i);
}

inline double parseval_l2(const std::vector<cplx>& coeffs) {
    double acc = 0.0;
    for (const cplx& c : coeffs) acc += std::norm(c);
    return std::sqrt(acc);
}

struct TrialWorkspace {
    std::vector<cplx> coeffs;
    std::vector<std::pair<double, double>> pairs;
    Rearrangement rearr;
};

inline double trial_norm(const Ensemble& ens, const CoeffModel& model,
                         const std::vector<cplx>& weights, const NormKind& kind,
                         std::uint64_t seed, std::int64_t trial, TrialWorkspace& ws) {
    trial_coefficients(model, weights, seed, trial, ws.coeffs);
    if (kind.tag == NormKind::Tag::lp && kind.p == 2.0 && ens.orthonormal())
        return parseval_l2(ws.coeffs); // exact by orthonormality
    ens.combination_moduli(ws.coeffs, ws.pairs);
    std::sort(ws.pairs.begin(), ws.pairs.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    ws.rearr.values.clear();
    ws.rearr.widths.clear();
    for (const auto& [v, w] : ws.pairs) {
        ws.rearr.values.push_back(v);
        ws.rearr.widths.push_back(w);
    }
    return kind.evaluate(ws.rearr);
}

constexpr std::int64_t kTrialChunk = 64;

} // namespace detail

// E || sum_i a_i xi_i f_i || with a 95% confidence interval.  Deterministic
// under (ensemble, model, weights, kind, trials, seed) for any thread count.
inline TrialEstimate estimate_expected_norm(const Ensemble& ens, const CoeffModel& model,
                                            const std::vector<cplx>& weights, const NormKind& kind,
                                            std::int64_t trials, std::uint64_t seed,
                                            int threads = 0) {
    if (trials < 2) throw std::invalid_argument("estimate_expected_norm: trials must be >= 2");
    const std::vector<cplx> w = detail::resolve_weights(ens, weights);
    auto acc = run_chunked<MeanVarAccumulator>(
        trials, detail::kTrialChunk, threads,
        [&](std::int64_t lo, std::int64_t hi) {
            MeanVarAccumulator a;
            detail::TrialWorkspace ws;
            for (std::int64_t t = lo; t < hi; ++t)
                a.add(detail::trial_norm(ens, model, w, kind, seed, t, ws));
            return a;
        },
        [](MeanVarAccumulator& a, const MeanVarAccumulator& b) { a.combine(b); });
    return TrialEstimate::from(acc, kind.label(), seed);
}

struct TailEstimate {
    double threshold = 0.0;       // threshold_coeff * sqrt(n (1 + log m))
    ProportionEstimate prob;      // P(||F||_{m,infty} <= threshold), Wilson CI
};

inline TailEstimate tail_probability(const Ensemble& ens, const CoeffModel& model,
                                     const std::vector<cplx>& weights, long m,
                                     double threshold_coeff, std::int64_t trials,
                                     std::uint64_t seed, int threads = 0) {
    if (!(threshold_coeff >= 0.0))
        throw std::invalid_argument("tail_probability: threshold_coeff must be >= 0");
    if (trials < 1) throw std::invalid_argument("tail_probability: trials must be >= 1");
    const std::vector<cplx> w = detail::resolve_weights(ens, weights);
    const NormKind kind = NormKind::m_infty(m);
    const double threshold =
        threshold_coeff * std::sqrt(static_cast<double>(ens.size()) *
                                    (1.0 + std::log(static_cast<double>(m))));
    auto hits = run_chunked<std::int64_t>(
        trials, detail::kTrialChunk, threads,
        [&](std::int64_t lo, std::int64_t hi) {
            std::int64_t h = 0;
            detail::TrialWorkspace ws;
            for (std::int64_t t = lo; t < hi; ++t)
                if (detail::trial_norm(ens, model, w, kind, seed, t, ws) <= threshold) ++h;
            return h;
        },
        [](std::int64_t& a, const std::int64_t& b) { a += b; });
    TailEstimate e;
    e.threshold = threshold;
    e.prob = wilson_interval(hits, trials);
    return e;
}

struct UpperRatioReport {
    TrialEstimate estimate;   // E ||sum xi_k f_k||_{m,infty}
    double denominator = 0.0; // ||(sum |f_k|^2)^{1/2}||_{m,infty} * sqrt(1 + log m)
    double ratio = 0.0;
};

// Ratio against the subgaussian upper bound.  Models without the exponential
// tail estimate (the two-point family) are rejected.
inline UpperRatioReport upper_ratio(const Ensemble& ens, const CoeffModel& model, long m,
                                    std::int64_t trials, std::uint64_t seed, int threads = 0) {
    if (!model.subgaussian())
        throw std::invalid_argument("upper_ratio: model does not satisfy the subgaussian hypothesis");
    UpperRatioReport rep;
    rep.estimate = estimate_expected_norm(ens, model, {}, NormKind::m_infty(m), trials, seed, threads);
    const double sq = integral_uniform(ens.square_function_rearrangement(), m);
    rep.denominator = sq * std::sqrt(1.0 + std::log(static_cast<double>(m)));
    rep.ratio = rep.estimate.mean / rep.denominator;
    return rep;
}

struct MarcinkiewiczGapReport {
    TrialEstimate estimate;      // E ||F_n||_{M(phi)}
    double bound_without_A = 0.0; // sqrt(n) * max_{m=2..n} sqrt(log m)/(m phi(1/m))
    long argmax_m = 2;
    double fitted_A = 0.0;       // estimate / bound
};

inline MarcinkiewiczGapReport marcinkiewicz_gap(const Ensemble& ens, const CoeffModel& model,
                                                const ConcaveProfile& profile, std::int64_t trials,
                                                std::uint64_t seed, int threads = 0) {
    MarcinkiewiczGapReport rep;
    rep.estimate =
        estimate_expected_norm(ens, model, {}, NormKind::marc(profile), trials, seed, threads);
    const long n = ens.size();
    double best = -1.0;
    for (long m = 2; m <= std::max<long>(n, 2); ++m) {
        const double md = static_cast<double>(m);
        const double val = std::sqrt(std::log(md)) / (md * profile(1.0 / md));
        if (val > best) {
            best = val;
            rep.argmax_m = m;
        }
    }
    rep.bound_without_A = std::sqrt(static_cast<double>(n)) * best;
    rep.fitted_A = rep.estimate.mean / rep.bound_without_A;
    return rep;
}

struct SignSearchReport {
    double c0 = 0.0;                 // min_k ||sum theta_i f_i||'_{2^k} / sqrt(n k)
    std::vector<int> witness;        // maximizing signs
    std::vector<double> per_k;       // the k ratios at the witness
    bool exhaustive = false;
    long evaluations = 0;
};

// Search signs maximizing the worst ratio ||sum theta_i f_i||'_{2^k}/sqrt(nk)
// over k = 1..k_max jointly.  For the dyadic backend the combination's
// distribution is sign-invariant, so a single evaluation settles the search.
inline SignSearchReport sign_search(const Ensemble& ens, int k_max, long budget,
                                    std::uint64_t seed) {
    const long n = ens.size();
    if (k_max < 1) throw std::invalid_argument("sign_search: k_max must be >= 1");
    const int k_cap = std::max(1, static_cast<int>(std::floor(std::log2(static_cast<double>(n)))));
    if (k_max > k_cap)
        throw std::invalid_argument("sign_search: k_max exceeds log2(n)");
    if (budget < 1) throw std::invalid_argument("sign_search: budget must be >= 1");

    auto evaluate = [&](const std::vector<int>& signs, std::vector<double>* per_k) {
        std::vector<cplx> coeffs(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i)
            coeffs[static_cast<std::size_t>(i)] = cplx(signs[static_cast<std::size_t>(i)], 0.0);
        const Rearrangement r = ens.combination_rearrangement(coeffs);
        double worst = std::numeric_limits<double>::infinity();
        if (per_k) per_k->clear();
        for (int k = 1; k <= k_max; ++k) {
            const double ratio = relative_prime(r, 1L << k) /
                                 std::sqrt(static_cast<double>(n) * static_cast<double>(k));
            if (per_k) per_k->push_back(ratio);
            worst = std::min(worst, ratio);
        }
        return worst;
    };

    SignSearchReport rep;
    std::vector<int> signs(static_cast<std::size_t>(n), 1);
    if (ens.kind() == Ensemble::Kind::dyadic || n == 1) {
        rep.c0 = evaluate(signs, &rep.per_k);
        rep.witness = signs;
        rep.exhaustive = true;
        rep.evaluations = 1;
        return rep;
    }

    const double cells = (ens.kind() == Ensemble::Kind::explicit_fns)
                             ? static_cast<double>(ens.system().functions.front().cells())
                             : static_cast<double>(4 * n);
    const bool exhaustive =
        n <= 20 && std::ldexp(cells, static_cast<int>(n - 1)) <= 2e8;
    if (exhaustive) {
        // Gray-code walk with the last sign pinned (+theta and -theta tie)
        double best = evaluate(signs, nullptr);
        std::vector<int> best_signs = signs;
        rep.evaluations = 1;
        const std::uint64_t total = std::uint64_t{1} << (n - 1);
        std::uint64_t gray_prev = 0;
        for (std::uint64_t g = 1; g < total; ++g) {
            const std::uint64_t gray = g ^ (g >> 1);
            const int bit = __builtin_ctzll(gray ^ gray_prev);
            gray_prev = gray;
            signs[static_cast<std::size_t>(bit)] = -signs[static_cast<std::size_t>(bit)];
            ++rep.evaluations;
            const double val = evaluate(signs, nullptr);
            if (val > best) {
                best = val;
                best_signs = signs;
            }
        }
        rep.c0 = best;
        rep.witness = best_signs;
        rep.exhaustive = true;
        evaluate(rep.witness, &rep.per_k);
        return rep;
    }

    double best = evaluate(signs, nullptr); // all-ones start
    std::vector<int> best_signs = signs;
    rep.evaluations = 1;
    for (long d = 0; d < budget; ++d) {
        const std::uint64_t key = rng::derive(seed, static_cast<std::uint64_t>(d));
        for (long i = 0; i < n; ++i)
            signs[static_cast<std::size_t>(i)] = (rng::at(key, static_cast<std::uint64_t>(i)) >> 63) ? 1 : -1;
        double val = evaluate(signs, nullptr);
        ++rep.evaluations;
        bool improved = true;
        while (improved) {
            improved = false;
            for (long i = 0; i < n; ++i) {
                signs[static_cast<std::size_t>(i)] = -signs[static_cast<std::size_t>(i)];
                const double cand = evaluate(signs, nullptr);
                ++rep.evaluations;
                if (cand > val + 1e-15 * std::abs(val)) {
                    val = cand;
                    improved = true;
                } else {
                    signs[static_cast<std::size_t>(i)] = -signs[static_cast<std::size_t>(i)];
                }
            }
        }
        if (val > best) {
            best = val;
            best_signs = signs;
        }
    }
    rep.c0 = best;
    rep.witness = best_signs;
    rep.exhaustive = false;
    evaluate(rep.witness, &rep.per_k);
    return rep;
}

// ---------------------------------------------------------------------------
// Sweeps and their CSV form

// Weight vector generators for sweeps: "ones", "spike", "geometric:R".
inline std::vector<cplx> make_weights(const std::string& desc, long n) {
    std::vector<cplx> w(static_cast<std::size_t>(n), cplx(1.0, 0.0));
    if (desc.empty() || desc == "ones") return w;
    if (desc == "spike") {
        std::fill(w.begin(), w.end(), cplx{});
        w[0] = cplx(1.0, 0.0);
        return w;
    }
    if (desc.rfind("geometric:", 0) == 0) {
        const double r = std::stod(desc.substr(10));
        if (!(r > 0.0 && r <= 1.0))
            throw std::invalid_argument("geometric weights need ratio in (0, 1]");
        double cur = 1.0;
        for (auto& x : w) {
            x = cplx(cur, 0.0);
            cur *= r;
        }
        return w;
    }
    throw std::invalid_argument("unknown weights descriptor: " + desc);
}

struct SweepRow {
    std::string system;
    std::string coeff_model;
    std::string norm_kind;
    long n = 0;
    long m = 0;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::string flag = "ok";
};

struct SweepSpec {
    SystemSpec system;
    CoeffModel model;
    NormKind norm = NormKind::m_infty(1);
    std::vector<long> ns;
    std::vector<long> ms;       // ignored for norms that carry no m
    std::string weights = "ones";
    std::int64_t trials = 200;
    std::uint64_t seed = 0xC0FFEE;
    int threads = 0;
};

// Per-point seeds derive from (seed, n, m) alone, so any sub-grid re-run with
// the same global seed reproduces its rows byte for byte.
inline std::uint64_t sweep_point_seed(std::uint64_t seed, long n, long m) {
    return rng::derive(seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(m));
}

inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    std::vector<SweepRow> rows;
    const std::vector<long> ms = spec.norm.uses_m() && !spec.ms.empty() ? spec.ms
                                 : std::vector<long>{spec.norm.uses_m() ? spec.norm.m : 0};
    for (long n : spec.ns) {
        Ensemble ens = Ensemble::from_spec(spec.system, n);
        const std::vector<cplx> weights = make_weights(spec.weights, ens.size());
        for (long m : ms) {
            SweepRow row;
            row.system = spec.system.label();
            row.coeff_model = spec.model.name();
            row.norm_kind = spec.norm.label();
            row.n = n;
            row.m = m;
            row.trials = spec.trials;
            row.seed = spec.seed;
            try {
                const NormKind kind = spec.norm.uses_m() ? spec.norm.with_m(m) : spec.norm;
                const TrialEstimate est =
                    estimate_expected_norm(ens, spec.model, weights, kind, spec.trials,
                                           sweep_point_seed(spec.seed, n, m), spec.threads);
                row.mean = est.mean;
                row.stderr_ = est.stderr_;
                row.ci_low = est.ci_low;
                row.ci_high = est.ci_high;
            } catch (const std::exception& e) {
                row.flag = std::string("error:") + e.what();
                row.mean = row.stderr_ = row.ci_low = row.ci_high = 0.0;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows,
                            const std::vector<std::string>& header_comments = {}) {
    for (const auto& line : header_comments) os << "# " << line << "\n";
    os << "system,coeff_model,norm_kind,n,m,trials,seed,mean,stderr,ci_low,ci_high,flag\n";
    for (const auto& r : rows) {
        os << r.system << ',' << r.coeff_model << ',' << r.norm_kind << ',' << r.n << ','
           << r.m << ',' << r.trials << ',' << r.seed << ',' << format_double(r.mean) << ','
           << format_double(r.stderr_) << ',' << format_double(r.ci_low) << ','
           << format_double(r.ci_high) << ',' << r.flag << "\n";
    }
}

inline std::vector<SweepRow> read_sweep_csv(std::istream& is) {
    std::vector<SweepRow> rows;
    std::string line;
    bool header_seen = false;
    std::vector<std::string> cols;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!header_seen) {
            cols = fields;
            header_seen = true;
            continue;
        }
        if (fields.size() < cols.size()) {
            // flags may contain commas from error messages; re-join the tail
            while (fields.size() < cols.size()) fields.emplace_back();
        }
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < cols.size() && i < fields.size(); ++i) row[cols[i]] = fields[i];
        SweepRow r;
        r.system = row["system"];
        r.coeff_model = row["coeff_model"];
        r.norm_kind = row["norm_kind"];
        r.n = std::stol(row["n"]);
        r.m = std::stol(row["m"]);
        r.trials = std::stoll(row["trials"]);
        r.seed = std::stoull(row["seed"]);
        r.mean = std::stod(row["mean"]);
        r.stderr_ = std::stod(row["stderr"]);
        r.ci_low = std::stod(row["ci_low"]);
        r.ci_high = std::stod(row["ci_high"]);
        r.flag = row["flag"];
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace iunorm::mc
