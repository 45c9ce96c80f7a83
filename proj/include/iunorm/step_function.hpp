#pragma once

// Piecewise-constant complex-valued functions on the probability space
// ([0,1], Lebesgue), together with their distribution functions and
// decreasing rearrangements.  Everything is exact finite arithmetic on the
// cell structure; no quadrature.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace iunorm {

using cplx = std::complex<double>;

// f = values[k] on the right-open cell [breakpoints[k], breakpoints[k+1]),
// with breakpoints strictly increasing from 0 to 1.  The last cell also
// owns the point x = 1.  Adjacent cells with equal values are never merged.
struct StepFunction {
    std::vector<double> breakpoints;
    std::vector<cplx> values;

    std::size_t cells() const { return values.size(); }
    double width(std::size_t k) const { return breakpoints[k + 1] - breakpoints[k]; }

    std::size_t cell_index(double x) const {
        if (x < 0.0 || x > 1.0)
            throw std::invalid_argument("StepFunction: point outside [0,1]");
        auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
        std::size_t k = static_cast<std::size_t>(it - breakpoints.begin());
        if (k == 0) k = 1;                       // x == 0 exactly
        if (k > cells()) k = cells();            // x == 1 exactly
        return k - 1;
    }

    cplx value_at(double x) const { return values[cell_index(x)]; }
};

// lambda(t) = mu{ x in [0,1] : |f(x)| >= t }, with the closed inequality.
// thresholds are the distinct moduli of f sorted descending; measures[k]
// is lambda at thresholds[k].  lambda is constant on (thresholds[k+1],
// thresholds[k]].
struct DistributionFunction {
    std::vector<double> thresholds;
    std::vector<double> measures;

    double operator()(double t) const {
        if (t < 0.0) t = 0.0;
        if (thresholds.empty() || t > thresholds.front()) return 0.0;
        // largest k with thresholds[k] >= t (thresholds descending)
        auto it = std::lower_bound(thresholds.begin(), thresholds.end(), t,
                                   [](double th, double v) { return th >= v; });
        return measures[static_cast<std::size_t>(it - thresholds.begin()) - 1];
    }
};

// Decreasing rearrangement f*: plateau values nonincreasing, widths positive
// and summing to 1.  Equal consecutive values may appear; they are harmless.
struct Rearrangement {
    std::vector<double> values;
    std::vector<double> widths;

    std::size_t plateaus() const { return values.size(); }

    double operator()(double s) const {
        if (s < 0.0 || s > 1.0)
            throw std::invalid_argument("Rearrangement: argument outside [0,1]");
        double acc = 0.0;
        for (std::size_t j = 0; j < values.size(); ++j) {
            acc += widths[j];
            if (s < acc || (j + 1 == values.size())) return values[j];
        }
        return values.back();
    }
};

inline StepFunction make_step(std::vector<double> breakpoints, std::vector<cplx> values) {
    if (breakpoints.size() < 2)
        throw std::invalid_argument("make_step: need at least two breakpoints");
    if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
        throw std::invalid_argument("make_step: breakpoints must start at 0 and end at 1");
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k)
        if (!(breakpoints[k] < breakpoints[k + 1]))
            throw std::invalid_argument("make_step: breakpoints must be strictly increasing");
    if (values.size() + 1 != breakpoints.size())
        throw std::invalid_argument("make_step: values.size() must equal breakpoints.size() - 1");
    return StepFunction{std::move(breakpoints), std::move(values)};
}

inline StepFunction make_step(std::vector<double> breakpoints, const std::vector<double>& real_values) {
    std::vector<cplx> v(real_values.begin(), real_values.end());
    return make_step(std::move(breakpoints), std::move(v));
}

// Cellwise |f|; the partition is preserved.
inline StepFunction modulus(const StepFunction& f) {
    StepFunction g;
    g.breakpoints = f.breakpoints;
    g.values.reserve(f.values.size());
    for (const cplx& v : f.values) g.values.emplace_back(std::abs(v), 0.0);
    return g;
}

// (|value|, width) pairs sorted by descending modulus.
inline void sorted_moduli(const std::vector<cplx>& values, const std::vector<double>& breakpoints,
                          std::vector<std::pair<double, double>>& out) {
    out.clear();
    out.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k)
        out.emplace_back(std::abs(values[k]), breakpoints[k + 1] - breakpoints[k]);
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
}

inline Rearrangement rearrangement_of_pairs(std::vector<std::pair<double, double>> desc_pairs) {
    Rearrangement r;
    r.values.reserve(desc_pairs.size());
    r.widths.reserve(desc_pairs.size());
    for (const auto& [v, w] : desc_pairs) {
        r.values.push_back(v);
        r.widths.push_back(w);
    }
    return r;
}

inline Rearrangement rearrangement(const StepFunction& f) {
    std::vector<std::pair<double, double>> pairs;
    sorted_moduli(f.values, f.breakpoints, pairs);
    return rearrangement_of_pairs(std::move(pairs));
}

inline DistributionFunction distribution(const Rearrangement& r) {
    DistributionFunction d;
    double acc = 0.0;
    for (std::size_t j = 0; j < r.plateaus(); ++j) {
        acc += r.widths[j];
        if (!d.thresholds.empty() && d.thresholds.back() == r.values[j])
            d.measures.back() = acc;               // merge tied moduli
        else {
            d.thresholds.push_back(r.values[j]);
            d.measures.push_back(acc);
        }
    }
    if (!d.measures.empty()) d.measures.back() = acc; // == 1 up to rounding
    return d;
}

inline DistributionFunction distribution(const StepFunction& f) {
    return distribution(rearrangement(f));
}

// The rearrangement as a step function on [0,1] (final breakpoint forced to
// exactly 1 so the result satisfies the StepFunction invariants).
inline StepFunction to_step(const Rearrangement& r) {
    std::vector<double> bp{0.0};
    std::vector<cplx> vals;
    double acc = 0.0;
    for (std::size_t j = 0; j < r.plateaus(); ++j) {
        acc += r.widths[j];
        bp.push_back(j + 1 == r.plateaus() ? 1.0 : acc);
        vals.emplace_back(r.values[j], 0.0);
    }
    return make_step(std::move(bp), std::move(vals));
}

// Re-express both functions on the merged breakpoint set.  Pointwise values
// are unchanged; the merge is exact on the stored doubles.
inline std::pair<StepFunction, StepFunction> common_refinement(const StepFunction& f,
                                                               const StepFunction& g) {
    std::vector<double> merged;
    merged.reserve(f.breakpoints.size() + g.breakpoints.size());
    std::merge(f.breakpoints.begin(), f.breakpoints.end(),
               g.breakpoints.begin(), g.breakpoints.end(), std::back_inserter(merged));
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    auto refine = [&merged](const StepFunction& h) {
        StepFunction out;
        out.breakpoints = merged;
        out.values.reserve(merged.size() - 1);
        std::size_t src = 0;
        for (std::size_t k = 0; k + 1 < merged.size(); ++k) {
            while (src + 1 < h.cells() && h.breakpoints[src + 1] <= merged[k]) ++src;
            out.values.push_back(h.values[src]);
        }
        return out;
    };
    return {refine(f), refine(g)};
}

// Refine every function in the list onto one shared partition.
inline std::vector<StepFunction> common_refinement(std::vector<StepFunction> fs) {
    if (fs.size() < 2) return fs;
    std::vector<double> merged = fs.front().breakpoints;
    for (std::size_t i = 1; i < fs.size(); ++i) {
        std::vector<double> next;
        next.reserve(merged.size() + fs[i].breakpoints.size());
        std::merge(merged.begin(), merged.end(), fs[i].breakpoints.begin(),
                   fs[i].breakpoints.end(), std::back_inserter(next));
        next.erase(std::unique(next.begin(), next.end()), next.end());
        merged.swap(next);
    }
    StepFunction grid;
    grid.breakpoints = merged;
    grid.values.assign(merged.size() - 1, cplx{});
    for (auto& f : fs) f = common_refinement(f, grid).first;
    return fs;
}

// Cellwise sum of coeffs[i] * funcs[i]; all functions must already share a
// partition.
inline StepFunction linear_combination(const std::vector<cplx>& coeffs,
                                       const std::vector<StepFunction>& funcs) {
    if (coeffs.size() != funcs.size())
        throw std::invalid_argument("linear_combination: coefficient count mismatch");
    if (funcs.empty())
        throw std::invalid_argument("linear_combination: empty system");
    const std::size_t cells = funcs.front().cells();
    for (const auto& f : funcs)
        if (f.breakpoints != funcs.front().breakpoints)
            throw std::invalid_argument("linear_combination: functions must share a partition");
    StepFunction out;
    out.breakpoints = funcs.front().breakpoints;
    out.values.assign(cells, cplx{});
    for (std::size_t i = 0; i < funcs.size(); ++i) {
        const cplx c = coeffs[i];
        if (c == cplx{}) continue;
        const auto& v = funcs[i].values;
        for (std::size_t k = 0; k < cells; ++k) out.values[k] += c * v[k];
    }
    return out;
}

} // namespace iunorm
