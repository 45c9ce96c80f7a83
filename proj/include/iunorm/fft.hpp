#pragma once

// Evaluation of exponential sums sum_k c_k e^{2 pi i k x} at the midpoints
// x_j = (j + 1/2)/N of a uniform partition.  For power-of-two N this is one
// radix-2 transform; otherwise a direct O(K*N) evaluation.  Both routes
// compute the same values up to rounding.

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace iunorm {

namespace detail {

// In-place iterative radix-2 transform computing a_j <- sum_k a_k w^{jk}
// with w = e^{+2 pi i / N}; N must be a power of two.
inline void fft_pow2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft_pow2: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> t = a[i + k + len / 2] * w;
                a[i + k] = u + t;
                a[i + k + len / 2] = u - t;
                w *= wl;
            }
        }
    }
}

} // namespace detail

// coeffs[i] multiplies frequency k = k_min + i.  Returns the N midpoint
// values.  Requires N > k_max - k_min so distinct frequencies map to
// distinct bins.
inline std::vector<std::complex<double>> eval_exponential_sum(
    const std::vector<std::complex<double>>& coeffs, int k_min, std::size_t n_cells) {
    if (coeffs.empty()) throw std::invalid_argument("eval_exponential_sum: no coefficients");
    if (n_cells < coeffs.size())
        throw std::invalid_argument("eval_exponential_sum: grid finer than frequency count required");
    const bool pow2 = (n_cells & (n_cells - 1)) == 0;
    if (pow2) {
        std::vector<std::complex<double>> bins(n_cells, std::complex<double>{});
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            const long k = k_min + static_cast<long>(i);
            // twiddle uses the true frequency: e^{2 pi i k (1/2)/N}
            const double th = std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_cells);
            long bin = k % static_cast<long>(n_cells);
            if (bin < 0) bin += static_cast<long>(n_cells);
            bins[static_cast<std::size_t>(bin)] +=
                coeffs[i] * std::complex<double>(std::cos(th), std::sin(th));
        }
        detail::fft_pow2(bins);
        return bins;
    }
    std::vector<std::complex<double>> out(n_cells);
    for (std::size_t j = 0; j < n_cells; ++j) {
        const double x = (static_cast<double>(j) + 0.5) / static_cast<double>(n_cells);
        std::complex<double> acc{};
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            const double th = 2.0 * std::numbers::pi * (k_min + static_cast<double>(i)) * x;
            acc += coeffs[i] * std::complex<double>(std::cos(th), std::sin(th));
        }
        out[j] = acc;
    }
    return out;
}

} // namespace iunorm
