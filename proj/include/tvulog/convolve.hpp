#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tvulog/grid.hpp"

namespace tvulog {

// Edge-including reflection with period 2n: ... x1 x0 | x0 x1 ... x_{n-1} | x_{n-1} ...
// As a matrix the resulting convolution operator is symmetric, which the
// Bayesian forward model relies on; it also preserves constants exactly
// because kernels are normalized to unit sum.
inline std::size_t reflect_index(long long p, long long n) {
    long long m = p % (2 * n);
    if (m < 0) m += 2 * n;
    return std::size_t(m < n ? m : 2 * n - 1 - m);
}

// Sampled Gaussian with the given variance (physical units), truncated at
// radius ceil(4*sigma/h) samples and normalized to unit sum.
inline std::vector<double> gaussian_kernel(double variance, double h = 1.0) {
    if (!(variance > 0.0)) throw std::invalid_argument("gaussian_kernel: variance must be positive");
    if (!(h > 0.0)) throw std::invalid_argument("gaussian_kernel: step must be positive");
    const long long radius = (long long)std::ceil(4.0 * std::sqrt(variance) / h);
    std::vector<double> k(std::size_t(2 * radius + 1));
    double sum = 0.0;
    for (long long r = -radius; r <= radius; ++r) {
        double x = double(r) * h;
        double w = std::exp(-x * x / (2.0 * variance));
        k[std::size_t(r + radius)] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

// y[i] = sum_r k[R+r] x[reflect(i+r)]; x and y must not alias.
inline void convolve_reflect_1d(const double* x, std::size_t n, const std::vector<double>& k,
                                double* y) {
    const long long radius = (long long)(k.size() / 2);
    const long long nn = (long long)n;
    for (long long i = 0; i < nn; ++i) {
        double acc = 0.0;
        if (i - radius >= 0 && i + radius < nn) {
            const double* xp = x + (i - radius);
            for (std::size_t r = 0; r < k.size(); ++r) acc += k[r] * xp[r];
        } else {
            for (long long r = -radius; r <= radius; ++r)
                acc += k[std::size_t(r + radius)] * x[reflect_index(i + r, nn)];
        }
        y[i] = acc;
    }
}

// Gaussian smoothing of a flat row-major image on the grid; separable passes
// along each axis in the 2-d case.
inline std::vector<double> gaussian_blur(const SpatialGrid& g, const std::vector<double>& f,
                                         double variance) {
    if (f.size() != g.size()) throw std::invalid_argument("gaussian_blur: size mismatch");
    std::vector<double> out(f.size());
    if (g.dim == 1) {
        const auto k = gaussian_kernel(variance, g.h1);
        convolve_reflect_1d(f.data(), g.n1, k, out.data());
        return out;
    }
    const auto k2 = gaussian_kernel(variance, g.h2);
    for (std::size_t i = 0; i < g.n1; ++i)
        convolve_reflect_1d(f.data() + i * g.n2, g.n2, k2, out.data() + i * g.n2);
    const auto k1 = gaussian_kernel(variance, g.h1);
    std::vector<double> col(g.n1), colf(g.n1);
    for (std::size_t j = 0; j < g.n2; ++j) {
        for (std::size_t i = 0; i < g.n1; ++i) col[i] = out[i * g.n2 + j];
        convolve_reflect_1d(col.data(), g.n1, k1, colf.data());
        for (std::size_t i = 0; i < g.n1; ++i) out[i * g.n2 + j] = colf[i];
    }
    return out;
}

}  // namespace tvulog
