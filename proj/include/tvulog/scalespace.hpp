#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tvulog/convolve.hpp"
#include "tvulog/cube.hpp"
#include "tvulog/rng.hpp"

namespace tvulog {

// Heat-semigroup stack of an image: slice k is the Gaussian smoothing of f
// with variance t_k (Neumann boundary via reflection padding).
inline ScaleSpaceCube gaussian_scale_space(const SpatialGrid& g, const std::vector<double>& f,
                                           const ScaleGrid& s) {
    if (f.size() != g.size()) throw std::invalid_argument("gaussian_scale_space: size mismatch");
    ScaleSpaceCube u = make_cube(g, s);
    const std::size_t K = s.count();
    for (std::size_t k = 0; k < K; ++k) {
        const auto slice = gaussian_blur(g, f, s.t[k]);
        for (std::size_t p = 0; p < slice.size(); ++p) u.v[p * K + k] = slice[p];
    }
    return u;
}

// Scale-normalized Laplacian t_k * sum_axes (u_+ - 2u + u_-)/h^2 with the
// whole-sample mirror u_{-1} := u_{1}, u_{n} := u_{n-2} at spatial borders.
inline ScaleSpaceCube normalized_laplacian(const ScaleSpaceCube& u) {
    const std::size_t n1 = u.grid.n1, n2 = u.grid.n2, K = u.scales.count();
    const double ih1 = 1.0 / (u.grid.h1 * u.grid.h1);
    const double ih2 = 1.0 / (u.grid.h2 * u.grid.h2);
    ScaleSpaceCube out = make_cube(u.grid, u.scales);
    for (std::size_t i = 0; i < n1; ++i) {
        const std::size_t im = (i == 0) ? 1 : i - 1;
        const std::size_t ip = (i == n1 - 1) ? n1 - 2 : i + 1;
        for (std::size_t j = 0; j < n2; ++j) {
            const std::size_t jm = (j == 0) ? 1 : j - 1;
            const std::size_t jp = (j == n2 - 1) ? n2 - 2 : j + 1;
            for (std::size_t k = 0; k < K; ++k) {
                double acc = ih1 * (u.at(im, j, k) - 2.0 * u.at(i, j, k) + u.at(ip, j, k));
                if (u.grid.dim == 2)
                    acc += ih2 * (u.at(i, jm, k) - 2.0 * u.at(i, j, k) + u.at(i, jp, k));
                out.at(i, j, k) = u.scales.t[k] * acc;
            }
        }
    }
    return out;
}

// Exact transpose of normalized_laplacian (the mirror rows make it
// non-symmetric, so the adjoint scatters through the same index map).
inline ScaleSpaceCube normalized_laplacian_adjoint(const ScaleSpaceCube& w) {
    const std::size_t n1 = w.grid.n1, n2 = w.grid.n2, K = w.scales.count();
    const double ih1 = 1.0 / (w.grid.h1 * w.grid.h1);
    const double ih2 = 1.0 / (w.grid.h2 * w.grid.h2);
    ScaleSpaceCube out = make_cube(w.grid, w.scales);
    for (std::size_t i = 0; i < n1; ++i) {
        const std::size_t im = (i == 0) ? 1 : i - 1;
        const std::size_t ip = (i == n1 - 1) ? n1 - 2 : i + 1;
        for (std::size_t j = 0; j < n2; ++j) {
            const std::size_t jm = (j == 0) ? 1 : j - 1;
            const std::size_t jp = (j == n2 - 1) ? n2 - 2 : j + 1;
            for (std::size_t k = 0; k < K; ++k) {
                const double a = w.scales.t[k] * w.at(i, j, k);
                out.at(im, j, k) += ih1 * a;
                out.at(i, j, k) -= 2.0 * ih1 * a;
                out.at(ip, j, k) += ih1 * a;
                if (w.grid.dim == 2) {
                    out.at(i, jm, k) += ih2 * a;
                    out.at(i, j, k) -= 2.0 * ih2 * a;
                    out.at(i, jp, k) += ih2 * a;
                }
            }
        }
    }
    return out;
}

// Scale-normalized forward-difference gradient: spatial components
// sqrt(t_k)/h * (u_next - u), scale component (u_{k+1} - u_k)/(b - 1);
// last row/column/slice replicated, so the trailing differences vanish.
inline VectorFieldCube normalized_gradient(const ScaleSpaceCube& u) {
    const std::size_t n1 = u.grid.n1, n2 = u.grid.n2, K = u.scales.count();
    const std::size_t nc = std::size_t(u.grid.dim) + 1;
    const double bm1 = u.scales.ratio - 1.0;
    VectorFieldCube out = make_field(u.grid, u.scales, nc);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            for (std::size_t k = 0; k < K; ++k) {
                const double st = std::sqrt(u.scales.t[k]);
                if (i + 1 < n1)
                    out.at(i, j, k, 0) = st / u.grid.h1 * (u.at(i + 1, j, k) - u.at(i, j, k));
                if (u.grid.dim == 2 && j + 1 < n2)
                    out.at(i, j, k, 1) = st / u.grid.h2 * (u.at(i, j + 1, k) - u.at(i, j, k));
                if (k + 1 < K)
                    out.at(i, j, k, nc - 1) = (u.at(i, j, k + 1) - u.at(i, j, k)) / bm1;
            }
    return out;
}

inline ScaleSpaceCube normalized_gradient_adjoint(const VectorFieldCube& w) {
    const std::size_t n1 = w.grid.n1, n2 = w.grid.n2, K = w.scales.count();
    const std::size_t nc = std::size_t(w.grid.dim) + 1;
    if (w.ncomp != nc) throw std::invalid_argument("gradient_adjoint: component count mismatch");
    const double bm1 = w.scales.ratio - 1.0;
    ScaleSpaceCube out = make_cube(w.grid, w.scales);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            for (std::size_t k = 0; k < K; ++k) {
                const double st = std::sqrt(w.scales.t[k]);
                if (i + 1 < n1) {
                    const double a = st / w.grid.h1 * w.at(i, j, k, 0);
                    out.at(i + 1, j, k) += a;
                    out.at(i, j, k) -= a;
                }
                if (w.grid.dim == 2 && j + 1 < n2) {
                    const double a = st / w.grid.h2 * w.at(i, j, k, 1);
                    out.at(i, j + 1, k) += a;
                    out.at(i, j, k) -= a;
                }
                if (k + 1 < K) {
                    const double a = w.at(i, j, k, nc - 1) / bm1;
                    out.at(i, j, k + 1) += a;
                    out.at(i, j, k) -= a;
                }
            }
    return out;
}

inline double field_site_norm_sum(const VectorFieldCube& w) {
    double sum = 0.0;
    const std::size_t nc = w.ncomp;
    for (std::size_t s = 0; s < w.sites(); ++s) {
        double sq = 0.0;
        for (std::size_t c = 0; c < nc; ++c) sq += w.v[s * nc + c] * w.v[s * nc + c];
        sum += std::sqrt(sq);
    }
    return sum;
}

// TV(u) = sum over lattice sites of the Euclidean norm of the
// scale-normalized gradient.
inline double scale_normalized_tv(const ScaleSpaceCube& u) {
    return field_site_norm_sum(normalized_gradient(u));
}

// Composite operator A = gradient o Laplacian and its adjoint; these are the
// only maps the first-order solvers touch.
inline VectorFieldCube apply_grad_lap(const ScaleSpaceCube& u) {
    return normalized_gradient(normalized_laplacian(u));
}

inline ScaleSpaceCube apply_grad_lap_adjoint(const VectorFieldCube& w) {
    return normalized_laplacian_adjoint(normalized_gradient_adjoint(w));
}

// Largest singular value via power iteration on A^T A with a fixed-seed
// start vector; stops when the estimate's relative change drops below
// rel_tol (cap max_iters).
template <class Fwd, class Adj>
double operator_norm_estimate(std::size_t input_size, Fwd&& fwd, Adj&& adj,
                              double rel_tol = 1e-4, std::size_t max_iters = 500,
                              std::uint64_t seed = 0x5eedULL) {
    CounterRng rng(seed);
    std::vector<double> x(input_size);
    double nx = 0.0;
    for (double& xi : x) {
        xi = rng.next_normal();
        nx += xi * xi;
    }
    nx = std::sqrt(nx);
    if (nx == 0.0) return 0.0;
    for (double& xi : x) xi /= nx;

    double sigma = 0.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
        std::vector<double> y = fwd(x);
        double ay2 = 0.0;
        for (double v : y) ay2 += v * v;
        const double sigma_new = std::sqrt(ay2);
        std::vector<double> z = adj(y);
        double nz = 0.0;
        for (double v : z) nz += v * v;
        nz = std::sqrt(nz);
        if (nz == 0.0) return sigma_new;
        for (std::size_t p = 0; p < input_size; ++p) x[p] = z[p] / nz;
        if (it > 0 && std::abs(sigma_new - sigma) <= rel_tol * sigma_new) return sigma_new;
        sigma = sigma_new;
    }
    return sigma;
}

inline double grad_lap_norm(const SpatialGrid& g, const ScaleGrid& s) {
    ScaleSpaceCube cbuf = make_cube(g, s);
    VectorFieldCube fbuf = make_field(g, s, std::size_t(g.dim) + 1);
    auto fwd = [&](const std::vector<double>& x) {
        cbuf.v = x;
        return apply_grad_lap(cbuf).v;
    };
    auto adj = [&](const std::vector<double>& y) {
        fbuf.v = y;
        return apply_grad_lap_adjoint(fbuf).v;
    };
    return operator_norm_estimate(cbuf.v.size(), fwd, adj);
}

inline double lap_norm(const SpatialGrid& g, const ScaleGrid& s) {
    ScaleSpaceCube cbuf = make_cube(g, s);
    auto fwd = [&](const std::vector<double>& x) {
        cbuf.v = x;
        return normalized_laplacian(cbuf).v;
    };
    auto adj = [&](const std::vector<double>& y) {
        cbuf.v = y;
        return normalized_laplacian_adjoint(cbuf).v;
    };
    return operator_norm_estimate(cbuf.v.size(), fwd, adj);
}

}  // namespace tvulog
