#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "tvulog/cube.hpp"

namespace tvulog {

// Gaussian bump A * exp(-|x-m|^2 / (2s)) sampled at grid points
// x = (i*h1, j*h2); m is in the same physical coordinates.
inline std::vector<double> gaussian_bump_image(const SpatialGrid& g, double m1, double m2,
                                               double s, double amplitude) {
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.n1; ++i)
        for (std::size_t j = 0; j < g.n2; ++j) {
            const double d1 = double(i) * g.h1 - m1;
            const double d2 = (g.dim == 2) ? double(j) * g.h2 - m2 : 0.0;
            f[i * g.n2 + j] = amplitude * std::exp(-(d1 * d1 + d2 * d2) / (2.0 * s));
        }
    return f;
}

// Normalized isotropic blob exp(-|x-m|^2/(2s)) / (2 pi s)^(d/2); its heat
// evolution stays in the family with s replaced by s + t, which gives the
// closed forms below for the smoothed stack and its scale-normalized
// Laplacian (unique minimum at x = m, t = s).
inline std::vector<double> prototype_blob_image(const SpatialGrid& g, double m1, double m2,
                                                double s) {
    const double norm = (g.dim == 2) ? 1.0 / (2.0 * M_PI * s) : 1.0 / std::sqrt(2.0 * M_PI * s);
    return gaussian_bump_image(g, m1, m2, s, norm);
}

inline ScaleSpaceCube prototype_blob_cube(const SpatialGrid& g, const ScaleGrid& sc, double m1,
                                          double m2, double s) {
    ScaleSpaceCube u = make_cube(g, sc);
    for (std::size_t i = 0; i < g.n1; ++i)
        for (std::size_t j = 0; j < g.n2; ++j) {
            const double d1 = double(i) * g.h1 - m1;
            const double d2 = (g.dim == 2) ? double(j) * g.h2 - m2 : 0.0;
            const double r2 = d1 * d1 + d2 * d2;
            for (std::size_t k = 0; k < sc.count(); ++k) {
                const double st = s + sc.t[k];
                const double norm =
                    (g.dim == 2) ? 1.0 / (2.0 * M_PI * st) : 1.0 / std::sqrt(2.0 * M_PI * st);
                u.at(i, j, k) = norm * std::exp(-r2 / (2.0 * st));
            }
        }
    return u;
}

inline ScaleSpaceCube prototype_blob_laplacian_cube(const SpatialGrid& g, const ScaleGrid& sc,
                                                    double m1, double m2, double s) {
    ScaleSpaceCube a = prototype_blob_cube(g, sc, m1, m2, s);
    for (std::size_t i = 0; i < g.n1; ++i)
        for (std::size_t j = 0; j < g.n2; ++j) {
            const double d1 = double(i) * g.h1 - m1;
            const double d2 = (g.dim == 2) ? double(j) * g.h2 - m2 : 0.0;
            const double r2 = d1 * d1 + d2 * d2;
            for (std::size_t k = 0; k < sc.count(); ++k) {
                const double st = s + sc.t[k];
                const double factor = sc.t[k] * (r2 - double(g.dim) * st) / (st * st);
                a.at(i, j, k) *= factor;
            }
        }
    return a;
}

}  // namespace tvulog
