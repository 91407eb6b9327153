#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tvulog {

// Regular grid over the signal domain.  dim is 1 or 2; the 1-d case keeps
// n2 == 1 so cubes and operators can share one memory layout.
struct SpatialGrid {
    int dim = 1;
    std::size_t n1 = 0;
    std::size_t n2 = 1;
    double h1 = 1.0;
    double h2 = 1.0;

    std::size_t size() const { return n1 * n2; }
};

inline SpatialGrid make_grid_1d(std::size_t n, double h = 1.0) {
    if (n < 3) throw std::invalid_argument("make_grid_1d: need n >= 3");
    if (!(h > 0.0)) throw std::invalid_argument("make_grid_1d: step must be positive");
    return SpatialGrid{1, n, 1, h, 1.0};
}

inline SpatialGrid make_grid_2d(std::size_t n1, std::size_t n2, double h1 = 1.0, double h2 = 1.0) {
    if (n1 < 3 || n2 < 3) throw std::invalid_argument("make_grid_2d: need n1, n2 >= 3");
    if (!(h1 > 0.0) || !(h2 > 0.0)) throw std::invalid_argument("make_grid_2d: steps must be positive");
    return SpatialGrid{2, n1, n2, h1, h2};
}

inline bool same_grid(const SpatialGrid& a, const SpatialGrid& b) {
    return a.dim == b.dim && a.n1 == b.n1 && a.n2 == b.n2 && a.h1 == b.h1 && a.h2 == b.h2;
}

// Geometric ladder of diffusion times t_k = b^k t_min, k = 0..K-1, with
// b = (t_max/t_min)^(1/(K-1)); consecutive scales keep the exact ratio b.
struct ScaleGrid {
    std::vector<double> t;
    double ratio = 1.0;  // b

    std::size_t count() const { return t.size(); }
};

inline ScaleGrid make_scale_grid(double t_min, double t_max, std::size_t K) {
    if (K < 2) throw std::invalid_argument("make_scale_grid: need K >= 2");
    if (!(t_min > 0.0) || !(t_max > t_min))
        throw std::invalid_argument("make_scale_grid: need 0 < t_min < t_max");
    ScaleGrid g;
    g.ratio = std::pow(t_max / t_min, 1.0 / double(K - 1));
    g.t.resize(K);
    for (std::size_t k = 0; k < K; ++k) g.t[k] = t_min * std::pow(g.ratio, double(k));
    return g;
}

inline bool same_scales(const ScaleGrid& a, const ScaleGrid& b) {
    return a.t == b.t;
}

}  // namespace tvulog
