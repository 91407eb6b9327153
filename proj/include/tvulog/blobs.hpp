#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tvulog/cube.hpp"
#include "tvulog/scalespace.hpp"

namespace tvulog {

struct BlobPoint {
    std::size_t i = 0, j = 0, k = 0;
    double t = 0.0;
    double value = 0.0;   // normalized Laplacian at the point
    double radius = 0.0;  // sqrt(t) in 1-D, sqrt(2t) in 2-D
    bool scale_boundary = false;  // k on the first or last scale slice
};

struct BlobRegion {
    std::vector<std::array<std::size_t, 3>> voxels;  // lexicographically sorted
    BlobPoint minimizer;
    double threshold_value = 0.0;  // every voxel value is <= this
};

struct ProjectedRegion {
    std::vector<std::uint8_t> center_mask;  // n1*n2, possible blob centers
    std::vector<std::uint8_t> extent_mask;  // n1*n2, union of blob circles
};

namespace detail {

// Full (3^{d+1}-1)-neighborhood walker; calls fn(i2,j2,k2) for every
// in-range neighbor.
template <class Fn>
void for_each_neighbor(const ScaleSpaceCube& a, std::size_t i, std::size_t j, std::size_t k,
                       Fn&& fn) {
    const std::ptrdiff_t n1 = std::ptrdiff_t(a.grid.n1), n2 = std::ptrdiff_t(a.grid.n2);
    const std::ptrdiff_t K = std::ptrdiff_t(a.scales.count());
    const std::ptrdiff_t jlo = a.grid.dim == 2 ? -1 : 0, jhi = a.grid.dim == 2 ? 1 : 0;
    for (std::ptrdiff_t di = -1; di <= 1; ++di)
        for (std::ptrdiff_t dj = jlo; dj <= jhi; ++dj)
            for (std::ptrdiff_t dk = -1; dk <= 1; ++dk) {
                if (di == 0 && dj == 0 && dk == 0) continue;
                const std::ptrdiff_t i2 = std::ptrdiff_t(i) + di;
                const std::ptrdiff_t j2 = std::ptrdiff_t(j) + dj;
                const std::ptrdiff_t k2 = std::ptrdiff_t(k) + dk;
                if (i2 < 0 || i2 >= n1 || j2 < 0 || j2 >= n2 || k2 < 0 || k2 >= K) continue;
                fn(std::size_t(i2), std::size_t(j2), std::size_t(k2));
            }
}

inline std::array<std::size_t, 3> unflatten(const ScaleSpaceCube& a, std::size_t p) {
    const std::size_t K = a.scales.count();
    const std::size_t k = p % K;
    const std::size_t ij = p / K;
    return {ij / a.grid.n2, ij % a.grid.n2, k};
}

}  // namespace detail

// Indices whose value is <= every full-neighborhood neighbor; an exact-tie
// plateau of such cells is reported once, at its lexicographically smallest
// index.  Scan order equals lex order, so the first unvisited cell of each
// plateau is the reported one.
inline std::vector<std::array<std::size_t, 3>> local_minima(const ScaleSpaceCube& a) {
    const std::size_t total = a.v.size();
    std::vector<std::uint8_t> cand(total, 0);
    for (std::size_t p = 0; p < total; ++p) {
        const auto [i, j, k] = detail::unflatten(a, p);
        bool ok = true;
        detail::for_each_neighbor(a, i, j, k, [&](std::size_t i2, std::size_t j2, std::size_t k2) {
            if (a.at(i2, j2, k2) < a.v[p]) ok = false;
        });
        cand[p] = ok ? 1 : 0;
    }
    std::vector<std::array<std::size_t, 3>> out;
    std::vector<std::uint8_t> visited(total, 0);
    std::vector<std::size_t> stack;
    for (std::size_t p = 0; p < total; ++p) {
        if (!cand[p] || visited[p]) continue;
        out.push_back(detail::unflatten(a, p));
        // Flood the equal-value plateau of candidate cells.
        visited[p] = 1;
        stack.assign(1, p);
        while (!stack.empty()) {
            const std::size_t q = stack.back();
            stack.pop_back();
            const auto [i, j, k] = detail::unflatten(a, q);
            detail::for_each_neighbor(
                a, i, j, k, [&](std::size_t i2, std::size_t j2, std::size_t k2) {
                    const std::size_t q2 = a.flat(i2, j2, k2);
                    if (!visited[q2] && cand[q2] && a.v[q2] == a.v[p]) {
                        visited[q2] = 1;
                        stack.push_back(q2);
                    }
                });
        }
    }
    return out;
}

inline double blob_radius(int dim, double t) {
    return dim == 1 ? std::sqrt(t) : std::sqrt(2.0 * t);
}

inline BlobPoint make_blob_point(const ScaleSpaceCube& a, std::size_t i, std::size_t j,
                                 std::size_t k) {
    BlobPoint b;
    b.i = i;
    b.j = j;
    b.k = k;
    b.t = a.scales.t[k];
    b.value = a.at(i, j, k);
    b.radius = blob_radius(a.grid.dim, b.t);
    b.scale_boundary = (k == 0 || k + 1 == a.scales.count());
    return b;
}

// Classic scale-space detection: bright blobs sit at strictly negative
// local minima of the scale-normalized Laplacian.
inline std::vector<BlobPoint> detect_log_blobs(const ScaleSpaceCube& u) {
    const ScaleSpaceCube lap = normalized_laplacian(u);
    std::vector<BlobPoint> out;
    for (const auto& [i, j, k] : local_minima(lap))
        if (lap.at(i, j, k) < 0.0) out.push_back(make_blob_point(lap, i, j, k));
    return out;
}

// Relative-threshold region extraction on a normalized-Laplacian cube.
// Each negative local minimum m with value a_m seeds the face-connected
// component of {a <= r*a_m} containing m.  Components of different minima
// are nested whenever they meet, so visiting minima from least negative to
// most negative and skipping already-covered seeds emits exactly the
// maximal components: one region per component, pairwise disjoint.
inline std::vector<BlobRegion> extract_regions(const ScaleSpaceCube& a, double r) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("extract_regions: r must be in (0,1)");
    std::vector<std::array<std::size_t, 3>> seeds;
    for (const auto& idx : local_minima(a))
        if (a.at(idx[0], idx[1], idx[2]) < 0.0) seeds.push_back(idx);
    std::stable_sort(seeds.begin(), seeds.end(), [&](const auto& x, const auto& y) {
        return a.at(x[0], x[1], x[2]) > a.at(y[0], y[1], y[2]);
    });

    const std::size_t K = a.scales.count();
    std::vector<std::uint8_t> covered(a.v.size(), 0);
    std::vector<BlobRegion> regions;
    std::vector<std::size_t> stack;
    for (const auto& seed : seeds) {
        const std::size_t sp = a.flat(seed[0], seed[1], seed[2]);
        if (covered[sp]) continue;
        const double threshold = r * a.v[sp];
        BlobRegion reg;
        reg.threshold_value = threshold;
        covered[sp] = 1;
        stack.assign(1, sp);
        std::vector<std::size_t> flats;
        while (!stack.empty()) {
            const std::size_t q = stack.back();
            stack.pop_back();
            flats.push_back(q);
            const auto [i, j, k] = detail::unflatten(a, q);
            auto push = [&](std::size_t q2) {
                if (!covered[q2] && a.v[q2] <= threshold) {
                    covered[q2] = 1;
                    stack.push_back(q2);
                }
            };
            // Face adjacency: 2(d+1) neighbors.
            if (i > 0) push(q - a.grid.n2 * K);
            if (i + 1 < a.grid.n1) push(q + a.grid.n2 * K);
            if (a.grid.dim == 2 && j > 0) push(q - K);
            if (a.grid.dim == 2 && j + 1 < a.grid.n2) push(q + K);
            if (k > 0) push(q - 1);
            if (k + 1 < K) push(q + 1);
        }
        std::sort(flats.begin(), flats.end());
        std::size_t best = flats.front();
        for (const std::size_t q : flats) {
            reg.voxels.push_back(detail::unflatten(a, q));
            if (a.v[q] < a.v[best]) best = q;
        }
        const auto [bi, bj, bk] = detail::unflatten(a, best);
        reg.minimizer = make_blob_point(a, bi, bj, bk);
        regions.push_back(std::move(reg));
    }
    std::stable_sort(regions.begin(), regions.end(), [](const BlobRegion& x, const BlobRegion& y) {
        return x.minimizer.value < y.minimizer.value;
    });
    return regions;
}

// Spatial support of the region: pixel set iff some voxel of the region
// projects onto it.
inline std::vector<std::uint8_t> project_centers(const BlobRegion& region, const SpatialGrid& g) {
    std::vector<std::uint8_t> mask(g.size(), 0);
    for (const auto& [i, j, k] : region.voxels) mask[i * g.n2 + j] = 1;
    return mask;
}

// Union of discrete blob balls: around each voxel (i,j,k), every pixel
// within physical distance sqrt(2 t_k) (2-D) or sqrt(t_k) (1-D).
inline std::vector<std::uint8_t> project_circles(const BlobRegion& region, const SpatialGrid& g,
                                                 const ScaleGrid& s) {
    std::vector<std::uint8_t> mask(g.size(), 0);
    for (const auto& [i, j, k] : region.voxels) {
        const double radius = blob_radius(g.dim, s.t[k]);
        const double r2 = radius * radius;
        const std::ptrdiff_t ri = std::ptrdiff_t(std::floor(radius / g.h1));
        const std::ptrdiff_t rj = g.dim == 2 ? std::ptrdiff_t(std::floor(radius / g.h2)) : 0;
        for (std::ptrdiff_t di = -ri; di <= ri; ++di) {
            const std::ptrdiff_t p = std::ptrdiff_t(i) + di;
            if (p < 0 || p >= std::ptrdiff_t(g.n1)) continue;
            for (std::ptrdiff_t dj = -rj; dj <= rj; ++dj) {
                const std::ptrdiff_t q = std::ptrdiff_t(j) + dj;
                if (q < 0 || q >= std::ptrdiff_t(g.n2)) continue;
                const double d1 = g.h1 * double(di), d2 = g.h2 * double(dj);
                if (d1 * d1 + d2 * d2 <= r2) mask[std::size_t(p) * g.n2 + std::size_t(q)] = 1;
            }
        }
    }
    return mask;
}

inline ProjectedRegion project_region(const BlobRegion& region, const SpatialGrid& g,
                                      const ScaleGrid& s) {
    return {project_centers(region, g), project_circles(region, g, s)};
}

}  // namespace tvulog
