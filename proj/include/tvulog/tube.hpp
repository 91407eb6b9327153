#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tvulog/cube.hpp"
#include "tvulog/io.hpp"
#include "tvulog/scalespace.hpp"

namespace tvulog {

inline std::vector<ScaleSpaceCube> scale_space_samples(const SampleSet& set,
                                                       const ScaleGrid& scales) {
    std::vector<ScaleSpaceCube> cubes;
    cubes.reserve(set.count());
    for (const auto& f : set.samples)
        cubes.push_back(gaussian_scale_space(set.grid, f, scales));
    return cubes;
}

// Smallest tube containing every cube: entrywise min/max.
inline Tube span_tube(const std::vector<ScaleSpaceCube>& cubes) {
    if (cubes.empty()) throw std::invalid_argument("span_tube: empty cube list");
    Tube t{cubes.front(), cubes.front()};
    for (std::size_t c = 1; c < cubes.size(); ++c) {
        if (!same_shape(cubes[c], t.lower)) throw std::invalid_argument("span_tube: shape mismatch");
        for (std::size_t p = 0; p < t.lower.v.size(); ++p) {
            t.lower.v[p] = std::min(t.lower.v[p], cubes[c].v[p]);
            t.upper.v[p] = std::max(t.upper.v[p], cubes[c].v[p]);
        }
    }
    return t;
}

inline std::size_t containment_count(const std::vector<ScaleSpaceCube>& cubes, const Tube& t) {
    std::size_t n = 0;
    for (const auto& c : cubes)
        if (cube_in_tube(c, t)) ++n;
    return n;
}

// Density-descending sample order; exact ties keep their original position.
inline std::vector<std::size_t> density_order(const SampleSet& set) {
    std::vector<std::size_t> order(set.count());
    std::iota(order.begin(), order.end(), std::size_t(0));
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return set.log_density[a] > set.log_density[b];
    });
    return order;
}

struct CredibleTubeResult {
    Tube tube;
    double alpha = 0.0;
    std::size_t sample_count = 0;  // S
    std::size_t s_alpha = 0;       // ceil((1-alpha) S)
    std::size_t spanned = 0;       // cubes generating the returned tube
    std::size_t containment = 0;   // samples inside the returned tube
    std::size_t bisect_steps = 0;
};

namespace detail {

// Prefix-extreme change lists per lattice site ("staircases"): entry (r, v)
// means the running min (resp. max) over the first r+1 ordered cubes moved
// to v at position r.  They answer both "bounds of the tube spanned by the
// first s cubes" and "smallest prefix tube covering value x" by binary
// search, which is what lets the credible-tube search stream the cubes
// instead of keeping all of them resident.
struct Staircases {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> mins;
    std::vector<std::vector<std::pair<std::uint32_t, double>>> maxs;

    // Smallest prefix length s (1-based) with prefix_min <= x <= prefix_max
    // at this site; x must be covered by the full prefix family.
    std::size_t first_cover(std::size_t site, double x) const {
        const auto& mn = mins[site];
        const auto& mx = maxs[site];
        auto itn = std::partition_point(mn.begin(), mn.end(),
                                        [&](const auto& e) { return e.second > x; });
        auto itx = std::partition_point(mx.begin(), mx.end(),
                                        [&](const auto& e) { return e.second < x; });
        if (itn == mn.end() || itx == mx.end())
            throw std::logic_error("staircase: value outside the full prefix span");
        return std::size_t(std::max(itn->first, itx->first)) + 1;
    }

    // Bounds of the prefix tube spanned by the first s ordered cubes.
    std::pair<double, double> bounds(std::size_t site, std::size_t s) const {
        const auto& mn = mins[site];
        const auto& mx = maxs[site];
        auto itn = std::partition_point(mn.begin(), mn.end(),
                                        [&](const auto& e) { return e.first < s; });
        auto itx = std::partition_point(mx.begin(), mx.end(),
                                        [&](const auto& e) { return e.first < s; });
        return {std::prev(itn)->second, std::prev(itx)->second};
    }
};

}  // namespace detail

// Highest-density credible tube following the bisection over the nested
// family of prefix-span tubes.  Contract: containment >= s_alpha on return,
// using the smallest probed family member that satisfies it.  The samples
// are streamed twice (order statistics never need all cubes in memory).
inline CredibleTubeResult credible_tube(const SampleSet& set, const ScaleGrid& scales,
                                        double alpha, std::size_t max_bisect = 20) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("credible_tube: alpha in (0,1)");
    const std::size_t S = set.count();
    if (S == 0) throw std::invalid_argument("credible_tube: empty sample set");
    const auto order = density_order(set);
    const std::size_t n_sites = set.grid.size() * scales.count();

    // Pass 1: build per-site prefix-extreme staircases in density order.
    detail::Staircases st;
    st.mins.resize(n_sites);
    st.maxs.resize(n_sites);
    {
        std::vector<double> cur_min(n_sites), cur_max(n_sites);
        for (std::size_t r = 0; r < S; ++r) {
            const ScaleSpaceCube cube = gaussian_scale_space(set.grid, set.samples[order[r]], scales);
            for (std::size_t p = 0; p < n_sites; ++p) {
                const double x = cube.v[p];
                if (r == 0 || x < cur_min[p]) {
                    st.mins[p].emplace_back(std::uint32_t(r), x);
                    cur_min[p] = x;
                }
                if (r == 0 || x > cur_max[p]) {
                    st.maxs[p].emplace_back(std::uint32_t(r), x);
                    cur_max[p] = x;
                }
            }
        }
    }

    // Pass 2: smallest covering prefix per sample -> containment counts of
    // every prefix tube at once.
    std::vector<std::size_t> count_at(S + 1, 0);
    for (std::size_t r = 0; r < S; ++r) {
        const ScaleSpaceCube cube = gaussian_scale_space(set.grid, set.samples[order[r]], scales);
        std::size_t cover = 1;
        for (std::size_t p = 0; p < n_sites; ++p)
            cover = std::max(cover, st.first_cover(p, cube.v[p]));
        ++count_at[cover];
    }
    for (std::size_t s = 1; s <= S; ++s) count_at[s] += count_at[s - 1];
    const auto containment_of = [&](std::size_t s) { return count_at[s]; };

    // Bisection on the containment counts (midpoints rounded down).
    const std::size_t s_alpha = std::size_t(std::ceil((1.0 - alpha) * double(S)));
    std::size_t probe = s_alpha;
    std::size_t count = containment_of(probe);
    std::size_t best = probe;  // initial probe always satisfies count >= s_alpha
    std::size_t steps = 0;
    if (count != s_alpha) {
        std::size_t k_min = 1, k_max = s_alpha;
        for (std::size_t m = 0; m < max_bisect; ++m) {
            if (count > s_alpha) {
                k_max = count;
                probe = (k_min + count) / 2;
            } else if (count < s_alpha) {
                k_min = count;
                probe = (count + k_max) / 2;
            } else {
                break;
            }
            probe = std::clamp<std::size_t>(probe, 1, S);
            ++steps;
            count = containment_of(probe);
            if (count >= s_alpha && probe < best) best = probe;
        }
    }

    CredibleTubeResult res;
    res.alpha = alpha;
    res.sample_count = S;
    res.s_alpha = s_alpha;
    res.spanned = best;
    res.containment = containment_of(best);
    res.bisect_steps = steps;
    res.tube.lower = make_cube(set.grid, scales);
    res.tube.upper = make_cube(set.grid, scales);
    for (std::size_t p = 0; p < n_sites; ++p) {
        const auto [lo, up] = st.bounds(p, best);
        res.tube.lower.v[p] = lo;
        res.tube.upper.v[p] = up;
    }
    return res;
}

}  // namespace tvulog
