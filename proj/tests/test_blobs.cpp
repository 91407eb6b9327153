#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "tvulog/blobs.hpp"
#include "tvulog/cube.hpp"
#include "tvulog/grid.hpp"
#include "tvulog/rng.hpp"
#include "tvulog/signals.hpp"

using namespace tvulog;

namespace {

ScaleSpaceCube random_cube(const SpatialGrid& g, const ScaleGrid& s, std::uint64_t seed,
                           bool quantize = false) {
    auto c = make_cube(g, s);
    CounterRng rng(seed);
    for (double& v : c.v) {
        v = rng.next_normal();
        if (quantize) v = std::round(v * 4.0) / 4.0;  // force exact ties
    }
    return c;
}

std::vector<std::size_t> full_neighbors(const ScaleSpaceCube& a, std::size_t p) {
    const std::size_t K = a.scales.count();
    const std::size_t k = p % K, ij = p / K;
    const std::size_t i = ij / a.grid.n2, j = ij % a.grid.n2;
    std::vector<std::size_t> out;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj)
            for (int dk = -1; dk <= 1; ++dk) {
                if (di == 0 && dj == 0 && dk == 0) continue;
                const long long i2 = (long long)i + di, j2 = (long long)j + dj,
                                k2 = (long long)k + dk;
                if (i2 < 0 || i2 >= (long long)a.grid.n1) continue;
                if (j2 < 0 || j2 >= (long long)a.grid.n2) continue;
                if (k2 < 0 || k2 >= (long long)K) continue;
                out.push_back(a.flat(std::size_t(i2), std::size_t(j2), std::size_t(k2)));
            }
    return out;
}

// Union-find restatement of the plateau rule: candidates are cells not
// exceeded by any neighbor; tied adjacent candidates collapse to one class
// reported at the smallest flat index.
std::vector<std::array<std::size_t, 3>> minima_oracle(const ScaleSpaceCube& a) {
    const std::size_t total = a.v.size();
    std::vector<bool> cand(total);
    for (std::size_t p = 0; p < total; ++p) {
        bool ok = true;
        for (std::size_t q : full_neighbors(a, p))
            if (a.v[q] < a.v[p]) ok = false;
        cand[p] = ok;
    }
    std::vector<std::size_t> parent(total);
    std::iota(parent.begin(), parent.end(), std::size_t(0));
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t p = 0; p < total; ++p) {
        if (!cand[p]) continue;
        for (std::size_t q : full_neighbors(a, p))
            if (cand[q] && a.v[q] == a.v[p]) {
                auto rp = find(p), rq = find(q);
                if (rp != rq) parent[std::max(rp, rq)] = std::min(rp, rq);
            }
    }
    std::vector<std::array<std::size_t, 3>> out;
    for (std::size_t p = 0; p < total; ++p)
        if (cand[p] && find(p) == p) out.push_back(tvulog::detail::unflatten(a, p));
    return out;
}

std::vector<std::size_t> face_neighbors(const ScaleSpaceCube& a, std::size_t p) {
    const std::size_t K = a.scales.count();
    const std::size_t k = p % K, ij = p / K;
    const std::size_t i = ij / a.grid.n2, j = ij % a.grid.n2;
    std::vector<std::size_t> out;
    if (i > 0) out.push_back(p - a.grid.n2 * K);
    if (i + 1 < a.grid.n1) out.push_back(p + a.grid.n2 * K);
    if (a.grid.dim == 2 && j > 0) out.push_back(p - K);
    if (a.grid.dim == 2 && j + 1 < a.grid.n2) out.push_back(p + K);
    if (k > 0) out.push_back(p - 1);
    if (k + 1 < K) out.push_back(p + 1);
    return out;
}

std::set<std::size_t> region_flats(const ScaleSpaceCube& a, const BlobRegion& r) {
    std::set<std::size_t> s;
    for (const auto& v : r.voxels) s.insert(a.flat(v[0], v[1], v[2]));
    return s;
}

bool face_connected(const ScaleSpaceCube& a, const std::set<std::size_t>& flats) {
    if (flats.empty()) return false;
    std::set<std::size_t> seen;
    std::vector<std::size_t> stack = {*flats.begin()};
    seen.insert(*flats.begin());
    while (!stack.empty()) {
        auto p = stack.back();
        stack.pop_back();
        for (auto q : face_neighbors(a, p))
            if (flats.count(q) && !seen.count(q)) {
                seen.insert(q);
                stack.push_back(q);
            }
    }
    return seen.size() == flats.size();
}

}  // namespace

TEST_CASE("local minima match the union-find oracle") {
    std::vector<std::pair<SpatialGrid, ScaleGrid>> shapes = {
        {make_grid_1d(9), make_scale_grid(1, 4, 4)},
        {make_grid_2d(5, 6), make_scale_grid(1, 4, 3)},
    };
    for (std::size_t sh = 0; sh < shapes.size(); ++sh) {
        const auto& [g, s] = shapes[sh];
        for (int trial = 0; trial < 8; ++trial) {
            const bool quantize = trial >= 4;
            auto a = random_cube(g, s, 3000 + 10 * sh + std::size_t(trial), quantize);
            auto got = local_minima(a);
            auto want = minima_oracle(a);
            REQUIRE(got == want);
        }
    }
}

TEST_CASE("discrete bowl has its minimum at the center") {
    auto g = make_grid_2d(5, 5);
    auto s = make_scale_grid(1, 4, 3);
    auto a = make_cube(g, s);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t k = 0; k < 3; ++k) {
                const double di = double(i) - 2.0, dj = double(j) - 2.0, dk = double(k) - 1.0;
                a.at(i, j, k) = di * di + dj * dj + dk * dk;
            }
    auto mins = local_minima(a);
    REQUIRE(mins.size() == 1);
    CHECK(mins[0] == std::array<std::size_t, 3>{2, 2, 1});
}

TEST_CASE("constant cube is one plateau reported at the origin") {
    auto g = make_grid_2d(4, 3);
    auto s = make_scale_grid(1, 2, 2);
    auto mins = local_minima(make_cube(g, s, 5.5));
    REQUIRE(mins.size() == 1);
    CHECK(mins[0] == std::array<std::size_t, 3>{0, 0, 0});
}

TEST_CASE("blob radius follows the dimension rule") {
    CHECK(blob_radius(1, 9.0) == Catch::Approx(3.0).epsilon(1e-12));
    CHECK(blob_radius(2, 8.0) == Catch::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("detection recovers the prototype blob in 1-d") {
    auto g = make_grid_1d(64);
    auto s = make_scale_grid(6.25, 100.0, 9);
    const double s0 = 25.0;
    auto u = prototype_blob_cube(g, s, 32.0, 0.0, s0);
    auto blobs = detect_log_blobs(u);
    REQUIRE(blobs.size() == 1);
    const auto& b = blobs[0];
    CHECK(std::abs(double(b.i) - 32.0) <= 1.0);
    CHECK(b.j == 0);
    // In 1-D the scale response -t (s+t)^{-3/2} bottoms out at t = 2s, a
    // value the ladder hits exactly at 6.25 * 2^3.
    CHECK(b.t >= 2.0 * s0 / s.ratio - 1e-12);
    CHECK(b.t <= 2.0 * s0 * s.ratio + 1e-12);
    CHECK(b.value < 0.0);
    CHECK(b.radius == Catch::Approx(std::sqrt(b.t)).epsilon(1e-12));
    CHECK_FALSE(b.scale_boundary);
}

TEST_CASE("detection recovers the prototype blob in 2-d") {
    auto g = make_grid_2d(40, 40);
    auto s = make_scale_grid(4.0, 64.0, 9);  // hits t = 16 exactly
    const double s0 = 16.0;
    auto u = prototype_blob_cube(g, s, 20.0, 20.0, s0);
    auto blobs = detect_log_blobs(u);
    REQUIRE(blobs.size() == 1);
    const auto& b = blobs[0];
    CHECK(std::abs(double(b.i) - 20.0) <= 1.0);
    CHECK(std::abs(double(b.j) - 20.0) <= 1.0);
    CHECK(b.t >= s0 / s.ratio - 1e-12);
    CHECK(b.t <= s0 * s.ratio + 1e-12);
    CHECK(b.radius == Catch::Approx(std::sqrt(2.0 * b.t)).epsilon(1e-12));
}

TEST_CASE("constant image yields no blobs") {
    auto g = make_grid_1d(16);
    auto s = make_scale_grid(1, 4, 3);
    CHECK(detect_log_blobs(make_cube(g, s, 3.0)).empty());
}

TEST_CASE("two well-separated blobs are both recovered") {
    auto g = make_grid_1d(64);
    auto s = make_scale_grid(2.25, 36.0, 9);  // hits the 1-D optimum 2s = 18 exactly
    const double s0 = 9.0;
    auto u1 = prototype_blob_cube(g, s, 16.0, 0.0, s0);
    auto u2 = prototype_blob_cube(g, s, 48.0, 0.0, s0);
    for (std::size_t p = 0; p < u1.v.size(); ++p) u1.v[p] += u2.v[p];
    auto blobs = detect_log_blobs(u1);
    REQUIRE(blobs.size() == 2);
    std::vector<double> centers = {double(blobs[0].i), double(blobs[1].i)};
    std::sort(centers.begin(), centers.end());
    CHECK(std::abs(centers[0] - 16.0) <= 1.0);
    CHECK(std::abs(centers[1] - 48.0) <= 1.0);
    for (const auto& b : blobs) {
        CHECK(b.t >= 2.0 * s0 / s.ratio - 1e-12);
        CHECK(b.t <= 2.0 * s0 * s.ratio + 1e-12);
    }
}

TEST_CASE("negative block becomes a single region") {
    auto g = make_grid_2d(4, 4);
    auto s = make_scale_grid(1, 2, 2);
    auto a = make_cube(g, s, 0.0);
    for (std::size_t i = 1; i <= 2; ++i)
        for (std::size_t j = 1; j <= 2; ++j) a.at(i, j, 0) = -1.0;
    auto regions = extract_regions(a, 0.5);
    REQUIRE(regions.size() == 1);
    const auto& reg = regions[0];
    REQUIRE(reg.voxels.size() == 4);
    CHECK(reg.voxels == std::vector<std::array<std::size_t, 3>>{
                            {1, 1, 0}, {1, 2, 0}, {2, 1, 0}, {2, 2, 0}});
    CHECK(reg.minimizer.value == -1.0);
    CHECK(reg.threshold_value == -0.5);
    CHECK(reg.minimizer.i == 1);
    CHECK(reg.minimizer.j == 1);
    CHECK(reg.minimizer.k == 0);
}

TEST_CASE("positive minima seed nothing") {
    auto g = make_grid_2d(5, 5);
    auto s = make_scale_grid(1, 2, 2);
    auto a = make_cube(g, s);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t k = 0; k < 2; ++k) {
                const double di = double(i) - 2.0, dj = double(j) - 2.0;
                a.at(i, j, k) = 1.0 + di * di + dj * dj;
            }
    CHECK(extract_regions(a, 0.5).empty());
}

TEST_CASE("well-separated plateaus produce one region each") {
    auto g = make_grid_1d(10);
    auto s = make_scale_grid(1, 2, 2);
    auto a = make_cube(g, s, 0.0);
    for (std::size_t k = 0; k < 2; ++k) {
        a.at(1, 0, k) = -1.0;
        a.at(2, 0, k) = -1.0;
        a.at(6, 0, k) = -0.4;
        a.at(7, 0, k) = -0.4;
    }
    auto regions = extract_regions(a, 0.5);
    REQUIRE(regions.size() == 2);
    CHECK(regions[0].minimizer.value == -1.0);
    CHECK(regions[0].threshold_value == -0.5);
    CHECK(regions[0].voxels == std::vector<std::array<std::size_t, 3>>{
                                   {1, 0, 0}, {1, 0, 1}, {2, 0, 0}, {2, 0, 1}});
    CHECK(regions[1].minimizer.value == -0.4);
    CHECK(regions[1].threshold_value == -0.2);
    CHECK(regions[1].voxels == std::vector<std::array<std::size_t, 3>>{
                                   {6, 0, 0}, {6, 0, 1}, {7, 0, 0}, {7, 0, 1}});
}

TEST_CASE("minima joined below the weaker threshold merge into one region") {
    auto g = make_grid_1d(7);
    auto s = make_scale_grid(1, 2, 2);
    auto a = make_cube(g, s, 0.0);
    for (std::size_t k = 0; k < 2; ++k) {
        a.at(2, 0, k) = -1.0;
        a.at(3, 0, k) = -0.55;  // bridge: below 0.5 * (-0.6)
        a.at(4, 0, k) = -0.6;
    }
    auto regions = extract_regions(a, 0.5);
    REQUIRE(regions.size() == 1);
    CHECK(regions[0].minimizer.value == -1.0);
    CHECK(regions[0].minimizer.i == 2);
    CHECK(regions[0].threshold_value == -0.3);  // seeded by the weaker minimum
    auto flats = region_flats(a, regions[0]);
    for (std::size_t i = 2; i <= 4; ++i)
        for (std::size_t k = 0; k < 2; ++k) CHECK(flats.count(a.flat(i, 0, k)) == 1);
}

TEST_CASE("relative threshold domain is enforced") {
    auto g = make_grid_1d(4);
    auto s = make_scale_grid(1, 2, 2);
    auto a = make_cube(g, s, -1.0);
    CHECK_THROWS_AS(extract_regions(a, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(extract_regions(a, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(extract_regions(a, -0.3), std::invalid_argument);
    CHECK_THROWS_AS(extract_regions(a, 1.5), std::invalid_argument);
    CHECK_NOTHROW(extract_regions(a, 0.5));
}

TEST_CASE("extracted regions satisfy the structural invariants") {
    std::vector<std::pair<SpatialGrid, ScaleGrid>> shapes = {
        {make_grid_1d(14), make_scale_grid(1, 4, 4)},
        {make_grid_2d(6, 7), make_scale_grid(1, 4, 3)},
    };
    for (std::size_t sh = 0; sh < shapes.size(); ++sh) {
        const auto& [g, s] = shapes[sh];
        for (int trial = 0; trial < 6; ++trial) {
            auto a = random_cube(g, s, 7000 + 10 * sh + std::size_t(trial), trial % 2 == 1);
            const double r = 0.5;
            auto regions = extract_regions(a, r);
            REQUIRE_FALSE(regions.empty());  // random noise always has negative minima

            std::set<std::size_t> all;
            double prev = -std::numeric_limits<double>::infinity();
            for (const auto& reg : regions) {
                auto flats = region_flats(a, reg);
                REQUIRE(flats.size() == reg.voxels.size());  // no duplicate voxels
                for (auto p : flats) {
                    REQUIRE(all.count(p) == 0);  // pairwise disjoint
                    all.insert(p);
                    REQUIRE(a.v[p] <= reg.threshold_value);
                }
                REQUIRE(face_connected(a, flats));
                const auto mflat = a.flat(reg.minimizer.i, reg.minimizer.j, reg.minimizer.k);
                REQUIRE(flats.count(mflat) == 1);
                double vmin = std::numeric_limits<double>::infinity();
                for (auto p : flats) vmin = std::min(vmin, a.v[p]);
                REQUIRE(reg.minimizer.value == vmin);
                REQUIRE(reg.minimizer.value >= prev);  // ascending output order
                prev = reg.minimizer.value;
                // Lexicographic sort of the voxel list.
                CHECK(std::is_sorted(reg.voxels.begin(), reg.voxels.end()));
            }

            // Tighter thresholds shrink regions into the loose ones.
            auto tight = extract_regions(a, 0.8);
            auto loose = extract_regions(a, 0.3);
            for (const auto& regt : tight) {
                auto ft = region_flats(a, regt);
                bool inside_some = false;
                for (const auto& regl : loose) {
                    auto fl = region_flats(a, regl);
                    if (std::includes(fl.begin(), fl.end(), ft.begin(), ft.end())) {
                        inside_some = true;
                        break;
                    }
                }
                REQUIRE(inside_some);
            }
        }
    }
}

TEST_CASE("center projection flattens the scale axis") {
    auto g = make_grid_2d(6, 7);
    auto s = make_scale_grid(1, 4, 4);
    BlobRegion reg;
    reg.voxels = {{3, 4, 2}};
    auto mask = project_centers(reg, g);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 7; ++j)
            CHECK(mask[i * 7 + j] == ((i == 3 && j == 4) ? 1 : 0));

    BlobRegion col;
    for (std::size_t k = 0; k < 4; ++k) col.voxels.push_back({3, 4, k});
    auto mask2 = project_centers(col, g);
    CHECK(mask2 == mask);

    BlobRegion multi;
    multi.voxels = {{0, 0, 1}, {5, 6, 0}, {5, 6, 3}};
    auto mask3 = project_centers(multi, g);
    std::size_t on = 0;
    for (auto b : mask3) on += b;
    CHECK(on == 2);
    CHECK(mask3[0] == 1);
    CHECK(mask3[5 * 7 + 6] == 1);
}

TEST_CASE("circle projection draws the discrete ball") {
    auto g = make_grid_2d(9, 9);
    auto s = make_scale_grid(1.0, 2.0, 2);  // top scale t = 2: radius 2 in 2-D
    BlobRegion reg;
    reg.voxels = {{4, 4, 1}};
    auto mask = project_circles(reg, g, s);
    std::size_t on = 0;
    for (auto b : mask) on += b;
    CHECK(on == 13);  // lattice points with a^2 + b^2 <= 4
    for (long long i = 0; i < 9; ++i)
        for (long long j = 0; j < 9; ++j) {
            bool want = (i - 4) * (i - 4) + (j - 4) * (j - 4) <= 4;
            CHECK(mask[std::size_t(i) * 9 + std::size_t(j)] == (want ? 1 : 0));
        }
}

TEST_CASE("vanishing scale projects only the center") {
    auto g = make_grid_2d(5, 5);
    auto s = make_scale_grid(1e-9, 2e-9, 2);
    BlobRegion reg;
    reg.voxels = {{2, 2, 0}};
    auto mask = project_circles(reg, g, s);
    std::size_t on = 0;
    for (auto b : mask) on += b;
    CHECK(on == 1);
    CHECK(mask[2 * 5 + 2] == 1);
}

TEST_CASE("anisotropic pixels stretch the projected circle") {
    auto g = make_grid_2d(9, 9, 1.0, 2.0);  // columns are twice as wide
    auto s = make_scale_grid(1.0, 4.0, 2);  // radius sqrt(8) ~ 2.83
    BlobRegion reg;
    reg.voxels = {{4, 4, 1}};
    auto mask = project_circles(reg, g, s);
    for (long long i = 0; i < 9; ++i)
        for (long long j = 0; j < 9; ++j) {
            double d1 = double(i - 4), d2 = 2.0 * double(j - 4);
            bool want = d1 * d1 + d2 * d2 <= 8.0;
            CHECK(mask[std::size_t(i) * 9 + std::size_t(j)] == (want ? 1 : 0));
        }
}

TEST_CASE("center mask is contained in the extent mask") {
    auto g = make_grid_1d(14);
    auto s = make_scale_grid(1, 9, 4);
    auto a = random_cube(g, s, 909);
    for (const auto& reg : extract_regions(a, 0.5)) {
        auto pr = project_region(reg, g, s);
        REQUIRE(pr.center_mask.size() == g.size());
        REQUIRE(pr.extent_mask.size() == g.size());
        for (std::size_t p = 0; p < g.size(); ++p)
            if (pr.center_mask[p]) REQUIRE(pr.extent_mask[p] == 1);
    }
}
