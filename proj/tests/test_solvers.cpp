#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tvulog/cube.hpp"
#include "tvulog/grid.hpp"
#include "tvulog/rng.hpp"
#include "tvulog/scalespace.hpp"
#include "tvulog/signals.hpp"
#include "tvulog/socp.hpp"
#include "tvulog/solvers.hpp"

using namespace tvulog;

namespace {

ScaleSpaceCube random_cube(const SpatialGrid& g, const ScaleGrid& s, std::uint64_t seed,
                           double scale = 1.0) {
    auto c = make_cube(g, s);
    CounterRng rng(seed);
    for (double& v : c.v) v = scale * rng.next_normal();
    return c;
}

// Tube around an amplified blob scale space; narrow enough that the
// laplacian cannot be flattened, so the optimal TV is well away from zero.
Tube blob_tube(const SpatialGrid& g, const ScaleGrid& s, double amplitude, double width_scale,
               std::uint64_t seed) {
    auto base = prototype_blob_cube(g, s, double(g.n1 / 2) * g.h1, double(g.n2 / 2) * g.h2, 4.0);
    for (double& v : base.v) v *= amplitude;
    Tube t{base, base};
    CounterRng rng(seed);
    for (std::size_t p = 0; p < base.v.size(); ++p) {
        const double w = width_scale * (0.5 + rng.next_uniform());
        t.lower.v[p] -= w;
        t.upper.v[p] += w;
    }
    return t;
}

}  // namespace

TEST_CASE("huber envelope agrees with the ball maximization") {
    // max_{||w||<=1} <v,w> - mu/2 ||w||^2 restricted to w = rho v/||v||
    // reduces to a scalar problem in rho; a fine rho grid is an independent
    // evaluation of the envelope.
    CounterRng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        double v[3] = {3.0 * rng.next_normal(), 3.0 * rng.next_normal(), 3.0 * rng.next_normal()};
        const double nrm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        for (double mu : {0.1, 1.0, 10.0}) {
            double best = 0.0;
            for (int step = 0; step <= 1000; ++step) {
                const double rho = double(step) / 1000.0;
                best = std::max(best, rho * nrm - 0.5 * mu * rho * rho);
            }
            const double got = huber_norm(v, 3, mu);
            REQUIRE(std::abs(got - best) <= 5e-3);
            // Closed form restated.
            const double want = (nrm < mu) ? nrm * nrm / (2.0 * mu) : nrm - 0.5 * mu;
            REQUIRE(got == Catch::Approx(want).margin(1e-15));
        }
    }
}

TEST_CASE("smoothed objective sandwiches the true objective") {
    auto g = make_grid_2d(5, 4);
    auto s = make_scale_grid(1.0, 4.0, 3);
    for (int trial = 0; trial < 10; ++trial) {
        auto u = random_cube(g, s, 500 + trial);
        const double tv = tv_objective(u);
        const auto field = apply_grad_lap(u);
        for (double mu : {0.5, 0.05}) {
            const double smooth = smoothed_tv(field, mu);
            REQUIRE(smooth <= tv + 1e-10);
            REQUIRE(tv <= smooth + mu * smoothing_gap_bound(u) + 1e-10);
        }
    }
}

TEST_CASE("auto smoothing parameter tracks the rms width") {
    auto g = make_grid_1d(4);
    auto s = make_scale_grid(1.0, 4.0, 2);
    Tube t{make_cube(g, s, 0.0), make_cube(g, s, 0.0)};
    t.upper.v = {1, 1, 1, 1, 3, 3, 3, 3};  // widths 1 and 3, rms sqrt(5)
    CHECK(rms_tube_width(t) == Catch::Approx(std::sqrt(5.0)).epsilon(1e-12));
    CHECK(default_mu(t) == Catch::Approx(1e-3 * std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("projections match their definitions") {
    std::vector<double> field = {3.0, 0.0, 0.0, 0.3, -0.4, 0.0, 1.0, 1.0, 1.0};
    project_unit_balls(field, 3);
    CHECK(field[0] == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(field[1] == 0.0);
    CHECK(field[2] == 0.0);
    CHECK(field[3] == 0.3);  // inside the ball: untouched
    CHECK(field[4] == -0.4);
    const double inv = 1.0 / std::sqrt(3.0);
    for (int c = 6; c < 9; ++c) CHECK(field[std::size_t(c)] == Catch::Approx(inv).epsilon(1e-12));

    auto g = make_grid_1d(3);
    auto s = make_scale_grid(1.0, 2.0, 2);
    Tube t{make_cube(g, s, -1.0), make_cube(g, s, 2.0)};
    std::vector<double> x = {-3.0, 0.5, 7.0, -1.0, 2.0, 0.0};
    auto want = x;
    for (double& v : want) v = std::clamp(v, -1.0, 2.0);
    clamp_to_tube(x, t);
    CHECK(x == want);

    auto inside = make_cube(g, s, 0.25);
    CHECK(max_tube_violation(inside, t) == 0.0);
    auto outside = make_cube(g, s, 2.5);
    CHECK(max_tube_violation(outside, t) == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("degenerate point tube short-circuits every solver") {
    auto g = make_grid_1d(6);
    auto s = make_scale_grid(1.0, 4.0, 3);
    auto fixed = random_cube(g, s, 9);
    Tube t{fixed, fixed};
    auto prob = make_problem(t);

    auto dual = solve_tv_ulog_dual_smoothing(prob);
    auto primal = solve_tv_ulog_primal_smoothing(prob);
    auto socp = solve_tv_ulog_socp(prob);
    auto quad = solve_ulog_quadratic(t);

    for (const auto* r : {&dual, &primal, &socp}) {
        CHECK(r->status == SolveStatus::converged);
        CHECK(r->iterations == 1);
        REQUIRE(r->minimizer.v == fixed.v);
        CHECK(r->objective == tv_objective(fixed));
        REQUIRE(r->trace.size() == 1);
    }
    CHECK(socp.duality_gap == 0.0);
    REQUIRE(quad.minimizer.v == fixed.v);
    const auto lap = normalized_laplacian(fixed);
    double sq = 0.0;
    for (double w : lap.v) sq += w * w;
    CHECK(quad.objective == Catch::Approx(sq).epsilon(1e-12));
}

TEST_CASE("legacy quadratic solver matches a long projected-gradient reference") {
    auto g = make_grid_1d(8);
    auto s = make_scale_grid(1.0, 4.0, 3);
    Tube t = blob_tube(g, s, 30.0, 0.05, 41);

    auto result = solve_ulog_quadratic(t, SolverOptions{0.0, 1e-12, 100000, 100, 100});
    CHECK(max_tube_violation(result.minimizer, t) == 0.0);

    // Plain projected gradient, one million iterations, no acceleration.
    const double lnorm = lap_norm(g, s);
    const double step = 1.0 / (2.0 * lnorm * lnorm);
    std::vector<double> x(t.lower.v.size());
    for (std::size_t p = 0; p < x.size(); ++p) x[p] = 0.5 * (t.lower.v[p] + t.upper.v[p]);
    auto cbuf = make_cube(g, s);
    for (int it = 0; it < 1000000; ++it) {
        cbuf.v = x;
        auto back = normalized_laplacian_adjoint(normalized_laplacian(cbuf));
        for (std::size_t p = 0; p < x.size(); ++p)
            x[p] = std::clamp(x[p] - step * 2.0 * back.v[p], t.lower.v[p], t.upper.v[p]);
    }
    cbuf.v = x;
    auto lap = normalized_laplacian(cbuf);
    double ref_obj = 0.0;
    for (double w : lap.v) ref_obj += w * w;

    REQUIRE(result.objective <= ref_obj + 1e-6);
    REQUIRE(result.objective >= ref_obj - 1e-6);
}

TEST_CASE("quadratic solver hits zero when a harmonic cube fits the tube") {
    auto g = make_grid_1d(7);
    auto s = make_scale_grid(1.0, 4.0, 3);
    Tube t{make_cube(g, s, -0.5), make_cube(g, s, 0.5)};  // contains the zero cube
    auto result = solve_ulog_quadratic(t, SolverOptions{0.0, 1e-13, 200000, 100, 100});
    CHECK(result.objective <= 1e-10);
}

TEST_CASE("smoothing solvers minimize the tube-constrained objective") {
    auto g = make_grid_1d(12);
    auto s = make_scale_grid(1.0, 9.0, 3);
    Tube t = blob_tube(g, s, 50.0, 0.02, 7);
    auto prob = make_problem(t);

    SolverOptions opt;
    opt.mu = 1e-3;
    opt.tol = 1e-10;

    auto dual = solve_tv_ulog_dual_smoothing(prob, opt);
    auto primal = solve_tv_ulog_primal_smoothing(prob, opt);
    auto socp = solve_tv_ulog_socp(prob, SolverOptions{});

    CHECK(max_tube_violation(dual.minimizer, t) == 0.0);
    CHECK(max_tube_violation(primal.minimizer, t) == 0.0);
    CHECK(max_tube_violation(socp.minimizer, t) == 0.0);
    CHECK(dual.mu == 1e-3);
    CHECK(primal.mu == 1e-3);
    CHECK(socp.duality_gap <= 1e-8);

    // All three attack the same convex problem; the interior point solution
    // is the reference value.
    REQUIRE(socp.objective > 0.0);
    CHECK(std::abs(dual.objective - socp.objective) <= 0.01 * socp.objective);
    CHECK(std::abs(primal.objective - socp.objective) <= 0.01 * socp.objective);

    // Recorded traces end at the reported objective.
    REQUIRE_FALSE(dual.trace.empty());
    REQUIRE_FALSE(primal.trace.empty());
    CHECK(primal.trace.back().objective == primal.objective);

    // No feasible cube can beat the interior-point objective by more than
    // the duality gap allows.
    CounterRng rng(88);
    for (int trial = 0; trial < 200; ++trial) {
        auto probe = make_cube(g, s);
        for (std::size_t p = 0; p < probe.v.size(); ++p) {
            const double a = rng.next_uniform();
            probe.v[p] = t.lower.v[p] + a * (t.upper.v[p] - t.lower.v[p]);
        }
        REQUIRE(tv_objective(probe) >= socp.objective - 1e-6 * socp.objective);
    }
}

TEST_CASE("explicit smoothing parameter is honored and defaults apply") {
    auto g = make_grid_1d(8);
    auto s = make_scale_grid(1.0, 4.0, 2);
    Tube t = blob_tube(g, s, 10.0, 0.05, 3);
    auto prob = make_problem(t);

    SolverOptions opt;
    opt.max_iters = 50;
    auto run = solve_tv_ulog_primal_smoothing(prob, opt);
    CHECK(run.mu == Catch::Approx(default_mu(t)).epsilon(1e-12));
    CHECK(run.iterations <= 50);

    opt.mu = 0.37;
    auto run2 = solve_tv_ulog_primal_smoothing(prob, opt);
    CHECK(run2.mu == 0.37);
}
