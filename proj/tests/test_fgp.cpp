#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tvulog/fgp.hpp"
#include "tvulog/rng.hpp"

using namespace tvulog;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.next_normal();
    return v;
}

}  // namespace

TEST_CASE("accelerated iterates replay a hand-rolled recursion bitwise") {
    const std::size_t n = 6;
    auto a = random_vec(n, 1);
    auto x0 = random_vec(n, 2);
    const double step = 0.4;

    auto gradient = [&](const std::vector<double>& y, std::vector<double>& g) {
        for (std::size_t p = 0; p < n; ++p) g[p] = y[p] - a[p];
    };
    auto project = [&](std::vector<double>& v) {
        for (double& x : v) x = std::clamp(x, 0.0, 1.0);
    };
    auto objective = [&](const std::vector<double>& x) {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p) s += 0.5 * (x[p] - a[p]) * (x[p] - a[p]);
        return s;
    };

    const std::size_t iters = 7;
    auto out = detail::fgp_minimize(x0, step, gradient, project, objective, 0.0, iters, 100, 100);
    REQUIRE(out.iterations == iters);

    // Same recursion, written out longhand.
    std::vector<double> x = x0;
    project(x);
    std::vector<double> y = x, work(n), g(n);
    double t = 1.0;
    for (std::size_t it = 1; it <= iters; ++it) {
        gradient(y, g);
        for (std::size_t p = 0; p < n; ++p) work[p] = y[p] - step * g[p];
        project(work);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double momentum = (t - 1.0) / t_next;
        for (std::size_t p = 0; p < n; ++p) y[p] = work[p] + momentum * (work[p] - x[p]);
        x.swap(work);
        t = t_next;
    }
    REQUIRE(out.x == x);
}

TEST_CASE("box-constrained quadratic converges to the clamped target") {
    const std::size_t n = 20;
    auto a = random_vec(n, 5);
    for (double& v : a) v *= 2.0;  // push some coordinates outside the box
    auto gradient = [&](const std::vector<double>& y, std::vector<double>& g) {
        for (std::size_t p = 0; p < n; ++p) g[p] = y[p] - a[p];
    };
    auto project = [&](std::vector<double>& v) {
        for (double& x : v) x = std::clamp(x, 0.0, 1.0);
    };
    auto objective = [&](const std::vector<double>& x) {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p) s += 0.5 * (x[p] - a[p]) * (x[p] - a[p]);
        return s;
    };
    auto out = detail::fgp_minimize(std::vector<double>(n, 0.5), 1.0, gradient, project,
                                    objective, 1e-13, 100000, 10, 10);
    CHECK(out.status == SolveStatus::converged);
    for (std::size_t p = 0; p < n; ++p)
        REQUIRE(out.x[p] == Catch::Approx(std::clamp(a[p], 0.0, 1.0)).margin(1e-8));

    REQUIRE_FALSE(out.trace.empty());
    CHECK(out.trace.front().iter == 0);
    double best = out.trace.front().objective;
    for (const auto& tp : out.trace) {
        best = std::min(best, tp.objective);
        CHECK(best <= out.trace.front().objective);
        CHECK(tp.seconds >= 0.0);
    }
    CHECK(out.trace.back().iter == out.iterations);
}

TEST_CASE("iteration cap reports iteration_limit") {
    auto gradient = [](const std::vector<double>& y, std::vector<double>& g) {
        g[0] = y[0];
    };
    auto project = [](std::vector<double>&) {};
    auto objective = [](const std::vector<double>& x) { return 0.5 * x[0] * x[0]; };
    auto out = detail::fgp_minimize(std::vector<double>{1.0}, 1e-6, gradient, project, objective,
                                    0.0, 50, 100, 100);
    CHECK(out.status == SolveStatus::iteration_limit);
    CHECK(out.iterations == 50);
}

TEST_CASE("divergence to non-finite objective is flagged") {
    auto gradient = [](const std::vector<double>& y, std::vector<double>& g) {
        g[0] = -y[0];  // ascent direction: iterates explode
    };
    auto project = [](std::vector<double>&) {};
    auto objective = [](const std::vector<double>& x) { return -x[0] * x[0]; };
    auto out = detail::fgp_minimize(std::vector<double>{1.0}, 10.0, gradient, project, objective,
                                    1e-9, 5000, 100, 100);
    CHECK(out.status == SolveStatus::numerical_failure);
    CHECK(out.iterations < 5000);
}
