#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace tvulog {

enum class SolveStatus { converged, iteration_limit, numerical_failure };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::iteration_limit: return "iteration_limit";
        default: return "numerical_failure";
    }
}

struct TracePoint {
    std::size_t iter = 0;
    double seconds = 0.0;
    double objective = 0.0;
};

struct SolverOptions {
    double mu = 0.0;             // smoothing parameter; 0 = 1e-3 * rms tube width
    double tol = 0.0;            // 0 = solver default (1e-9 window / 1e-8 gap)
    std::size_t max_iters = 0;   // 0 = solver default (2e5 first-order / 100 interior-point)
    std::size_t check_every = 100;  // objective evaluation stride = stopping window
    std::size_t trace_every = 100;  // trace recording stride
};

namespace detail {

struct FgpOutcome {
    std::vector<double> x;
    std::size_t iterations = 0;
    SolveStatus status = SolveStatus::iteration_limit;
    std::vector<TracePoint> trace;
};

// Nesterov-accelerated projected gradient (FGP): momentum weights
// t_{k+1} = (1 + sqrt(1 + 4 t_k^2))/2, extrapolation (t_k - 1)/t_{k+1}.
// The default stopping rule watches the relative change of the true
// (unsmoothed) objective across one check window; callers whose reported
// objective can plateau away from the optimum supply a `stop` predicate
// (evaluated at the same cadence) instead.
template <class Grad, class Proj, class Obj>
FgpOutcome fgp_minimize(std::vector<double> x0, double step, Grad&& gradient, Proj&& project,
                        Obj&& true_objective, double tol, std::size_t max_iters,
                        std::size_t check_every, std::size_t trace_every,
                        const std::function<bool(const std::vector<double>&, double)>& stop = {}) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

    project(x0);
    std::vector<double> x = x0;       // current iterate u_k
    std::vector<double> y = x0;       // extrapolated point v_k
    std::vector<double> work(x.size());
    std::vector<double> g(x.size());
    double t = 1.0;

    FgpOutcome out;
    double window_obj = true_objective(x);
    out.trace.push_back({0, elapsed(), window_obj});

    std::size_t it = 0;
    while (it < max_iters) {
        ++it;
        gradient(y, g);
        for (std::size_t p = 0; p < x.size(); ++p) work[p] = y[p] - step * g[p];
        project(work);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double momentum = (t - 1.0) / t_next;
        for (std::size_t p = 0; p < x.size(); ++p)
            y[p] = work[p] + momentum * (work[p] - x[p]);
        x.swap(work);
        t = t_next;

        if (it % check_every == 0 || it == max_iters) {
            const double obj = true_objective(x);
            if (!std::isfinite(obj)) {
                out.status = SolveStatus::numerical_failure;
                out.trace.push_back({it, elapsed(), obj});
                break;
            }
            if (it % trace_every == 0 || it == max_iters)
                out.trace.push_back({it, elapsed(), obj});
            const double denom = std::max({std::abs(obj), std::abs(window_obj), 1e-12});
            const bool done = stop ? stop(x, obj) : std::abs(obj - window_obj) <= tol * denom;
            if (done) {
                out.status = SolveStatus::converged;
                if (out.trace.back().iter != it) out.trace.push_back({it, elapsed(), obj});
                break;
            }
            window_obj = obj;
        }
    }
    out.iterations = it;
    out.x = std::move(x);
    return out;
}

}  // namespace detail

}  // namespace tvulog
