#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tvulog/cube.hpp"
#include "tvulog/fgp.hpp"
#include "tvulog/solvers.hpp"

namespace tvulog {

// Epigraph form of the tube-constrained TV problem:
//   minimize sum_l q_l  over (z, q)
//   subject to zlow <= z <= zupp and ||(rows z)_l|| <= q_l per site l,
// where rows stacks the (d+1) gradient-of-Laplacian rows of every site.
struct ConeProgram {
    SpatialGrid grid;
    ScaleGrid scales;
    Eigen::SparseMatrix<double, Eigen::RowMajor> rows;  // (d+1)N x N, site-major
    std::vector<double> zlow, zupp;                     // length N
    std::size_t n_sites = 0;
    std::size_t block = 0;  // rows per site = d+1

    std::size_t num_vars() const { return 2 * n_sites; }
    std::size_t num_linear() const { return 2 * n_sites; }
    std::size_t num_cones() const { return n_sites; }
    std::size_t num_constraints() const { return 3 * n_sites; }
};

namespace detail {

// Sparse matrix of the scale-normalized Laplacian in the cube's row-major
// flattening; duplicate triplets from the mirror rows sum, matching the
// dense operator exactly.
inline Eigen::SparseMatrix<double> laplacian_matrix(const SpatialGrid& g, const ScaleGrid& s) {
    const std::size_t n1 = g.n1, n2 = g.n2, K = s.count();
    const std::size_t N = n1 * n2 * K;
    const double ih1 = 1.0 / (g.h1 * g.h1), ih2 = 1.0 / (g.h2 * g.h2);
    auto flat = [&](std::size_t i, std::size_t j, std::size_t k) { return (i * n2 + j) * K + k; };
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(N * (g.dim == 2 ? 5 : 3));
    for (std::size_t i = 0; i < n1; ++i) {
        const std::size_t im = (i == 0) ? 1 : i - 1;
        const std::size_t ip = (i == n1 - 1) ? n1 - 2 : i + 1;
        for (std::size_t j = 0; j < n2; ++j) {
            const std::size_t jm = (j == 0) ? 1 : j - 1;
            const std::size_t jp = (j == n2 - 1) ? n2 - 2 : j + 1;
            for (std::size_t k = 0; k < K; ++k) {
                const auto row = Eigen::Index(flat(i, j, k));
                const double c1 = s.t[k] * ih1;
                trip.emplace_back(row, Eigen::Index(flat(im, j, k)), c1);
                trip.emplace_back(row, row, -2.0 * c1);
                trip.emplace_back(row, Eigen::Index(flat(ip, j, k)), c1);
                if (g.dim == 2) {
                    const double c2 = s.t[k] * ih2;
                    trip.emplace_back(row, Eigen::Index(flat(i, jm, k)), c2);
                    trip.emplace_back(row, row, -2.0 * c2);
                    trip.emplace_back(row, Eigen::Index(flat(i, jp, k)), c2);
                }
            }
        }
    }
    const auto dim = Eigen::Index(N);
    Eigen::SparseMatrix<double> m(dim, dim);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

inline Eigen::SparseMatrix<double> gradient_matrix(const SpatialGrid& g, const ScaleGrid& s) {
    const std::size_t n1 = g.n1, n2 = g.n2, K = s.count();
    const std::size_t N = n1 * n2 * K;
    const std::size_t nc = std::size_t(g.dim) + 1;
    const double bm1 = s.ratio - 1.0;
    auto flat = [&](std::size_t i, std::size_t j, std::size_t k) { return (i * n2 + j) * K + k; };
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(N * nc * 2);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            for (std::size_t k = 0; k < K; ++k) {
                const std::size_t p = flat(i, j, k);
                const double st = std::sqrt(s.t[k]);
                if (i + 1 < n1) {
                    const auto row = Eigen::Index(p * nc + 0);
                    trip.emplace_back(row, Eigen::Index(flat(i + 1, j, k)), st / g.h1);
                    trip.emplace_back(row, Eigen::Index(p), -st / g.h1);
                }
                if (g.dim == 2 && j + 1 < n2) {
                    const auto row = Eigen::Index(p * nc + 1);
                    trip.emplace_back(row, Eigen::Index(flat(i, j + 1, k)), st / g.h2);
                    trip.emplace_back(row, Eigen::Index(p), -st / g.h2);
                }
                if (k + 1 < K) {
                    const auto row = Eigen::Index(p * nc + nc - 1);
                    trip.emplace_back(row, Eigen::Index(p + 1), 1.0 / bm1);
                    trip.emplace_back(row, Eigen::Index(p), -1.0 / bm1);
                }
            }
    const auto rows = Eigen::Index(N * nc), cols = Eigen::Index(N);
    Eigen::SparseMatrix<double> m(rows, cols);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

}  // namespace detail

inline ConeProgram to_socp(const Tube& tube) {
    validate_tube(tube);
    ConeProgram cp;
    cp.grid = tube.lower.grid;
    cp.scales = tube.lower.scales;
    cp.n_sites = tube.lower.v.size();
    cp.block = std::size_t(cp.grid.dim) + 1;
    const auto lap = detail::laplacian_matrix(cp.grid, cp.scales);
    const auto grad = detail::gradient_matrix(cp.grid, cp.scales);
    cp.rows = grad * lap;
    cp.zlow = tube.lower.v;
    cp.zupp = tube.upper.v;
    return cp;
}

struct SocpOptions {
    double tol = 1e-8;          // relative duality gap target
    std::size_t max_iters = 100;
    double feas_tol = 1e-7;     // relative primal/dual residual target
};

struct SocpResult {
    std::vector<double> z;  // length N, fixed entries included
    std::vector<double> q;  // length N
    double gap_rel = std::numeric_limits<double>::infinity();
    double gap_abs = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    SolveStatus status = SolveStatus::iteration_limit;
};

namespace detail {

// One second-order cone block of the Nesterov-Todd scaling.  W = eta*M(wb)
// with M(wb) = [[wb0, wb1'], [wb1, I + wb1 wb1'/(1+wb0)]]; M(J wb) is its
// inverse, so W and W^{-1} share one apply routine.
struct SocScaling {
    std::vector<double> wb;  // unit-hyperbolic scaling point, wb' J wb = 1
    double eta = 1.0;
};

inline void soc_apply_m(const std::vector<double>& wb, const double* a, double* out,
                        std::size_t B) {
    double dot = 0.0;
    for (std::size_t r = 1; r < B; ++r) dot += wb[r] * a[r];
    out[0] = wb[0] * a[0] + dot;
    const double coef = a[0] + dot / (1.0 + wb[0]);
    for (std::size_t r = 1; r < B; ++r) out[r] = a[r] + coef * wb[r];
}

// Largest step alpha with u + alpha d staying in the second-order cone.
inline double soc_step_bound(const double* u, const double* d, std::size_t B) {
    const double inf = std::numeric_limits<double>::infinity();
    double a = d[0] * d[0], b = u[0] * d[0], c = u[0] * u[0];
    for (std::size_t r = 1; r < B; ++r) {
        a -= d[r] * d[r];
        b -= u[r] * d[r];
        c -= u[r] * u[r];
    }
    b *= 2.0;
    if (c <= 0.0) return 0.0;  // at/outside the boundary already
    if (a == 0.0) {
        if (b >= 0.0) return inf;
        return -c / b;
    }
    const double disc = b * b - 4.0 * a * c;
    if (a > 0.0) {
        if (disc < 0.0) return inf;
        const double sq = std::sqrt(disc);
        const double r1 = (-b - sq) / (2.0 * a);
        return r1 > 0.0 ? r1 : inf;
    }
    const double sq = std::sqrt(std::max(disc, 0.0));
    const double r1 = (-b - sq) / (2.0 * a), r2 = (-b + sq) / (2.0 * a);
    return r1 > 0.0 ? r1 : (r2 > 0.0 ? r2 : inf);
}

inline double lin_step_bound(const double* u, const double* d, std::size_t n) {
    double bound = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] < 0.0) bound = std::min(bound, -u[i] / d[i]);
    return bound;
}

// Solve L_v z = r where L_v is the arrow (Jordan product) matrix of v.
inline void arrow_solve(const double* v, const double* r, double* z, std::size_t B) {
    double det = v[0] * v[0], vr = v[0] * r[0];
    for (std::size_t c = 1; c < B; ++c) {
        det -= v[c] * v[c];
        vr -= v[c] * r[c];
    }
    z[0] = vr / det;
    for (std::size_t c = 1; c < B; ++c) z[c] = (r[c] - z[0] * v[c]) / v[0];
}

inline void jordan_product(const double* a, const double* b, double* out, std::size_t B) {
    double dot = 0.0;
    for (std::size_t c = 0; c < B; ++c) dot += a[c] * b[c];
    for (std::size_t c = 1; c < B; ++c) out[c] = a[0] * b[c] + b[0] * a[c];
    out[0] = dot;
}

}  // namespace detail

// Primal-dual interior-point method with Nesterov-Todd scaling and a
// Mehrotra predictor-corrector step, specialized to the cone structure of
// ConeProgram (a box plus one small second-order cone per site).  Sites
// whose bounds coincide are eliminated up front; their contribution enters
// the cone rows as constant offsets.  The per-iteration Newton system is
// solved in augmented quasi-definite form with a sparse LDLT whose
// symbolic factorization is shared across iterations.
inline SocpResult solve_socp_interior_point(
    const ConeProgram& cp, const SocpOptions& opt = {},
    const std::function<void(std::size_t, const std::vector<double>&)>& on_iterate = {}) {
    const std::size_t N = cp.n_sites;
    const std::size_t B = cp.block + 1;  // cone dimension: (q, rows block)
    SocpResult res;
    res.z = cp.zlow;
    res.q.assign(N, 0.0);

    std::vector<std::size_t> freecol(N, std::size_t(-1)), freesite;
    for (std::size_t l = 0; l < N; ++l)
        if (cp.zlow[l] != cp.zupp[l]) {
            freecol[l] = freesite.size();
            freesite.push_back(l);
        }
    const std::size_t F = freesite.size();

    // All variables pinned: the program is a function evaluation.
    if (F == 0) {
        Eigen::VectorXd zfix = Eigen::Map<const Eigen::VectorXd>(cp.zlow.data(), Eigen::Index(N));
        Eigen::VectorXd rows_z = cp.rows * zfix;
        for (std::size_t l = 0; l < N; ++l) {
            double sq = 0.0;
            for (std::size_t r = 0; r < cp.block; ++r) {
                const double a = rows_z[Eigen::Index(l * cp.block + r)];
                sq += a * a;
            }
            res.q[l] = std::sqrt(sq);
        }
        res.gap_abs = 0.0;
        res.gap_rel = 0.0;
        res.status = SolveStatus::converged;
        return res;
    }

    const std::size_t n = F + N;
    const std::size_t m = 2 * F + N * B;
    const auto en = Eigen::Index(n), em = Eigen::Index(m);
    const double nu = double(2 * F + N);  // barrier degree

    // h - Gx = s with s in (R_+)^{2F} x product of second-order cones.
    Eigen::VectorXd h = Eigen::VectorXd::Zero(Eigen::Index(m));
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t fc = 0; fc < F; ++fc) {
        const std::size_t l = freesite[fc];
        trip.emplace_back(Eigen::Index(2 * fc), Eigen::Index(fc), -1.0);
        h[Eigen::Index(2 * fc)] = -cp.zlow[l];
        trip.emplace_back(Eigen::Index(2 * fc + 1), Eigen::Index(fc), 1.0);
        h[Eigen::Index(2 * fc + 1)] = cp.zupp[l];
    }
    for (std::size_t l = 0; l < N; ++l) {
        const std::size_t base = 2 * F + l * B;
        trip.emplace_back(Eigen::Index(base), Eigen::Index(F + l), -1.0);
        for (std::size_t r = 0; r < cp.block; ++r) {
            const auto arow = Eigen::Index(l * cp.block + r);
            double off = 0.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(cp.rows, arow); it;
                 ++it) {
                const std::size_t site = std::size_t(it.col());
                if (freecol[site] != std::size_t(-1))
                    trip.emplace_back(Eigen::Index(base + 1 + r), Eigen::Index(freecol[site]),
                                      -it.value());
                else
                    off += it.value() * cp.zlow[site];
            }
            h[Eigen::Index(base + 1 + r)] = off;
        }
    }
    Eigen::SparseMatrix<double> G(em, en);
    G.setFromTriplets(trip.begin(), trip.end());
    const Eigen::SparseMatrix<double> Gt = G.transpose();

    // Constant part of the KKT triplets: the off-diagonal G blocks plus zero
    // placeholders on the full diagonal.  The placeholders keep the sparsity
    // pattern independent of the regularization shift, so the fill-reducing
    // ordering is computed once and reused every iteration.
    std::vector<Eigen::Triplet<double>> kbase;
    kbase.reserve(2 * std::size_t(G.nonZeros()) + n + m);
    for (Eigen::Index col = 0; col < G.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator gi(G, col); gi; ++gi) {
            kbase.emplace_back(en + gi.row(), col, gi.value());
            kbase.emplace_back(col, en + gi.row(), gi.value());
        }
    for (Eigen::Index di = 0; di < en + em; ++di) kbase.emplace_back(di, di, 0.0);

    Eigen::VectorXd c = Eigen::VectorXd::Zero(Eigen::Index(n));
    for (std::size_t l = 0; l < N; ++l) c[Eigen::Index(F + l)] = 1.0;
    const double cnorm = std::sqrt(double(N));
    const double hnorm = std::max(1.0, h.norm());

    // Strictly interior, exactly feasible start: z at the box midpoint and
    // q one unit above each cone residual norm.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(Eigen::Index(n));
    for (std::size_t fc = 0; fc < F; ++fc) {
        const std::size_t l = freesite[fc];
        x[Eigen::Index(fc)] = 0.5 * (cp.zlow[l] + cp.zupp[l]);
    }
    {
        Eigen::VectorXd gx = G * x;
        for (std::size_t l = 0; l < N; ++l) {
            const std::size_t base = 2 * F + l * B;
            double sq = 0.0;
            for (std::size_t r = 1; r < B; ++r) {
                const double a = h[Eigen::Index(base + r)] - gx[Eigen::Index(base + r)];
                sq += a * a;
            }
            x[Eigen::Index(F + l)] = std::sqrt(sq) + 1.0;
        }
    }
    Eigen::VectorXd s = h - G * x;
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(Eigen::Index(m));
    for (std::size_t i = 0; i < 2 * F; ++i) lam[Eigen::Index(i)] = 1.0;
    for (std::size_t l = 0; l < N; ++l) lam[Eigen::Index(2 * F + l * B)] = 1.0;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;
    std::vector<detail::SocScaling> soc(N);
    for (auto& sc : soc) sc.wb.assign(B, 0.0);
    Eigen::VectorXd wlin(Eigen::Index(2 * F));  // W diagonal on the linear part
    Eigen::VectorXd v(em);                      // scaled point W*lam = W^{-1}*s
    Eigen::VectorXd dx(en), ds(em), dlam(em);
    Eigen::VectorXd dv(em), rhs_c(em), wdv(em);
    Eigen::VectorXd winv_ds(em), w_dlam(em);
    std::vector<double> tmp(B), tmp2(B);

    auto extract_z = [&](const Eigen::VectorXd& xv) {
        std::vector<double> z = cp.zlow;
        for (std::size_t fc = 0; fc < F; ++fc) z[freesite[fc]] = xv[Eigen::Index(fc)];
        return z;
    };

    auto fail = [&](const Eigen::VectorXd& xv, std::size_t iters) {
        res.z = extract_z(xv);
        for (std::size_t l = 0; l < N; ++l) res.q[l] = xv[Eigen::Index(F + l)];
        res.iterations = iters;
        res.status = SolveStatus::numerical_failure;
        return res;
    };

    // Flat stretches of the minimizer put both cone sides at the apex, so
    // strict complementarity fails and the final steps can block before the
    // gap target.  Keep the best feasible iterate to return on a stall.
    Eigen::VectorXd best_x = x;
    double best_score = std::numeric_limits<double>::infinity();
    double best_gap_abs = res.gap_abs, best_gap_rel = res.gap_rel;
    bool stalled = false;
    int noimp = 0;

    std::size_t it = 0;
    for (it = 1; it <= opt.max_iters; ++it) {
        const Eigen::VectorXd rx = c + Gt * lam;
        const Eigen::VectorXd rs = G * x + s - h;
        const double pobj = c.dot(x);
        const double dobj = -h.dot(lam);
        const double gap = s.dot(lam);
        res.gap_abs = gap;
        res.gap_rel = gap / std::max({1.0, std::abs(pobj), std::abs(dobj)});
        const double rel_rx = rx.norm() / std::max(1.0, cnorm);
        const double rel_rs = rs.norm() / hnorm;
        const double score = std::max({res.gap_rel, rel_rx, rel_rs});
        if (score < best_score) {
            best_score = score;
            best_x = x;
            best_gap_abs = res.gap_abs;
            best_gap_rel = res.gap_rel;
            noimp = 0;
        } else {
            ++noimp;
        }
        if (res.gap_rel <= opt.tol && rel_rx <= opt.feas_tol && rel_rs <= opt.feas_tol) {
            res.status = SolveStatus::converged;
            break;
        }
        // Endgame stall: accuracy is already near the attainable floor and
        // several successive iterations have not improved it.
        if (noimp >= 4 && best_score <= 1e3 * opt.tol) {
            stalled = true;
            break;
        }
        const double mu = gap / nu;

        // Nesterov-Todd scaling per cone.
        for (std::size_t i = 0; i < 2 * F; ++i) {
            const double si = s[Eigen::Index(i)], li = lam[Eigen::Index(i)];
            if (si <= 0.0 || li <= 0.0) return fail(x, it);
            wlin[Eigen::Index(i)] = std::sqrt(si / li);
            v[Eigen::Index(i)] = std::sqrt(si * li);
        }
        for (std::size_t l = 0; l < N; ++l) {
            const std::size_t base = 2 * F + l * B;
            const double* sb = s.data() + base;
            const double* lb = lam.data() + base;
            double js = sb[0] * sb[0], jl = lb[0] * lb[0], sl = sb[0] * lb[0];
            for (std::size_t r = 1; r < B; ++r) {
                js -= sb[r] * sb[r];
                jl -= lb[r] * lb[r];
                sl += sb[r] * lb[r];
            }
            if (js <= 0.0 || jl <= 0.0) return fail(x, it);
            const double rs_ = std::sqrt(js), rl_ = std::sqrt(jl);
            const double gamma = std::sqrt(0.5 * (1.0 + sl / (rs_ * rl_)));
            auto& sc = soc[l];
            sc.eta = std::sqrt(rs_ / rl_);
            sc.wb[0] = (sb[0] / rs_ + lb[0] / rl_) / (2.0 * gamma);
            for (std::size_t r = 1; r < B; ++r)
                sc.wb[r] = (sb[r] / rs_ - lb[r] / rl_) / (2.0 * gamma);
            // v = W lam = eta * M(wb) lam
            detail::soc_apply_m(sc.wb, lb, v.data() + base, B);
            for (std::size_t r = 0; r < B; ++r) v[Eigen::Index(base + r)] *= sc.eta;
        }

        // W^2 as a sparse block-diagonal matrix: wlin^2 on the box rows and
        // eta^2 (2 wb wb' - J) per cone, the square of the scaling applied by
        // apply_w below.
        std::vector<Eigen::Triplet<double>> wtrip;
        wtrip.reserve(2 * F + N * B * B);
        for (std::size_t i = 0; i < 2 * F; ++i)
            wtrip.emplace_back(Eigen::Index(i), Eigen::Index(i),
                               wlin[Eigen::Index(i)] * wlin[Eigen::Index(i)]);
        for (std::size_t l = 0; l < N; ++l) {
            const std::size_t base = 2 * F + l * B;
            const auto& sc = soc[l];
            const double e2 = sc.eta * sc.eta;
            for (std::size_t r0 = 0; r0 < B; ++r0) {
                for (std::size_t c0 = 0; c0 < B; ++c0) {
                    double val = 2.0 * sc.wb[r0] * sc.wb[c0];
                    if (r0 == c0) val -= (r0 == 0) ? 1.0 : -1.0;
                    wtrip.emplace_back(Eigen::Index(base + r0), Eigen::Index(base + c0),
                                       val * e2);
                }
            }
        }
        Eigen::SparseMatrix<double> W2(em, em);
        W2.setFromTriplets(wtrip.begin(), wtrip.end());

        // Quasi-definite augmented KKT matrix [[0, G'], [G, -W^2]].  Solving
        // this form instead of the normal equations keeps the conditioning at
        // O(1/mu) rather than O(1/mu^2), which iterative refinement can still
        // clean up near convergence.
        double wscale = 1.0;
        for (Eigen::Index di = 0; di < em; ++di)
            wscale = std::max(wscale, std::abs(W2.coeff(di, di)));

        // Factor with escalating diagonal regularization (+delta on the x
        // block, -delta on the slack block preserves quasi-definiteness);
        // refinement against the exact matrix removes the shift's bias.
        double delta = 0.0;
        for (;;) {
            std::vector<Eigen::Triplet<double>> kt = kbase;
            kt.reserve(kbase.size() + std::size_t(W2.nonZeros()));
            for (Eigen::Index col = 0; col < W2.outerSize(); ++col)
                for (Eigen::SparseMatrix<double>::InnerIterator wi(W2, col); wi; ++wi)
                    kt.emplace_back(en + wi.row(), en + wi.col(), -wi.value());
            if (delta > 0.0) {
                for (Eigen::Index di = 0; di < en; ++di) kt.emplace_back(di, di, delta);
                for (Eigen::Index di = 0; di < em; ++di)
                    kt.emplace_back(en + di, en + di, -delta);
            }
            Eigen::SparseMatrix<double> K(en + em, en + em);
            K.setFromTriplets(kt.begin(), kt.end());
            if (!analyzed) {
                ldlt.analyzePattern(K);
                analyzed = true;
            }
            ldlt.factorize(K);
            if (ldlt.info() == Eigen::Success) break;
            delta = (delta == 0.0) ? 1e-12 : 100.0 * delta;
            if (delta > 1e-4 * wscale) return fail(x, it);
        }

        // Solve the KKT system with iterative refinement against the exact
        // (unregularized) blocks.  Each block's residual is judged against
        // its own right-hand side so the large complementarity rows cannot
        // mask errors in the dual-feasibility rows; refinement runs until it
        // stops halving the worst block and the best iterate is returned.
        auto solve_kkt = [&](const Eigen::VectorXd& rhs) {
            Eigen::VectorXd sol = ldlt.solve(rhs);
            Eigen::VectorXd best_sol = sol;
            double best_res = std::numeric_limits<double>::infinity();
            for (int ref = 0; ref < 12; ++ref) {
                Eigen::VectorXd resid(en + em);
                resid.head(en) = rhs.head(en) - Gt * sol.tail(em);
                resid.tail(em) = rhs.tail(em) - G * sol.head(en) + W2 * sol.tail(em);
                const double rh =
                    resid.head(en).norm() / std::max(1.0, rhs.head(en).norm());
                const double rt =
                    resid.tail(em).norm() / std::max(1.0, rhs.tail(em).norm());
                const double r = std::max(rh, rt);
                const bool improved = r < 0.5 * best_res;
                if (r < best_res) {
                    best_res = r;
                    best_sol = sol;
                }
                if (r <= 1e-14 || !improved) break;
                sol += ldlt.solve(resid);
            }
            return best_sol;
        };

        auto apply_w = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
            for (std::size_t i = 0; i < 2 * F; ++i)
                out[Eigen::Index(i)] = wlin[Eigen::Index(i)] * in[Eigen::Index(i)];
            for (std::size_t l = 0; l < N; ++l) {
                const std::size_t base = 2 * F + l * B;
                detail::soc_apply_m(soc[l].wb, in.data() + base, out.data() + base, B);
                for (std::size_t r = 0; r < B; ++r) out[Eigen::Index(base + r)] *= soc[l].eta;
            }
        };
        auto apply_winv = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
            for (std::size_t i = 0; i < 2 * F; ++i)
                out[Eigen::Index(i)] = in[Eigen::Index(i)] / wlin[Eigen::Index(i)];
            for (std::size_t l = 0; l < N; ++l) {
                const std::size_t base = 2 * F + l * B;
                tmp.assign(B, 0.0);
                tmp[0] = soc[l].wb[0];
                for (std::size_t r = 1; r < B; ++r) tmp[r] = -soc[l].wb[r];
                detail::soc_apply_m(tmp, in.data() + base, out.data() + base, B);
                for (std::size_t r = 0; r < B; ++r) out[Eigen::Index(base + r)] /= soc[l].eta;
            }
        };
        // Shared Newton solve: given rhs_c, produce (dx, ds, dlam) for
        //   G' dlam = -rx,  G dx + ds = -rs,  L_v (W dlam + W^{-1} ds) = rhs_c.
        // Eliminating ds gives the augmented system
        //   [0 G'; G -W^2] [dx; dlam] = [-rx; -rs - W dv].
        auto newton_from_wdv = [&]() {
            Eigen::VectorXd rhs(en + em);
            rhs.head(en) = -rx;
            rhs.tail(em) = -rs - wdv;
            const Eigen::VectorXd sol = solve_kkt(rhs);
            dx = sol.head(en);
            dlam = sol.tail(em);
            ds = -rs - G * dx;
        };
        auto newton = [&]() {
            for (std::size_t i = 0; i < 2 * F; ++i)
                dv[Eigen::Index(i)] = rhs_c[Eigen::Index(i)] / v[Eigen::Index(i)];
            for (std::size_t l = 0; l < N; ++l) {
                const std::size_t base = 2 * F + l * B;
                detail::arrow_solve(v.data() + base, rhs_c.data() + base, dv.data() + base, B);
            }
            apply_w(dv, wdv);
            newton_from_wdv();
        };
        auto step_bound = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& d) {
            double bound = detail::lin_step_bound(u.data(), d.data(), 2 * F);
            for (std::size_t l = 0; l < N; ++l) {
                const std::size_t base = 2 * F + l * B;
                bound = std::min(bound, detail::soc_step_bound(u.data() + base, d.data() + base, B));
            }
            return bound;
        };

        // Predictor: pure Newton step toward complementarity zero.
        // L_v^{-1}(-v o v) = -v, so the scaled direction is available directly.
        rhs_c = -v;
        apply_w(rhs_c, wdv);
        newton_from_wdv();
        if (!dx.allFinite() || !ds.allFinite() || !dlam.allFinite()) return fail(x, it);
        const double alpha_aff =
            std::min({1.0, step_bound(s, ds), step_bound(lam, dlam)});
        const double gap_aff = (s + alpha_aff * ds).dot(lam + alpha_aff * dlam);
        double sigma = gap_aff / gap;
        sigma = std::clamp(sigma * sigma * sigma, 0.0, 1.0);

        // Corrector: recenter toward sigma*mu and cancel the second-order
        // term (W^{-1} ds_aff) o (W dlam_aff).
        apply_winv(ds, winv_ds);
        apply_w(dlam, w_dlam);
        for (std::size_t i = 0; i < 2 * F; ++i)
            rhs_c[Eigen::Index(i)] = sigma * mu - v[Eigen::Index(i)] * v[Eigen::Index(i)] -
                                     winv_ds[Eigen::Index(i)] * w_dlam[Eigen::Index(i)];
        for (std::size_t l = 0; l < N; ++l) {
            const std::size_t base = 2 * F + l * B;
            detail::jordan_product(v.data() + base, v.data() + base, tmp.data(), B);
            detail::jordan_product(winv_ds.data() + base, w_dlam.data() + base, tmp2.data(), B);
            rhs_c[Eigen::Index(base)] = sigma * mu - tmp[0] - tmp2[0];
            for (std::size_t r = 1; r < B; ++r)
                rhs_c[Eigen::Index(base + r)] = -tmp[r] - tmp2[r];
        }
        newton();
        if (!dx.allFinite() || !ds.allFinite() || !dlam.allFinite()) return fail(x, it);

        double alpha_max = std::min(step_bound(s, ds), step_bound(lam, dlam));
        double alpha = std::min(1.0, 0.99 * alpha_max);
        if (alpha <= 1e-11) {
            // The corrector's second-order term can point out of a cone that
            // sits at its apex.  Fall back to a pure centering direction,
            // which aims at the strictly interior central-path point.
            for (std::size_t i = 0; i < 2 * F; ++i)
                rhs_c[Eigen::Index(i)] = mu - v[Eigen::Index(i)] * v[Eigen::Index(i)];
            for (std::size_t l = 0; l < N; ++l) {
                const std::size_t base = 2 * F + l * B;
                detail::jordan_product(v.data() + base, v.data() + base, tmp.data(), B);
                rhs_c[Eigen::Index(base)] = mu - tmp[0];
                for (std::size_t r = 1; r < B; ++r) rhs_c[Eigen::Index(base + r)] = -tmp[r];
            }
            newton();
            if (!dx.allFinite() || !ds.allFinite() || !dlam.allFinite()) return fail(x, it);
            alpha_max = std::min(step_bound(s, ds), step_bound(lam, dlam));
            alpha = std::min(1.0, 0.99 * alpha_max);
        }
        if (alpha <= 1e-13) {
            stalled = true;
            break;
        }
        x += alpha * dx;
        s += alpha * ds;
        lam += alpha * dlam;
        if (on_iterate) on_iterate(it, extract_z(x));
    }

    if (stalled || res.status != SolveStatus::converged) {
        x = best_x;
        res.gap_abs = best_gap_abs;
        res.gap_rel = best_gap_rel;
    }
    res.z = extract_z(x);
    for (std::size_t l = 0; l < N; ++l) res.q[l] = x[Eigen::Index(F + l)];
    res.iterations = std::min(it, opt.max_iters);
    return res;
}

// Full pipeline entry: build the cone program from the tube, run the
// interior-point method, and report the tube-projected minimizer with its
// true TV objective.  Trace objectives are also computed on the projected
// iterate so they are comparable with the first-order solvers.
inline SolverResult solve_tv_ulog_socp(const TvUlogProblem& prob, const SolverOptions& opt = {}) {
    if (detail::point_tube(prob.tube)) {
        SolverResult r = detail::point_tube_result(prob.tube);
        r.duality_gap = 0.0;  // every variable is fixed, the point is exactly optimal
        return r;
    }
    ConeProgram cp = to_socp(prob.tube);
    SocpOptions sopt;
    if (opt.tol > 0.0) sopt.tol = opt.tol;
    if (opt.max_iters > 0) sopt.max_iters = opt.max_iters;

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    SolverResult r;
    ScaleSpaceCube cur = prob.tube.lower;
    {
        ScaleSpaceCube mid = prob.tube.lower;
        for (std::size_t p = 0; p < mid.v.size(); ++p)
            mid.v[p] = 0.5 * (prob.tube.lower.v[p] + prob.tube.upper.v[p]);
        r.trace.push_back({0, 0.0, tv_objective(mid)});
    }
    auto on_iterate = [&](std::size_t iter, const std::vector<double>& z) {
        cur.v = z;
        clamp_to_tube(cur.v, prob.tube);
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        r.trace.push_back({iter, secs, tv_objective(cur)});
    };
    SocpResult sres = solve_socp_interior_point(cp, sopt, on_iterate);

    r.minimizer = prob.tube.lower;
    r.minimizer.v = std::move(sres.z);
    clamp_to_tube(r.minimizer.v, prob.tube);
    r.objective = tv_objective(r.minimizer);
    r.iterations = sres.iterations;
    r.status = sres.status;
    r.duality_gap = sres.gap_rel;
    return r;
}

}  // namespace tvulog
