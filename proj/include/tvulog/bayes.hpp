#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tvulog/convolve.hpp"
#include "tvulog/io.hpp"
#include "tvulog/rng.hpp"

namespace tvulog {

// Matrix form of the reflection-padded truncated Gaussian convolution.
// Symmetric by construction of the padding; rows sum to one.
inline Eigen::SparseMatrix<double> gaussian_convolution_matrix(const SpatialGrid& g,
                                                               double kernel_std) {
    if (!(kernel_std > 0.0))
        throw std::invalid_argument("gaussian_convolution_matrix: kernel_std must be positive");
    const std::size_t n = g.size();
    std::vector<Eigen::Triplet<double>> trip;
    if (g.dim == 1) {
        const auto k = gaussian_kernel(kernel_std * kernel_std, g.h1);
        const long long R = (long long)(k.size() / 2);
        trip.reserve(n * k.size());
        for (long long i = 0; i < (long long)g.n1; ++i)
            for (long long r = -R; r <= R; ++r)
                trip.emplace_back(int(i), int(reflect_index(i + r, (long long)g.n1)),
                                  k[std::size_t(r + R)]);
    } else {
        const auto k1 = gaussian_kernel(kernel_std * kernel_std, g.h1);
        const auto k2 = gaussian_kernel(kernel_std * kernel_std, g.h2);
        const long long R1 = (long long)(k1.size() / 2);
        const long long R2 = (long long)(k2.size() / 2);
        trip.reserve(n * k1.size() * k2.size());
        for (long long i = 0; i < (long long)g.n1; ++i)
            for (long long j = 0; j < (long long)g.n2; ++j) {
                const int row = int(i * (long long)g.n2 + j);
                for (long long r1 = -R1; r1 <= R1; ++r1) {
                    const std::size_t fi = reflect_index(i + r1, (long long)g.n1);
                    const double w1 = k1[std::size_t(r1 + R1)];
                    for (long long r2 = -R2; r2 <= R2; ++r2) {
                        const std::size_t fj = reflect_index(j + r2, (long long)g.n2);
                        trip.emplace_back(row, int(fi * g.n2 + fj),
                                          w1 * k2[std::size_t(r2 + R2)]);
                    }
                }
            }
    }
    const int ni = int(n);
    Eigen::SparseMatrix<double> G(ni, ni);
    G.setFromTriplets(trip.begin(), trip.end());
    return G;
}

// Gauss-Markov random field precision tau * (eps I + D^T D) with D the
// forward-difference matrix (replicated boundary, so the last difference
// along each axis is zero).
inline Eigen::SparseMatrix<double> gmrf_precision(const SpatialGrid& g, double tau, double eps) {
    if (!(tau > 0.0) || eps < 0.0) throw std::invalid_argument("gmrf_precision: need tau > 0, eps >= 0");
    const std::size_t n = g.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n);
    for (std::size_t p = 0; p < n; ++p) trip.emplace_back(int(p), int(p), tau * eps);
    auto add_pair = [&](std::size_t a, std::size_t b) {
        trip.emplace_back(int(a), int(a), tau);
        trip.emplace_back(int(b), int(b), tau);
        trip.emplace_back(int(a), int(b), -tau);
        trip.emplace_back(int(b), int(a), -tau);
    };
    for (std::size_t i = 0; i < g.n1; ++i)
        for (std::size_t j = 0; j < g.n2; ++j) {
            const std::size_t p = i * g.n2 + j;
            if (i + 1 < g.n1) add_pair(p, p + g.n2);
            if (g.dim == 2 && j + 1 < g.n2) add_pair(p, p + 1);
        }
    const int ni = int(n);
    Eigen::SparseMatrix<double> P(ni, ni);
    P.setFromTriplets(trip.begin(), trip.end());
    return P;
}

struct LinearGaussianModel {
    SpatialGrid grid;
    Eigen::SparseMatrix<double> forward;          // G
    double noise_std = 1.0;                       // gamma
    Eigen::SparseMatrix<double> prior_precision;  // Sigma^{-1}
};

inline LinearGaussianModel make_convolution_model(const SpatialGrid& g, double kernel_std,
                                                  double noise_std, double tau, double eps) {
    if (!(noise_std > 0.0)) throw std::invalid_argument("model: noise_std must be positive");
    return LinearGaussianModel{g, gaussian_convolution_matrix(g, kernel_std), noise_std,
                               gmrf_precision(g, tau, eps)};
}

inline double unnormalized_log_posterior(const LinearGaussianModel& m, const Eigen::VectorXd& y,
                                         const Eigen::VectorXd& f) {
    const Eigen::VectorXd r = m.forward * f - y;
    const double data_term = r.squaredNorm() / (2.0 * m.noise_std * m.noise_std);
    const double prior_term = 0.5 * f.dot(m.prior_precision * f);
    return -data_term - prior_term;
}

inline Eigen::VectorXd simulate_data(const LinearGaussianModel& m, const Eigen::VectorXd& f_true,
                                     std::uint64_t seed) {
    CounterRng rng(seed);
    Eigen::VectorXd y = m.forward * f_true;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += m.noise_std * rng.next_normal();
    return y;
}

// The posterior of a linear-Gaussian model is Gaussian with precision
// H = G^T G / gamma^2 + Sigma^{-1}; exact draws come from one sparse
// Cholesky factorization (f = mean + P^T U^{-1} xi with P H P^T = L U).
class PosteriorGaussian {
  public:
    PosteriorGaussian(const LinearGaussianModel& m, const Eigen::VectorXd& y) {
        const double ig2 = 1.0 / (m.noise_std * m.noise_std);
        Eigen::SparseMatrix<double> H =
            Eigen::SparseMatrix<double>(m.forward.transpose() * m.forward) * ig2;
        H += m.prior_precision;
        llt_.compute(H);
        if (llt_.info() != Eigen::Success)
            throw std::runtime_error("posterior: precision factorization failed");
        precision_ = std::move(H);
        mean_ = llt_.solve(m.forward.transpose() * y * ig2);
    }

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::SparseMatrix<double>& precision() const { return precision_; }

    Eigen::VectorXd sample(CounterRng& rng) const {
        Eigen::VectorXd xi(mean_.size());
        for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = rng.next_normal();
        Eigen::VectorXd w = llt_.matrixU().solve(xi);
        return mean_ + llt_.permutationPinv() * w;
    }

  private:
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
    Eigen::SparseMatrix<double> precision_;
    Eigen::VectorXd mean_;
};

inline Eigen::VectorXd map_estimate(const LinearGaussianModel& m, const Eigen::VectorXd& y) {
    return PosteriorGaussian(m, y).mean();
}

// Draw S exact posterior samples and attach their unnormalized log
// densities; consumption is strictly sequential in the counter stream, so a
// fixed seed reproduces the archive bitwise.
inline SampleSet sample_posterior(const LinearGaussianModel& m, const Eigen::VectorXd& y,
                                  std::size_t S, std::uint64_t seed) {
    if (S == 0) throw std::invalid_argument("sample_posterior: need S >= 1");
    PosteriorGaussian post(m, y);
    CounterRng rng(seed);
    SampleSet set;
    set.grid = m.grid;
    set.seed = seed;
    set.samples.reserve(S);
    set.log_density.reserve(S);
    for (std::size_t s = 0; s < S; ++s) {
        Eigen::VectorXd f = post.sample(rng);
        set.log_density.push_back(unnormalized_log_posterior(m, y, f));
        set.samples.emplace_back(f.data(), f.data() + f.size());
    }
    return set;
}

inline std::vector<double> posterior_mean_of_samples(const SampleSet& set) {
    if (set.samples.empty()) throw std::invalid_argument("posterior_mean_of_samples: empty set");
    std::vector<double> mean(set.samples.front().size(), 0.0);
    for (const auto& f : set.samples)
        for (std::size_t p = 0; p < mean.size(); ++p) mean[p] += f[p];
    for (double& v : mean) v /= double(set.samples.size());
    return mean;
}

inline std::vector<double> posterior_std_of_samples(const SampleSet& set) {
    const auto mean = posterior_mean_of_samples(set);
    std::vector<double> var(mean.size(), 0.0);
    for (const auto& f : set.samples)
        for (std::size_t p = 0; p < mean.size(); ++p) {
            const double d = f[p] - mean[p];
            var[p] += d * d;
        }
    const double denom = double(set.samples.size() > 1 ? set.samples.size() - 1 : 1);
    for (double& v : var) v = std::sqrt(v / denom);
    return var;
}

}  // namespace tvulog
