#pragma once

#include "blpp/core.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

namespace blpp {

struct OracleOptions {
    int log2_nodes = 20;         // FFT length N = 2^log2_nodes
    double cutoff_factor = 50.0; // frequency cutoff is at least cutoff_factor * beta
};

// Covariance density of the stationary univariate Hawkes process with kernel
// alpha * exp(-beta t) on [0, support) (support = +inf for the untruncated kernel).
//
// With K^ the Fourier transform of the kernel and x = 1 - |1 - K^|^2, the
// Bartlett spectrum minus its atom is (lambda / 2 pi) * x / (1 - x). Splitting
//     x / (1 - x) = 2 Re K^ - |K^|^2 + x^2 / (1 - x)
// the first two pieces invert in closed form to K(tau) - R(tau), R the kernel
// autocorrelation int K(s) K(s + tau) ds, and the O(omega^-4) remainder is
// integrated by trapezoid quadrature on [0, Omega) evaluated with one FFT.
inline CovarianceGrid hawkes_covariance_oracle(double eta, double alpha, double beta, const LagGrid& grid,
                                               double support = std::numeric_limits<double>::infinity(),
                                               OracleOptions options = {}) {
    require(std::isfinite(eta) && eta > 0.0, ErrorCode::NonPositiveRate, "baseline must be positive");
    require(std::isfinite(beta) && beta > 0.0, ErrorCode::InvalidArgument, "beta must be positive");
    require(std::isfinite(alpha) && alpha >= 0.0, ErrorCode::InvalidArgument, "alpha must be non-negative");
    require(support > 0.0, ErrorCode::InvalidArgument, "support must be positive");
    const bool truncated = std::isfinite(support);
    const double tail = truncated ? std::exp(-beta * support) : 0.0;
    const double branching = alpha / beta * (1.0 - tail);
    if (!(branching < 1.0)) {
        throw Error(ErrorCode::UnstableKernel,
                    "integrated kernel " + std::to_string(branching) + " must be < 1",
                    {{"spectral_radius", branching}});
    }
    const double rate = eta / (1.0 - branching);
    const int p = grid.size();
    const double step = grid.step();
    std::vector<Matrix> density(static_cast<std::size_t>(p), Matrix::Zero(1, 1));
    if (alpha == 0.0) return CovarianceGrid(grid, Vector::Constant(1, rate), std::move(density));

    // Lag lattice tau_n = n * dtau with dtau = step / (2m): midpoints sit at n = (2k + 1) m.
    const double pi = std::numbers::pi;
    const int m = std::max(1, static_cast<int>(std::ceil(options.cutoff_factor * beta * step / (4.0 * pi))));
    const double omega_max = 4.0 * pi * m / step;
    const std::size_t n_nodes = std::size_t{1} << options.log2_nodes;
    const double d_omega = omega_max / static_cast<double>(n_nodes);
    require(static_cast<std::size_t>((2 * p - 1) * m) < n_nodes / 2, ErrorCode::InvalidArgument,
            "oracle FFT too short for the requested lag grid");

    std::vector<std::complex<double>> weights(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        const double w = static_cast<double>(k) * d_omega;
        const std::complex<double> s(beta, w);
        const std::complex<double> khat = alpha * (truncated ? (1.0 - std::exp(-s * support)) : 1.0) / s;
        const double x = 1.0 - std::norm(1.0 - khat);
        const double remainder = x * x / (1.0 - x);
        weights[k] = (k == 0 ? 0.5 : 1.0) * remainder;
    }
    std::vector<std::complex<double>> transform;
    Eigen::FFT<double> fft;
    fft.fwd(transform, weights);

    for (int k = 0; k < p; ++k) {
        const double tau = grid.lag(k);
        const std::size_t n = static_cast<std::size_t>((2 * k + 1) * m);
        const double kernel = (truncated && !(tau < support)) ? 0.0 : alpha * std::exp(-beta * tau);
        double autocorr = 0.0;
        if (!truncated)
            autocorr = alpha * alpha * std::exp(-beta * tau) / (2.0 * beta);
        else if (tau < support)
            autocorr = alpha * alpha * std::exp(-beta * tau) * -std::expm1(-2.0 * beta * (support - tau)) / (2.0 * beta);
        density[static_cast<std::size_t>(k)](0, 0) =
            rate * (kernel - autocorr) + rate / pi * d_omega * transform[n].real();
    }
    return CovarianceGrid(grid, Vector::Constant(1, rate), std::move(density));
}

// Closed form for the untruncated kernel:
//     c(tau) = lambda * alpha (2 beta - alpha) / (2 (beta - alpha)) * exp(-(beta - alpha) tau).
inline double hawkes_covariance_closed_form(double eta, double alpha, double beta, double tau) {
    const double rate = eta / (1.0 - alpha / beta);
    return rate * alpha * (2.0 * beta - alpha) / (2.0 * (beta - alpha)) * std::exp(-(beta - alpha) * tau);
}

} // namespace blpp
