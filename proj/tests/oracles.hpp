#pragma once

// Independent reference computations used only by the tests. None of these
// share code with the library's solvers.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;

// Forward Yule-Walker coefficients A_1..A_p from the full block-Toeplitz
// system sum_{k=0..p} A_k G_{j-k} = 0 (j = 1..p, A_0 = I), solved densely.
// G holds lags 0..p with G_{-h} = G_h^T.
inline std::vector<Matrix> yule_walker(const std::vector<Matrix>& G, int p) {
    const auto d = G[0].rows();
    auto g = [&](int h) -> Matrix { return h >= 0 ? G[h] : Matrix(G[-h].transpose()); };
    // Unknown X = [A_1 ... A_p] (d x pd):  X T = -[G_1 ... G_p], T(k, j) = G_{j-k}.
    Matrix T(p * d, p * d), rhs(d, p * d);
    for (int k = 1; k <= p; ++k)
        for (int j = 1; j <= p; ++j) T.block((k - 1) * d, (j - 1) * d, d, d) = g(j - k);
    for (int j = 1; j <= p; ++j) rhs.block(0, (j - 1) * d, d, d) = -g(j);
    const Matrix X = T.transpose().fullPivLu().solve(rhs.transpose()).transpose();
    std::vector<Matrix> A;
    for (int k = 1; k <= p; ++k) A.push_back(X.block(0, (k - 1) * d, d, d));
    return A;
}

// Forward one-step error covariance V_p = sum_k A_k G_{-k}.
inline Matrix yule_walker_error(const std::vector<Matrix>& G, const std::vector<Matrix>& A) {
    Matrix v = G[0];
    for (std::size_t k = 1; k <= A.size(); ++k) v += A[k - 1] * G[k].transpose();
    return v;
}

// Classical scalar innovations algorithm, written out for an MA(1) autocovariance
// gamma_0 = 1 + theta^2, gamma_1 = theta: theta_{n,1} = theta / v_{n-1},
// v_n = gamma_0 - theta_{n,1}^2 v_{n-1}. Returns theta_{n,1} for n = 1..rows.
inline std::vector<double> ma1_theta(double theta, int rows) {
    std::vector<double> out;
    double v = 1.0 + theta * theta;
    for (int n = 1; n <= rows; ++n) {
        const double t = theta / v;
        out.push_back(t);
        v = 1.0 + theta * theta - t * t * v;
    }
    return out;
}

// Covariance density of a univariate Neyman-Scott process with latent rate nu
// and shot kernel f on [0, support): c(tau) = nu int f(u) f(u + tau) du,
// evaluated by a composite midpoint rule with `nodes` cells.
inline double neyman_scott_covariance(double nu, const std::function<double(double)>& f, double support, double tau,
                                      int nodes = 20000) {
    const double h = support / nodes;
    double s = 0.0;
    for (int k = 0; k < nodes; ++k) {
        const double u = (k + 0.5) * h;
        s += f(u) * f(u + tau);
    }
    return nu * s * h;
}

// Stationary covariance density of the untruncated exponential Hawkes process.
inline double hawkes_exponential_covariance(double eta, double alpha, double beta, double tau) {
    const double rate = eta / (1.0 - alpha / beta);
    return rate * alpha * (2.0 * beta - alpha) / (2.0 * (beta - alpha)) * std::exp(-(beta - alpha) * tau);
}

// Power-series inversion: given AR weights a_1..a_n (x_t = sum a_k x_{t-k} + e_t),
// returns the MA weights psi_1..psi_n of (1 - sum a_k z^k)^{-1} = 1 + sum psi_k z^k.
inline std::vector<double> ar_to_ma(const std::vector<double>& a, int n) {
    std::vector<double> psi(static_cast<std::size_t>(n + 1), 0.0);
    psi[0] = 1.0;
    for (int k = 1; k <= n; ++k) {
        double s = 0.0;
        for (int j = 1; j <= k && j <= static_cast<int>(a.size()); ++j) s += a[j - 1] * psi[k - j];
        psi[k] = s;
    }
    return {psi.begin() + 1, psi.end()};
}

} // namespace oracle
