#pragma once

#include "blpp/core.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blpp {

// Discretised stationary Wiener-Hopf problem of order p on the covariance grid.
//
// With M(tau) = C(tau)^T, D = diag(lambda) and M_h = M((h - 1/2) step) for
// h = 1..p, the kernel K_k ~ K((k - 1/2) step) solves, for j = 1..p,
//     M_j = K_j L0 + step * sum_{k != j} K_k Mt_{j-k},
// with L0 = D + step * S, S the symmetrised first density sample standing in
// for C(0+), Mt_h = M_h and Mt_{-h} = M_h^T. Equivalently the block
// Yule-Walker system sum_k A_k G_{j-k} = 0 (A_0 = I, A_k = -step K_k) for the
// bin-count autocovariances G_0 = step L0, G_h = step^2 M_h, G_{-h} = G_h^T.
struct DiscretisedWH {
    CovarianceGrid cov;
    int order = 1;
    bool ridge = false; // add 1e-8 * tr(L0) / d to the diagonal of L0

    DiscretisedWH() = default;
    DiscretisedWH(CovarianceGrid c, int p, bool use_ridge = false)
        : cov(std::move(c)), order(p), ridge(use_ridge) {
        require(order >= 1 && order <= cov.grid().size(), ErrorCode::InvalidArgument,
                "order must lie in [1, grid size]");
    }

    int dim() const { return cov.dim(); }
    double step() const { return cov.grid().step(); }
    LagGrid kernel_grid() const { return LagGrid(step(), order); }

    // M_h for h = 1..order.
    const Matrix& lag_matrix(int h) const { return cache().lags[static_cast<std::size_t>(h - 1)]; }
    Matrix lag_zero() const { return cache().lag_zero; }

    // Scaled autocovariance G_h / step at signed lag h.
    Matrix scaled_autocov(int h) const {
        if (h == 0) return lag_zero();
        if (h > 0) return step() * lag_matrix(h);
        return step() * lag_matrix(-h).transpose();
    }

    // Raw bin autocovariances G_0..G_order.
    std::vector<Matrix> bin_autocovariances() const {
        std::vector<Matrix> g;
        g.reserve(static_cast<std::size_t>(order + 1));
        for (int h = 0; h <= order; ++h) g.push_back(step() * scaled_autocov(h));
        return g;
    }

private:
    struct Cache {
        std::vector<Matrix> lags;
        Matrix lag_zero;
    };
    const Cache& cache() const {
        if (!cache_) {
            Cache c;
            c.lags.reserve(static_cast<std::size_t>(order));
            for (int h = 1; h <= order; ++h) c.lags.push_back(cov[h - 1].transpose());
            c.lag_zero = cov.atom() + step() * symmetrized(cov[0]);
            if (ridge) c.lag_zero.diagonal().array() += 1e-8 * c.lag_zero.trace() / dim();
            cache_ = std::move(c);
        }
        return *cache_;
    }
    mutable std::optional<Cache> cache_;
};

struct WHDiagnostics {
    double residual = std::numeric_limits<double>::quiet_NaN(); // sup-norm of the discrete equation residual
    double rcond = std::numeric_limits<double>::quiet_NaN();    // reciprocal condition estimate (dense path)
    std::vector<double> gamma_norms;                            // entrywise sup-norm of each Gamma_n
    std::vector<Vector> v_eigenvalues;                          // eigenvalues of V_n / step, n = 0..p
    double kernel_min = std::numeric_limits<double>::quiet_NaN();
    double integral_radius = std::numeric_limits<double>::quiet_NaN(); // spectral radius of the Riemann integral of K
};

// Residual sup-norm of the discrete equation for a candidate kernel.
inline double wh_residual(const DiscretisedWH& problem, const KernelGrid& kernel) {
    const int p = problem.order;
    double worst = 0.0;
    for (int j = 1; j <= p; ++j) {
        Matrix r = -problem.lag_matrix(j);
        for (int k = 1; k <= p; ++k) {
            const Matrix& kk = kernel[k - 1];
            r += kk * problem.scaled_autocov(j - k);
        }
        worst = std::max(worst, max_abs(r));
    }
    return worst;
}

inline void fill_kernel_diagnostics(const DiscretisedWH& problem, const KernelGrid& kernel, WHDiagnostics& diag) {
    diag.residual = wh_residual(problem, kernel);
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& v : kernel.values()) lo = std::min(lo, v.minCoeff());
    diag.kernel_min = lo;
    diag.integral_radius = spectral_radius(kernel.integral());
}

// ---------------------------------------------------------------- Whittle

// Multivariate Levinson-Durbin (Whittle) recursion on raw autocovariances
// G_h = E[x_{t+h} x_t^T]. Forward: x_t + sum_k A_k x_{t-k} = e_t; backward:
// x_t + sum_k A*_k x_{t+k} = e*_t.
struct WhittleSolution {
    std::vector<Matrix> A;          // A_{p,1..p}
    std::vector<Matrix> A_star;     // A*_{p,1..p}
    std::vector<Matrix> V;          // V_0..V_p (raw scale)
    std::vector<Matrix> V_star;
    std::vector<Matrix> reflection; // A_{n,n}, n = 1..p
    std::vector<Matrix> reflection_star;
    double step = 1.0;              // 1 for raw input, grid step for grid problems

    int order() const { return static_cast<int>(A.size()); }
    // Error covariance on the scale of L0.
    Matrix scaled_V(int n) const { return V[static_cast<std::size_t>(n)] / step; }
};

namespace detail {

// X * V^{-1} through a Cholesky factor of the symmetrised V.
inline Matrix right_solve_spd(const Matrix& x, const Matrix& v, int order) {
    Eigen::LLT<Matrix> llt(symmetrized(v));
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularErrorMatrix,
                    "error covariance not positive definite at order " + std::to_string(order),
                    {{"order", static_cast<double>(order)}, {"min_eigenvalue", min_symmetric_eigenvalue(v)}});
    }
    return llt.solve(x.transpose()).transpose();
}

} // namespace detail

inline WhittleSolution solve_whittle(std::span<const Matrix> autocov, int order, double step = 1.0) {
    require(order >= 1 && static_cast<int>(autocov.size()) > order, ErrorCode::InvalidArgument,
            "need autocovariances at lags 0..order");
    const Matrix& g0 = autocov[0];
    const auto d = g0.rows();
    require(g0.cols() == d, ErrorCode::InvalidArgument, "autocovariances must be square");
    std::vector<Matrix> back; // G_{-h} = G_h^T
    back.reserve(static_cast<std::size_t>(order + 1));
    for (int h = 0; h <= order; ++h) back.push_back(autocov[static_cast<std::size_t>(h)].transpose());

    WhittleSolution sol;
    sol.step = step;
    sol.V.push_back(g0);
    sol.V_star.push_back(g0);
    // Index 0 holds the implicit identity.
    std::vector<Matrix> a{Matrix::Identity(d, d)}, as{Matrix::Identity(d, d)};
    for (int n = 0; n < order; ++n) {
        Matrix delta = Matrix::Zero(d, d), delta_star = Matrix::Zero(d, d);
        for (int k = 0; k <= n; ++k) {
            delta.noalias() += a[static_cast<std::size_t>(k)] * autocov[static_cast<std::size_t>(n + 1 - k)];
            delta_star.noalias() += as[static_cast<std::size_t>(k)] * back[static_cast<std::size_t>(n + 1 - k)];
        }
        const Matrix kn = -detail::right_solve_spd(delta, sol.V_star.back(), n);
        const Matrix kn_star = -detail::right_solve_spd(delta_star, sol.V.back(), n);
        std::vector<Matrix> next(static_cast<std::size_t>(n + 2)), next_star(static_cast<std::size_t>(n + 2));
        next[0] = a[0];
        next_star[0] = as[0];
        for (int k = 1; k <= n; ++k) {
            next[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(k)] + kn * as[static_cast<std::size_t>(n + 1 - k)];
            next_star[static_cast<std::size_t>(k)] =
                as[static_cast<std::size_t>(k)] + kn_star * a[static_cast<std::size_t>(n + 1 - k)];
        }
        next[static_cast<std::size_t>(n + 1)] = kn;
        next_star[static_cast<std::size_t>(n + 1)] = kn_star;
        sol.V.push_back(sol.V.back() + kn * delta_star);
        sol.V_star.push_back(sol.V_star.back() + kn_star * delta);
        sol.reflection.push_back(kn);
        sol.reflection_star.push_back(kn_star);
        a = std::move(next);
        as = std::move(next_star);
        if (!sol.V.back().allFinite() || !sol.V_star.back().allFinite())
            throw Error(ErrorCode::NumericOverflow, "non-finite error covariance at order " + std::to_string(n + 1),
                        {{"order", static_cast<double>(n + 1)}});
    }
    sol.A.assign(a.begin() + 1, a.end());
    sol.A_star.assign(as.begin() + 1, as.end());
    return sol;
}

inline WhittleSolution solve_whittle(const DiscretisedWH& problem) {
    const auto g = problem.bin_autocovariances();
    return solve_whittle(g, problem.order, problem.step());
}

// K_k = -A_{p,k} / step on the problem's kernel grid.
inline KernelGrid whittle_kernel(const WhittleSolution& sol, const LagGrid& grid) {
    require(grid.size() == sol.order(), ErrorCode::InvalidArgument, "grid size differs from the solution order");
    std::vector<Matrix> values;
    values.reserve(sol.A.size());
    for (const auto& a : sol.A) values.push_back(-a / sol.step);
    return KernelGrid(grid, std::move(values));
}

// ---------------------------------------------------------------- Bellman-Krein

// Forward / backward smoothing functions on the grid: F(n, k) ~ F(n step, k step)
// for 1 <= k <= n <= p, with F(n, n) = Gamma_n.
class BKSolution {
public:
    BKSolution() = default;
    explicit BKSolution(int order, double step) : order_(order), step_(step) {
        const auto cells = static_cast<std::size_t>(order) * static_cast<std::size_t>(order + 1) / 2;
        F_.resize(cells);
        F_star_.resize(cells);
    }

    int order() const { return order_; }
    double step() const { return step_; }

    const Matrix& F(int n, int k) const { return F_[index(n, k)]; }
    const Matrix& F_star(int n, int k) const { return F_star_[index(n, k)]; }
    Matrix& F(int n, int k) { return F_[index(n, k)]; }
    Matrix& F_star(int n, int k) { return F_star_[index(n, k)]; }

    std::vector<Matrix> Gamma;      // Gamma_1..Gamma_p
    std::vector<Matrix> Gamma_star;
    std::vector<Matrix> Y;          // forward error covariance on the L0 scale, orders 0..p
    std::vector<Matrix> Y_star;

    // Final row F(p, .) as a kernel.
    KernelGrid kernel() const {
        std::vector<Matrix> values;
        values.reserve(static_cast<std::size_t>(order_));
        for (int k = 1; k <= order_; ++k) values.push_back(F(order_, k));
        return KernelGrid(LagGrid(step_, order_), std::move(values));
    }

private:
    std::size_t index(int n, int k) const {
        return static_cast<std::size_t>(n - 1) * static_cast<std::size_t>(n) / 2 + static_cast<std::size_t>(k - 1);
    }

    int order_ = 0;
    double step_ = 1.0;
    std::vector<Matrix> F_;
    std::vector<Matrix> F_star_;
};

// First-order Euler march of the forward / backward system
//     F(n+1, k) = F(n, k) - step * Gamma_{n+1} F*(n, n+1-k),   F(n+1, n+1) = Gamma_{n+1},
// with Gamma_{n+1} = X_n (Y*_n)^{-1} from the left-endpoint quadrature of
//     X_n  = M_{n+1} - step sum_k F(n, k) M_{n+1-k},
//     Y*_n = L0 - step^2 sum_k F*(n, k) M_k,
// and symmetrically for Gamma*, X*, Y.
inline BKSolution integrate_bellman_krein(const DiscretisedWH& problem) {
    const int p = problem.order;
    const double step = problem.step();
    const Matrix l0 = problem.lag_zero();
    BKSolution sol(p, step);

    auto invert_right = [&](const Matrix& x, const Matrix& y, int n) -> Matrix {
        // X Y^{-1} = (Y^{-T} X^T)^T
        Eigen::PartialPivLU<Matrix> lut(y.transpose());
        Matrix r = lut.solve(x.transpose()).transpose();
        if (!r.allFinite())
            throw Error(ErrorCode::NumericOverflow, "non-finite Gamma at step " + std::to_string(n),
                        {{"order", static_cast<double>(n)}});
        return r;
    };

    sol.Y.push_back(l0);
    sol.Y_star.push_back(l0);
    for (int n = 0; n < p; ++n) {
        Matrix x = problem.lag_matrix(n + 1);
        Matrix xs = problem.lag_matrix(n + 1).transpose();
        Matrix y = l0, ys = l0;
        for (int k = 1; k <= n; ++k) {
            const Matrix& f = sol.F(n, k);
            const Matrix& fs = sol.F_star(n, k);
            x -= step * f * problem.lag_matrix(n + 1 - k);
            xs -= step * fs * problem.lag_matrix(n + 1 - k).transpose();
            y -= step * step * f * problem.lag_matrix(k).transpose();
            ys -= step * step * fs * problem.lag_matrix(k);
        }
        if (n > 0) {
            sol.Y.push_back(y);
            sol.Y_star.push_back(ys);
        }
        const Matrix gamma = invert_right(x, ys, n + 1);
        const Matrix gamma_star = invert_right(xs, y, n + 1);
        for (int k = 1; k <= n; ++k) {
            sol.F(n + 1, k) = sol.F(n, k) - step * gamma * sol.F_star(n, n + 1 - k);
            sol.F_star(n + 1, k) = sol.F_star(n, k) - step * gamma_star * sol.F(n, n + 1 - k);
        }
        sol.F(n + 1, n + 1) = gamma;
        sol.F_star(n + 1, n + 1) = gamma_star;
        sol.Gamma.push_back(gamma);
        sol.Gamma_star.push_back(gamma_star);
    }
    // Error covariance after the last step.
    Matrix y = l0, ys = l0;
    for (int k = 1; k <= p; ++k) {
        y -= step * step * sol.F(p, k) * problem.lag_matrix(k).transpose();
        ys -= step * step * sol.F_star(p, k) * problem.lag_matrix(k);
    }
    sol.Y.push_back(y);
    sol.Y_star.push_back(ys);
    return sol;
}

// ---------------------------------------------------------------- Gamma

// Partial-correlation sequence Gamma_1..Gamma_p on the kernel scale.
inline std::vector<Matrix> gamma_sequence(const WhittleSolution& sol) {
    std::vector<Matrix> g;
    g.reserve(sol.reflection.size());
    for (const auto& a : sol.reflection) g.push_back(-a / sol.step);
    return g;
}

inline std::vector<Matrix> gamma_sequence(const BKSolution& sol) { return sol.Gamma; }

// ---------------------------------------------------------------- direct

enum class DirectMethod { dense, toeplitz };

// Dense reference: the full (p d) x (p d) block system, solved by LU.
// The Toeplitz path runs the Whittle recursion on the same system.
inline KernelGrid solve_direct(const DiscretisedWH& problem, DirectMethod method = DirectMethod::dense,
                               WHDiagnostics* diagnostics = nullptr) {
    const int p = problem.order;
    const int d = problem.dim();
    const LagGrid grid = problem.kernel_grid();

    if (method == DirectMethod::toeplitz) {
        const auto sol = solve_whittle(problem);
        KernelGrid kernel = whittle_kernel(sol, grid);
        if (diagnostics) {
            for (const auto& g : gamma_sequence(sol)) diagnostics->gamma_norms.push_back(max_abs(g));
            for (int n = 0; n <= sol.order(); ++n) diagnostics->v_eigenvalues.push_back(symmetric_eigenvalues(sol.scaled_V(n)));
            fill_kernel_diagnostics(problem, kernel, *diagnostics);
        }
        return kernel;
    }

    // B^T X^T = R^T with block (j, k) of B^T equal to (G_{j-k} / step)^T.
    const Eigen::Index n = static_cast<Eigen::Index>(p) * d;
    Matrix bt(n, n);
    for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k)
            bt.block(j * d, k * d, d, d) = problem.scaled_autocov(j - k).transpose();
    Matrix rt(n, d);
    for (int j = 0; j < p; ++j) rt.block(j * d, 0, d, d) = problem.lag_matrix(j + 1).transpose();

    Eigen::PartialPivLU<Matrix> lu(bt);
    const double rcond = lu.rcond();
    if (!(rcond >= 1e-14)) {
        throw Error(ErrorCode::SingularSystem,
                    "discretised system is numerically singular (rcond " + std::to_string(rcond) + ")",
                    {{"rcond", rcond}});
    }
    const Matrix xt = lu.solve(rt);
    std::vector<Matrix> values(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k) values[static_cast<std::size_t>(k)] = xt.block(k * d, 0, d, d).transpose();
    KernelGrid kernel(grid, std::move(values));
    if (diagnostics) {
        diagnostics->rcond = rcond;
        fill_kernel_diagnostics(problem, kernel, *diagnostics);
    }
    return kernel;
}

inline WHDiagnostics diagnose(const DiscretisedWH& problem, const WhittleSolution& sol) {
    WHDiagnostics diag;
    for (const auto& g : gamma_sequence(sol)) diag.gamma_norms.push_back(max_abs(g));
    for (int n = 0; n <= sol.order(); ++n) diag.v_eigenvalues.push_back(symmetric_eigenvalues(sol.scaled_V(n)));
    fill_kernel_diagnostics(problem, whittle_kernel(sol, problem.kernel_grid()), diag);
    return diag;
}

inline WHDiagnostics diagnose(const DiscretisedWH& problem, const BKSolution& sol) {
    WHDiagnostics diag;
    for (const auto& g : sol.Gamma) diag.gamma_norms.push_back(max_abs(g));
    for (const auto& y : sol.Y) diag.v_eigenvalues.push_back(symmetric_eigenvalues(y));
    fill_kernel_diagnostics(problem, sol.kernel(), diag);
    return diag;
}

} // namespace blpp
