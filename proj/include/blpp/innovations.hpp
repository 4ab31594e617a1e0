#pragma once

#include "blpp/core.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blpp {

// Innovations representation x^_{n+1} = sum_{h=1..n} Theta(n, h) (x_{n+1-h} - x^_{n+1-h})
// with one-step error covariances V(0..N). For grid input, Theta and V are on
// the continuous scale: Theta = Theta_bin / step, V = V_bin / step.
class InnovationsSolution {
public:
    InnovationsSolution() = default;
    InnovationsSolution(int rows, double step) : rows_(rows), step_(step) {
        theta_.resize(static_cast<std::size_t>(rows) * static_cast<std::size_t>(rows + 1) / 2);
        V.reserve(static_cast<std::size_t>(rows + 1));
    }

    int rows() const { return rows_; }
    double step() const { return step_; }

    // 1 <= h <= n <= rows.
    const Matrix& theta(int n, int h) const { return theta_[index(n, h)]; }
    Matrix& theta(int n, int h) { return theta_[index(n, h)]; }

    std::vector<Matrix> V; // V(0)..V(rows)

    // Row n as a kernel on lags (h - 1/2) step, h = 1..n.
    KernelGrid row_kernel(int n) const {
        require(n >= 1 && n <= rows_, ErrorCode::InvalidArgument, "row index out of range");
        std::vector<Matrix> values;
        values.reserve(static_cast<std::size_t>(n));
        for (int h = 1; h <= n; ++h) values.push_back(theta(n, h));
        return KernelGrid(LagGrid(step_, n), std::move(values));
    }

private:
    std::size_t index(int n, int h) const {
        return static_cast<std::size_t>(n - 1) * static_cast<std::size_t>(n) / 2 + static_cast<std::size_t>(h - 1);
    }

    int rows_ = 0;
    double step_ = 1.0;
    std::vector<Matrix> theta_;
};

namespace detail {

// Shared recursion. lag(h) for h >= 1, lag0 at h = 0; w weights the Theta
// quadrature and wv the V quadrature.
template <class Lag>
InnovationsSolution innovations_recursion(const Matrix& lag0, Lag lag, int rows, double step, double w, double wv) {
    InnovationsSolution sol(rows, step);
    std::vector<Eigen::LLT<Matrix>> factors;
    factors.reserve(static_cast<std::size_t>(rows + 1));
    auto push_v = [&](Matrix v, int index) {
        Eigen::LLT<Matrix> llt(symmetrized(v));
        if (llt.info() != Eigen::Success) {
            throw Error(ErrorCode::SingularV, "V(" + std::to_string(index) + ") is not positive definite",
                        {{"index", static_cast<double>(index)}, {"min_eigenvalue", min_symmetric_eigenvalue(v)}});
        }
        sol.V.push_back(std::move(v));
        factors.push_back(std::move(llt));
    };
    push_v(lag0, 0);
    for (int n = 1; n <= rows; ++n) {
        for (int k = 0; k < n; ++k) {
            Matrix acc = lag(n - k);
            for (int j = 0; j < k; ++j)
                acc -= w * sol.theta(n, n - j) * sol.V[static_cast<std::size_t>(j)] * sol.theta(k, k - j).transpose();
            Matrix t = factors[static_cast<std::size_t>(k)].solve(acc.transpose()).transpose();
            if (!t.allFinite())
                throw Error(ErrorCode::NumericOverflow, "non-finite Theta in row " + std::to_string(n),
                            {{"row", static_cast<double>(n)}});
            sol.theta(n, n - k) = std::move(t);
        }
        Matrix v = lag0;
        for (int j = 0; j < n; ++j) {
            const Matrix& t = sol.theta(n, n - j);
            v -= wv * t * sol.V[static_cast<std::size_t>(j)] * t.transpose();
        }
        push_v(symmetrized(v), n);
    }
    return sol;
}

} // namespace detail

// Raw autocovariances G_h = E[x_{t+h} x_t^T], h = 0..rows.
inline InnovationsSolution solve_innovations(std::span<const Matrix> autocov, int rows) {
    require(rows >= 1 && static_cast<int>(autocov.size()) > rows, ErrorCode::InvalidArgument,
            "need autocovariances at lags 0..rows");
    return detail::innovations_recursion(
        autocov[0], [&](int h) { return autocov[static_cast<std::size_t>(h)]; }, rows, 1.0, 1.0, 1.0);
}

// Grid form: lag zero L0 = D + step * S (S the symmetrised first density sample),
// lag h the density M_h = C((h - 1/2) step)^T.
inline InnovationsSolution solve_innovations(const CovarianceGrid& cov, int rows) {
    require(rows >= 1 && rows <= cov.grid().size(), ErrorCode::InvalidArgument,
            "innovation rows must lie in [1, grid size]");
    const double step = cov.grid().step();
    const Matrix lag0 = cov.atom() + step * symmetrized(cov[0]);
    return detail::innovations_recursion(
        lag0, [&](int h) -> Matrix { return cov[h - 1].transpose(); }, rows, step, step, step * step);
}

struct ShotKernelRecovery {
    KernelGrid kernel;      // final row Theta(n, .)
    bool support_flag = false;
    double leakage_ratio = 0.0; // max |Theta| beyond the declared support over the peak |Theta|
    double peak = 0.0;
};

// Final innovations row as the shot-kernel estimate. Entries beyond the
// declared supports are flagged when they exceed 1% of the peak.
inline ShotKernelRecovery recover_shot_kernel(const CovarianceGrid& cov, int rows,
                                              std::optional<Matrix> declared_support = std::nullopt) {
    const auto sol = solve_innovations(cov, rows);
    ShotKernelRecovery out;
    out.kernel = sol.row_kernel(rows);
    const int d = cov.dim();
    out.peak = sup_norm(out.kernel.values());
    if (declared_support) {
        require(declared_support->rows() == d && declared_support->cols() == d, ErrorCode::InvalidArgument,
                "declared support must be d x d");
        double beyond = 0.0;
        const LagGrid& grid = out.kernel.grid();
        for (int k = 0; k < grid.size(); ++k)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    if (grid.lag(k) > (*declared_support)(i, j)) beyond = std::max(beyond, std::abs(out.kernel[k](i, j)));
        out.leakage_ratio = out.peak > 0.0 ? beyond / out.peak : 0.0;
        out.support_flag = out.leakage_ratio > 0.01;
    }
    return out;
}

} // namespace blpp
