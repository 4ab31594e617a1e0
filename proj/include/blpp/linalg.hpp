#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace blpp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double spectral_radius(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> solver(m, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double min_symmetric_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(m), Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

inline Vector symmetric_eigenvalues(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(m), Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Entrywise sup-norm over a sequence of matrices.
inline double sup_norm(std::span<const Matrix> seq) {
    double s = 0.0;
    for (const auto& m : seq) s = std::max(s, max_abs(m));
    return s;
}

inline double sup_distance(std::span<const Matrix> a, std::span<const Matrix> b) {
    double s = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t k = 0; k < n; ++k) s = std::max(s, max_abs(a[k] - b[k]));
    return s;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

} // namespace blpp
