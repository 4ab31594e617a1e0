#pragma once

#include "blpp/core.hpp"

#include <cmath>
#include <concepts>
#include <limits>
#include <variant>
#include <vector>

namespace blpp {

// Lag beyond which alpha * exp(-beta t) has fallen below 1e-15 * alpha.
inline double exponential_cutoff(double beta) { return std::log(1e15) / beta; }

// alpha * exp(-beta t) on [0, support).
struct ExponentialTerm {
    double alpha = 0.0;
    double beta = 1.0;
    double support = std::numeric_limits<double>::quiet_NaN(); // NaN: use exponential_cutoff(beta)

    double cutoff() const { return std::isnan(support) ? exponential_cutoff(beta) : support; }
    double value(double t) const { return (t >= 0.0 && t < cutoff()) ? alpha * std::exp(-beta * t) : 0.0; }
    double tail_sup(double t) const {
        if (!(t < cutoff())) return 0.0;
        return std::abs(alpha) * std::exp(-beta * std::max(t, 0.0));
    }
    double integral() const { return alpha / beta * -std::expm1(-beta * cutoff()); }

    bool operator==(const ExponentialTerm& o) const {
        return alpha == o.alpha && beta == o.beta && cutoff() == o.cutoff();
    }
};

// height * 1_[0, support).
struct BoxTerm {
    double height = 0.0;
    double support = 1.0;

    double cutoff() const { return support; }
    double value(double t) const { return (t >= 0.0 && t < support) ? height : 0.0; }
    double tail_sup(double t) const { return t < support ? std::abs(height) : 0.0; }
    double integral() const { return height * support; }

    bool operator==(const BoxTerm&) const = default;
};

using KernelTerm = std::variant<ExponentialTerm, BoxTerm>;

// Closed-form scalar kernel: a sum of terms (empty sum is the zero kernel).
class ScalarKernel {
public:
    ScalarKernel() = default;
    explicit ScalarKernel(std::vector<KernelTerm> terms) : terms_(std::move(terms)) { validate(); }

    static ScalarKernel exponential(double alpha, double beta,
                                    double support = std::numeric_limits<double>::quiet_NaN()) {
        return ScalarKernel({ExponentialTerm{alpha, beta, support}});
    }
    static ScalarKernel box(double height, double support) { return ScalarKernel({BoxTerm{height, support}}); }

    std::span<const KernelTerm> terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    double value(double t) const {
        double v = 0.0;
        for (const auto& term : terms_) v += std::visit([t](const auto& x) { return x.value(t); }, term);
        return v;
    }
    double tail_sup(double t) const {
        double v = 0.0;
        for (const auto& term : terms_) v += std::visit([t](const auto& x) { return x.tail_sup(t); }, term);
        return v;
    }
    double integral() const {
        double v = 0.0;
        for (const auto& term : terms_) v += std::visit([](const auto& x) { return x.integral(); }, term);
        return v;
    }
    double support() const {
        double h = 0.0;
        for (const auto& term : terms_) h = std::max(h, std::visit([](const auto& x) { return x.cutoff(); }, term));
        return h;
    }

    friend ScalarKernel operator+(const ScalarKernel& a, const ScalarKernel& b) {
        std::vector<KernelTerm> terms(a.terms_);
        terms.insert(terms.end(), b.terms_.begin(), b.terms_.end());
        return ScalarKernel(std::move(terms));
    }

    bool operator==(const ScalarKernel&) const = default;

private:
    void validate() const {
        for (const auto& term : terms_) {
            if (const auto* e = std::get_if<ExponentialTerm>(&term)) {
                require(std::isfinite(e->alpha) && std::isfinite(e->beta) && e->beta > 0.0,
                        ErrorCode::InvalidArgument, "exponential term needs finite alpha and beta > 0");
                require(std::isnan(e->support) || e->support > 0.0, ErrorCode::InvalidArgument,
                        "exponential support must be positive");
            } else {
                const auto& b = std::get<BoxTerm>(term);
                require(std::isfinite(b.height) && std::isfinite(b.support) && b.support > 0.0,
                        ErrorCode::InvalidArgument, "box term needs finite height and positive support");
            }
        }
    }

    std::vector<KernelTerm> terms_;
};

// d x d closed-form matrix kernel, entry (i, j) = effect of source j on target i.
class MatrixKernel {
public:
    MatrixKernel() = default;
    explicit MatrixKernel(int dim) : dim_(dim), entries_(static_cast<std::size_t>(dim * dim)) {
        require(dim >= 1, ErrorCode::InvalidArgument, "dimension must be positive");
    }
    MatrixKernel(int dim, std::vector<ScalarKernel> entries) : dim_(dim), entries_(std::move(entries)) {
        require(dim >= 1 && entries_.size() == static_cast<std::size_t>(dim * dim), ErrorCode::InvalidArgument,
                "matrix kernel needs d*d entries");
    }

    static MatrixKernel scalar(ScalarKernel k) { return MatrixKernel(1, {std::move(k)}); }

    int dim() const { return dim_; }
    const ScalarKernel& entry(int i, int j) const { return entries_[static_cast<std::size_t>(i * dim_ + j)]; }
    ScalarKernel& entry(int i, int j) { return entries_[static_cast<std::size_t>(i * dim_ + j)]; }

    double value(int i, int j, double t) const { return entry(i, j).value(t); }
    double tail_sup(int i, int j, double t) const { return entry(i, j).tail_sup(t); }
    double support(int i, int j) const { return entry(i, j).support(); }

    double max_support() const {
        double h = 0.0;
        for (const auto& e : entries_) h = std::max(h, e.support());
        return h;
    }

    Matrix supports() const {
        Matrix h(dim_, dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) h(i, j) = support(i, j);
        return h;
    }

    Matrix integral() const {
        Matrix m(dim_, dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) m(i, j) = entry(i, j).integral();
        return m;
    }

    friend MatrixKernel operator+(const MatrixKernel& a, const MatrixKernel& b) {
        require(a.dim_ == b.dim_, ErrorCode::InvalidArgument, "kernel dimensions differ");
        MatrixKernel out(a.dim_);
        for (std::size_t k = 0; k < a.entries_.size(); ++k) out.entries_[k] = a.entries_[k] + b.entries_[k];
        return out;
    }

    bool operator==(const MatrixKernel&) const = default;

private:
    int dim_ = 1;
    std::vector<ScalarKernel> entries_{ScalarKernel{}};
};

// Anything the simulators and predictors can evaluate pointwise.
template <class K>
concept MatrixKernelLike = requires(const K& k, int i, int j, double t) {
    { k.dim() } -> std::convertible_to<int>;
    { k.value(i, j, t) } -> std::convertible_to<double>;
    { k.tail_sup(i, j, t) } -> std::convertible_to<double>;
    { k.support(i, j) } -> std::convertible_to<double>;
    { k.max_support() } -> std::convertible_to<double>;
    { k.integral() } -> std::convertible_to<Matrix>;
};

static_assert(MatrixKernelLike<MatrixKernel>);
static_assert(MatrixKernelLike<KernelGrid>);

// values[k] = kernel((k + 1/2) * step); supports clipped to the grid span.
inline KernelGrid sample_kernel(const MatrixKernel& kernel, const LagGrid& grid) {
    const int d = kernel.dim();
    std::vector<Matrix> values(static_cast<std::size_t>(grid.size()), Matrix::Zero(d, d));
    for (int k = 0; k < grid.size(); ++k) {
        const double lag = grid.lag(k);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) values[static_cast<std::size_t>(k)](i, j) = kernel.value(i, j, lag);
    }
    return KernelGrid(grid, std::move(values), kernel.supports().cwiseMin(grid.span()));
}

} // namespace blpp
