#pragma once

#include "blpp/error.hpp"
#include "blpp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace blpp {

// Event times with dense integer marks 0..dim-1 on the half-open window
// [origin, origin + horizon). Times are strictly increasing.
class EventStream {
public:
    EventStream() = default;

    EventStream(std::vector<double> times, std::vector<int> marks, double horizon, int dim,
                double origin = 0.0)
        : times_(std::move(times)), marks_(std::move(marks)), horizon_(horizon), dim_(dim),
          origin_(origin) {
        validate();
    }

    std::span<const double> times() const { return times_; }
    std::span<const int> marks() const { return marks_; }
    double horizon() const { return horizon_; }
    double origin() const { return origin_; }
    double end() const { return origin_ + horizon_; }
    int dim() const { return dim_; }
    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }

    std::vector<std::int64_t> counts_by_mark() const {
        std::vector<std::int64_t> counts(static_cast<std::size_t>(dim_), 0);
        for (int m : marks_) ++counts[static_cast<std::size_t>(m)];
        return counts;
    }

    bool operator==(const EventStream&) const = default;

private:
    void validate() const {
        require(dim_ >= 1, ErrorCode::InvalidArgument, "dimension must be positive");
        require(std::isfinite(horizon_) && horizon_ > 0.0, ErrorCode::InvalidArgument,
                "horizon must be positive and finite");
        require(std::isfinite(origin_), ErrorCode::InvalidArgument, "origin must be finite");
        require(times_.size() == marks_.size(), ErrorCode::InvalidArgument,
                "times and marks differ in length");
        const double stop = end();
        for (std::size_t k = 0; k < times_.size(); ++k) {
            const double t = times_[k];
            if (!(t >= origin_ && t < stop)) {
                throw Error(ErrorCode::TimeOutOfWindow,
                            "event " + std::to_string(k) + " at t=" + std::to_string(t) +
                                " lies outside the observation window",
                            {{"index", static_cast<double>(k)}, {"time", t}});
            }
            if (k > 0 && !(t > times_[k - 1])) {
                throw Error(ErrorCode::NonIncreasingTimes,
                            "event " + std::to_string(k) + " does not follow its predecessor",
                            {{"index", static_cast<double>(k)}, {"time", t}});
            }
            if (marks_[k] < 0 || marks_[k] >= dim_) {
                throw Error(ErrorCode::MarkOutOfRange,
                            "mark " + std::to_string(marks_[k]) + " of event " + std::to_string(k) +
                                " outside [0, " + std::to_string(dim_) + ")",
                            {{"index", static_cast<double>(k)}, {"mark", static_cast<double>(marks_[k])}});
            }
        }
    }

    std::vector<double> times_;
    std::vector<int> marks_;
    double horizon_ = 1.0;
    int dim_ = 1;
    double origin_ = 0.0;
};

inline EventStream validate_stream(std::vector<double> times, std::vector<int> marks, double horizon,
                                   int dim, double origin = 0.0) {
    return EventStream(std::move(times), std::move(marks), horizon, dim, origin);
}

inline EventStream validate_stream(const EventStream& stream) {
    return EventStream({stream.times().begin(), stream.times().end()},
                       {stream.marks().begin(), stream.marks().end()}, stream.horizon(), stream.dim(),
                       stream.origin());
}

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Counts per bin [b*step, (b+1)*step) (relative to the stream origin) and mark.
inline CountMatrix bin_counts(const EventStream& stream, double step) {
    require(std::isfinite(step) && step > 0.0, ErrorCode::InvalidArgument, "bin width must be positive");
    const auto bins = static_cast<Eigen::Index>(std::ceil(stream.horizon() / step));
    CountMatrix counts = CountMatrix::Zero(std::max<Eigen::Index>(bins, 1), stream.dim());
    const auto times = stream.times();
    const auto marks = stream.marks();
    for (std::size_t k = 0; k < times.size(); ++k) {
        auto b = static_cast<Eigen::Index>(std::floor((times[k] - stream.origin()) / step));
        b = std::clamp<Eigen::Index>(b, 0, counts.rows() - 1);
        ++counts(b, marks[k]);
    }
    return counts;
}

// Uniform lag grid sampled at midpoints (k + 1/2) * step, k = 0..size-1.
class LagGrid {
public:
    LagGrid() = default;
    LagGrid(double step, int size) : step_(step), size_(size) {
        require(std::isfinite(step) && step > 0.0, ErrorCode::InvalidArgument, "grid step must be positive");
        require(size >= 1, ErrorCode::InvalidArgument, "grid needs at least one point");
    }

    double step() const { return step_; }
    int size() const { return size_; }
    double lag(int k) const { return (k + 0.5) * step_; }
    double span() const { return size_ * step_; }

    // Index of the cell [k*step, (k+1)*step) holding `lag`, or -1 outside the grid.
    int cell(double lag) const {
        if (!(lag >= 0.0)) return -1;
        const auto k = static_cast<long long>(std::floor(lag / step_));
        return k < size_ ? static_cast<int>(k) : -1;
    }

    bool operator==(const LagGrid&) const = default;

private:
    double step_ = 1.0;
    int size_ = 1;
};

// d x d matrix function sampled on a LagGrid; entry (i, j) is the effect of
// mark j (source) on mark i (target). Entry (i, j) vanishes beyond supports(i, j).
class KernelGrid {
public:
    KernelGrid() = default;

    KernelGrid(LagGrid grid, std::vector<Matrix> values, Matrix supports)
        : grid_(grid), values_(std::move(values)), supports_(std::move(supports)) {
        require(static_cast<int>(values_.size()) == grid_.size(), ErrorCode::InvalidArgument,
                "kernel grid needs one matrix per lag");
        dim_ = static_cast<int>(supports_.rows());
        require(dim_ >= 1 && supports_.cols() == dim_, ErrorCode::InvalidArgument,
                "support matrix must be square");
        for (const auto& v : values_) {
            require(v.rows() == dim_ && v.cols() == dim_, ErrorCode::InvalidArgument,
                    "kernel values must be d x d");
            require(v.allFinite(), ErrorCode::InvalidArgument, "kernel values must be finite");
        }
        const double limit = grid_.span() * (1.0 + 1e-12);
        for (Eigen::Index i = 0; i < supports_.size(); ++i) {
            require(supports_.data()[i] >= 0.0 && supports_.data()[i] <= limit, ErrorCode::InvalidArgument,
                    "kernel supports must lie in [0, p*delta]");
        }
        build_tail_sup();
    }

    // Grid-wide support pΔ for every entry.
    KernelGrid(LagGrid grid, std::vector<Matrix> values)
        : KernelGrid(grid, values, Matrix::Constant(values.empty() ? 1 : values.front().rows(),
                                                    values.empty() ? 1 : values.front().rows(),
                                                    grid.span())) {}

    static KernelGrid zero(LagGrid grid, int dim) {
        return KernelGrid(grid, std::vector<Matrix>(static_cast<std::size_t>(grid.size()), Matrix::Zero(dim, dim)),
                          Matrix::Constant(dim, dim, grid.span()));
    }

    const LagGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    std::span<const Matrix> values() const { return values_; }
    const Matrix& operator[](int k) const { return values_[static_cast<std::size_t>(k)]; }
    const Matrix& supports() const { return supports_; }

    double support(int i, int j) const { return supports_(i, j); }
    double max_support() const { return supports_.maxCoeff(); }

    // Piecewise-constant lookup: the cell containing `lag` supplies the value.
    double value(int i, int j, double lag) const {
        if (!(lag < supports_(i, j))) return 0.0;
        const int k = grid_.cell(lag);
        return k < 0 ? 0.0 : values_[static_cast<std::size_t>(k)](i, j);
    }

    // sup_{s >= lag} |K_ij(s)|.
    double tail_sup(int i, int j, double lag) const {
        if (!(lag < supports_(i, j))) return 0.0;
        const int k = std::max(grid_.cell(lag), lag < 0.0 ? 0 : -1);
        return k < 0 ? 0.0 : tail_[static_cast<std::size_t>(k)](i, j);
    }

    // Riemann sum of the grid: sum_k values[k] * step.
    Matrix integral() const {
        Matrix total = Matrix::Zero(dim_, dim_);
        for (const auto& v : values_) total += v;
        return total * grid_.step();
    }

    bool operator==(const KernelGrid& other) const {
        return grid_ == other.grid_ && dim_ == other.dim_ && supports_ == other.supports_ && values_ == other.values_;
    }

private:
    void build_tail_sup() {
        tail_.assign(values_.size(), Matrix::Zero(dim_, dim_));
        Matrix running = Matrix::Zero(dim_, dim_);
        for (std::size_t k = values_.size(); k-- > 0;) {
            running = running.cwiseMax(values_[k].cwiseAbs());
            tail_[k] = running;
        }
    }

    LagGrid grid_;
    std::vector<Matrix> values_;
    Matrix supports_;
    int dim_ = 0;
    std::vector<Matrix> tail_;
};

// Stationary second-order structure of a d-variate process: mean rates and the
// covariance density C(tau) at the grid midpoints, with
//     C_ij(tau) = cov density of (dN_i(s), dN_j(s + tau)).
// The lag-zero atom diag(mean_rates) is kept implicit; C(-tau) = C(tau)^T.
class CovarianceGrid {
public:
    CovarianceGrid() = default;

    CovarianceGrid(LagGrid grid, Vector mean_rates, std::vector<Matrix> density)
        : grid_(grid), mean_rates_(std::move(mean_rates)), density_(std::move(density)) {
        const auto d = mean_rates_.size();
        require(d >= 1, ErrorCode::InvalidArgument, "need at least one coordinate");
        for (Eigen::Index j = 0; j < d; ++j) {
            if (!(mean_rates_(j) > 0.0) || !std::isfinite(mean_rates_(j))) {
                throw Error(ErrorCode::NonPositiveRate,
                            "mean rate of coordinate " + std::to_string(j) + " must be positive",
                            {{"coordinate", static_cast<double>(j)}, {"rate", mean_rates_(j)}});
            }
        }
        require(static_cast<int>(density_.size()) == grid_.size(), ErrorCode::InvalidArgument,
                "covariance grid needs one matrix per lag");
        for (const auto& c : density_) {
            require(c.rows() == d && c.cols() == d, ErrorCode::InvalidArgument,
                    "covariance values must be d x d");
            require(c.allFinite(), ErrorCode::InvalidArgument, "covariance values must be finite");
        }
    }

    const LagGrid& grid() const { return grid_; }
    int dim() const { return static_cast<int>(mean_rates_.size()); }
    const Vector& mean_rates() const { return mean_rates_; }
    std::span<const Matrix> density() const { return density_; }
    const Matrix& operator[](int k) const { return density_[static_cast<std::size_t>(k)]; }

    Matrix atom() const { return mean_rates_.asDiagonal(); }

    // Stationary mark distribution F_j = mean_rate_j / sum(mean_rates).
    Vector mark_distribution() const { return mean_rates_ / mean_rates_.sum(); }

    // Grid restricted to the first `size` lags.
    CovarianceGrid truncated(int size) const {
        require(size >= 1 && size <= grid_.size(), ErrorCode::InvalidArgument, "bad truncation size");
        return CovarianceGrid(LagGrid(grid_.step(), size), mean_rates_,
                              {density_.begin(), density_.begin() + size});
    }

    bool operator==(const CovarianceGrid& other) const {
        return grid_ == other.grid_ && dim() == other.dim() && mean_rates_ == other.mean_rates_ &&
               density_ == other.density_;
    }

private:
    LagGrid grid_;
    Vector mean_rates_;
    std::vector<Matrix> density_;
};

} // namespace blpp
