#pragma once

#include "blpp/core.hpp"
#include "blpp/innovations.hpp"
#include "blpp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace blpp {

using ArKernel = std::variant<MatrixKernel, KernelGrid>;

// Linear predictor of the conditional intensity.
//   AR: lambda^_i(t) = intercept_i + sum_j sum_{u < t, mark j} K_ij(t - u)
//   MA: lambda^(bin b) = mean_rates + sum_h Theta(m, h) (counts(b - h) - lambda^(b - h) step),
//       m = min(b, rows), evaluated on the solver's bins.
struct Predictor {
    std::variant<ArKernel, InnovationsSolution> form;
    Vector intercept;
    Vector mean_rates;

    bool is_ar() const { return form.index() == 0; }
    int dim() const { return static_cast<int>(mean_rates.size()); }

    // Shortest lead-in after which the predictor sees its full memory.
    double warm_up() const {
        if (const auto* ar = std::get_if<ArKernel>(&form))
            return std::visit([](const auto& k) { return k.max_support(); }, *ar);
        const auto& ma = std::get<InnovationsSolution>(form);
        return ma.rows() * ma.step();
    }
};

namespace detail {

inline void check_mean_rates(const Vector& rates) {
    for (Eigen::Index j = 0; j < rates.size(); ++j) {
        if (!(rates(j) > 0.0) || !std::isfinite(rates(j))) {
            throw Error(ErrorCode::NonPositiveRate, "mean rate of coordinate " + std::to_string(j) + " must be positive",
                        {{"coordinate", static_cast<double>(j)}, {"rate", rates(j)}});
        }
    }
}

// Exact integral of the piecewise-constant lookup used during evaluation.
inline Matrix lookup_integral(const KernelGrid& kernel) {
    const int d = kernel.dim();
    const LagGrid& grid = kernel.grid();
    Matrix total = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double h = kernel.support(i, j);
            for (int k = 0; k < grid.size(); ++k) {
                const double lo = k * grid.step();
                const double width = std::clamp(h - lo, 0.0, grid.step());
                if (width <= 0.0) break;
                total(i, j) += kernel[k](i, j) * width;
            }
        }
    return total;
}

inline Matrix lookup_integral(const MatrixKernel& kernel) { return kernel.integral(); }

} // namespace detail

// Unbiased intercept (I - int K) lambda.
inline Predictor assemble_predictor(ArKernel kernel, const Vector& mean_rates) {
    detail::check_mean_rates(mean_rates);
    const Matrix integral = std::visit([](const auto& k) { return detail::lookup_integral(k); }, kernel);
    require(integral.rows() == mean_rates.size(), ErrorCode::InvalidArgument, "kernel and rate dimensions differ");
    Predictor pred{std::move(kernel), mean_rates - integral * mean_rates, mean_rates};
    return pred;
}

inline Predictor assemble_predictor(InnovationsSolution innovations, const Vector& mean_rates) {
    detail::check_mean_rates(mean_rates);
    require(!innovations.V.empty() && innovations.V.front().rows() == mean_rates.size(), ErrorCode::InvalidArgument,
            "innovations and rate dimensions differ");
    return Predictor{std::move(innovations), mean_rates, mean_rates};
}

namespace detail {

template <class Kernel>
std::vector<Vector> predict_ar(const Kernel& kernel, const Vector& intercept, const EventStream& stream,
                               std::span<const double> times) {
    const int d = stream.dim();
    const double reach = kernel.max_support();
    const auto ev = stream.times();
    const auto marks = stream.marks();
    std::vector<Vector> out;
    out.reserve(times.size());
    std::size_t lo = 0, hi = 0;
    for (const double t : times) {
        while (hi < ev.size() && ev[hi] < t) ++hi;
        while (lo < hi && !(t - ev[lo] < reach)) ++lo;
        Vector lambda = intercept;
        for (std::size_t e = lo; e < hi; ++e) {
            const double lag = t - ev[e];
            for (int i = 0; i < d; ++i) lambda(i) += kernel.value(i, marks[e], lag);
        }
        out.push_back(std::move(lambda));
    }
    return out;
}

inline std::vector<Vector> predict_ma(const InnovationsSolution& ma, const Vector& mean_rates,
                                      const EventStream& stream, std::span<const double> times) {
    const double step = ma.step();
    const CountMatrix counts = bin_counts(stream, step);
    const auto bins = counts.rows();
    const int d = stream.dim();
    const int rows = ma.rows();
    const double last = times.empty() ? stream.origin() : times.back();
    const auto needed = std::min<Eigen::Index>(bins, static_cast<Eigen::Index>(std::floor((last - stream.origin()) / step)) + 1);
    std::vector<Vector> rate(static_cast<std::size_t>(std::max<Eigen::Index>(needed, 1)));
    std::vector<Vector> resid(rate.size());
    for (std::size_t b = 0; b < rate.size(); ++b) {
        const int m = static_cast<int>(std::min<std::size_t>(b, static_cast<std::size_t>(rows)));
        Vector lambda = mean_rates;
        for (int h = 1; h <= m; ++h) lambda += ma.theta(m, h) * resid[b - static_cast<std::size_t>(h)];
        Vector x(d);
        for (int j = 0; j < d; ++j) x(j) = static_cast<double>(counts(static_cast<Eigen::Index>(b), j));
        resid[b] = x - lambda * step;
        rate[b] = std::move(lambda);
    }
    std::vector<Vector> out;
    out.reserve(times.size());
    for (const double t : times) {
        auto b = static_cast<std::size_t>(std::floor((t - stream.origin()) / step));
        b = std::min(b, rate.size() - 1);
        out.push_back(rate[b]);
    }
    return out;
}

} // namespace detail

// Predicted intensity at ascending times in [origin, end]; only events strictly before t are used.
inline std::vector<Vector> predict_intensity(const Predictor& pred, const EventStream& stream,
                                             std::span<const double> times) {
    require(stream.dim() == pred.dim(), ErrorCode::InvalidArgument, "stream and predictor dimensions differ");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] >= stream.origin() && times[k] <= stream.end())) {
            throw Error(ErrorCode::GridOutOfRange, "evaluation time " + std::to_string(times[k]) + " outside the window",
                        {{"time", times[k]}, {"origin", stream.origin()}, {"end", stream.end()}});
        }
        require(k == 0 || times[k] >= times[k - 1], ErrorCode::InvalidArgument, "evaluation times must ascend");
    }
    if (const auto* ar = std::get_if<ArKernel>(&pred.form)) {
        return std::visit([&](const auto& k) { return detail::predict_ar(k, pred.intercept, stream, times); }, *ar);
    }
    return detail::predict_ma(std::get<InnovationsSolution>(pred.form), pred.mean_rates, stream, times);
}

// Left endpoints of the scoring bins [t, t + step) from origin + warm-up to the window end.
// `warm_up` overrides the predictor's own lead-in, e.g. to score several predictors on the same bins.
inline std::vector<double> evaluation_times(const Predictor& pred, double origin, double horizon, double step,
                                            std::optional<double> warm_up = std::nullopt) {
    require(std::isfinite(step) && step > 0.0, ErrorCode::InvalidArgument, "evaluation step must be positive");
    const double start = warm_up.value_or(pred.warm_up());
    require(std::isfinite(start) && start >= 0.0, ErrorCode::InvalidArgument, "warm-up must be non-negative");
    const auto bins = static_cast<long long>(std::floor((horizon - start) / step + 1e-9));
    if (bins < 1) {
        throw Error(ErrorCode::GridOutOfRange, "window too short for the predictor warm-up",
                    {{"warm_up", start}, {"horizon", horizon}});
    }
    std::vector<double> t(static_cast<std::size_t>(bins));
    for (long long m = 0; m < bins; ++m) t[static_cast<std::size_t>(m)] = origin + start + static_cast<double>(m) * step;
    return t;
}

inline std::vector<double> evaluation_times(const Predictor& pred, const EventStream& stream, double step,
                                            std::optional<double> warm_up = std::nullopt) {
    return evaluation_times(pred, stream.origin(), stream.horizon(), step, warm_up);
}

struct ScoreReport {
    int n_streams = 0;
    double eval_step = 0.0;
    Vector mean_rates;          // lambda the predictor was built for
    Vector mean_prediction;     // across-stream mean of the time-averaged lambda^
    Vector mean_prediction_se;  // Monte-Carlo standard error of the above
    Vector bias;                // mean_prediction - mean_rates
    double count_mse_per_bin = 0.0; // sum over coordinates of (count - lambda^ step)^2, averaged over bins
    double count_mse_per_bin_se = 0.0;
    double count_mse_per_time = 0.0; // count_mse_per_bin / step
    double count_mse_per_time_se = 0.0;
    std::optional<double> intensity_mse; // |lambda^ - lambda|^2 averaged over evaluation times
    std::optional<double> intensity_mse_se;
};

namespace detail {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(std::span<const double> x) {
    MeanSe r;
    const double n = static_cast<double>(x.size());
    for (double v : x) r.mean += v;
    r.mean /= n;
    if (x.size() > 1) {
        double ss = 0.0;
        for (double v : x) ss += (v - r.mean) * (v - r.mean);
        r.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return r;
}

} // namespace detail

// Scores the predictor on each stream. `true_intensity`, when given, holds one
// trace per stream sampled at evaluation_times(pred, stream, step, warm_up).
inline ScoreReport evaluate_predictor(const Predictor& pred, std::span<const EventStream> streams, double step,
                                      const std::vector<std::vector<Vector>>* true_intensity = nullptr,
                                      std::optional<double> warm_up = std::nullopt) {
    require(!streams.empty(), ErrorCode::EmptyInput, "no event streams supplied");
    require(!true_intensity || true_intensity->size() == streams.size(), ErrorCode::InvalidArgument,
            "one intensity trace per stream required");
    const int d = pred.dim();
    const std::size_t n = streams.size();
    std::vector<std::vector<double>> avg(static_cast<std::size_t>(d), std::vector<double>(n));
    std::vector<double> count_mse(n), intensity_mse(n);
    for (std::size_t s = 0; s < n; ++s) {
        const auto& stream = streams[s];
        const auto times = evaluation_times(pred, stream, step, warm_up);
        const auto lambda = predict_intensity(pred, stream, times);
        Vector sum = Vector::Zero(d);
        for (const auto& l : lambda) sum += l;
        for (int i = 0; i < d; ++i) avg[static_cast<std::size_t>(i)][s] = sum(i) / static_cast<double>(lambda.size());

        // Counts in [t, t + step) for each evaluation time.
        const auto ev = stream.times();
        const auto marks = stream.marks();
        std::size_t e = 0;
        double se_sum = 0.0;
        for (std::size_t m = 0; m < times.size(); ++m) {
            while (e < ev.size() && ev[e] < times[m]) ++e;
            Vector count = Vector::Zero(d);
            for (std::size_t f = e; f < ev.size() && ev[f] < times[m] + step; ++f) count(marks[f]) += 1.0;
            se_sum += (count - lambda[m] * step).squaredNorm();
        }
        count_mse[s] = se_sum / static_cast<double>(times.size());

        if (true_intensity) {
            const auto& trace = (*true_intensity)[s];
            require(trace.size() == times.size(), ErrorCode::InvalidArgument,
                    "intensity trace does not match the evaluation times");
            double sq = 0.0;
            for (std::size_t m = 0; m < times.size(); ++m) sq += (lambda[m] - trace[m]).squaredNorm();
            intensity_mse[s] = sq / static_cast<double>(times.size());
        }
    }

    ScoreReport r;
    r.n_streams = static_cast<int>(n);
    r.eval_step = step;
    r.mean_rates = pred.mean_rates;
    r.mean_prediction.resize(d);
    r.mean_prediction_se.resize(d);
    for (int i = 0; i < d; ++i) {
        const auto ms = detail::mean_se(avg[static_cast<std::size_t>(i)]);
        r.mean_prediction(i) = ms.mean;
        r.mean_prediction_se(i) = ms.se;
    }
    r.bias = r.mean_prediction - r.mean_rates;
    const auto c = detail::mean_se(count_mse);
    r.count_mse_per_bin = c.mean;
    r.count_mse_per_bin_se = c.se;
    r.count_mse_per_time = c.mean / step;
    r.count_mse_per_time_se = c.se / step;
    if (true_intensity) {
        const auto q = detail::mean_se(intensity_mse);
        r.intensity_mse = q.mean;
        r.intensity_mse_se = q.se;
    }
    return r;
}

} // namespace blpp
