#pragma once

#include "blpp/core.hpp"
#include "blpp/kernels.hpp"
#include "blpp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace blpp {

template <MatrixKernelLike Kernel = MatrixKernel>
struct HawkesParams {
    Vector baseline; // eta, events per second
    Kernel kernel;   // K(t), entry (i, j): source j excites target i
};

struct NeymanScottParams {
    Vector latent_rates; // nu_0
    MatrixKernel shot;   // entry (j, i): cluster intensity in coordinate j around a latent point of coordinate i
};

struct HawkesRun {
    EventStream stream;
    double burn_in = 0.0;
    // Conditional intensity of the generating model at the requested times,
    // computed from the full simulated history including the burn-in.
    std::vector<Vector> intensity_trace;
};

struct NeymanScottRun {
    EventStream observed;
    EventStream latent;
};

// Spectral radius of the branching matrix int_0^inf K(t) dt.
template <MatrixKernelLike Kernel>
double branching_radius(const Kernel& kernel) {
    return spectral_radius(kernel.integral());
}

namespace detail {

struct TimedMark {
    double time;
    int mark;
};

inline void check_rates(const Vector& rates, const char* what) {
    for (Eigen::Index j = 0; j < rates.size(); ++j) {
        if (!(rates(j) >= 0.0) || !std::isfinite(rates(j))) {
            throw Error(ErrorCode::NegativeRate, std::string(what) + " must be finite and non-negative",
                        {{"coordinate", static_cast<double>(j)}, {"rate", rates(j)}});
        }
    }
}

inline void check_horizon(double horizon) {
    require(std::isfinite(horizon) && horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be positive");
}

// Sort by time and turn the result into a valid stream on [origin, origin + horizon).
inline EventStream assemble_stream(std::vector<TimedMark> events, double horizon, int dim, double origin = 0.0) {
    std::sort(events.begin(), events.end(), [](const TimedMark& a, const TimedMark& b) {
        return a.time < b.time || (a.time == b.time && a.mark < b.mark);
    });
    std::vector<double> times;
    std::vector<int> marks;
    times.reserve(events.size());
    marks.reserve(events.size());
    const double stop = origin + horizon;
    for (const auto& e : events) {
        double t = e.time;
        // Coincident draws have probability zero; nudge rather than emit a non-simple process.
        if (!times.empty() && !(t > times.back())) t = std::nextafter(times.back(), stop);
        if (t < origin || !(t < stop)) continue;
        times.push_back(t);
        marks.push_back(e.mark);
    }
    return EventStream(std::move(times), std::move(marks), horizon, dim, origin);
}

inline std::vector<TimedMark> poisson_events(const Vector& rates, double from, double to, Philox4x32& rng) {
    std::vector<TimedMark> events;
    for (Eigen::Index j = 0; j < rates.size(); ++j) {
        if (rates(j) <= 0.0) continue;
        double t = from;
        while (true) {
            t += rng.exponential(rates(j));
            if (!(t < to)) break;
            events.push_back({t, static_cast<int>(j)});
        }
    }
    return events;
}

template <MatrixKernelLike Kernel>
Vector hawkes_intensity_at(const HawkesParams<Kernel>& params, std::span<const TimedMark> history, double t) {
    Vector lambda = params.baseline;
    const int d = params.kernel.dim();
    for (const auto& e : history) {
        const double lag = t - e.time;
        if (!(lag > 0.0)) continue;
        for (int i = 0; i < d; ++i) lambda(i) += params.kernel.value(i, e.mark, lag);
    }
    return lambda;
}

} // namespace detail

// Homogeneous Poisson streams, one independent exponential-gap sequence per coordinate.
inline EventStream simulate_poisson(const Vector& rates, double horizon, std::uint64_t seed) {
    detail::check_horizon(horizon);
    require(rates.size() >= 1, ErrorCode::InvalidArgument, "need at least one coordinate");
    detail::check_rates(rates, "Poisson rates");
    Philox4x32 rng(seed);
    return detail::assemble_stream(detail::poisson_events(rates, 0.0, horizon, rng), horizon,
                                   static_cast<int>(rates.size()));
}

inline bool kernel_is_nonnegative(const MatrixKernel& kernel) {
    for (int i = 0; i < kernel.dim(); ++i)
        for (int j = 0; j < kernel.dim(); ++j)
            for (const auto& term : kernel.entry(i, j).terms()) {
                const double scale = std::visit(
                    [](const auto& x) {
                        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, ExponentialTerm>)
                            return x.alpha;
                        else
                            return x.height;
                    },
                    term);
                if (scale < 0.0) return false;
            }
    return true;
}

inline bool kernel_is_nonnegative(const KernelGrid& kernel) {
    for (const auto& v : kernel.values())
        if ((v.array() < 0.0).any()) return false;
    return true;
}

template <MatrixKernelLike Kernel>
void check_hawkes_params(const HawkesParams<Kernel>& params) {
    const int d = params.kernel.dim();
    require(params.baseline.size() == d, ErrorCode::InvalidArgument, "baseline and kernel dimensions differ");
    detail::check_rates(params.baseline, "Hawkes baseline");
    require(kernel_is_nonnegative(params.kernel), ErrorCode::InvalidArgument,
            "Hawkes kernel must be entrywise non-negative");
    const double radius = branching_radius(params.kernel);
    if (!(radius < 1.0)) {
        throw Error(ErrorCode::UnstableKernel,
                    "spectral radius of the integrated kernel is " + std::to_string(radius) + " (must be < 1)",
                    {{"spectral_radius", radius}});
    }
}

// Default burn-in: ten times the largest kernel support.
template <MatrixKernelLike Kernel>
double default_burn_in(const Kernel& kernel) {
    return 10.0 * kernel.max_support();
}

// Ogata thinning on [-burn_in, horizon). Between candidates the dominating
// rate is eta + sum over retained history of sup_{s >= lag} K(s), which equals
// the current intensity for non-increasing kernels and bounds it otherwise.
template <MatrixKernelLike Kernel>
HawkesRun simulate_hawkes_traced(const HawkesParams<Kernel>& params, double horizon, std::uint64_t seed,
                                 std::span<const double> trace_times = {},
                                 std::optional<double> burn_in = std::nullopt) {
    detail::check_horizon(horizon);
    check_hawkes_params(params);
    const int d = params.kernel.dim();
    const double burn = burn_in.value_or(default_burn_in(params.kernel));
    require(burn >= 0.0 && std::isfinite(burn), ErrorCode::InvalidArgument, "burn-in must be non-negative");
    const double reach = params.kernel.max_support();
    const double eta_total = params.baseline.sum();

    Philox4x32 rng(seed);
    std::vector<detail::TimedMark> all;
    std::size_t window_start = 0; // first event still inside the kernel reach
    double t = -burn;

    while (true) {
        while (window_start < all.size() && !(t - all[window_start].time < reach)) ++window_start;
        double bound = eta_total;
        for (std::size_t k = window_start; k < all.size(); ++k) {
            const double lag = t - all[k].time;
            for (int i = 0; i < d; ++i) bound += params.kernel.tail_sup(i, all[k].mark, lag);
        }
        if (!(bound > 0.0)) break;
        t += rng.exponential(bound);
        if (!(t < horizon)) break;
        const std::span<const detail::TimedMark> history(all.data() + window_start, all.size() - window_start);
        const Vector lambda = detail::hawkes_intensity_at(params, history, t);
        const double u = rng.uniform() * bound;
        double acc = 0.0;
        for (int i = 0; i < d; ++i) {
            acc += std::max(lambda(i), 0.0);
            if (u < acc) {
                if (all.empty() || t > all.back().time) all.push_back({t, i});
                break;
            }
        }
    }

    HawkesRun run;
    run.burn_in = burn;
    std::vector<detail::TimedMark> kept;
    for (const auto& e : all)
        if (e.time >= 0.0) kept.push_back(e);
    run.stream = detail::assemble_stream(std::move(kept), horizon, d);

    run.intensity_trace.reserve(trace_times.size());
    std::size_t lo = 0, hi = 0;
    for (const double s : trace_times) {
        while (hi < all.size() && all[hi].time < s) ++hi;
        while (lo < hi && !(s - all[lo].time < reach)) ++lo;
        run.intensity_trace.push_back(detail::hawkes_intensity_at(
            params, std::span<const detail::TimedMark>(all.data() + lo, hi - lo), s));
    }
    return run;
}

template <MatrixKernelLike Kernel>
EventStream simulate_hawkes(const HawkesParams<Kernel>& params, double horizon, std::uint64_t seed) {
    return simulate_hawkes_traced(params, horizon, seed).stream;
}

// Latent Poisson(nu_0) points on [-H, horizon), H the largest shot support;
// each latent point (s, i) spawns an inhomogeneous Poisson cluster with
// intensity shot(j, i)(t - s) in coordinate j, drawn by thinning against
// sup shot(j, i) on its declared support.
inline NeymanScottRun simulate_neyman_scott_debug(const NeymanScottParams& params, double horizon,
                                                  std::uint64_t seed) {
    detail::check_horizon(horizon);
    const int d = params.shot.dim();
    require(params.latent_rates.size() == d, ErrorCode::InvalidArgument, "latent rates and shot dimensions differ");
    detail::check_rates(params.latent_rates, "latent rates");
    require(kernel_is_nonnegative(params.shot), ErrorCode::NegativeRate, "shot kernel must be non-negative");

    const double reach = params.shot.max_support();
    Philox4x32 latent_rng(seed, 0);
    Philox4x32 cluster_rng(seed, 1);
    const auto latent = detail::poisson_events(params.latent_rates, -reach, horizon, latent_rng);

    std::vector<detail::TimedMark> observed;
    for (const auto& parent : latent) {
        for (int j = 0; j < d; ++j) {
            const ScalarKernel& shot = params.shot.entry(j, parent.mark);
            if (shot.is_zero()) continue;
            const double bound = shot.tail_sup(0.0);
            const double support = shot.support();
            if (!(bound > 0.0)) continue;
            double lag = 0.0;
            while (true) {
                lag += cluster_rng.exponential(bound);
                if (!(lag < support)) break;
                if (cluster_rng.uniform() * bound < shot.value(lag)) {
                    const double t = parent.time + lag;
                    if (t >= 0.0 && t < horizon) observed.push_back({t, j});
                }
            }
        }
    }

    std::vector<detail::TimedMark> latent_window;
    for (const auto& e : latent)
        if (e.time >= 0.0) latent_window.push_back(e);
    return {detail::assemble_stream(std::move(observed), horizon, d),
            detail::assemble_stream(std::move(latent_window), horizon, d)};
}

inline EventStream simulate_neyman_scott(const NeymanScottParams& params, double horizon, std::uint64_t seed) {
    return simulate_neyman_scott_debug(params, horizon, seed).observed;
}

// Stationary mean rates: (I - int K)^{-1} eta for Hawkes, (int Theta) nu_0 for Neyman-Scott.
template <MatrixKernelLike Kernel>
Vector stationary_rates(const HawkesParams<Kernel>& params) {
    const int d = params.kernel.dim();
    const Matrix a = Matrix::Identity(d, d) - params.kernel.integral();
    return a.partialPivLu().solve(params.baseline);
}

inline Vector stationary_rates(const NeymanScottParams& params) {
    return params.shot.integral() * params.latent_rates;
}

} // namespace blpp
