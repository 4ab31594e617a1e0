#pragma once

#include "blpp/core.hpp"
#include "blpp/rng.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace blpp {

struct MomentEstimate {
    CovarianceGrid cov;
    int n_streams = 0;
    double total_time = 0.0;
};

namespace detail {

inline int common_dim(std::span<const EventStream> streams) {
    require(!streams.empty(), ErrorCode::EmptyInput, "no event streams supplied");
    const int d = streams.front().dim();
    for (const auto& s : streams)
        require(s.dim() == d, ErrorCode::InvalidArgument, "event streams disagree on dimension");
    return d;
}

} // namespace detail

// lambda_j = (events of mark j) / (total observed time), pooled over streams.
// A zero entry is a valid estimate but unusable downstream; it is reported
// through `warnings` when a sink is supplied.
inline Vector estimate_mean_rates(std::span<const EventStream> streams,
                                  std::vector<std::string>* warnings = nullptr) {
    const int d = detail::common_dim(streams);
    Vector counts = Vector::Zero(d);
    double total_time = 0.0;
    for (const auto& s : streams) {
        const auto c = s.counts_by_mark();
        for (int j = 0; j < d; ++j) counts(j) += static_cast<double>(c[static_cast<std::size_t>(j)]);
        total_time += s.horizon();
    }
    Vector rates = counts / total_time;
    if (warnings) {
        for (int j = 0; j < d; ++j)
            if (rates(j) == 0.0)
                warnings->push_back("mark " + std::to_string(j) + " has no events; its mean rate estimate is 0");
    }
    return rates;
}

// Ordered pair counts of one stream: entry (k, i, j) counts pairs s < t with
// mark(s) = i, mark(t) = j and t - s in [k*step, (k+1)*step). Self pairs are
// excluded; they make up the atom diag(lambda).
class PairCounts {
public:
    PairCounts(const EventStream& stream, const LagGrid& grid)
        : grid_(grid), dim_(stream.dim()), horizon_(stream.horizon()),
          counts_(static_cast<std::size_t>(grid.size() * dim_ * dim_), 0), events_(stream.counts_by_mark()) {
        const auto times = stream.times();
        const auto marks = stream.marks();
        const double reach = grid.span();
        for (std::size_t a = 0; a < times.size(); ++a) {
            for (std::size_t b = a + 1; b < times.size(); ++b) {
                const double lag = times[b] - times[a];
                if (!(lag < reach)) break;
                const int k = grid.cell(lag);
                if (k < 0) continue;
                ++counts_[index(k, marks[a], marks[b])];
            }
        }
    }

    const LagGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    double horizon() const { return horizon_; }
    std::int64_t count(int k, int i, int j) const { return counts_[index(k, i, j)]; }
    std::int64_t events(int j) const { return events_[static_cast<std::size_t>(j)]; }

private:
    std::size_t index(int k, int i, int j) const {
        return static_cast<std::size_t>((k * dim_ + i) * dim_ + j);
    }

    LagGrid grid_;
    int dim_;
    double horizon_;
    std::vector<std::int64_t> counts_;
    std::vector<std::int64_t> events_;
};

// Pooled pair-count estimator
//     C_ij(lag_k) = sum pairs / (step * sum_s (T_s - (k + 1/2) step)) - N_i (N_j - [i = j]) / (sum_s T_s)^2,
// where T - (k + 1/2) step is the exact area factor of {(s, t) in [0, T)^2 : t - s in cell k}
// and N are pooled event counts. Dropping self-products from the mean term makes it
// unbiased for lambda_i lambda_j under independent increments.
// `weights` gives each stream's multiplicity (bootstrap resampling); empty means all ones.
inline CovarianceGrid covariance_from_pair_counts(std::span<const PairCounts> counts,
                                                  std::span<const int> weights = {}) {
    require(!counts.empty(), ErrorCode::EmptyInput, "no pair counts supplied");
    const LagGrid grid = counts.front().grid();
    const int d = counts.front().dim();
    const int p = grid.size();
    const double step = grid.step();

    Vector events = Vector::Zero(d);
    double total_time = 0.0;
    std::vector<double> pairs(static_cast<std::size_t>(p * d * d), 0.0);
    std::vector<double> area(static_cast<std::size_t>(p), 0.0);
    for (std::size_t s = 0; s < counts.size(); ++s) {
        const int w = weights.empty() ? 1 : weights[s];
        if (w == 0) continue;
        const auto& c = counts[s];
        require(c.dim() == d && c.grid() == grid, ErrorCode::InvalidArgument, "pair counts disagree on layout");
        total_time += w * c.horizon();
        for (int j = 0; j < d; ++j) events(j) += static_cast<double>(w * c.events(j));
        for (int k = 0; k < p; ++k) {
            area[static_cast<std::size_t>(k)] += w * (c.horizon() - (k + 0.5) * step);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    pairs[static_cast<std::size_t>((k * d + i) * d + j)] += static_cast<double>(w * c.count(k, i, j));
        }
    }
    const Vector rates = events / total_time;
    Matrix product = events * events.transpose();
    product.diagonal() -= events;
    product /= total_time * total_time;
    std::vector<Matrix> density(static_cast<std::size_t>(p), Matrix::Zero(d, d));
    for (int k = 0; k < p; ++k) {
        const double norm = step * area[static_cast<std::size_t>(k)];
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                density[static_cast<std::size_t>(k)](i, j) =
                    pairs[static_cast<std::size_t>((k * d + i) * d + j)] / norm - product(i, j);
    }
    return CovarianceGrid(grid, rates, std::move(density));
}

inline void check_grid_against_streams(std::span<const EventStream> streams, const LagGrid& grid) {
    double shortest = streams.front().horizon();
    for (const auto& s : streams) shortest = std::min(shortest, s.horizon());
    if (!(grid.span() < shortest / 2.0)) {
        throw Error(ErrorCode::GridTooCoarse,
                    "lag grid span " + std::to_string(grid.span()) + " must be below half the shortest window " +
                        std::to_string(shortest),
                    {{"span", grid.span()}, {"shortest_horizon", shortest}});
    }
}

inline std::vector<PairCounts> count_pairs(std::span<const EventStream> streams, const LagGrid& grid) {
    detail::common_dim(streams);
    check_grid_against_streams(streams, grid);
    std::vector<PairCounts> counts;
    counts.reserve(streams.size());
    for (const auto& s : streams) counts.emplace_back(s, grid);
    return counts;
}

inline CovarianceGrid estimate_covariance_density(std::span<const EventStream> streams, const LagGrid& grid) {
    const auto counts = count_pairs(streams, grid);
    return covariance_from_pair_counts(counts);
}

inline MomentEstimate estimate_moments(std::span<const EventStream> streams, const LagGrid& grid) {
    MomentEstimate m{estimate_covariance_density(streams, grid), static_cast<int>(streams.size()), 0.0};
    for (const auto& s : streams) m.total_time += s.horizon();
    return m;
}

// Multiplicities for one bootstrap resample of n streams.
inline std::vector<int> bootstrap_weights(std::size_t n, Philox4x32& rng) {
    std::vector<int> w(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        const auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
        ++w[std::min(pick, n - 1)];
    }
    return w;
}

// Covariance estimates from `resamples` stream-level bootstrap draws. Streams
// are resampled whole, preserving within-stream dependence. A draw that misses
// every event of some mark has no valid estimate and is skipped.
inline std::vector<CovarianceGrid> bootstrap_resamples(std::span<const PairCounts> counts, int resamples,
                                                       std::uint64_t seed) {
    require(resamples >= 2, ErrorCode::InvalidArgument, "bootstrap needs at least two resamples");
    Philox4x32 rng(seed);
    std::vector<CovarianceGrid> draws;
    draws.reserve(static_cast<std::size_t>(resamples));
    for (int r = 0; r < resamples; ++r) {
        const auto w = bootstrap_weights(counts.size(), rng);
        try {
            draws.push_back(covariance_from_pair_counts(counts, w));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NonPositiveRate) throw;
        }
    }
    require(draws.size() >= 2, ErrorCode::EmptyInput, "too few usable bootstrap resamples");
    return draws;
}

// Entrywise standard deviation across a sequence of equally shaped matrix sequences.
inline std::vector<Matrix> entrywise_sd(const std::vector<std::vector<Matrix>>& draws) {
    require(draws.size() >= 2, ErrorCode::EmptyInput, "need at least two draws");
    const std::size_t len = draws.front().size();
    const double n = static_cast<double>(draws.size());
    std::vector<Matrix> out(len);
    for (std::size_t k = 0; k < len; ++k) {
        Matrix sum = Matrix::Zero(draws.front()[k].rows(), draws.front()[k].cols());
        Matrix sq = sum;
        for (const auto& d : draws) {
            sum += d[k];
            sq += d[k].cwiseProduct(d[k]);
        }
        out[k] = ((sq - sum.cwiseProduct(sum) / n) / (n - 1.0)).cwiseMax(0.0).cwiseSqrt();
    }
    return out;
}

struct CovarianceBootstrap {
    CovarianceGrid estimate;
    std::vector<Matrix> standard_error; // per lag, entrywise
    Vector rate_standard_error;
    int resamples_used = 0;
};

inline CovarianceBootstrap bootstrap_covariance(std::span<const EventStream> streams, const LagGrid& grid,
                                                int resamples, std::uint64_t seed) {
    const auto counts = count_pairs(streams, grid);
    const auto draws = bootstrap_resamples(counts, resamples, seed);
    std::vector<std::vector<Matrix>> dens, rates;
    for (const auto& c : draws) {
        dens.emplace_back(c.density().begin(), c.density().end());
        rates.push_back({Matrix(c.mean_rates())});
    }
    CovarianceBootstrap out{covariance_from_pair_counts(counts), entrywise_sd(dens), entrywise_sd(rates).front(),
                            static_cast<int>(draws.size())};
    return out;
}

} // namespace blpp
