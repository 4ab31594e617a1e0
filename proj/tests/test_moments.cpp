#include "blpp/hawkes_oracle.hpp"
#include "blpp/moments.hpp"
#include "blpp/simulate.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace blpp;

namespace {

EventStream reversed(const EventStream& s) {
    std::vector<double> t;
    std::vector<int> m;
    for (std::size_t k = s.size(); k-- > 0;) {
        t.push_back(s.horizon() - s.times()[k]);
        m.push_back(s.marks()[k]);
    }
    // Events at time 0 would land on the excluded endpoint T.
    return EventStream(std::move(t), std::move(m), std::nextafter(s.horizon(), 2 * s.horizon()), s.dim());
}

std::vector<EventStream> hawkes_d2(int n, double horizon, std::uint64_t seed) {
    MatrixKernel k(2);
    k.entry(0, 0) = ScalarKernel::exponential(0.4, 1.5);
    k.entry(1, 0) = ScalarKernel::exponential(0.3, 1.0);
    k.entry(0, 1) = ScalarKernel::box(0.2, 1.0);
    const HawkesParams<> p{(Vector(2) << 0.6, 0.4).finished(), k};
    std::vector<EventStream> out;
    for (int r = 0; r < n; ++r) out.push_back(simulate_hawkes(p, horizon, seed + static_cast<std::uint64_t>(r)));
    return out;
}

} // namespace

TEST(MeanRates, CountOverTime) {
    std::vector<double> t;
    for (int k = 0; k < 10; ++k) t.push_back(0.25 + 0.5 * k);
    const std::vector<EventStream> s{EventStream(t, std::vector<int>(10, 0), 5.0, 1)};
    EXPECT_DOUBLE_EQ(estimate_mean_rates(s)(0), 2.0);
}

TEST(MeanRates, EmptyStreamWarns) {
    const std::vector<EventStream> s{EventStream({}, {}, 5.0, 2)};
    std::vector<std::string> warnings;
    EXPECT_EQ(estimate_mean_rates(s, &warnings), Vector::Zero(2));
    EXPECT_FALSE(warnings.empty());
}

TEST(MeanRates, PoissonClt) {
    const std::vector<EventStream> s{simulate_poisson(Vector::Constant(1, 3.0), 10000.0, 12)};
    EXPECT_NEAR(estimate_mean_rates(s)(0), 3.0, 3.0 * std::sqrt(3.0 / 10000.0));
}

TEST(CovarianceDensity, SingleEventIsZero) {
    const std::vector<EventStream> s{EventStream({1.0}, {0}, 10.0, 1)};
    const auto c = estimate_covariance_density(s, LagGrid(0.5, 4));
    for (const auto& m : c.density()) EXPECT_EQ(m(0, 0), 0.0);
}

// Two events 0.3 apart in a window of 10: one pair in bin 0 (width 0.5),
// edge-corrected area 0.5 * (10 - 0.25), minus N (N - 1) / T^2 = 0.02.
TEST(CovarianceDensity, HandComputedPair) {
    const std::vector<EventStream> s{EventStream({1.0, 1.3}, {0, 0}, 10.0, 1)};
    const auto c = estimate_covariance_density(s, LagGrid(0.5, 4));
    EXPECT_NEAR(c[0](0, 0), 1.0 / (0.5 * 9.75) - 0.02, 1e-15);
    EXPECT_NEAR(c[1](0, 0), -0.02, 1e-15);
}

TEST(CovarianceDensity, RejectsCoarseGrid) {
    const std::vector<EventStream> s{EventStream({1.0}, {0}, 10.0, 1)};
    try {
        estimate_covariance_density(s, LagGrid(1.0, 5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GridTooCoarse);
    }
}

TEST(CovarianceDensity, PoissonWithinFourSe) {
    std::vector<EventStream> s;
    for (int r = 0; r < 40; ++r) s.push_back(simulate_poisson((Vector(2) << 1.0, 2.0).finished(), 500.0, 300 + r));
    const auto boot = bootstrap_covariance(s, LagGrid(0.5, 10), 200, 77);
    for (int k = 0; k < 10; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                EXPECT_LE(std::abs(boot.estimate[k](i, j)), 4.0 * boot.standard_error[static_cast<std::size_t>(k)](i, j))
                    << "lag " << k << " entry " << i << j;
}

// Time reversal swaps (i, j, tau) with (j, i, -tau): the estimate is the transpose.
TEST(CovarianceDensity, ReversalTransposes) {
    const auto s = hawkes_d2(3, 200.0, 40);
    std::vector<EventStream> r;
    for (const auto& x : s) r.push_back(reversed(x));
    const LagGrid g(0.25, 8);
    const auto pc = count_pairs(s, g);
    const auto pr = count_pairs(r, g);
    for (std::size_t n = 0; n < s.size(); ++n)
        for (int k = 0; k < g.size(); ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) EXPECT_EQ(pc[n].count(k, i, j), pr[n].count(k, j, i));
}

TEST(CovarianceDensity, TranslationInvariant) {
    const auto s = hawkes_d2(2, 100.0, 60);
    std::vector<EventStream> shifted;
    for (const auto& x : s) {
        std::vector<double> t(x.times().begin(), x.times().end());
        for (auto& v : t) v += 1024.0;
        shifted.emplace_back(t, std::vector<int>(x.marks().begin(), x.marks().end()), x.horizon(), 2, 1024.0);
    }
    const LagGrid g(0.25, 8);
    EXPECT_EQ(estimate_covariance_density(s, g), estimate_covariance_density(shifted, g));
}

TEST(HawkesOracle, PoissonCase) {
    const auto c = hawkes_covariance_oracle(0.7, 0.0, 1.0, LagGrid(0.1, 20));
    EXPECT_DOUBLE_EQ(c.mean_rates()(0), 0.7);
    for (const auto& m : c.density()) EXPECT_EQ(m(0, 0), 0.0);
}

TEST(HawkesOracle, MatchesClosedForm) {
    const LagGrid g(0.05, 200);
    const auto c = hawkes_covariance_oracle(0.5, 0.8, 1.0, g);
    EXPECT_NEAR(c.mean_rates()(0), 2.5, 1e-12);
    for (int k = 0; k < g.size(); ++k) {
        const double truth = oracle::hawkes_exponential_covariance(0.5, 0.8, 1.0, g.lag(k));
        EXPECT_NEAR(c[k](0, 0), truth, 1e-8 * truth);
    }
}

TEST(HawkesOracle, PositiveAndDecreasing) {
    const auto c = hawkes_covariance_oracle(0.5, 0.8, 1.0, LagGrid(0.1, 100));
    for (int k = 0; k < 100; ++k) {
        EXPECT_GT(c[k](0, 0), 0.0);
        if (k > 0) {
            EXPECT_LT(c[k](0, 0), c[k - 1](0, 0));
        }
    }
}

// Truncated kernel: a 4x denser lattice gives the same density.
TEST(HawkesOracle, TruncatedRefines) {
    const LagGrid g(0.1, 40);
    const auto a = hawkes_covariance_oracle(0.5, 0.8, 1.0, g, 2.0);
    const auto b = hawkes_covariance_oracle(0.5, 0.8, 1.0, g, 2.0, OracleOptions{22, 50.0});
    for (int k = 0; k < g.size(); ++k) EXPECT_NEAR(a[k](0, 0), b[k](0, 0), 1e-8);
}

TEST(HawkesOracle, Unstable) {
    try {
        hawkes_covariance_oracle(0.5, 1.0, 1.0, LagGrid(0.1, 10));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnstableKernel);
    }
}
