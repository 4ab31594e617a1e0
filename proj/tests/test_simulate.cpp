#include "blpp/simulate.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace blpp;

namespace {

HawkesParams<> exp_hawkes(double eta, double alpha, double beta) {
    return {Vector::Constant(1, eta), MatrixKernel::scalar(ScalarKernel::exponential(alpha, beta))};
}

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

double sd(const std::vector<double>& x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

} // namespace

TEST(SimulatePoisson, ZeroRateIsEmpty) { EXPECT_TRUE(simulate_poisson(Vector::Zero(1), 100.0, 1).empty()); }

TEST(SimulatePoisson, CountWithinThreeSigma) {
    const auto n = simulate_poisson(Vector::Ones(1), 1000.0, 2).size();
    EXPECT_GE(n, 905u);
    EXPECT_LE(n, 1095u);
}

TEST(SimulatePoisson, Deterministic) {
    const Vector r = (Vector(2) << 0.7, 1.3).finished();
    EXPECT_EQ(simulate_poisson(r, 200.0, 99), simulate_poisson(r, 200.0, 99));
    EXPECT_NE(simulate_poisson(r, 200.0, 99), simulate_poisson(r, 200.0, 100));
}

TEST(SimulatePoisson, RejectsNegativeRate) {
    EXPECT_THROW(simulate_poisson(Vector::Constant(1, -1.0), 10.0, 1), Error);
}

TEST(SimulateHawkes, ZeroKernelIsPoisson) {
    const HawkesParams<> p{Vector::Ones(1), MatrixKernel(1)};
    const auto n = simulate_hawkes(p, 1000.0, 3).size();
    EXPECT_GE(n, 905u);
    EXPECT_LE(n, 1095u);
}

// Zero-kernel Hawkes and Poisson give matching bin-count mean and variance.
TEST(SimulateHawkes, ZeroKernelBinMoments) {
    const HawkesParams<> p{Vector::Constant(1, 2.0), MatrixKernel(1)};
    const auto h = bin_counts(simulate_hawkes(p, 5000.0, 4), 1.0);
    const auto q = bin_counts(simulate_poisson(Vector::Constant(1, 2.0), 5000.0, 5), 1.0);
    auto moments = [](const CountMatrix& c) {
        std::vector<double> x(static_cast<std::size_t>(c.rows()));
        for (Eigen::Index k = 0; k < c.rows(); ++k) x[static_cast<std::size_t>(k)] = static_cast<double>(c(k, 0));
        return std::pair{mean(x), sd(x) * sd(x)};
    };
    const auto [mh, vh] = moments(h);
    const auto [mq, vq] = moments(q);
    // SE of a bin mean is sqrt(2/5000); SE of a Poisson sample variance is about sqrt((2 + 2*4)/5000).
    EXPECT_NEAR(mh, mq, 4.0 * std::sqrt(2.0 * 2.0 / 5000.0));
    EXPECT_NEAR(vh, vq, 4.0 * std::sqrt(2.0 * 10.0 / 5000.0));
}

TEST(SimulateHawkes, LongRunRate) {
    const auto p = exp_hawkes(0.5, 0.8, 1.0);
    EXPECT_NEAR(stationary_rates(p)(0), 2.5, 1e-12);
    std::vector<double> rates;
    for (int r = 0; r < 50; ++r) rates.push_back(static_cast<double>(simulate_hawkes(p, 1000.0, 100 + r).size()) / 1000.0);
    EXPECT_NEAR(mean(rates), 2.5, 3.0 * sd(rates) / std::sqrt(50.0));
}

TEST(SimulateHawkes, UnstableKernel) {
    const HawkesParams<> p{Vector::Constant(1, 0.5), MatrixKernel::scalar(ScalarKernel::box(1.1, 1.0))};
    try {
        simulate_hawkes(p, 10.0, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnstableKernel);
    }
}

TEST(SimulateHawkes, StreamIsValidAndDeterministic) {
    MatrixKernel k(2);
    k.entry(0, 0) = ScalarKernel::exponential(0.3, 1.0);
    k.entry(1, 0) = ScalarKernel::exponential(0.4, 2.0);
    k.entry(0, 1) = ScalarKernel::box(0.2, 1.0);
    const HawkesParams<> p{(Vector(2) << 0.5, 0.3).finished(), k};
    const auto a = simulate_hawkes(p, 300.0, 8);
    EXPECT_EQ(validate_stream(a), a);
    EXPECT_EQ(a, simulate_hawkes(p, 300.0, 8));
}

// The retained window starts at 0 after the burn-in and its rate matches the stationary rate.
TEST(SimulateHawkes, BurnInWindow) {
    const auto p = exp_hawkes(0.5, 0.8, 1.0);
    const auto run = simulate_hawkes_traced(p, 500.0, 21);
    EXPECT_GT(run.burn_in, 0.0);
    EXPECT_EQ(run.stream.origin(), 0.0);
    EXPECT_GE(run.stream.times().front(), 0.0);
}

TEST(SimulateHawkes, TraceMatchesSingleTermSum) {
    const auto p = exp_hawkes(0.5, 0.8, 1.0);
    const std::vector<double> at = {10.0, 20.0};
    const auto run = simulate_hawkes_traced(p, 30.0, 5, at, 0.0);
    for (std::size_t q = 0; q < at.size(); ++q) {
        double lam = 0.5;
        for (double u : run.stream.times())
            if (u < at[q]) lam += 0.8 * std::exp(-(at[q] - u));
        EXPECT_NEAR(run.intensity_trace[q](0), lam, 1e-12);
    }
}

TEST(SimulateNeymanScott, ZeroShotIsEmpty) {
    const NeymanScottParams p{Vector::Ones(1), MatrixKernel(1)};
    EXPECT_TRUE(simulate_neyman_scott(p, 100.0, 1).empty());
}

TEST(SimulateNeymanScott, Deterministic) {
    const NeymanScottParams p{Vector::Ones(1), MatrixKernel::scalar(ScalarKernel::box(1.0, 2.0))};
    EXPECT_EQ(simulate_neyman_scott(p, 200.0, 4), simulate_neyman_scott(p, 200.0, 4));
}

TEST(SimulateNeymanScott, ObservedCount) {
    const NeymanScottParams p{Vector::Ones(1), MatrixKernel::scalar(ScalarKernel::box(1.0, 2.0))};
    EXPECT_NEAR(stationary_rates(p)(0), 2.0, 1e-12);
    std::vector<double> pilot;
    for (int r = 0; r < 100; ++r) pilot.push_back(static_cast<double>(simulate_neyman_scott(p, 1000.0, 1000 + r).size()));
    const double sigma = sd(pilot);
    const auto n = static_cast<double>(simulate_neyman_scott(p, 1000.0, 7).size());
    EXPECT_NEAR(n, 2000.0, 4.0 * sigma);
    EXPECT_NEAR(mean(pilot), 2000.0, 4.0 * sigma / std::sqrt(100.0));
}

// Latent points pass a chi-square dispersion test on bin counts at the 0.1% level.
TEST(SimulateNeymanScott, LatentIsPoisson) {
    const NeymanScottParams p{Vector::Constant(1, 1.5), MatrixKernel::scalar(ScalarKernel::box(1.0, 1.0))};
    const boost::math::chi_squared chi(99.0);
    const double lo = boost::math::quantile(chi, 0.0005), hi = boost::math::quantile(chi, 0.9995);
    int rejected = 0;
    for (int r = 0; r < 200; ++r) {
        const auto run = simulate_neyman_scott_debug(p, 100.0, 5000 + r);
        EXPECT_EQ(validate_stream(run.latent), run.latent);
        const auto c = bin_counts(run.latent, 1.0);
        const double m = static_cast<double>(c.sum()) / 100.0;
        double stat = 0.0;
        for (Eigen::Index k = 0; k < c.rows(); ++k) stat += (c(k, 0) - m) * (c(k, 0) - m) / m;
        if (stat < lo || stat > hi) ++rejected;
    }
    EXPECT_LE(rejected, 2);
}
