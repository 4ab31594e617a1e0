#include "blpp/core.hpp"
#include "blpp/kernels.hpp"
#include "blpp/rng.hpp"
#include "blpp/simulate.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace blpp;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST(ValidateStream, AcceptsSortedInRange) {
    const auto s = validate_stream({0.5, 1.2}, {0, 1}, 2.0, 2);
    EXPECT_EQ(s.size(), 2u);
    EXPECT_EQ(s.dim(), 2);
}

TEST(ValidateStream, RejectsDuplicateTimes) {
    EXPECT_EQ(code_of([] { validate_stream({1.0, 1.0}, {0, 0}, 2.0, 1); }), ErrorCode::NonIncreasingTimes);
    EXPECT_EQ(code_of([] { validate_stream({1.5, 1.0}, {0, 0}, 2.0, 1); }), ErrorCode::NonIncreasingTimes);
}

TEST(ValidateStream, RejectsBadMark) {
    EXPECT_EQ(code_of([] { validate_stream({0.5}, {3}, 2.0, 2); }), ErrorCode::MarkOutOfRange);
    EXPECT_EQ(code_of([] { validate_stream({0.5}, {-1}, 2.0, 2); }), ErrorCode::MarkOutOfRange);
}

TEST(ValidateStream, WindowIsHalfOpen) {
    EXPECT_EQ(code_of([] { validate_stream({2.0}, {0}, 2.0, 1); }), ErrorCode::TimeOutOfWindow);
    EXPECT_EQ(code_of([] { validate_stream({-0.1}, {0}, 2.0, 1); }), ErrorCode::TimeOutOfWindow);
    EXPECT_NO_THROW(validate_stream({0.0, std::nextafter(2.0, 0.0)}, {0, 0}, 2.0, 1));
}

TEST(ValidateStream, Idempotent) {
    const auto s = simulate_poisson(Vector::Constant(2, 1.5), 50.0, 3);
    EXPECT_EQ(validate_stream(s), s);
}

TEST(BinCounts, EmptyStream) {
    const EventStream s({}, {}, 1.0, 3);
    const auto c = bin_counts(s, 0.5);
    EXPECT_EQ(c.rows(), 2);
    EXPECT_EQ(c.cols(), 3);
    EXPECT_EQ(c.sum(), 0);
}

TEST(BinCounts, SingleEvent) {
    const EventStream s({0.3}, {0}, 1.0, 2);
    const auto c = bin_counts(s, 0.5);
    EXPECT_EQ(c(0, 0), 1);
    EXPECT_EQ(c.sum(), 1);
}

TEST(BinCounts, TotalsMatchEventCounts) {
    const auto s = simulate_poisson(Vector::Constant(3, 2.0), 100.0, 11);
    const auto c = bin_counts(s, 0.7);
    EXPECT_EQ(c.rows(), static_cast<Eigen::Index>(std::ceil(100.0 / 0.7)));
    const auto per_mark = s.counts_by_mark();
    for (int j = 0; j < 3; ++j) EXPECT_EQ(c.col(j).sum(), per_mark[static_cast<std::size_t>(j)]);
    EXPECT_EQ(c.sum(), static_cast<std::int64_t>(s.size()));
}

TEST(BinCounts, PoissonColumnMean) {
    const auto s = simulate_poisson(Vector::Constant(1, 2.0), 1000.0, 5);
    const auto c = bin_counts(s, 1.0);
    const double mean = static_cast<double>(c.sum()) / static_cast<double>(c.rows());
    EXPECT_NEAR(mean, 2.0, 3.0 * std::sqrt(2.0 / 1000.0));
}

TEST(SampleKernel, ZeroKernel) {
    const auto k = sample_kernel(MatrixKernel(2), LagGrid(0.5, 4));
    for (const auto& v : k.values()) EXPECT_EQ(max_abs(v), 0.0);
}

TEST(SampleKernel, TruncatedExponential) {
    const auto k = sample_kernel(MatrixKernel::scalar(ScalarKernel::exponential(0.8, 1.0, 1.6)), LagGrid(0.5, 4));
    EXPECT_DOUBLE_EQ(k[0](0, 0), 0.8 * std::exp(-0.25));
    EXPECT_EQ(k[3](0, 0), 0.0); // lag 1.75 beyond the support
    EXPECT_DOUBLE_EQ(k.support(0, 0), 1.6);
}

TEST(SampleKernel, Indicator) {
    const auto k = sample_kernel(MatrixKernel::scalar(ScalarKernel::box(1.0, 1.0)), LagGrid(0.5, 4));
    const double expected[] = {1, 1, 0, 0};
    for (int i = 0; i < 4; ++i) EXPECT_EQ(k[i](0, 0), expected[i]);
}

TEST(SampleKernel, Linear) {
    const LagGrid g(0.1, 30);
    MatrixKernel a(2), b(2);
    a.entry(0, 1) = ScalarKernel::exponential(0.4, 2.0);
    a.entry(1, 1) = ScalarKernel::box(0.3, 1.2);
    b.entry(0, 1) = ScalarKernel::box(0.2, 0.5);
    b.entry(1, 0) = ScalarKernel::exponential(0.1, 0.5, 2.0);
    const auto sum = sample_kernel(a + b, g);
    const auto sa = sample_kernel(a, g), sb = sample_kernel(b, g);
    for (int k = 0; k < g.size(); ++k) EXPECT_EQ(sum[k], sa[k] + sb[k]);
}

TEST(KernelGrid, PiecewiseConstantLookup) {
    const LagGrid g(0.5, 4);
    KernelGrid k(g, {Matrix::Constant(1, 1, 4), Matrix::Constant(1, 1, 3), Matrix::Constant(1, 1, 2),
                     Matrix::Constant(1, 1, 1)},
                 Matrix::Constant(1, 1, 1.7));
    EXPECT_EQ(k.value(0, 0, 0.1), 4.0);
    EXPECT_EQ(k.value(0, 0, 0.6), 3.0);
    EXPECT_EQ(k.value(0, 0, 1.69), 1.0);
    EXPECT_EQ(k.value(0, 0, 1.7), 0.0);
    EXPECT_EQ(k.value(0, 0, -0.1), 0.0);
    EXPECT_EQ(k.tail_sup(0, 0, 0.6), 3.0);
    EXPECT_EQ(k.tail_sup(0, 0, -1.0), 4.0);
}

TEST(KernelGrid, RejectsSupportBeyondGrid) {
    EXPECT_EQ(code_of([] { KernelGrid(LagGrid(0.5, 2), {Matrix::Zero(1, 1), Matrix::Zero(1, 1)}, Matrix::Constant(1, 1, 1.5)); }),
              ErrorCode::InvalidArgument);
}

TEST(CovarianceGrid, RequiresPositiveRates) {
    EXPECT_EQ(code_of([] { CovarianceGrid(LagGrid(1, 1), Vector::Zero(1), {Matrix::Zero(1, 1)}); }),
              ErrorCode::NonPositiveRate);
}

TEST(CovarianceGrid, MarkDistribution) {
    const CovarianceGrid c(LagGrid(1, 1), (Vector(2) << 1.0, 3.0).finished(), {Matrix::Zero(2, 2)});
    EXPECT_DOUBLE_EQ(c.mark_distribution()(1), 0.75);
    EXPECT_EQ(c.atom(), Matrix(Vector((Vector(2) << 1.0, 3.0).finished()).asDiagonal()));
}

// Known-answer vectors of the Philox4x32-10 reference implementation.
TEST(Philox, KnownAnswers) {
    using P = Philox4x32;
    EXPECT_EQ(P::block({0, 0, 0, 0}, {0, 0}), (P::Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(P::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (P::Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(P::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (P::Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsDiffer) {
    Philox4x32 a(42, 0), b(42, 1), c(42, 0);
    const auto x = a(), y = b(), z = c();
    EXPECT_NE(x, y);
    EXPECT_EQ(x, z);
}

TEST(Philox, UniformMoments) {
    Philox4x32 rng(9);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        s += u;
        s2 += u * u;
    }
    EXPECT_NEAR(s / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12.0, 2e-3);
}
