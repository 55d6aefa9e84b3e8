#include "hwvar/normal.hpp"
#include "hwvar/vasicek.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace hwvar;

TEST(Normal, InverseMatchesBisectionOracle) {
    for (double p : {1e-10, 1e-8, 1e-5, 0.0021, 0.01, 0.1, 0.3, 0.5, 0.7, 0.99, 0.999, 1 - 1e-8}) {
        // Bisection on Phi loses digits above 1/2; use the symmetric form there.
        const double ref = p > 0.5 ? -support::ref_inverse_cdf(1.0 - p) : support::ref_inverse_cdf(p);
        EXPECT_NEAR(normal::inverse_cdf(p), ref, 1e-12 * std::max(1.0, std::abs(ref))) << p;
    }
    // Relative accuracy of the round trip over the bulk.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-9.0, 0.0);
    for (int i = 0; i < 2000; ++i) {
        const double p = std::pow(10.0, u(rng));
        const double x = normal::inverse_cdf(p);
        EXPECT_NEAR(normal::cdf(x) / p, 1.0, 1e-12) << p;
    }
}

TEST(Normal, TailsClampGracefully) {
    EXPECT_EQ(normal::cdf(-40.0), 0.0);
    EXPECT_EQ(normal::cdf(40.0), 1.0);
    EXPECT_GT(normal::cdf(-37.0), 0.0);
    EXPECT_TRUE(std::isfinite(normal::inverse_cdf(1e-300)));
    EXPECT_LT(normal::inverse_cdf(1e-300), -37.0);
}

TEST(Vasicek, DefaultThreshold) {
    EXPECT_EQ(default_threshold(0.5), 0.0);
    // bisection oracle, also -2.86273626350590398 to 18 digits by mpmath
    EXPECT_NEAR(default_threshold(0.0021), support::ref_inverse_cdf(0.0021), 1e-12);
    EXPECT_NEAR(default_threshold(0.0021), -2.86273626350590398, 1e-12);
    EXPECT_EQ(default_threshold(0.0), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(default_threshold(1.0), std::numeric_limits<double>::infinity());
}

TEST(Vasicek, ConditionalPd) {
    EXPECT_EQ(conditional_pd(0.5, 0.15, 0.0), 0.5);
    EXPECT_EQ(conditional_pd(0.01, 0.0, 3.7), 0.01);
    // (Phi^{-1}(0.01) + 2 sqrt(0.15)) / sqrt(0.85) = -1.683110496..., Phi of that
    const double arg = (support::ref_inverse_cdf(0.01) + 2.0 * std::sqrt(0.15)) / std::sqrt(0.85);
    EXPECT_NEAR(arg, -1.68311049638888, 1e-11);
    EXPECT_NEAR(conditional_pd(0.01, 0.15, -2.0), support::ref_cdf(arg), 1e-13);
    EXPECT_NEAR(conditional_pd(0.01, 0.15, -2.0), 0.0461768514552664, 1e-13);
    EXPECT_EQ(conditional_pd(0.0, 0.5, -30.0), 0.0);
    EXPECT_EQ(conditional_pd(1.0, 0.5, 30.0), 1.0);
}

TEST(Vasicek, ConditionalPdMonotone) {
    for (double rho : {0.05, 0.15, 0.5, 0.9}) {
        double prev = 2.0;
        for (double y = -8.0; y <= 8.0; y += 0.05) {
            const double p = conditional_pd(0.02, rho, y);
            EXPECT_LE(p, prev);
            prev = p;
        }
        double prev_pd = -1.0;
        for (double pd = 0.0; pd <= 1.0; pd += 0.01) {
            const double p = conditional_pd(pd, rho, 0.7);
            EXPECT_GE(p, prev_pd);
            prev_pd = p;
        }
    }
}

TEST(Vasicek, QuadratureMoments) {
    for (int order : {2, 3, 8, 32, 64, 128, 256}) {
        const auto q = build_quadrature(order);
        ASSERT_EQ(q.size(), static_cast<std::size_t>(order));
        double sum = 0.0, second = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            EXPECT_GT(q.weights[i], 0.0);
            if (i > 0)
                EXPECT_LT(q.nodes[i - 1], q.nodes[i]);
            sum += q.weights[i];
            second += q.weights[i] * q.nodes[i] * q.nodes[i];
        }
        EXPECT_NEAR(sum, 1.0, 1e-12) << order;
        EXPECT_NEAR(second, 1.0, 1e-12) << order;
    }
    // Exact up to degree 2n-1: E[Y^6] = 15 needs n >= 4.
    const auto q4 = build_quadrature(4);
    EXPECT_NEAR(q4.integrate([](double y) { return std::pow(y, 6); }), 15.0, 1e-12);
    EXPECT_THROW(build_quadrature(1), InputError);
}

TEST(Vasicek, QuadratureIntegratesPhi) {
    const auto q = build_quadrature(64);
    const double oracle = support::gaussian_expectation([](double y) { return support::ref_cdf(y); });
    EXPECT_NEAR(oracle, 0.5, 1e-12);
    EXPECT_NEAR(q.integrate([](double y) { return normal::cdf(y); }), oracle, 1e-12);
}

TEST(Vasicek, ConditionalMgf) {
    const Portfolio p({{"a", 0.3, 0.2}, {"b", 0.7, 0.05}}, 0.15);
    EXPECT_EQ(conditional_mgf(p, 0.0, 1.3), Complex(1.0, 0.0));
    EXPECT_EQ(conditional_mgf(p, 0.0, -4.0), Complex(1.0, 0.0));

    const Portfolio sure({{"a", 0.3, 1.0}, {"b", 0.7, 1.0}}, 0.15);
    for (Complex s : {Complex(0.5, 0), Complex(2, -3), Complex(9.2, 700)}) {
        const Complex got = conditional_mgf(sure, s, 0.4);
        EXPECT_NEAR(std::abs(got - std::exp(-s)), 0.0, 1e-14);
    }

    const Portfolio single({{"a", 1.0, 0.5}}, 0.15);
    EXPECT_NEAR(conditional_mgf(single, 1.0, 0.0).real(), 0.5 + 0.5 * std::exp(-1.0), 1e-15);
    EXPECT_NEAR(conditional_mgf(single, 1.0, 0.0).real(), 0.683939720585721, 1e-14);
}

TEST(Vasicek, LawOfTotalProbability) {
    const auto q = build_quadrature(128);
    for (double pd : {0.001, 0.01, 0.1, 0.5})
        for (double rho : {0.0, 0.15, 0.5}) {
            const double mean = q.integrate([&](double y) { return conditional_pd(pd, rho, y); });
            EXPECT_NEAR(mean, pd, 1e-9) << pd << " " << rho;
        }
}

TEST(Vasicek, SingleObligorUnconditionalMgf) {
    const auto q = build_quadrature(128);
    for (double pd : {0.003, 0.05, 0.4})
        for (double rho : {0.0, 0.15, 0.5}) {
            const Portfolio p({{"a", 1.0, pd}}, rho);
            // Independent check of the identity behind the expected value.
            const double oracle_mean =
                support::gaussian_expectation([&](double y) {
                    return support::ref_cdf((support::ref_inverse_cdf(pd) - std::sqrt(rho) * y) / std::sqrt(1 - rho));
                });
            EXPECT_NEAR(oracle_mean, pd, 1e-10);
            for (Complex s : {Complex(0.5, 0), Complex(1, 0), Complex(5, 0), Complex(1, 3)}) {
                const Complex expect = 1.0 - pd + pd * std::exp(-s);
                EXPECT_LT(std::abs(unconditional_mgf(p, s, q) - expect), 1e-10);
            }
        }
}

TEST(Vasicek, UnconditionalMgfProperties) {
    const auto q = build_quadrature(64);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = support::random_portfolio(rng, 1 + trial, 0.001, 0.3, trial % 2 ? 0.15 : 0.5);
        EXPECT_NEAR(std::abs(unconditional_mgf(p, 0.0, q) - 1.0), 0.0, 1e-12);
        double prev = 2.0;
        for (double s = 0.0; s < 30.0; s += 0.5) {
            const Complex v = unconditional_mgf(p, s, q);
            EXPECT_EQ(v.imag(), 0.0);
            EXPECT_GT(v.real(), 0.0);
            EXPECT_LE(v.real(), prev + 1e-15);
            EXPECT_GE(v.real(), std::exp(-s) - 1e-12);
            prev = v.real();
        }
        std::uniform_real_distribution<double> re(0.0, 20.0), im(-2000.0, 2000.0);
        for (int i = 0; i < 50; ++i)
            EXPECT_LE(std::abs(unconditional_mgf(p, Complex(re(rng), im(rng)), q)), 1.0 + 1e-12);
    }
    const Portfolio none({{"a", 0.5, 0.0}, {"b", 0.5, 0.0}}, 0.3);
    for (Complex s : {Complex(0.3, 0), Complex(4, 100)})
        EXPECT_LT(std::abs(unconditional_mgf(none, s, q) - 1.0), 1e-15);
}

TEST(Vasicek, MgfTableMatchesDirectSum) {
    const auto q = build_quadrature(32);
    std::mt19937_64 rng(9);
    auto p = support::random_portfolio(rng, 9, 0.001, 0.3, 0.15);
    auto obligors = p.obligors();
    obligors[2].pd = 1.0;
    obligors[4].pd = 0.0;
    const Portfolio mixed(obligors, 0.15);
    const MgfTable table(mixed, q);
    for (Complex s : {Complex(0, 0), Complex(0.7, 0), Complex(9.2, -512), Complex(3, 3000)})
        EXPECT_LT(std::abs(table(s) - unconditional_mgf(mixed, s, q)), 1e-13);
}
