#include "hwvar/inversion.hpp"
#include "hwvar/oracle.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace hwvar;

namespace {

const SystematicQuadrature& quad128() {
    static const auto q = build_quadrature(128);
    return q;
}

InversionConfig level(int m) {
    InversionConfig cfg;
    cfg.m = m;
    return cfg;
}

} // namespace

TEST(InversionConfig, DefaultsAndValidation) {
    const auto cfg = level(10);
    EXPECT_EQ(cfg.nodes(), 4096);
    EXPECT_NEAR(std::pow(cfg.circle_radius(), 2.0 * cfg.nodes()), 1e-8, 1e-20);
    // s = -2^m ln r on the circle: real part ln 10 for every m at the default J.
    EXPECT_NEAR(-std::ldexp(1.0, 10) * std::log(cfg.circle_radius()), std::log(10.0), 1e-12);
    EXPECT_NO_THROW(cfg.validate());

    auto bad = cfg;
    bad.radius = 1.0;
    EXPECT_THROW(bad.validate(), InputError);
    bad.radius = 0.0;
    EXPECT_THROW(bad.validate(), InputError);
    bad = cfg;
    bad.trapezoid_nodes = 1023;
    EXPECT_THROW(bad.validate(), InputError);
    bad = cfg;
    bad.m = 0;
    EXPECT_THROW(bad.validate(), InputError);
}

TEST(Inversion, QOfNoLossPortfolioIsGeometricSum) {
    const Portfolio p({{"a", 0.4, 0.0}, {"b", 0.6, 0.0}}, 0.15);
    for (int m : {3, 6}) {
        for (double z : {0.1, 0.5, 0.9}) {
            double geometric = 0.0;
            for (int k = 0; k < (1 << m); ++k)
                geometric += std::pow(z, k);
            geometric *= std::exp2(-0.5 * m);
            const Complex q = q_eval(p, level(m), z, quad128());
            EXPECT_NEAR(q.real(), geometric, 1e-12 * geometric);
            EXPECT_NEAR(q.imag(), 0.0, 1e-12);
        }
    }
}

TEST(Inversion, QOfSureLossPortfolioVanishes) {
    const Portfolio p({{"a", 0.25, 1.0}, {"b", 0.75, 1.0}}, 0.15);
    for (Complex z : {Complex(0.3, 0), Complex(0.5, 0.4), Complex(-0.7, 0.1), Complex(0.2, -0.9)})
        EXPECT_LT(std::abs(q_eval(p, level(6), z, quad128())), 1e-12);
}

TEST(Inversion, QIsRealOnRealAxis) {
    std::mt19937_64 rng(2);
    const auto p = support::random_portfolio(rng, 6, 0.001, 0.3, 0.15);
    for (double z : {0.05, 0.5, 0.95, 0.9999})
        EXPECT_NEAR(q_eval(p, level(8), z, quad128()).imag(), 0.0, 1e-12);
}

TEST(Inversion, QDomain) {
    const Portfolio p({{"a", 1.0, 0.1}}, 0.15);
    EXPECT_THROW(q_eval(p, level(4), 0.0, quad128()), DomainError);
    EXPECT_THROW(q_eval(p, level(4), 1.0, quad128()), DomainError);
    EXPECT_THROW(q_eval(p, level(4), Complex(0.8, 0.8), quad128()), DomainError);
}

TEST(Inversion, EngineNodesMatchDirectQ) {
    std::mt19937_64 rng(6);
    const auto p = support::random_portfolio(rng, 7, 0.001, 0.3, 0.5);
    const auto cfg = level(5);
    const InversionEngine engine(p, cfg, quad128(), 1);
    const long J = cfg.nodes();
    for (long j : {0L, 1L, J / 3, J - 1, J}) {
        const Complex z = std::polar(cfg.circle_radius(), std::numbers::pi * static_cast<double>(j) / static_cast<double>(J));
        EXPECT_NEAR(engine.node_values()[static_cast<std::size_t>(j)], q_eval(p, cfg, z, quad128()).real(), 1e-12);
    }
}

TEST(Inversion, NoLossPortfolioCoefficients) {
    const Portfolio p({{"a", 0.5, 0.0}, {"b", 0.5, 0.0}}, 0.15);
    for (int m : {3, 6, 10}) {
        const auto all = compute_all_coefficients(p, level(m), quad128(), 1);
        for (double c : all.raw)
            EXPECT_NEAR(c, std::exp2(-0.5 * m), 1e-8);
        EXPECT_NEAR(compute_coefficient(p, level(m), 0, quad128()).raw, std::exp2(-0.5 * m), 1e-8);
    }
}

TEST(Inversion, SureLossPortfolioCoefficients) {
    const Portfolio p({{"a", 0.3, 1.0}, {"b", 0.7, 1.0}}, 0.15);
    const auto all = compute_all_coefficients(p, level(8), quad128(), 1);
    for (double c : all.raw)
        EXPECT_NEAR(c, 0.0, 1e-10);
}

TEST(Inversion, SingleObligorStepCdf) {
    // F = 0.95 on [0,1); c_{8,k} = <F, phi_{8,k}> integrated independently.
    const Portfolio p({{"a", 1.0, 0.05}}, 0.15);
    const int m = 8;
    const auto all = compute_all_coefficients(p, level(m), quad128(), 1);
    for (long k = 0; k <= 254; ++k) {
        const double lo = std::ldexp(static_cast<double>(k), -m), hi = std::ldexp(static_cast<double>(k + 1), -m);
        const double oracle = support::adaptive_simpson(
            [&](double x) { return 0.95 * haar::phi(m, k, std::min(x, std::nextafter(hi, lo))); }, lo, hi, 1e-14);
        EXPECT_NEAR(oracle, 0.059375, 1e-12);
        EXPECT_NEAR(all.raw[static_cast<std::size_t>(k)], oracle, 1e-6) << k;
    }
}

TEST(Inversion, BatchEqualsPerCoefficient) {
    std::mt19937_64 rng(12);
    const auto p = support::random_portfolio(rng, 5, 0.001, 0.3, 0.15);
    const auto cfg = level(6);
    const auto all = compute_all_coefficients(p, cfg, quad128(), 3);
    for (long k = 0; k < cfg.intervals(); ++k)
        EXPECT_NEAR(all.raw[static_cast<std::size_t>(k)], compute_coefficient(p, cfg, k, quad128()).raw, 1e-14);
    EXPECT_THROW(compute_coefficient(p, cfg, 64, quad128()), InputError);
    EXPECT_THROW(compute_coefficient(p, cfg, -1, quad128()), InputError);
}

TEST(Inversion, ThreadCountDoesNotChangeBits) {
    std::mt19937_64 rng(13);
    const auto p = support::random_portfolio(rng, 11, 0.001, 0.3, 0.5);
    const auto a = compute_all_coefficients(p, level(7), quad128(), 1);
    const auto b = compute_all_coefficients(p, level(7), quad128(), 4);
    EXPECT_EQ(a.raw, b.raw);
}

// Atoms on the dyadic grid make Q a polynomial of degree < 2^m, where the
// contour integral is exact; the enumeration oracle must then be reproduced
// up to aliasing/round-off.
TEST(Inversion, LatticePortfoliosMatchEnumerationOracle) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 12; ++trial) {
        const int m = 6 + trial % 3;
        const double rho = (trial % 3 == 0) ? 0.0 : (trial % 3 == 1 ? 0.15 : 0.5);
        const auto p = support::random_lattice_portfolio(rng, 1 + trial % 10, m, 0.001, 0.3, rho);
        const auto atoms = oracle::enumerate_exact(p, quad128(), 1);
        const auto exact = oracle::exact_coefficients(atoms, m);
        const auto inv = compute_all_coefficients(p, level(m), quad128(), 1);
        const double hi = std::exp2(-0.5 * m);
        for (std::size_t k = 0; k < exact.size(); ++k) {
            EXPECT_NEAR(inv.raw[k], exact[k], 1e-8) << "trial " << trial << " k " << k;
            EXPECT_GE(inv.raw[k], -1e-6);
            EXPECT_LE(inv.raw[k], hi + 1e-6);
            if (k > 0)
                EXPECT_GE(inv.raw[k], inv.raw[k - 1] - 1e-6);
        }
        EXPECT_TRUE(inv.clamped.empty());
    }
}

namespace {

double doubling_change(const Portfolio& p, int m) {
    auto cfg = level(m);
    const auto base = compute_all_coefficients(p, cfg, quad128(), 0);
    cfg.trapezoid_nodes = 2 * cfg.nodes();
    const auto fine = compute_all_coefficients(p, cfg, quad128(), 0);
    double worst = 0.0;
    for (std::size_t k = 0; k < base.raw.size(); ++k)
        worst = std::max(worst, std::abs(base.raw[k] - fine.raw[k]));
    return worst;
}

} // namespace

TEST(Inversion, DoublingTrapezoidNodesIsStable) {
    EXPECT_LT(doubling_change(generate_concentrated(100, 0.0021, 0.15), 10), 1e-6);
    EXPECT_LT(doubling_change(generate_concentrated(1000, 0.003, 0.15), 10), 1e-6);
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 4; ++trial)
        EXPECT_LT(doubling_change(support::random_lattice_portfolio(rng, 3 + 2 * trial, 8, 0.001, 0.3, 0.15), 8), 1e-6);
}

TEST(Inversion, IntegrationByPartsIdentity) {
    // M(s) = e^{-s} + s int_0^1 e^{-sx} F(x) dx with the step CDF F = 1 - pd on [0,1).
    const double pd = 0.05;
    const Portfolio p({{"a", 1.0, pd}}, 0.15);
    for (double s : {0.5, 1.0, 5.0}) {
        const double rhs =
            std::exp(-s) + s * support::adaptive_simpson([&](double x) { return std::exp(-s * x) * (1.0 - pd); }, 0.0,
                                                         1.0, 1e-14);
        EXPECT_NEAR(unconditional_mgf(p, s, quad128()).real(), rhs, 1e-8);
    }
}

TEST(Inversion, ClampingIsAudited) {
    // A deliberately tiny circle amplifies round-off by r^{-k} far beyond the bounds.
    const Portfolio p({{"a", 0.3, 0.2}, {"b", 0.7, 0.1}}, 0.15);
    auto cfg = level(8);
    cfg.radius = 0.5;
    const auto all = compute_all_coefficients(p, cfg, quad128(), 1);
    EXPECT_FALSE(all.clamped.empty());
    for (long k = 0; k < cfg.intervals(); ++k) {
        const double c = all.approx.at(k);
        EXPECT_GE(c, 0.0);
        EXPECT_LE(c, std::exp2(-4.0));
    }
}
