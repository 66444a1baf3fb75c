#include <gtest/gtest.h>

#include <random>

#include "cskf/moments.hpp"

using namespace cskf;

namespace {

Populations random_pops(std::mt19937_64& rng, double base = 1.0 / 27.0, double jitter = 0.01) {
    std::uniform_real_distribution<double> uni(-jitter, jitter);
    Populations f;
    for (int i = 0; i < kQ; ++i) f[i] = base + uni(rng);
    return f;
}

double max_abs_diff(const Populations& a, const Populations& b) {
    double m = 0;
    for (int i = 0; i < kQ; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST(MomentBasis, ColumnZeroIsOnes) {
    const auto basis = build_basis({0, 0, 0});
    for (int i = 0; i < kQ; ++i) EXPECT_EQ(basis.M[i][0], 1.0);
    // row for c = (1,0,0), column for cbar_x
    EXPECT_EQ(basis.M[1][1], 1.0);
}

TEST(MomentBasis, InversionResidual) {
    const auto basis = build_basis({0.1, 0.05, -0.02});
    double resid = 0;
    for (int i = 0; i < kQ; ++i)
        for (int j = 0; j < kQ; ++j) {
            double s = 0;
            for (int k = 0; k < kQ; ++k) s += basis.M[k][i] * basis.T[k][j];
            resid = std::max(resid, std::fabs(s - (i == j ? 1.0 : 0.0)));
        }
    EXPECT_LT(resid, 1e-10);
}

TEST(MomentBasis, RejectsSupersonicVelocity) {
    EXPECT_THROW(build_basis({0.5, 0, 0}), std::invalid_argument);
}

TEST(Moments, EquilibriumAtRestMatchesAppendixValues) {
    const auto basis = build_basis({0, 0, 0});
    const Populations feq = equilibrium_pops(1.0, {0, 0, 0});
    const MomentVector m = to_moments(feq, basis);
    MomentVector expect{};
    expect[0] = 1.0;
    expect[9] = 1.0;
    expect[17] = 1.0 / 3.0;
    expect[18] = 1.0 / 9.0;
    expect[26] = 1.0 / 27.0;
    for (int j = 0; j < kQ; ++j) EXPECT_NEAR(m[j], expect[j], 1e-15) << "moment " << j;
}

TEST(Moments, ZeroMapsToZero) {
    const auto basis = build_basis({0.05, -0.02, 0.01});
    Populations zero{};
    const MomentVector m = to_moments(zero, basis);
    for (int j = 0; j < kQ; ++j) EXPECT_EQ(m[j], 0.0);
    const Populations back = from_moments(MomentVector{}, basis);
    for (int i = 0; i < kQ; ++i) EXPECT_EQ(back[i], 0.0);
}

TEST(Moments, RoundTrip) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> uvel(-0.2, 0.2);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 u{uvel(rng) * 0.57, uvel(rng) * 0.57, uvel(rng) * 0.57};
        const auto basis = build_basis(u);
        const Populations f = random_pops(rng);
        const Populations back = from_moments(to_moments(f, basis), basis);
        EXPECT_LT(max_abs_diff(f, back), 1e-10);
    }
}

TEST(Moments, CentralFirstMomentsVanish) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Populations f = random_pops(rng);
        double rho;
        Vec3 u;
        pop_macroscopics(f, rho, u);
        const MomentVector m = central_moments(f, u);
        EXPECT_NEAR(m[1], 0.0, 1e-14);
        EXPECT_NEAR(m[2], 0.0, 1e-14);
        EXPECT_NEAR(m[3], 0.0, 1e-14);
        EXPECT_NEAR(m[0], rho, 1e-14);
    }
}

TEST(Moments, FromEquilibriumMomentsGivesWeights) {
    const auto basis = build_basis({0, 0, 0});
    const Populations f = from_moments(equilibrium_moments(1.0, {0, 0, 0}), basis);
    EXPECT_NEAR(f[0], 8.0 / 27.0, 1e-14);
    double sum = 0;
    for (int i = 0; i < kQ; ++i) sum += f[i];
    EXPECT_NEAR(sum, 1.0, 1e-14);
    // oracle: the analytic second-order equilibrium at u=0 is w_i rho
    const Populations feq = equilibrium_pops(1.0, {0, 0, 0});
    EXPECT_LT(max_abs_diff(f, feq), 1e-14);
}

TEST(Moments, ConservedMomentRecovery) {
    const Vec3 u{0.1, 0, 0};
    const auto basis = build_basis(u);
    const Populations f = from_moments(equilibrium_moments(1.0, u), basis);
    double rho;
    Vec3 ru;
    pop_macroscopics(f, rho, ru);
    EXPECT_NEAR(rho, 1.0, 1e-12);
    EXPECT_NEAR(ru.x, 0.1, 1e-12);
    EXPECT_NEAR(ru.y, 0.0, 1e-12);
    EXPECT_NEAR(ru.z, 0.0, 1e-12);

    // arbitrary moments with conserved slots pinned recover (rho, u) exactly
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> uni(-0.01, 0.01);
    MomentVector m{};
    m[0] = 1.2;
    for (int j = 4; j < kQ; ++j) m[j] = uni(rng);
    const Vec3 ub{0.03, -0.06, 0.11};
    const auto basis2 = build_basis(ub);
    const Populations g = from_moments(m, basis2);
    double rho2;
    Vec3 u2;
    pop_macroscopics(g, rho2, u2);
    EXPECT_NEAR(rho2, 1.2, 1e-12);
    EXPECT_NEAR(u2.x, ub.x, 1e-12);
    EXPECT_NEAR(u2.y, ub.y, 1e-12);
    EXPECT_NEAR(u2.z, ub.z, 1e-12);
}

TEST(Moments, EquilibriumSpotValues) {
    const MomentVector m0 = equilibrium_moments(1.0, {0, 0, 0});
    EXPECT_NEAR(m0[17], 1.0 / 3.0, 1e-16);
    const MomentVector m2 = equilibrium_moments(2.0, {0, 0, 0});
    EXPECT_NEAR(m2[26], 2.0 / 27.0, 1e-16);
    const MomentVector m3 = equilibrium_moments(1.0, {0.1, 0.2, 0.3});
    EXPECT_NEAR(m3[16], -0.006, 1e-15);
}

// The appendix equilibrium central moments are identically M(u)^T applied to
// the second-order polynomial equilibrium; this pins equilibrium_pops as the
// closed form of T * m_eq.
TEST(Moments, EquilibriumMomentsMatchPolynomialEquilibrium) {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> uvel(-0.13, 0.13);
    std::uniform_real_distribution<double> urho(0.8, 1.2);
    for (int trial = 0; trial < 30; ++trial) {
        const Vec3 u{uvel(rng), uvel(rng), uvel(rng)};
        const double rho = urho(rng);
        const auto basis = build_basis(u);
        const MomentVector lhs = to_moments(equilibrium_pops(rho, u), basis);
        const MomentVector rhs = equilibrium_moments(rho, u);
        for (int j = 0; j < kQ; ++j) EXPECT_NEAR(lhs[j], rhs[j], 1e-13) << "moment " << j;
    }
}

TEST(Moments, EquilibriumSymmetryUnderAxisSwap) {
    const Vec3 u{0.04, 0.09, -0.03};
    const Vec3 uswap{0.09, 0.04, -0.03};  // x <-> y
    const MomentVector a = equilibrium_moments(1.1, u);
    const MomentVector b = equilibrium_moments(1.1, uswap);
    // m10 (x-flavored third moment) under swap equals m11 of the original
    EXPECT_NEAR(b[10], a[11], 1e-15);
    EXPECT_NEAR(b[11], a[10], 1e-15);
    EXPECT_NEAR(b[12], a[12], 1e-15);
}

TEST(Moments, FactorizedMatchesExplicitBasis) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> uvel(-0.2, 0.2);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 u{uvel(rng) * 0.5, uvel(rng) * 0.5, uvel(rng) * 0.5};
        const auto basis = build_basis(u);
        const Populations f = random_pops(rng);
        const MomentVector m_fast = central_moments(f, u);
        const MomentVector m_ref = to_moments(f, basis);
        for (int j = 0; j < kQ; ++j) EXPECT_NEAR(m_fast[j], m_ref[j], 1e-12);
        const Populations f_fast = pops_from_central(m_ref, u);
        const Populations f_ref = from_moments(m_ref, basis);
        EXPECT_LT(max_abs_diff(f_fast, f_ref), 1e-12);
    }
}
