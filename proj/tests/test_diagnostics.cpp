#include <gtest/gtest.h>

#include <cmath>

#include "cskf/diagnostics.hpp"

using namespace cskf;

namespace {

ScaleBlock periodic_block(int n, double nu) {
    ScaleBlock b({0, 0, 0}, 1.0, {n, n, n});
    b.periodic = {true, true, true};
    b.relax = default_schedule();
    b.relax.nu = nu;
    b.finalize();
    return b;
}

}  // namespace

TEST(Diagnostics, KineticEnergyClosedForms) {
    ScaleBlock calm = periodic_block(8, 0.01);
    calm.initialize(1.0, Vec3{0, 0, 0});
    EXPECT_EQ(kinetic_energy(calm), 0.0);

    ScaleBlock moving = periodic_block(8, 0.01);
    moving.initialize(1.0, Vec3{0.1, 0, 0});
    EXPECT_NEAR(kinetic_energy(moving), 0.5 * 512 * 0.01, 1e-12);

    // planar Taylor-Green at amplitude A on N^3: discrete sums of sin^2/cos^2
    // are exactly N/2, so E = A^2 N^3 / 4
    ScaleBlock tg = periodic_block(16, 0.01);
    taylor_green_init(tg, 0.02, 1);
    tg.macro_pass();
    EXPECT_NEAR(kinetic_energy(tg), 0.02 * 0.02 * 4096 / 4.0, 1e-12);
}

TEST(Diagnostics, TaylorGreenInitProperties) {
    ScaleBlock b = periodic_block(32, 0.01);
    taylor_green_init(b, 0.0, 1);
    b.macro_pass();
    EXPECT_EQ(kinetic_energy(b), 0.0);  // zero amplitude -> calm

    taylor_green_init(b, 0.02, 1);
    b.macro_pass();
    // discrete central-difference divergence stays small
    double max_div = 0;
    for (int z = 1; z < 31; ++z)
        for (int y = 1; y < 31; ++y)
            for (int x = 1; x < 31; ++x) {
                const auto g = b.velocity_gradient(x, y, z);
                max_div = std::max(max_div, std::fabs(g[0][0] + g[1][1] + g[2][2]));
            }
    EXPECT_LT(max_div, 1e-3 * 0.02);

    EXPECT_THROW(taylor_green_init(b, 0.2, 1), std::invalid_argument);
}

TEST(Diagnostics, EnergyMonotoneUnderViscousDecay) {
    ScaleBlock b = periodic_block(16, 0.01);
    taylor_green_init(b, 0.02, 1);
    b.macro_pass();
    double prev = kinetic_energy(b);
    for (int t = 0; t < 200; ++t) {
        b.step();
        const double e = kinetic_energy(b);
        ASSERT_LT(e, prev + 1e-14) << "step " << t;
        prev = e;
    }
}

TEST(Diagnostics, DecayRateFitRecoversViscosity) {
    // quick 16^3 variant; the acceptance suite runs the 32^3 criterion
    ScaleBlock b = periodic_block(16, 0.01);
    const double fit = taylor_green_fitted_nu(b, 0.02, 1, 600);
    EXPECT_NEAR(fit, 0.01, 0.05 * 0.01);
}

TEST(Diagnostics, FitConvergesWithResolution) {
    ScaleBlock b16 = periodic_block(16, 0.005);
    ScaleBlock b32 = periodic_block(32, 0.005);
    const double e16 = std::fabs(taylor_green_fitted_nu(b16, 0.02, 1, 400) - 0.005);
    const double e32 = std::fabs(taylor_green_fitted_nu(b32, 0.02, 1, 400) - 0.005);
    EXPECT_LT(e32, e16);
}

TEST(Diagnostics, ReportLineFormat) {
    auto ref = std::make_unique<ScaleBlock>(Vec3{0, 0, 0}, 1.0, Vec3i{6, 6, 6});
    ref->periodic = {true, true, true};
    ref->relax = default_schedule();
    ref->relax.nu = 0.01;
    ref->finalize();
    ref->initialize(1.0, Vec3{0, 0, 0});
    ScaleGraph g;
    g.blocks.push_back(std::move(ref));
    g.reference = 0;
    g.finalize();
    advance(g);
    const DiagnosticsReport r = collect_diagnostics(g);
    EXPECT_EQ(r.iteration, 1);
    EXPECT_NEAR(r.block_mass[0], 216.0, 1e-9);
    std::ostringstream os;
    write_report_line(os, r);
    const std::string line = os.str();
    EXPECT_NE(line.find("iter=1"), std::string::npos);
    EXPECT_NE(line.find("mass="), std::string::npos);
    EXPECT_NE(line.find("ms="), std::string::npos);
    EXPECT_EQ(line.back(), '\n');
}
