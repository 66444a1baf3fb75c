#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <string>

#include "cskf/diagnostics.hpp"
#include "cskf/runner.hpp"
#include "cskf/scalegen.hpp"
#include "cskf/scheduler.hpp"

namespace cskf {

struct BenchResult {
    bool pass = false;
    std::string detail;
};

namespace bench {

inline std::unique_ptr<ScaleBlock> periodic_box(int n, double nu) {
    auto b = std::make_unique<ScaleBlock>(Vec3{0, 0, 0}, 1.0, Vec3i{n, n, n});
    b->periodic = {true, true, true};
    b->relax = default_schedule();
    b->relax.nu = nu;
    b->finalize();
    return b;
}

// Viscous-decay oracle: fitted viscosity within tol of the configured one.
inline BenchResult taylor_green(int n = 32, double nu = 0.01, double tol = 0.03,
                                int steps = 2000) {
    auto b = periodic_box(n, nu);
    const double fit = taylor_green_fitted_nu(*b, 0.02, 1, steps);
    const double rel = std::fabs(fit - nu) / nu;
    std::ostringstream os;
    os << "fitted nu = " << fit << " vs " << nu << " (rel err " << rel * 100 << "%, tol "
       << tol * 100 << "%)";
    return {rel < tol, os.str()};
}

// Plane Couette: linear profile between the pinned near-wall layers.
inline BenchResult couette(int n = 16, double nu = 0.1, double lid = 0.05, int steps = 3000,
                           double tol = 0.01) {
    ScaleBlock b({0, 0, 0}, 1.0, {n, n, n});
    b.periodic = {true, true, false};
    b.relax = default_schedule();
    b.relax.nu = nu;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            b.flags[b.idx(x, y, 0)] = CellFlag::Solid;
            b.flags[b.idx(x, y, n - 1)] = CellFlag::Solid;
            b.set_macros(b.idx(x, y, n - 1), 1.0, {lid, 0, 0});
        }
    b.finalize();
    b.initialize(1.0, Vec3{0, 0, 0});
    for (int t = 0; t < steps; ++t) b.step();
    double max_dev = 0;
    for (int z = 1; z <= n - 2; ++z) {
        const double expect = lid * double(z - 1) / double(n - 3);
        max_dev = std::max(max_dev, std::fabs(b.ux[b.idx(n / 2, n / 2, z)] - expect));
    }
    std::ostringstream os;
    os << "max profile deviation " << max_dev / lid * 100 << "% of lid speed (tol " << tol * 100
       << "%)";
    return {max_dev / lid < tol, os.str()};
}

// Channel flow driven through a velocity inlet and zero-gradient outlet:
// the developed streamwise profile matches the flux-matched parabola.
inline BenchResult poiseuille(int nx = 16, int ny = 16, int nz = 64, double nu = 0.1,
                              double u_in = 0.04, int steps = 6000, double tol = 0.02) {
    ScaleBlock b({0, 0, 0}, 1.0, {nx, ny, nz});
    b.periodic = {true, false, false};
    b.relax = default_schedule();
    b.relax.nu = nu;
    for (int z = 0; z < nz; ++z)
        for (int x = 0; x < nx; ++x) {
            b.flags[b.idx(x, 0, z)] = CellFlag::Solid;
            b.flags[b.idx(x, ny - 1, z)] = CellFlag::Solid;
        }
    for (int y = 1; y < ny - 1; ++y)
        for (int x = 0; x < nx; ++x) {
            const std::int64_t in = b.idx(x, y, 0);
            b.flags[in] = CellFlag::Inlet;
            b.set_macros(in, 1.0, {0, 0, u_in});
            b.flags[b.idx(x, y, nz - 1)] = CellFlag::Outflow;
        }
    b.finalize();
    b.initialize(1.0, Vec3{0, 0, 0});
    for (int t = 0; t < steps; ++t) b.step();

    // station well past the development length; flux-matched parabola with
    // zeros at the pinned layers y = 1 and y = ny-2
    const int station = (3 * nz) / 4;
    const double c = 0.5 * (1.0 + double(ny - 2));
    const double h = 0.5 * double(ny - 3);
    double mean = 0;
    int count = 0;
    for (int y = 1; y <= ny - 2; ++y) {
        mean += b.uz[b.idx(nx / 2, y, station)];
        ++count;
    }
    mean /= count;
    const double u_max = 1.5 * mean;
    double max_dev = 0;
    for (int y = 1; y <= ny - 2; ++y) {
        const double xi = (double(y) - c) / h;
        const double expect = u_max * (1.0 - xi * xi);
        max_dev = std::max(max_dev, std::fabs(b.uz[b.idx(nx / 2, y, station)] - expect));
    }
    std::ostringstream os;
    os << "max parabola deviation " << max_dev / u_max * 100 << "% of peak (tol " << tol * 100
       << "%)";
    return {max_dev / u_max < tol, os.str()};
}

struct TwoScaleSetup {
    ScaleGraph graph;
    std::unique_ptr<ScaleBlock> twin;
};

inline TwoScaleSetup two_scale_taylor_green(int n, double nu, double alpha, Vec3 origin,
                                            Vec3i fine_extent_cells) {
    TwoScaleSetup s;
    auto ref = periodic_box(n, nu);
    taylor_green_init(*ref, 0.02, 1);
    ref->macro_pass();
    s.twin = periodic_box(n, nu);
    taylor_green_init(*s.twin, 0.02, 1);
    s.twin->macro_pass();

    const double dxf = 1.0 / alpha;
    Vec3i dims{int(fine_extent_cells.x / dxf), int(fine_extent_cells.y / dxf),
               int(fine_extent_cells.z / dxf)};
    auto fine = std::make_unique<ScaleBlock>(origin, dxf, dims);
    fine->relax = default_schedule();
    fine->relax.nu = rescaled_viscosity(nu, 1.0, dxf);
    detail::flag_overlap_block(*fine, 1);
    fine->finalize();
    for (std::int64_t i = 0; i < fine->ncells(); ++i) {
        const Populations f = trilinear_f(*ref, ref->f_curr, fine->cell_center(i));
        fine->set_f(fine->f_curr, i, f);
        double r;
        Vec3 u;
        pop_macroscopics(f, r, u);
        fine->set_macros(i, r, u);
    }
    fine->f_prev = fine->f_curr;

    s.graph.blocks.push_back(std::move(ref));
    s.graph.blocks.push_back(std::move(fine));
    s.graph.reference = 0;
    s.graph.finalize();
    return s;
}

// Part 1: a coincident-resolution overlay stays bit-identical to the uniform
// run. Part 2: a genuine alpha = 1.4 overlay over half the domain keeps the
// reference-scale energy within tol of the uniform trace.
inline BenchResult two_scale_consistency(int steps_identity = 10, int steps_energy = 500,
                                         double tol = 0.05) {
    // identity at alpha = 1
    {
        auto s = two_scale_taylor_green(16, 0.01, 1.0, {4, 4, 4}, {8, 8, 8});
        for (int t = 0; t < steps_identity; ++t) {
            advance(s.graph);
            s.twin->step();
        }
        const ScaleBlock& r = s.graph.block(0);
        for (std::size_t i = 0; i < r.f_curr.size(); ++i)
            if (r.f_curr[i] != s.twin->f_curr[i])
                return {false, "alpha=1 overlay diverged from the uniform run (not bit-identical)"};
    }
    // energy consistency at alpha = 1.4
    auto s = two_scale_taylor_green(32, 0.01, 1.4, {1.5, 1.5, 1.5}, {14, 28, 28});
    double worst = 0;
    for (int t = 0; t < steps_energy; ++t) {
        advance(s.graph);
        s.twin->step();
        const double e2 = kinetic_energy(s.graph.block(0));
        const double e1 = kinetic_energy(*s.twin);
        worst = std::max(worst, std::fabs(e2 - e1) / e1);
    }
    std::ostringstream os;
    os << "alpha=1 overlay bit-identical for " << steps_identity
       << " advances; alpha=1.4 worst energy gap " << worst * 100 << "% over " << steps_energy
       << " advances (tol " << tol * 100 << "%)";
    return {worst < tol, os.str()};
}

}  // namespace bench

inline BenchResult run_benchmark(const std::string& name) {
    if (name == "taylor-green") return bench::taylor_green();
    if (name == "couette") return bench::couette();
    if (name == "poiseuille") return bench::poiseuille();
    if (name == "two-scale-consistency") return bench::two_scale_consistency();
    throw std::invalid_argument("unknown-benchmark: " + name);
}

}  // namespace cskf
