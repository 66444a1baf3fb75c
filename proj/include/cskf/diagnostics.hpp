#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "cskf/block.hpp"
#include "cskf/scheduler.hpp"

namespace cskf {

// Fixed-order reductions so reports are identical for any thread count.

inline double kinetic_energy(const ScaleBlock& b) {
    double e = 0;
    const std::int64_t n = b.ncells();
    for (std::int64_t i = 0; i < n; ++i) {
        if (b.flags[i] == CellFlag::Solid) continue;
        const Vec3 u = b.velocity(i);
        e += 0.5 * b.rho[i] * u.norm2();
    }
    return e;
}

inline double total_mass(const ScaleBlock& b) {
    double m = 0;
    const std::int64_t n = b.ncells();
    for (std::int64_t i = 0; i < n; ++i)
        if (b.flags[i] != CellFlag::Solid) m += b.rho[i];
    return m;
}

inline double max_speed(const ScaleBlock& b) {
    double s2 = 0;
    const std::int64_t n = b.ncells();
    for (std::int64_t i = 0; i < n; ++i) {
        if (b.flags[i] == CellFlag::Solid) continue;
        s2 = std::max(s2, b.velocity(i).norm2());
    }
    return std::sqrt(s2);
}

inline bool has_nan(const ScaleBlock& b) {
    const std::int64_t n = b.ncells();
    for (std::int64_t i = 0; i < n; ++i) {
        if (b.flags[i] == CellFlag::Solid) continue;
        if (!std::isfinite(b.rho[i]) || !std::isfinite(b.ux[i]) || !std::isfinite(b.uy[i]) ||
            !std::isfinite(b.uz[i]))
            return true;
    }
    return false;
}

struct DiagnosticsReport {
    double time = 0;
    long long iteration = 0;
    double total_kinetic_energy = 0;
    double max_speed_lattice = 0;
    std::vector<double> block_energy;
    std::vector<double> block_mass;
    std::vector<double> block_ms;
};

inline DiagnosticsReport collect_diagnostics(const ScaleGraph& g) {
    DiagnosticsReport r;
    r.time = g.time;
    r.iteration = g.iteration;
    for (int i = 0; i < g.n_blocks(); ++i) {
        const ScaleBlock& b = g.block(i);
        r.block_energy.push_back(kinetic_energy(b));
        r.block_mass.push_back(total_mass(b));
        r.max_speed_lattice = std::max(r.max_speed_lattice, max_speed(b));
    }
    r.total_kinetic_energy = r.block_energy[g.reference];
    r.block_ms = g.advance_ms;
    return r;
}

// One line per advance: time, energy, max speed, per-block mass/energy/timings.
inline void write_report_line(std::ostream& os, const DiagnosticsReport& r) {
    os << "iter=" << r.iteration << " time=" << r.time << " E=" << r.total_kinetic_energy
       << " umax=" << r.max_speed_lattice << " mass=";
    for (std::size_t i = 0; i < r.block_mass.size(); ++i)
        os << (i ? "," : "") << r.block_mass[i];
    os << " E_block=";
    for (std::size_t i = 0; i < r.block_energy.size(); ++i)
        os << (i ? "," : "") << r.block_energy[i];
    os << " ms=";
    for (std::size_t i = 0; i < r.block_ms.size(); ++i) os << (i ? "," : "") << r.block_ms[i];
    os << "\n";
}

// Doubly-periodic planar Taylor-Green mode: an exact incompressible solution
// whose kinetic energy decays as exp(-2 nu k_eff^2 t) with k_eff^2 = 2 k^2.
// Initialized with the consistent pressure field (rho = 1 + 3 p) so no
// acoustic transient pollutes the decay. The quantitative viscosity oracle
// for the collision core.
inline void taylor_green_init(ScaleBlock& b, double amplitude, int wavenumber) {
    if (amplitude > 0.05) throw std::invalid_argument("taylor_green_init: amplitude too large");
    if (!b.periodic[0] || !b.periodic[1])
        throw std::invalid_argument("taylor_green_init: block must be periodic in x and y");
    const double kx = 2.0 * M_PI * wavenumber / b.dims.x;
    const double ky = 2.0 * M_PI * wavenumber / b.dims.y;
    const auto& lat = d3q27();
    const double s4 = relaxation_rate(b.relax.nu);
    for (int z = 0; z < b.dims.z; ++z)
        for (int y = 0; y < b.dims.y; ++y)
            for (int x = 0; x < b.dims.x; ++x) {
                const Vec3 u{amplitude * std::sin(kx * x) * std::cos(ky * y),
                             -amplitude * std::cos(kx * x) * std::sin(ky * y), 0.0};
                const double p = amplitude * amplitude / 4.0 *
                                 (std::cos(2 * kx * x) + std::cos(2 * ky * y));
                const double rho = 1.0 + 3.0 * p;
                const std::int64_t i = b.idx(x, y, z);
                b.set_macros(i, rho, u);
                Populations f = equilibrium_pops(rho, u);
                // consistent non-equilibrium part: the strain tensor of this
                // mode is diagonal with S_xx = -S_yy = A k cos(kx x) cos(ky y)
                const double sxx = amplitude * kx * std::cos(kx * x) * std::cos(ky * y);
                for (int q = 0; q < kQ; ++q) {
                    const double qs = lat.velocities[q][0] * lat.velocities[q][0] -
                                      lat.velocities[q][1] * lat.velocities[q][1];
                    f[q] += -3.0 * lat.weights[q] * rho / s4 * qs * sxx;
                }
                b.set_f(b.f_curr, i, f);
            }
    b.t_local = 0;
}

inline double taylor_green_keff2(const ScaleBlock& b, int wavenumber) {
    const double kx = 2.0 * M_PI * wavenumber / b.dims.x;
    const double ky = 2.0 * M_PI * wavenumber / b.dims.y;
    return kx * kx + ky * ky;
}

// Least-squares slope of log E against lattice time.
inline double fit_decay_rate(const std::vector<double>& times, const std::vector<double>& energy) {
    if (times.size() != energy.size() || times.size() < 2)
        throw std::invalid_argument("fit_decay_rate: need matched samples");
    double st = 0, sl = 0, stt = 0, stl = 0;
    const double n = double(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double l = std::log(energy[i]);
        st += times[i];
        sl += l;
        stt += times[i] * times[i];
        stl += times[i] * l;
    }
    return (n * stl - st * sl) / (n * stt - st * st);
}

// Runs the decay benchmark and returns the fitted viscosity.
inline double taylor_green_fitted_nu(ScaleBlock& b, double amplitude, int wavenumber, int steps,
                                     int sample_every = 10, double skip_fraction = 0.1) {
    taylor_green_init(b, amplitude, wavenumber);
    std::vector<double> times, energy;
    const int skip = int(steps * skip_fraction);
    for (int t = 0; t <= steps; ++t) {
        if (t >= skip && t % sample_every == 0) {
            times.push_back(double(t));
            energy.push_back(kinetic_energy(b));
        }
        if (t < steps) b.step();
    }
    const double rate = fit_decay_rate(times, energy);
    return -rate / (2.0 * taylor_green_keff2(b, wavenumber));
}

}  // namespace cskf
