#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "cskf/core.hpp"
#include "cskf/scheduler.hpp"

namespace cskf {

// Composite-field velocity at a physical point: trilinear sample of u from
// the finest block covering p, converted to physical units (scale-independent
// under acoustic scaling).
inline bool sample_velocity(const ScaleGraph& g, const Vec3& p, Vec3& out) {
    const int bi = detail::finest_covering(g, p);
    if (bi < 0) return false;
    const ScaleBlock& b = g.block(bi);
    double loc[3];
    int i0[3];
    double fr[3];
    for (int a = 0; a < 3; ++a) {
        loc[a] = (p[a] - b.origin[a]) / b.spacing;
        const double max_i = double(b.dims[a] - 1);
        if (loc[a] < 0) loc[a] = 0;
        if (loc[a] > max_i) loc[a] = max_i;
        i0[a] = int(loc[a]);
        if (i0[a] > b.dims[a] - 2) i0[a] = b.dims[a] > 1 ? b.dims[a] - 2 : 0;
        fr[a] = loc[a] - i0[a];
    }
    const int x1 = b.dims.x > 1 ? 1 : 0, y1 = b.dims.y > 1 ? 1 : 0, z1 = b.dims.z > 1 ? 1 : 0;
    out = {0, 0, 0};
    for (int k = 0; k < 8; ++k) {
        const int dx = k & 1, dy = (k >> 1) & 1, dz = (k >> 2) & 1;
        const double w = (dx ? fr[0] : 1 - fr[0]) * (dy ? fr[1] : 1 - fr[1]) *
                         (dz ? fr[2] : 1 - fr[2]);
        if (w == 0.0) continue;
        const std::int64_t i = b.idx(i0[0] + dx * x1, i0[1] + dy * y1, i0[2] + dz * z1);
        out += Vec3{b.ux[i], b.uy[i], b.uz[i]} * w;
    }
    // u_phys = u_lattice * dx/dt, identical on every scale
    out = out * (g.dx0 / g.dt0);
    return true;
}

inline Vec3 sample_velocity_or_throw(const ScaleGraph& g, const Vec3& p) {
    Vec3 u;
    if (!sample_velocity(g, p, u)) throw std::out_of_range("sample_velocity: out of domain");
    return u;
}

struct TracerRegion {
    enum class Kind { Disk, Box, SphereShell };
    Kind kind = Kind::Disk;
    Vec3 center{};
    double radius = 0;
    Vec3 normal{1, 0, 0};
    Box box{};
    double shell_thickness = 0;
};

// Smoke particles advected through the composite velocity field.
struct TracerSet {
    std::vector<Vec3> positions;
    std::vector<std::int64_t> ages;
    std::vector<std::int64_t> ids;
    std::int64_t next_id = 0;
    int inject_rate = 2000;  // particles per reference iteration
    TracerRegion inlet_region{};

    std::size_t size() const { return positions.size(); }

    void inject(int count, std::mt19937_64& rng) {
        if (count < 0) throw std::invalid_argument("inject: negative count");
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int k = 0; k < count; ++k) {
            Vec3 p{};
            switch (inlet_region.kind) {
                case TracerRegion::Kind::Disk: {
                    Vec3 t1 = std::fabs(inlet_region.normal.x) < 0.9
                                  ? cross(inlet_region.normal, {1, 0, 0})
                                  : cross(inlet_region.normal, {0, 1, 0});
                    t1 = t1 * (1.0 / t1.norm());
                    const Vec3 t2 = cross(inlet_region.normal, t1) *
                                    (1.0 / cross(inlet_region.normal, t1).norm());
                    const double r = inlet_region.radius * std::sqrt(uni(rng));
                    const double a = 2.0 * M_PI * uni(rng);
                    p = inlet_region.center + t1 * (r * std::cos(a)) + t2 * (r * std::sin(a));
                    break;
                }
                case TracerRegion::Kind::Box:
                    for (int a = 0; a < 3; ++a)
                        p[a] = inlet_region.box.lo[a] +
                               uni(rng) * (inlet_region.box.hi[a] - inlet_region.box.lo[a]);
                    break;
                case TracerRegion::Kind::SphereShell: {
                    // uniform direction, radius within the shell
                    double x, y, z, n2;
                    do {
                        x = 2 * uni(rng) - 1;
                        y = 2 * uni(rng) - 1;
                        z = 2 * uni(rng) - 1;
                        n2 = x * x + y * y + z * z;
                    } while (n2 > 1.0 || n2 < 1e-12);
                    const double inv = 1.0 / std::sqrt(n2);
                    const double r = inlet_region.radius + uni(rng) * inlet_region.shell_thickness;
                    p = inlet_region.center + Vec3{x * inv, y * inv, z * inv} * r;
                    break;
                }
            }
            positions.push_back(p);
            ages.push_back(0);
            ids.push_back(next_id++);
        }
    }
};

// Three-stage third-order Runge-Kutta through the frozen composite field.
// Particles whose stages leave the domain are culled.
inline void advect_rk3(TracerSet& tracers, const ScaleGraph& g, double dt) {
    if (!(dt > 0)) throw std::invalid_argument("advect_rk3: dt must be positive");
    const std::size_t n = tracers.positions.size();
    std::vector<std::uint8_t> alive(n, 1);
    parallel_for(std::int64_t(n), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            Vec3 p = tracers.positions[i];
            Vec3 k1, k2, k3;
            if (!sample_velocity(g, p, k1) || !sample_velocity(g, p + k1 * (dt / 2), k2) ||
                !sample_velocity(g, p + (k2 * 2.0 - k1) * dt, k3)) {
                alive[i] = 0;
                continue;
            }
            p += (k1 + k2 * 4.0 + k3) * (dt / 6.0);
            Vec3 dummy;
            if (!sample_velocity(g, p, dummy)) {
                alive[i] = 0;
                continue;
            }
            tracers.positions[i] = p;
        }
    });
    std::size_t w = 0;
    const bool have_ids = tracers.ids.size() == n;
    for (std::size_t i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        tracers.positions[w] = tracers.positions[i];
        tracers.ages[w] = tracers.ages[i] + 1;
        if (have_ids) tracers.ids[w] = tracers.ids[i];
        ++w;
    }
    tracers.positions.resize(w);
    tracers.ages.resize(w);
    if (have_ids) tracers.ids.resize(w);
}

}  // namespace cskf
