#pragma once

#include <array>
#include <atomic>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cskf/collision.hpp"
#include "cskf/core.hpp"
#include "cskf/moments.hpp"

namespace cskf {

enum class CellFlag : std::uint8_t {
    Fluid = 0,
    Solid,
    Inlet,
    Outflow,
    ScaleBoundary,    // fed by prior-mapping from another scale
    OverlapInterior,  // evolving cell inside an overlap, post-mapped onto coarser scales
};

inline bool cell_evolves(CellFlag f) {
    return f == CellFlag::Fluid || f == CellFlag::OverlapInterior;
}

// One uniform-resolution lattice. Population storage is per-population
// (f[q * ncells + cell]), double-buffered; lattice dx = dt = 1 inside the
// block, physical step dt_phys = spacing * (dt0/dx0).
struct ScaleBlock {
    Vec3 origin;      // physical center of cell (0,0,0)
    double spacing = 1.0;
    Vec3i dims;
    double dt_phys = 1.0;
    double time = 0.0;
    long long t_local = 0;
    std::array<bool, 3> periodic{false, false, false};
    RelaxationSpec relax;

    std::vector<double> f_curr, f_next;
    std::vector<double> f_prev;  // advance-start snapshot, managed by the scheduler
    std::vector<double> f_post;  // post-collision snapshot for prior-mapping sources
    bool capture_post = false;
    std::vector<double> rho, ux, uy, uz;
    std::vector<double> grad;  // |grad u| Frobenius, lattice units
    std::vector<CellFlag> flags;

    struct WallCell {
        std::int64_t cell;
        Vec3 u_wall;
        std::uint32_t unknown;  // bit q: no fluid upstream along c_q after streaming
    };
    std::vector<WallCell> wall_cells;
    struct OutflowCell {
        std::int64_t cell, src;
    };
    std::vector<OutflowCell> outflow_cells;
    std::vector<std::int64_t> inlet_cells;
    std::vector<std::int64_t> boundary_cells;  // ScaleBoundary
    std::vector<int> boundary_src;             // scheduler scratch, parallel to boundary_cells

    ScaleBlock(Vec3 origin_, double spacing_, Vec3i dims_, double time_scale = 1.0)
        : origin(origin_), spacing(spacing_), dims(dims_), dt_phys(spacing_ * time_scale) {
        if (dims.x < 1 || dims.y < 1 || dims.z < 1)
            throw std::invalid_argument("block: dims must be positive");
        const std::int64_t n = ncells();
        f_curr.assign(std::size_t(n) * kQ, 0.0);
        f_next.assign(std::size_t(n) * kQ, 0.0);
        rho.assign(n, 1.0);
        ux.assign(n, 0.0);
        uy.assign(n, 0.0);
        uz.assign(n, 0.0);
        grad.assign(n, 0.0);
        flags.assign(n, CellFlag::Fluid);
    }

    std::int64_t ncells() const { return dims.count(); }
    std::int64_t idx(int x, int y, int z) const {
        return x + std::int64_t(dims.x) * (y + std::int64_t(dims.y) * z);
    }
    Vec3i coords(std::int64_t i) const {
        const int x = int(i % dims.x);
        const int y = int((i / dims.x) % dims.y);
        const int z = int(i / (std::int64_t(dims.x) * dims.y));
        return {x, y, z};
    }
    Vec3 cell_center(int x, int y, int z) const {
        return {origin.x + x * spacing, origin.y + y * spacing, origin.z + z * spacing};
    }
    Vec3 cell_center(std::int64_t i) const {
        const Vec3i c = coords(i);
        return cell_center(c.x, c.y, c.z);
    }
    // Physical extent including the half-cell skirt around sample centers.
    Box hull() const {
        const double h = 0.5 * spacing;
        return {{origin.x - h, origin.y - h, origin.z - h},
                {origin.x + (dims.x - 1) * spacing + h, origin.y + (dims.y - 1) * spacing + h,
                 origin.z + (dims.z - 1) * spacing + h}};
    }
    // Box spanned by sample centers; trilinear interpolation is valid inside.
    Box interior_hull() const {
        return {origin,
                {origin.x + (dims.x - 1) * spacing, origin.y + (dims.y - 1) * spacing,
                 origin.z + (dims.z - 1) * spacing}};
    }

    double* cell_f(std::vector<double>& buf, int q) { return buf.data() + std::size_t(q) * ncells(); }
    const double* cell_f(const std::vector<double>& buf, int q) const {
        return buf.data() + std::size_t(q) * ncells();
    }

    Populations get_f(const std::vector<double>& buf, std::int64_t cell) const {
        Populations p;
        const std::int64_t n = ncells();
        for (int q = 0; q < kQ; ++q) p[q] = buf[std::size_t(q) * n + cell];
        return p;
    }
    void set_f(std::vector<double>& buf, std::int64_t cell, const Populations& p) {
        const std::int64_t n = ncells();
        for (int q = 0; q < kQ; ++q) buf[std::size_t(q) * n + cell] = p[q];
    }

    void set_macros(std::int64_t cell, double r, const Vec3& u) {
        rho[cell] = r;
        ux[cell] = u.x;
        uy[cell] = u.y;
        uz[cell] = u.z;
    }
    Vec3 velocity(std::int64_t cell) const { return {ux[cell], uy[cell], uz[cell]}; }

    // Builds the boundary work lists from the flag field. Call after flags
    // (and solid wall velocities, stored in the u field) are final.
    void finalize() {
        relax.validate();
        wall_cells.clear();
        outflow_cells.clear();
        inlet_cells.clear();
        boundary_cells.clear();
        const auto& lat = d3q27();
        for (int z = 0; z < dims.z; ++z)
            for (int y = 0; y < dims.y; ++y)
                for (int x = 0; x < dims.x; ++x) {
                    const std::int64_t i = idx(x, y, z);
                    switch (flags[i]) {
                        case CellFlag::Inlet: inlet_cells.push_back(i); break;
                        case CellFlag::ScaleBoundary: boundary_cells.push_back(i); break;
                        case CellFlag::Outflow: {
                            int sx = x, sy = y, sz = z;
                            if (x == 0) sx = 1;
                            if (x == dims.x - 1) sx = dims.x - 2;
                            if (y == 0) sy = 1;
                            if (y == dims.y - 1) sy = dims.y - 2;
                            if (z == 0) sz = 1;
                            if (z == dims.z - 1) sz = dims.z - 2;
                            sx = std::clamp(sx, 0, dims.x - 1);
                            sy = std::clamp(sy, 0, dims.y - 1);
                            sz = std::clamp(sz, 0, dims.z - 1);
                            outflow_cells.push_back({i, idx(sx, sy, sz)});
                            break;
                        }
                        case CellFlag::Fluid:
                        case CellFlag::OverlapInterior: {
                            int n_solid = 0;
                            Vec3 uw{0, 0, 0};
                            std::uint32_t unknown = 0;
                            for (int q = 1; q < kQ; ++q) {
                                const int nx = x + lat.velocities[q][0];
                                const int ny = y + lat.velocities[q][1];
                                const int nz = z + lat.velocities[q][2];
                                std::int64_t nidx = -1;
                                if (nx >= 0 && ny >= 0 && nz >= 0 && nx < dims.x && ny < dims.y &&
                                    nz < dims.z)
                                    nidx = idx(nx, ny, nz);
                                if (nidx >= 0 && flags[nidx] == CellFlag::Solid) {
                                    ++n_solid;
                                    uw += velocity(nidx);
                                }
                                // upstream cell for direction q sits at -c_q
                                int ux_ = x - lat.velocities[q][0];
                                int uy_ = y - lat.velocities[q][1];
                                int uz_ = z - lat.velocities[q][2];
                                if (periodic[0]) ux_ = (ux_ + dims.x) % dims.x;
                                if (periodic[1]) uy_ = (uy_ + dims.y) % dims.y;
                                if (periodic[2]) uz_ = (uz_ + dims.z) % dims.z;
                                const bool out = ux_ < 0 || uy_ < 0 || uz_ < 0 || ux_ >= dims.x ||
                                                 uy_ >= dims.y || uz_ >= dims.z;
                                if (out || flags[idx(std::clamp(ux_, 0, dims.x - 1),
                                                     std::clamp(uy_, 0, dims.y - 1),
                                                     std::clamp(uz_, 0, dims.z - 1))] ==
                                               CellFlag::Solid)
                                    unknown |= (1u << q);
                            }
                            if (n_solid > 0) wall_cells.push_back({i, uw * (1.0 / n_solid), unknown});
                            break;
                        }
                        default: break;
                    }
                }
        boundary_src.assign(boundary_cells.size(), -1);
    }

    void initialize(double rho0, const std::function<Vec3(const Vec3&)>& u0) {
        if (rho0 <= 0) throw std::invalid_argument("initialize: rho0 must be positive");
        const std::int64_t n = ncells();
        for (std::int64_t i = 0; i < n; ++i) {
            Vec3 u{0, 0, 0};
            if (flags[i] == CellFlag::Solid || flags[i] == CellFlag::Inlet) {
                u = velocity(i);  // keep wall / inlet Dirichlet velocity
            } else {
                u = u0(cell_center(i));
                if (u.norm() > 0.13 + 1e-12)
                    throw std::invalid_argument("initialize: |u0| exceeds 0.13");
            }
            set_macros(i, rho0, u);
            set_f(f_curr, i, equilibrium_pops(rho0, u));
        }
        std::memcpy(f_next.data(), f_curr.data(), f_curr.size() * sizeof(double));
        t_local = 0;
    }
    void initialize(double rho0, const Vec3& u0) {
        initialize(rho0, [&](const Vec3&) { return u0; });
    }

    std::array<std::array<double, 3>, 3> velocity_gradient(int x, int y, int z) const {
        std::array<std::array<double, 3>, 3> g{};
        const int pos[3] = {x, y, z};
        const int n[3] = {dims.x, dims.y, dims.z};
        for (int axis = 0; axis < 3; ++axis) {
            int lo = pos[axis] - 1, hi = pos[axis] + 1;
            double span = 2.0;
            if (periodic[axis]) {
                lo = (lo + n[axis]) % n[axis];
                hi = hi % n[axis];
            } else {
                if (lo < 0) { lo = pos[axis]; span -= 1.0; }
                if (hi > n[axis] - 1) { hi = pos[axis]; span -= 1.0; }
                if (span == 0.0) return g;
            }
            int ph[3] = {x, y, z}, pl[3] = {x, y, z};
            ph[axis] = hi;
            pl[axis] = lo;
            const std::int64_t ih = idx(ph[0], ph[1], ph[2]);
            const std::int64_t il = idx(pl[0], pl[1], pl[2]);
            const double inv = 1.0 / span;
            g[0][axis] = (ux[ih] - ux[il]) * inv;
            g[1][axis] = (uy[ih] - uy[il]) * inv;
            g[2][axis] = (uz[ih] - uz[il]) * inv;
        }
        return g;
    }

    void gradient_pass() {
        parallel_for(dims.z, [&](std::int64_t zb, std::int64_t ze) {
            for (int z = int(zb); z < int(ze); ++z)
                for (int y = 0; y < dims.y; ++y)
                    for (int x = 0; x < dims.x; ++x) {
                        const std::int64_t i = idx(x, y, z);
                        if (!cell_evolves(flags[i])) continue;
                        const auto g = velocity_gradient(x, y, z);
                        double s = 0;
                        for (int a = 0; a < 3; ++a)
                            for (int bb = 0; bb < 3; ++bb) s += g[a][bb] * g[a][bb];
                        grad[i] = std::sqrt(s);
                    }
        }, 2);
    }

    void collide_pass() {
        const std::int64_t n = ncells();
        // distinct artificial viscosities -> one division each per cell
        std::array<double, kQ> uniq{};
        std::array<int, kQ> tier{};
        int n_uniq = 0;
        for (int i = 9; i < kQ; ++i) {
            int t = -1;
            for (int k = 0; k < n_uniq; ++k)
                if (uniq[k] == relax.nu_prime[i]) { t = k; break; }
            if (t < 0) { uniq[n_uniq] = relax.nu_prime[i]; t = n_uniq++; }
            tier[i] = t;
        }
        const double s_shear = relaxation_rate(relax.nu);
        std::atomic<bool> bad{false};
        double* fp = f_curr.data();
        parallel_for(n, [&](std::int64_t b, std::int64_t e) {
            RelaxationDiagonal diag;
            for (int i = 0; i <= 3; ++i) diag.s[i] = 0.0;
            for (int i = 4; i <= 8; ++i) diag.s[i] = s_shear;
            std::array<double, kQ> rate;
            Populations f;
            for (std::int64_t i = b; i < e; ++i) {
                if (!cell_evolves(flags[i])) continue;
                const double r = rho[i];
                if (!(r > 0)) { bad.store(true); continue; }
                const double factor = adaptive_factor(grad[i], relax);
                for (int k = 0; k < n_uniq; ++k) rate[k] = relaxation_rate(factor * uniq[k]);
                for (int q = 9; q < kQ; ++q) diag.s[q] = rate[tier[q]];
                for (int q = 0; q < kQ; ++q) f[q] = fp[std::size_t(q) * n + i];
                const Populations out = collide(f, r, velocity(i), diag);
                for (int q = 0; q < kQ; ++q) fp[std::size_t(q) * n + i] = out[q];
            }
        });
        if (bad.load()) throw std::runtime_error("collide: nonpositive density encountered");
        if (capture_post) f_post = f_curr;
    }

    void stream() {
        const auto& lat = d3q27();
        const std::int64_t n = ncells();
        bool any_solid = false;
        for (std::int64_t i = 0; i < n && !any_solid; ++i)
            if (flags[i] == CellFlag::Solid) any_solid = true;
        const bool has_solid = any_solid;

        parallel_for(dims.z, [&](std::int64_t zb, std::int64_t ze) {
            for (int q = 0; q < kQ; ++q) {
                const int cx = lat.velocities[q][0], cy = lat.velocities[q][1],
                          cz = lat.velocities[q][2];
                const double* src_buf = cell_f(f_curr, q);
                double* dst = cell_f(f_next, q);
                for (int z = int(zb); z < int(ze); ++z) {
                    int sz = z - cz;
                    bool z_ok = true;
                    if (sz < 0 || sz >= dims.z) {
                        if (periodic[2]) sz = (sz + dims.z) % dims.z;
                        else z_ok = false;
                    }
                    for (int y = 0; y < dims.y; ++y) {
                        const std::int64_t row = idx(0, y, z);
                        int sy = y - cy;
                        bool ok = z_ok;
                        if (sy < 0 || sy >= dims.y) {
                            if (periodic[1]) sy = (sy + dims.y) % dims.y;
                            else ok = false;
                        }
                        if (!ok) {
                            // no upstream plane: hold old values (boundary-owned)
                            for (int x = 0; x < dims.x; ++x) dst[row + x] = src_buf[row + x];
                            continue;
                        }
                        const std::int64_t srow = idx(0, sy, sz);
                        // x endpoints where sx leaves the row
                        int x_lo = std::max(0, cx), x_hi = std::min(dims.x, dims.x + cx);
                        for (int x = 0; x < x_lo; ++x) {
                            if (periodic[0]) {
                                const std::int64_t s = srow + (x - cx + dims.x) % dims.x;
                                dst[row + x] = (has_solid && flags[s] == CellFlag::Solid)
                                                   ? src_buf[row + x]
                                                   : src_buf[s];
                            } else {
                                dst[row + x] = src_buf[row + x];
                            }
                        }
                        if (has_solid) {
                            for (int x = x_lo; x < x_hi; ++x) {
                                const std::int64_t s = srow + x - cx;
                                dst[row + x] = flags[s] == CellFlag::Solid ? src_buf[row + x]
                                                                           : src_buf[s];
                            }
                        } else {
                            const double* sp = src_buf + (srow - cx);
                            for (int x = x_lo; x < x_hi; ++x) dst[row + x] = sp[x];
                        }
                        for (int x = x_hi; x < dims.x; ++x) {
                            if (periodic[0]) {
                                const std::int64_t s = srow + (x - cx + dims.x) % dims.x;
                                dst[row + x] = (has_solid && flags[s] == CellFlag::Solid)
                                                   ? src_buf[row + x]
                                                   : src_buf[s];
                            } else {
                                dst[row + x] = src_buf[row + x];
                            }
                        }
                    }
                }
            }
        }, 2);

        // mapped boundary samples persist through the step
        for (const auto i : boundary_cells)
            for (int q = 0; q < kQ; ++q)
                f_next[std::size_t(q) * n + i] = f_curr[std::size_t(q) * n + i];
        f_curr.swap(f_next);
    }

    // Regularized reconstruction: equilibrium at (rho, u_bc) plus the
    // second-order projection w_i/(2 cs^4) Q_i : Pi of the non-equilibrium
    // part. Populations without a fluid upstream take the bounced
    // non-equilibrium of their opposite direction (exact on linear shear).
    Populations regularized(const Populations& f, const Vec3& u_bc, std::uint32_t unknown) const {
        const auto& lat = d3q27();
        double rho_b = 0;
        for (int q = 0; q < kQ; ++q)
            rho_b += (unknown >> q) & 1u ? f[lat.opposite[q]] : f[q];
        const Populations feq = equilibrium_pops(rho_b, u_bc);
        double pxx = 0, pyy = 0, pzz = 0, pxy = 0, pxz = 0, pyz = 0;
        for (int q = 0; q < kQ; ++q) {
            const int qs = (unknown >> q) & 1u ? lat.opposite[q] : q;
            const double fneq = f[qs] - feq[qs];
            const double cx = lat.velocities[q][0], cy = lat.velocities[q][1],
                         cz = lat.velocities[q][2];
            pxx += fneq * cx * cx;
            pyy += fneq * cy * cy;
            pzz += fneq * cz * cz;
            pxy += fneq * cx * cy;
            pxz += fneq * cx * cz;
            pyz += fneq * cy * cz;
        }
        Populations out;
        const double cs2 = lat.cs2;
        for (int q = 0; q < kQ; ++q) {
            const double cx = lat.velocities[q][0], cy = lat.velocities[q][1],
                         cz = lat.velocities[q][2];
            const double qpi = pxx * (cx * cx - cs2) + pyy * (cy * cy - cs2) +
                               pzz * (cz * cz - cs2) +
                               2.0 * (pxy * cx * cy + pxz * cx * cz + pyz * cy * cz);
            out[q] = feq[q] + 4.5 * lat.weights[q] * qpi;
        }
        return out;
    }

    void apply_boundaries() {
        parallel_for(std::int64_t(wall_cells.size()), [&](std::int64_t b, std::int64_t e) {
            for (std::int64_t k = b; k < e; ++k) {
                const auto& wc = wall_cells[k];
                const Populations f = get_f(f_curr, wc.cell);
                set_f(f_curr, wc.cell, regularized(f, wc.u_wall, wc.unknown));
            }
        });
        for (const auto& oc : outflow_cells) set_f(f_curr, oc.cell, get_f(f_curr, oc.src));
        for (const auto i : inlet_cells)
            set_f(f_curr, i, equilibrium_pops(1.0, velocity(i)));
    }

    void macro_pass() {
        const std::int64_t n = ncells();
        const auto& lat = d3q27();
        const double* fp = f_curr.data();
        parallel_for(n, [&](std::int64_t b, std::int64_t e) {
            for (std::int64_t i = b; i < e; ++i) {
                if (flags[i] == CellFlag::Solid) continue;
                double r = 0, mx = 0, my = 0, mz = 0;
                for (int q = 0; q < kQ; ++q) {
                    const double fq = fp[std::size_t(q) * n + i];
                    r += fq;
                    mx += fq * lat.velocities[q][0];
                    my += fq * lat.velocities[q][1];
                    mz += fq * lat.velocities[q][2];
                }
                const double inv = 1.0 / r;
                rho[i] = r;
                ux[i] = mx * inv;
                uy[i] = my * inv;
                uz[i] = mz * inv;
            }
        });
    }

    // One full collide-stream cycle with boundary treatment.
    void step() {
        gradient_pass();
        collide_pass();
        stream();
        apply_boundaries();
        macro_pass();
        ++t_local;
        time += dt_phys;
    }
};

inline void macroscopics(const Populations& f, double& rho_out, Vec3& u_out) {
    pop_macroscopics(f, rho_out, u_out);
    if (!(rho_out > 0)) throw std::runtime_error("macroscopics: nonpositive density");
}

}  // namespace cskf
