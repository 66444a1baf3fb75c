#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cskf/block.hpp"
#include "cskf/core.hpp"
#include "cskf/geometry.hpp"
#include "cskf/scheduler.hpp"

namespace cskf {

struct WakeSpec {
    bool enabled = false;
    Vec3 center{};       // inlet disk center
    double radius = 0;   // inlet disk radius
    Vec3 normal{1, 0, 0};
    int ray_count = 16;
};

struct DynamicSpec {
    std::vector<double> grad_thresholds;  // lattice units on the reference scale
    std::vector<double> vel_thresholds;
    std::vector<double> spacings;  // one dynamic block per triple
    int rebuild_interval = 40;
};

struct ScalePlan {
    int n_levels = 1;
    double dx_min = 1.0, dx_max = 1.0;
    std::vector<double> ffd_spacings;    // ascending, all > dx_max
    std::vector<double> quantization;    // descending distance thresholds, size n_levels-1
    WakeSpec wake;
    DynamicSpec dynamic;
    int pad_cells = 4;

    void validate() const {
        if (n_levels < 1) throw std::invalid_argument("scales: n_levels must be >= 1");
        if (n_levels > 1 && !(dx_min < dx_max))
            throw std::invalid_argument("scales: dx_min must be < dx_max");
        for (double s : ffd_spacings)
            if (!(s > dx_max)) throw std::invalid_argument("scales: FFD spacing must exceed dx_max");
        if (!std::is_sorted(ffd_spacings.begin(), ffd_spacings.end()))
            throw std::invalid_argument("scales: FFD spacings must ascend");
        if (dynamic.grad_thresholds.size() != dynamic.vel_thresholds.size() ||
            dynamic.grad_thresholds.size() != dynamic.spacings.size())
            throw std::invalid_argument("scales: dynamic threshold triples must align");
    }

    // Level 0 is the coarsest (the reference); level n_levels-1 the finest.
    double level_spacing(int level) const {
        if (n_levels == 1) return dx_max;
        return dx_min + double(n_levels - 1 - level) / double(n_levels - 1) * (dx_max - dx_min);
    }
};

// ------------------------------------------------------------------
// Exact Euclidean distance transform (separable squared-distance
// lower-envelope sweeps), in physical units.
// ------------------------------------------------------------------
namespace detail {

inline void edt_1d(std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
                   std::vector<double>& z) {
    const int n = int(f.size());
    v.resize(n);
    z.resize(n + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    out.resize(n);
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        out[q] = (q - v[k]) * double(q - v[k]) + f[v[k]];
    }
}

}  // namespace detail

// Shortest distance from each cell center to a solid voxel center or to the
// nearest domain face, physical units. `domain` defaults to the grid hull.
inline std::vector<double> distance_map(const Vec3i& dims, double spacing,
                                        const std::vector<std::uint8_t>& solid,
                                        const Box* domain = nullptr, const Vec3* origin0 = nullptr) {
    const std::int64_t n = dims.count();
    if (std::int64_t(solid.size()) != n) throw std::invalid_argument("distance_map: size mismatch");
    const double inf = 1e18;
    std::vector<double> d2(n);
    for (std::int64_t i = 0; i < n; ++i) d2[i] = solid[i] ? 0.0 : inf;

    std::vector<double> line, out;
    std::vector<int> v;
    std::vector<double> z;
    // x sweep
    for (int zz = 0; zz < dims.z; ++zz)
        for (int y = 0; y < dims.y; ++y) {
            line.resize(dims.x);
            for (int x = 0; x < dims.x; ++x)
                line[x] = d2[x + std::int64_t(dims.x) * (y + std::int64_t(dims.y) * zz)];
            detail::edt_1d(line, out, v, z);
            for (int x = 0; x < dims.x; ++x)
                d2[x + std::int64_t(dims.x) * (y + std::int64_t(dims.y) * zz)] = out[x];
        }
    // y sweep
    for (int zz = 0; zz < dims.z; ++zz)
        for (int x = 0; x < dims.x; ++x) {
            line.resize(dims.y);
            for (int y = 0; y < dims.y; ++y)
                line[y] = d2[x + std::int64_t(dims.x) * (y + std::int64_t(dims.y) * zz)];
            detail::edt_1d(line, out, v, z);
            for (int y = 0; y < dims.y; ++y)
                d2[x + std::int64_t(dims.x) * (y + std::int64_t(dims.y) * zz)] = out[y];
        }
    // z sweep
    for (int y = 0; y < dims.y; ++y)
        for (int x = 0; x < dims.x; ++x) {
            line.resize(dims.z);
            for (int zz = 0; zz < dims.z; ++zz)
                line[zz] = d2[x + std::int64_t(dims.x) * (y + std::int64_t(dims.y) * zz)];
            detail::edt_1d(line, out, v, z);
            for (int zz = 0; zz < dims.z; ++zz)
                d2[x + std::int64_t(dims.x) * (y + std::int64_t(dims.y) * zz)] = out[zz];
        }

    std::vector<double> dist(n);
    for (std::int64_t i = 0; i < n; ++i) dist[i] = std::sqrt(d2[i]) * spacing;

    if (domain && origin0) {
        for (int zz = 0; zz < dims.z; ++zz)
            for (int y = 0; y < dims.y; ++y)
                for (int x = 0; x < dims.x; ++x) {
                    const Vec3 p{origin0->x + x * spacing, origin0->y + y * spacing,
                                 origin0->z + zz * spacing};
                    double df = std::min({p.x - domain->lo.x, domain->hi.x - p.x,
                                          p.y - domain->lo.y, domain->hi.y - p.y,
                                          p.z - domain->lo.z, domain->hi.z - p.z});
                    df = std::max(df, 0.0);
                    auto& dd = dist[x + std::int64_t(dims.x) * (y + std::int64_t(dims.y) * zz)];
                    dd = std::min(dd, df);
                }
    }
    return dist;
}

// ------------------------------------------------------------------
// Wake occlusion: fraction of stratified inlet-disk samples whose ray to the
// cell is blocked by solids (soft-shadow umbra/penumbra analogy).
// ------------------------------------------------------------------
namespace detail {

inline std::vector<Vec3> inlet_disk_samples(const WakeSpec& wake) {
    // deterministic stratified concentric samples
    const int n = std::max(1, wake.ray_count);
    const int side = std::max(1, int(std::round(std::sqrt(double(n)))));
    Vec3 t1 = std::fabs(wake.normal.x) < 0.9 ? cross(wake.normal, {1, 0, 0})
                                             : cross(wake.normal, {0, 1, 0});
    t1 = t1 * (1.0 / t1.norm());
    Vec3 t2 = cross(wake.normal, t1);
    t2 = t2 * (1.0 / t2.norm());
    std::vector<Vec3> pts;
    for (int i = 0; i < side && int(pts.size()) < n; ++i)
        for (int j = 0; j < side && int(pts.size()) < n; ++j) {
            const double r = wake.radius * std::sqrt((i + 0.5) / side);
            const double a = 2.0 * M_PI * (j + 0.5) / side;
            pts.push_back(wake.center + t1 * (r * std::cos(a)) + t2 * (r * std::sin(a)));
        }
    return pts;
}

// voxel DDA against the solid mask on the reference grid
inline bool ray_blocked(const Vec3& from, const Vec3& to, const ScaleBlock& ref,
                        const std::vector<std::uint8_t>& solid) {
    const Vec3 d = to - from;
    const double len = d.norm();
    if (len <= 0) return false;
    const int steps = int(len / (0.5 * ref.spacing)) + 1;
    for (int s = 1; s < steps; ++s) {
        const Vec3 p = from + d * (double(s) / steps);
        const int x = int(std::floor((p.x - ref.origin.x) / ref.spacing + 0.5));
        const int y = int(std::floor((p.y - ref.origin.y) / ref.spacing + 0.5));
        const int z = int(std::floor((p.z - ref.origin.z) / ref.spacing + 0.5));
        if (x < 0 || y < 0 || z < 0 || x >= ref.dims.x || y >= ref.dims.y || z >= ref.dims.z)
            continue;
        if (solid[ref.idx(x, y, z)]) return true;
    }
    return false;
}

}  // namespace detail

inline double occlusion_fraction(const Vec3& p, const WakeSpec& wake, const ScaleBlock& ref,
                                 const std::vector<std::uint8_t>& solid) {
    const auto pts = detail::inlet_disk_samples(wake);
    int blocked = 0;
    for (const auto& s : pts)
        if (detail::ray_blocked(s, p, ref, solid)) ++blocked;
    return double(blocked) / double(pts.size());
}

inline double percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw std::invalid_argument("percentile: empty data");
    pct = std::clamp(pct, 0.0, 100.0);
    std::sort(values.begin(), values.end());
    const double pos = pct / 100.0 * (values.size() - 1);
    const std::size_t i = std::size_t(pos);
    const double frac = pos - double(i);
    if (i + 1 >= values.size()) return values.back();
    return values[i] * (1 - frac) + values[i + 1] * frac;
}

// ------------------------------------------------------------------
// Static scale construction.
// ------------------------------------------------------------------
enum class FaceBC { Wall, Outflow, Periodic };

struct InletSpec {
    bool enabled = false;
    int axis = 0;       // face normal axis
    int side = 0;       // 0 = low face, 1 = high face
    bool full_face = false;
    Vec3 center{};      // disk center on the face
    double radius = 0;
    double speed = 0.1;

    Vec3 velocity() const {
        Vec3 u{0, 0, 0};
        u[axis] = side == 0 ? speed : -speed;
        return u;
    }
    bool covers(const Vec3& p) const {
        if (full_face) return true;
        Vec3 d = p - center;
        d[axis] = 0;
        return d.norm2() <= radius * radius;
    }
};

struct DomainSetup {
    Box domain{};                 // physical outer box
    Box doi{};                    // reference-scale coverage
    std::array<FaceBC, 6> faces{};  // -x,+x,-y,+y,-z,+z
    InletSpec inlet{};
};

namespace detail {

inline void apply_domain_faces(ScaleBlock& blk, const DomainSetup& dom, bool mark_scale_boundary) {
    const Box h = blk.hull();
    const double tol = 0.6 * blk.spacing;
    for (int axis = 0; axis < 3; ++axis) {
        for (int side = 0; side < 2; ++side) {
            const double face_pos = side == 0 ? h.lo[axis] : h.hi[axis];
            const double dom_pos = side == 0 ? dom.domain.lo[axis] : dom.domain.hi[axis];
            const bool on_domain = std::fabs(face_pos - dom_pos) <= tol;
            const FaceBC bc = dom.faces[axis * 2 + side];
            if (on_domain && bc == FaceBC::Periodic) {
                blk.periodic[axis] = true;
                continue;
            }
            const int layer = side == 0 ? 0 : blk.dims[axis] - 1;
            for (int b = 0; b < blk.dims[(axis + 1) % 3]; ++b)
                for (int c = 0; c < blk.dims[(axis + 2) % 3]; ++c) {
                    int xyz[3];
                    xyz[axis] = layer;
                    xyz[(axis + 1) % 3] = b;
                    xyz[(axis + 2) % 3] = c;
                    const std::int64_t i = blk.idx(xyz[0], xyz[1], xyz[2]);
                    if (blk.flags[i] == CellFlag::Solid) continue;
                    if (!on_domain) {
                        if (mark_scale_boundary) blk.flags[i] = CellFlag::ScaleBoundary;
                        continue;
                    }
                    const Vec3 p = blk.cell_center(xyz[0], xyz[1], xyz[2]);
                    if (dom.inlet.enabled && dom.inlet.axis == axis && dom.inlet.side == side &&
                        dom.inlet.covers(p)) {
                        blk.flags[i] = CellFlag::Inlet;
                        blk.set_macros(i, 1.0, dom.inlet.velocity());
                    } else if (bc == FaceBC::Wall) {
                        blk.flags[i] = CellFlag::Solid;
                        blk.set_macros(i, 1.0, {0, 0, 0});
                    } else {
                        blk.flags[i] = CellFlag::Outflow;
                    }
                }
        }
    }
}

// Rim of externally fed samples + overlapped interior for non-reference blocks.
inline void flag_overlap_block(ScaleBlock& blk, int rim_width) {
    for (int z = 0; z < blk.dims.z; ++z)
        for (int y = 0; y < blk.dims.y; ++y)
            for (int x = 0; x < blk.dims.x; ++x) {
                const std::int64_t i = blk.idx(x, y, z);
                if (blk.flags[i] == CellFlag::Solid) continue;
                const int depth = std::min({x, y, z, blk.dims.x - 1 - x, blk.dims.y - 1 - y,
                                            blk.dims.z - 1 - z});
                blk.flags[i] = depth < rim_width ? CellFlag::ScaleBoundary
                                                 : CellFlag::OverlapInterior;
            }
}

inline std::unique_ptr<ScaleBlock> make_block_covering(const Box& target, double spacing,
                                                       double time_scale) {
    Vec3i dims;
    Vec3 origin;
    for (int a = 0; a < 3; ++a) {
        const double span = target.hi[a] - target.lo[a];
        dims[a] = std::max(2, int(std::round(span / spacing)));
        // center the sample lattice on the target box
        origin[a] = (target.lo[a] + target.hi[a]) / 2.0 - (dims[a] - 1) * spacing / 2.0;
    }
    return std::make_unique<ScaleBlock>(origin, spacing, dims, time_scale);
}

}  // namespace detail

// Builds the static ScaleGraph: reference over the DOI, nested distance/wake
// refinement blocks, and FFD shells out to the domain box.
inline ScaleGraph static_scales(const ScalePlan& plan, const DomainSetup& dom,
                                const std::vector<SolidPrimitive>& solids, double nu0,
                                const RelaxationSpec& relax_base, double time_scale = 1.0) {
    plan.validate();
    if (!dom.domain.contains(dom.doi))
        throw std::invalid_argument("static_scales: DOI must lie inside the domain");
    for (int axis = 0; axis < 3; ++axis)
        if ((dom.faces[axis * 2] == FaceBC::Periodic) != (dom.faces[axis * 2 + 1] == FaceBC::Periodic))
            throw std::invalid_argument("static_scales: periodic faces must be paired");
    if (dom.inlet.enabled && dom.inlet.speed > 0.13)
        throw std::invalid_argument("static_scales: inlet speed exceeds 0.13");

    ScaleGraph g;
    const double dx0 = plan.dx_max;

    // reference block
    auto ref = detail::make_block_covering(dom.doi, dx0, time_scale);
    rasterize_solids(*ref, solids);
    const bool has_ffd = !plan.ffd_spacings.empty();
    detail::apply_domain_faces(*ref, dom, has_ffd);
    ref->relax = relax_base;
    ref->relax.nu = nu0;

    // distance + wake levels on the reference grid
    std::vector<std::unique_ptr<ScaleBlock>> doi_blocks;
    if (plan.n_levels > 1) {
        const std::int64_t n = ref->ncells();
        std::vector<std::uint8_t> solid_mask(n, 0);
        bool any_solid = false;
        for (std::int64_t i = 0; i < n; ++i)
            if (ref->flags[i] == CellFlag::Solid) { solid_mask[i] = 1; any_solid = true; }

        std::vector<double> dist;
        if (any_solid)
            dist = distance_map(ref->dims, ref->spacing, solid_mask, &dom.domain, &ref->origin);

        std::vector<double> q = plan.quantization;
        if (q.empty() && any_solid) {
            double dmax = 0;
            for (double d : dist) dmax = std::max(dmax, d);
            for (int k = 1; k < plan.n_levels; ++k)
                q.push_back(dmax * double(plan.n_levels - k) / double(plan.n_levels));
        }

        std::vector<int> level(n, 0);
        if (any_solid)
            for (std::int64_t i = 0; i < n; ++i)
                for (int k = 1; k < plan.n_levels; ++k)
                    if (dist[i] <= q[k - 1]) level[i] = k;

        if (plan.wake.enabled && any_solid && dom.inlet.enabled) {
            for (std::int64_t i = 0; i < n; ++i) {
                if (solid_mask[i]) continue;
                const double o = occlusion_fraction(ref->cell_center(i), plan.wake, *ref, solid_mask);
                const int wake_level = int(std::lround(o * (plan.n_levels - 1)));
                level[i] = std::max(level[i], wake_level);
            }
        }

        const Box safe = [&] {
            Box ih = ref->interior_hull();
            const double m = ref->spacing;
            return Box{{ih.lo.x + m, ih.lo.y + m, ih.lo.z + m},
                       {ih.hi.x - m, ih.hi.y - m, ih.hi.z - m}};
        }();
        for (int k = 1; k < plan.n_levels; ++k) {
            Vec3 lo{1e30, 1e30, 1e30}, hi{-1e30, -1e30, -1e30};
            bool nonempty = false;
            for (std::int64_t i = 0; i < n; ++i) {
                if (level[i] < k || solid_mask[i]) continue;
                nonempty = true;
                const Vec3 p = ref->cell_center(i);
                for (int a = 0; a < 3; ++a) {
                    lo[a] = std::min(lo[a], p[a]);
                    hi[a] = std::max(hi[a], p[a]);
                }
            }
            if (!nonempty) continue;  // empty level is skipped
            const double dxk = plan.level_spacing(k);
            Box target{lo, hi};
            for (int a = 0; a < 3; ++a) {
                target.lo[a] = std::max(target.lo[a] - plan.pad_cells * dxk, safe.lo[a]);
                target.hi[a] = std::min(target.hi[a] + plan.pad_cells * dxk, safe.hi[a]);
            }
            auto blk = detail::make_block_covering(target, dxk, time_scale);
            // keep the sample lattice strictly inside the reference hull
            for (int a = 0; a < 3; ++a) {
                const Box ih = blk->interior_hull();
                if (ih.lo[a] < safe.lo[a]) blk->origin[a] += safe.lo[a] - ih.lo[a];
                if (blk->interior_hull().hi[a] > safe.hi[a])
                    blk->origin[a] -= blk->interior_hull().hi[a] - safe.hi[a];
            }
            rasterize_solids(*blk, solids);
            detail::flag_overlap_block(*blk, 1);
            detail::apply_domain_faces(*blk, dom, false);
            blk->relax = relax_base;
            blk->relax.nu = rescaled_viscosity(nu0, dx0, dxk);
            doi_blocks.push_back(std::move(blk));
        }
    }

    // FFD shells from the DOI box out to the domain box
    std::vector<std::unique_ptr<ScaleBlock>> ffd_blocks;
    const int n_ffd = int(plan.ffd_spacings.size());
    Box inner = ref->hull();
    for (int k = 0; k < n_ffd; ++k) {
        const double frac = double(k + 1) / double(n_ffd);
        Box shell;
        for (int a = 0; a < 3; ++a) {
            shell.lo[a] = dom.doi.lo[a] + frac * (dom.domain.lo[a] - dom.doi.lo[a]);
            shell.hi[a] = dom.doi.hi[a] + frac * (dom.domain.hi[a] - dom.doi.hi[a]);
        }
        const double dxs = plan.ffd_spacings[k];
        auto blk = detail::make_block_covering(shell, dxs, time_scale);
        rasterize_solids(*blk, solids);
        // overlap region: cells inside the next-finer hull
        const Box inner_shrunk = [&] {
            Box b = inner;
            const double m = 0.0;
            b.lo = {b.lo.x + m, b.lo.y + m, b.lo.z + m};
            return b;
        }();
        for (int z = 0; z < blk->dims.z; ++z)
            for (int y = 0; y < blk->dims.y; ++y)
                for (int x = 0; x < blk->dims.x; ++x) {
                    const std::int64_t i = blk->idx(x, y, z);
                    if (blk->flags[i] == CellFlag::Solid) continue;
                    const Vec3 p = blk->cell_center(x, y, z);
                    if (!inner_shrunk.contains(p)) continue;
                    // rim band (2 cells) next to the inner hull edge feeds the annulus
                    bool rim = false;
                    for (int a = 0; a < 3 && !rim; ++a)
                        if (p[a] - inner_shrunk.lo[a] < 2 * dxs || inner_shrunk.hi[a] - p[a] < 2 * dxs)
                            rim = true;
                    blk->flags[i] = rim ? CellFlag::ScaleBoundary : CellFlag::OverlapInterior;
                }
        detail::apply_domain_faces(*blk, dom, k + 1 < n_ffd);
        blk->relax = relax_base;
        blk->relax.nu = rescaled_viscosity(nu0, dx0, dxs);
        ffd_blocks.push_back(std::move(blk));
        inner = ffd_blocks.back()->hull();
    }

    for (int k = n_ffd - 1; k >= 0; --k) g.blocks.push_back(std::move(ffd_blocks[k]));
    g.reference = int(g.blocks.size());
    g.blocks.push_back(std::move(ref));
    std::sort(doi_blocks.begin(), doi_blocks.end(),
              [](const auto& a, const auto& b) { return a->spacing > b->spacing; });
    for (auto& b : doi_blocks) g.blocks.push_back(std::move(b));

    for (auto& b : g.blocks) b->finalize();
    g.is_dynamic.assign(g.blocks.size(), 0);
    g.finalize();
    return g;
}

// Threshold masks on the reference field; each surviving triple's padded
// bounding box becomes one dynamic block spec.
struct BlockSpec {
    Vec3 origin;
    double spacing;
    Vec3i dims;
};

inline std::vector<BlockSpec> dynamic_scales(ScaleGraph& g, const DynamicSpec& dyn) {
    std::vector<BlockSpec> specs;
    ScaleBlock& ref = g.block(g.reference);
    ref.gradient_pass();
    const Box safe = [&] {
        Box ih = ref.interior_hull();
        const double m = ref.spacing;
        return Box{{ih.lo.x + m, ih.lo.y + m, ih.lo.z + m},
                   {ih.hi.x - m, ih.hi.y - m, ih.hi.z - m}};
    }();
    for (std::size_t t = 0; t < dyn.spacings.size(); ++t) {
        Vec3 lo{1e30, 1e30, 1e30}, hi{-1e30, -1e30, -1e30};
        bool nonempty = false;
        const std::int64_t n = ref.ncells();
        for (std::int64_t i = 0; i < n; ++i) {
            if (!cell_evolves(ref.flags[i])) continue;
            if (ref.grad[i] < dyn.grad_thresholds[t]) continue;
            if (ref.velocity(i).norm() < dyn.vel_thresholds[t]) continue;
            nonempty = true;
            const Vec3 p = ref.cell_center(i);
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], p[a]);
                hi[a] = std::max(hi[a], p[a]);
            }
        }
        if (!nonempty) continue;
        const double dxk = dyn.spacings[t];
        Box target{lo, hi};
        for (int a = 0; a < 3; ++a) {
            target.lo[a] = std::max(target.lo[a] - 4 * dxk, safe.lo[a]);
            target.hi[a] = std::min(target.hi[a] + 4 * dxk, safe.hi[a]);
        }
        auto blk = detail::make_block_covering(target, dxk, 1.0);
        for (int a = 0; a < 3; ++a) {
            const Box ih = blk->interior_hull();
            if (ih.lo[a] < safe.lo[a]) blk->origin[a] += safe.lo[a] - ih.lo[a];
            if (blk->interior_hull().hi[a] > safe.hi[a])
                blk->origin[a] -= blk->interior_hull().hi[a] - safe.hi[a];
        }
        specs.push_back({blk->origin, dxk, blk->dims});
    }
    return specs;
}

}  // namespace cskf
