#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "cskf/block.hpp"
#include "cskf/rescale.hpp"

namespace cskf {

// The ordered multi-scale composite: FFD shells (coarsest first), then the
// reference scale spanning the DOI, then DOI sub-scales by decreasing spacing.
struct ScaleGraph {
    std::vector<std::unique_ptr<ScaleBlock>> blocks;
    std::vector<std::uint8_t> is_ffd;
    int reference = 0;
    double dx0 = 1.0;
    double dt0 = 1.0;
    long long iteration = 0;
    double time = 0.0;
    // Invoked after the reference/FFD step of every advance; owns its cadence.
    std::function<void(ScaleGraph&)> dynamic_rebuild;
    std::vector<double> advance_ms;  // per-block wall time of the last advance
    std::vector<std::uint8_t> is_dynamic;

    std::vector<RelaxationDiagonal> base_diag;

    ScaleBlock& block(int i) { return *blocks[i]; }
    const ScaleBlock& block(int i) const { return *blocks[i]; }
    int n_blocks() const { return int(blocks.size()); }

    void finalize() {
        if (blocks.empty()) throw std::invalid_argument("graph: no blocks");
        if (reference < 0 || reference >= n_blocks())
            throw std::invalid_argument("graph: bad reference index");
        is_ffd.resize(blocks.size());
        for (int i = 0; i < n_blocks(); ++i) is_ffd[i] = i < reference;
        dx0 = block(reference).spacing;
        dt0 = block(reference).dt_phys;
        for (int i = 0; i + 1 < n_blocks(); ++i)
            if (block(i).spacing < block(i + 1).spacing - 1e-12)
                throw std::invalid_argument("graph: blocks must be sorted by spacing descending");
        const Box ref_hull = block(reference).hull();
        for (int i = reference + 1; i < n_blocks(); ++i)
            if (!ref_hull.contains(block(i).hull()))
                throw std::invalid_argument("graph: DOI sub-scale escapes the reference hull");
        base_diag.resize(blocks.size());
        for (int i = 0; i < n_blocks(); ++i) {
            base_diag[i] = relaxation_diagonal(block(i).relax, 1.0);
            for (int q = 4; q < kQ; ++q)
                if (std::fabs(1.0 - base_diag[i].s[q]) < 1e-9)
                    throw std::invalid_argument(
                        "graph: relaxation rate hits the S=1 mapping singularity");
        }
        advance_ms.assign(blocks.size(), 0.0);
        if (is_dynamic.size() != blocks.size()) is_dynamic.assign(blocks.size(), 0);
        for (auto& b : blocks)
            if (b->f_post.size() != b->f_curr.size()) b->f_post = b->f_curr;
    }
};

namespace detail {

inline void snapshot(ScaleBlock& b) {
    b.f_prev = b.f_curr;
}

// Finest block among indices [0, last] whose interior hull contains p
// (blocks are ordered coarse -> fine).
inline int finest_covering(const ScaleGraph& g, const Vec3& p, int exclude = -1, int last = -1) {
    if (last < 0) last = g.n_blocks() - 1;
    for (int i = last; i >= 0; --i) {
        if (i == exclude) continue;
        if (g.block(i).interior_hull().contains(p)) return i;
    }
    return -1;
}

// Nearest coarser source for a sample of block dst: the overlapping block
// earlier in the hierarchy with the smallest spacing gap; ties resolved by
// hull-center distance.
inline int nearest_coarser_source(const ScaleGraph& g, int dst, const Vec3& p) {
    int best = -1;
    double best_gap = 0, best_dist = 0;
    for (int i = 0; i < dst; ++i) {
        const ScaleBlock& cand = g.block(i);
        if (!cand.interior_hull().contains(p)) continue;
        const double gap = cand.spacing - g.block(dst).spacing;
        const double dist = (cand.hull().center() - p).norm2();
        if (best < 0 || gap < best_gap - 1e-12 ||
            (std::fabs(gap - best_gap) <= 1e-12 && dist < best_dist)) {
            best = i;
            best_gap = gap;
            best_dist = dist;
        }
    }
    return best;
}

inline ScaleMapping mapping_between(const ScaleGraph& g, int src, int dst) {
    return build_mapping(g.base_diag[src], g.base_diag[dst],
                         g.block(src).spacing / g.block(dst).spacing);
}

struct MappingSet {
    std::vector<ScaleMapping> to_dst;  // indexed by source block
};

inline MappingSet mappings_into(const ScaleGraph& g, int dst) {
    MappingSet ms;
    ms.to_dst.resize(g.n_blocks());
    for (int s = 0; s < g.n_blocks(); ++s)
        if (s != dst) ms.to_dst[s] = mapping_between(g, s, dst);
    return ms;
}

// Aligned (post-stream) data carries pre-collision non-equilibria: map with
// the K diagonal and store macroscopics consistent with the mapped state.
inline void write_mapped_pre(ScaleBlock& b, std::int64_t cell, const Populations& f_interp,
                             const ScaleMapping& map) {
    double r;
    Vec3 u;
    pop_macroscopics(f_interp, r, u);
    b.set_f(b.f_curr, cell, map_distribution(f_interp, r, u, map, /*post_collision=*/false));
    b.set_macros(cell, r, u);
}

// Scale-boundary samples act as streaming donors: they receive the source's
// post-collision state mapped with K_hat (the paper's tilde mapping).
inline void write_boundary_donor(ScaleBlock& b, std::int64_t cell, const Populations& f_post,
                                 const ScaleMapping& map, double r_store, const Vec3& u_store) {
    double r;
    Vec3 u;
    pop_macroscopics(f_post, r, u);
    b.set_f(b.f_curr, cell, map_distribution(f_post, r, u, map, /*post_collision=*/true));
    b.set_macros(cell, r_store, u_store);
}

}  // namespace detail

// Number of substeps a finer scale runs to cover one reference step.
inline int substep_count(double dt0, double dt_fine) {
    if (!(dt_fine > 0) || dt_fine > dt0 + 1e-12 * dt0)
        throw std::invalid_argument("substep_count: requires dt_fine <= dt0");
    return int(std::floor(dt0 / dt_fine)) + 1;
}

// Interpolation weight placing t_n + dt0 between t_n and t_n + dt_coarse.
inline double coarse_theta(double dt0, double dt_coarse) {
    if (!(dt_coarse >= dt0)) throw std::invalid_argument("coarse_theta: requires dt_coarse >= dt0");
    return dt0 / dt_coarse;
}

// Prior-mapping: fill a block's externally-fed samples from already-aligned
// coarser data at time t_n (sources' advance-start snapshots).
inline void prior_map(ScaleGraph& g, int bi) {
    ScaleBlock& b = g.block(bi);
    const auto maps = detail::mappings_into(g, bi);
    const bool ffd = g.is_ffd[bi] != 0;

    // ScaleBoundary samples: nearest coarser scale for DOI blocks; FFD shells
    // pull from the finest scale (reference or finer shells). Rim samples of
    // an FFD shell whose only source is a coarser shell are owned by that
    // shell's post-mapping instead (it has not run yet this advance).
    for (std::size_t k = 0; k < b.boundary_cells.size(); ++k) {
        const Vec3 p = b.cell_center(b.boundary_cells[k]);
        const int src = ffd ? detail::finest_covering(g, p, bi, g.reference)
                            : detail::nearest_coarser_source(g, bi, p);
        if (src < 0) throw std::runtime_error("prior_map: no coarser source covers a sample");
        b.boundary_src[k] = src;
    }
    parallel_for(std::int64_t(b.boundary_cells.size()), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t k = lo; k < hi; ++k) {
            const std::int64_t cell = b.boundary_cells[k];
            const int src = b.boundary_src[k];
            if (ffd && src < bi) continue;  // post-mapped later by the coarser shell
            const ScaleBlock& s = g.block(src);
            const Vec3 p = b.cell_center(cell);
            // donor state: source post-collision at t_n; stored macroscopics
            // stay the t_n ones (conserved by collision)
            const Populations f = trilinear_f(s, s.f_post, p);
            double r;
            Vec3 u;
            pop_macroscopics(trilinear_f(s, s.f_prev, p), r, u);
            detail::write_boundary_donor(b, cell, f, maps.to_dst[src], r, u);
        }
    });

    if (ffd) {
        // FFD shells refresh their entire overlapped region from finer data;
        // these cells evolve, so they take the aligned pre-collision state.
        const std::int64_t n = b.ncells();
        parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t cell = lo; cell < hi; ++cell) {
                if (b.flags[cell] != CellFlag::OverlapInterior) continue;
                const Vec3 p = b.cell_center(cell);
                const int src = detail::finest_covering(g, p, bi, g.reference);
                if (src < 0) continue;
                const Populations f = trilinear_f(g.block(src), g.block(src).f_prev, p);
                detail::write_mapped_pre(b, cell, f, maps.to_dst[src]);
            }
        });
    }
}

// Post-mapping: push this block's aligned state back onto coarser scales.
// DOI sub-scales update every coarser DOI-hierarchy block over the whole
// overlap (scale boundaries excluded); FFD shells update only the boundary
// of the next finer scale.
inline void post_map(ScaleGraph& g, int bi) {
    ScaleBlock& b = g.block(bi);
    const Box src_ih = b.interior_hull();
    if (!g.is_ffd[bi]) {
        // Exclude a band along this block's own boundary: re-importing freshly
        // interpolated rim data over-smooths the field (surface dissipation).
        Box inner = src_ih;
        const double margin = 2.0 * b.spacing;
        for (int a = 0; a < 3; ++a) {
            inner.lo[a] += margin;
            inner.hi[a] -= margin;
        }
        for (int k = g.reference; k < bi; ++k) {
            ScaleBlock& dst = g.block(k);
            const ScaleMapping map = detail::mapping_between(g, bi, k);
            int lo[3], hi[3];
            bool empty = false;
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::max(0, int(std::ceil((inner.lo[a] - dst.origin[a]) / dst.spacing - 1e-9)));
                hi[a] = std::min(dst.dims[a] - 1,
                                 int(std::floor((inner.hi[a] - dst.origin[a]) / dst.spacing + 1e-9)));
                if (lo[a] > hi[a]) empty = true;
            }
            if (empty) continue;
            const std::int64_t nz = hi[2] - lo[2] + 1;
            parallel_for(nz, [&](std::int64_t zb, std::int64_t ze) {
                for (std::int64_t zz = zb; zz < ze; ++zz) {
                    const int z = lo[2] + int(zz);
                    for (int y = lo[1]; y <= hi[1]; ++y)
                        for (int x = lo[0]; x <= hi[0]; ++x) {
                            const std::int64_t cell = dst.idx(x, y, z);
                            const CellFlag fl = dst.flags[cell];
                            if (fl != CellFlag::Fluid && fl != CellFlag::OverlapInterior) continue;
                            const Vec3 p = dst.cell_center(x, y, z);
                            if (!inner.contains(p)) continue;
                            const Populations f = trilinear_f(b, b.f_curr, p);
                            detail::write_mapped_pre(dst, cell, f, map);
                        }
                }
            });
        }
    } else {
        const int k = bi + 1;  // next finer scale (another shell or the reference)
        if (k >= g.n_blocks()) return;
        ScaleBlock& dst = g.block(k);
        const ScaleMapping map = detail::mapping_between(g, bi, k);
        parallel_for(std::int64_t(dst.boundary_cells.size()), [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t j = lo; j < hi; ++j) {
                const std::int64_t cell = dst.boundary_cells[j];
                const Vec3 p = dst.cell_center(cell);
                if (!src_ih.contains(p)) continue;
                // only rim samples whose finest source is this shell
                if (detail::finest_covering(g, p, k, g.reference) != bi) continue;
                const Populations f = trilinear_f(b, b.f_curr, p);
                detail::write_mapped_pre(dst, cell, f, map);
            }
        });
    }
}

namespace detail {

// Boundary refresh during fine substeps: donor states interpolated between
// the source's post-collision state at t_n (K_hat mapping) and its aligned
// state at t_n + dt0 carried to donor phase with (I - S_dst) K. The final
// fractional substep uses the t_n + dt0 endpoint alone.
inline void refresh_fine_boundary(ScaleGraph& g, int bi, const MappingSet& maps, double theta,
                                  bool final_direct) {
    ScaleBlock& b = g.block(bi);
    parallel_for(std::int64_t(b.boundary_cells.size()), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t k = lo; k < hi; ++k) {
            const std::int64_t cell = b.boundary_cells[k];
            const int src = b.boundary_src[k];
            const Vec3 p = b.cell_center(cell);
            const ScaleBlock& s = g.block(src);
            const ScaleMapping& map = maps.to_dst[src];

            double rb;
            Vec3 ub;
            const Populations fb = trilinear_f(s, s.f_curr, p);
            pop_macroscopics(fb, rb, ub);
            const Populations donor_b = map_with_diagonal(fb, rb, ub, map.K_donor);
            if (final_direct) {
                b.set_f(b.f_curr, cell, donor_b);
                b.set_macros(cell, rb, ub);
            } else {
                double ra;
                Vec3 ua;
                const Populations fa = trilinear_f(s, s.f_post, p);
                pop_macroscopics(fa, ra, ua);
                const Populations donor_a = map_distribution(fa, ra, ua, map, true);
                b.set_f(b.f_curr, cell, temporal_linear(donor_a, donor_b, theta));
                b.set_macros(cell, (1 - theta) * ra + theta * rb,
                             ua * (1 - theta) + ub * theta);
            }
        }
    });
}

}  // namespace detail

// Runs l = floor(dt0/dt_f) + 1 substeps, then aligns the block at t_n + dt0
// by quadratic interpolation through t_n, t_n + (l-1) dt_f and t_n + l dt_f.
inline void fine_substep(ScaleGraph& g, int bi, double t_n) {
    ScaleBlock& b = g.block(bi);
    const auto maps = detail::mappings_into(g, bi);
    const int l = substep_count(g.dt0, b.dt_phys);
    std::vector<double> snap_a;
    for (int k = 1; k <= l; ++k) {
        if (k > 1) {
            const bool final_direct = (k == l);
            const double theta = (k - 1) * b.dt_phys / g.dt0;
            detail::refresh_fine_boundary(g, bi, maps, theta, final_direct);
        }
        b.capture_post = (k == 1);  // snapshot the t_n collision for finer scales
        b.step();
        b.capture_post = false;
        if (k == l - 1) snap_a = b.f_curr;
    }
    const double t1 = (l - 1) * b.dt_phys, t2 = l * b.dt_phys;
    const std::int64_t n = b.ncells();
    const double w0 = (g.dt0 - t1) * (g.dt0 - t2) / ((0.0 - t1) * (0.0 - t2));
    const double w1 = (g.dt0 - 0.0) * (g.dt0 - t2) / ((t1 - 0.0) * (t1 - t2));
    const double w2 = (g.dt0 - 0.0) * (g.dt0 - t1) / ((t2 - 0.0) * (t2 - t1));
    parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t cell = lo; cell < hi; ++cell) {
            const CellFlag fl = b.flags[cell];
            if (fl == CellFlag::Solid || fl == CellFlag::ScaleBoundary) continue;
            Populations f;
            for (int q = 0; q < kQ; ++q) {
                const std::size_t at = std::size_t(q) * n + cell;
                f[q] = w0 * b.f_prev[at] + w1 * snap_a[at] + w2 * b.f_curr[at];
            }
            b.set_f(b.f_curr, cell, f);
            double r;
            Vec3 u;
            pop_macroscopics(f, r, u);
            b.set_macros(cell, r, u);
        }
    });
    // leave the rim in the aligned pre-collision phase of the source
    parallel_for(std::int64_t(b.boundary_cells.size()), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t k = lo; k < hi; ++k) {
            const std::int64_t cell = b.boundary_cells[k];
            const int src = b.boundary_src[k];
            const Vec3 p = b.cell_center(cell);
            detail::write_mapped_pre(b, cell, trilinear_f(g.block(src), g.block(src).f_curr, p),
                                     maps.to_dst[src]);
        }
    });
    b.time = t_n + g.dt0;
}

// One coarse step past t_n + dt0, linear interpolation back, and a direct
// boundary refresh from the finer data at t_n + dt0.
inline void coarse_substep(ScaleGraph& g, int bi, double t_n) {
    ScaleBlock& b = g.block(bi);
    const auto maps = detail::mappings_into(g, bi);
    b.capture_post = true;
    b.step();
    b.capture_post = false;
    const double theta = coarse_theta(g.dt0, b.dt_phys);
    const std::int64_t n = b.ncells();
    parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t cell = lo; cell < hi; ++cell) {
            const CellFlag fl = b.flags[cell];
            if (fl == CellFlag::Solid || fl == CellFlag::ScaleBoundary) continue;
            Populations f;
            for (int q = 0; q < kQ; ++q) {
                const std::size_t at = std::size_t(q) * n + cell;
                f[q] = (1.0 - theta) * b.f_prev[at] + theta * b.f_curr[at];
            }
            b.set_f(b.f_curr, cell, f);
            double r;
            Vec3 u;
            pop_macroscopics(f, r, u);
            b.set_macros(cell, r, u);
        }
    });
    // scale-boundary samples take the finer state at t_n + dt0 directly;
    // samples owned by a coarser shell wait for its post-mapping
    parallel_for(std::int64_t(b.boundary_cells.size()), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t k = lo; k < hi; ++k) {
            const std::int64_t cell = b.boundary_cells[k];
            const int src = b.boundary_src[k];
            if (src < 0 || src < bi) continue;
            const Vec3 p = b.cell_center(cell);
            const Populations f = trilinear_f(g.block(src), g.block(src).f_curr, p);
            detail::write_mapped_pre(b, cell, f, maps.to_dst[src]);
        }
    });
    b.time = t_n + g.dt0;
}

// One reference time step of the whole composite (Algorithm 1 body).
inline void advance(ScaleGraph& g) {
    using clock = std::chrono::steady_clock;
    const double t_n = g.time;
    for (int i = 0; i < g.n_blocks(); ++i)
        if (std::fabs(g.block(i).time - t_n) > 1e-9 * std::max(1.0, g.dt0))
            throw std::runtime_error("advance: misaligned-clock on a scale block");

    for (auto& b : g.blocks) detail::snapshot(*b);

    auto timed = [&](int bi, auto&& fn) {
        const auto t0 = clock::now();
        fn();
        g.advance_ms[bi] += std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };
    std::fill(g.advance_ms.begin(), g.advance_ms.end(), 0.0);

    timed(g.reference, [&] {
        ScaleBlock& ref = g.block(g.reference);
        // finer scales (possibly created by the rebuild hook below) prior-map
        // from the reference's post-collision state
        ref.capture_post = g.n_blocks() > 1 || bool(g.dynamic_rebuild);
        ref.step();
        ref.capture_post = false;
    });
    g.block(g.reference).time = t_n + g.dt0;

    for (int bi = g.reference - 1; bi >= 0; --bi)
        timed(bi, [&] {
            prior_map(g, bi);
            coarse_substep(g, bi, t_n);
            post_map(g, bi);
        });

    if (g.dynamic_rebuild) g.dynamic_rebuild(g);

    for (int bi = g.reference + 1; bi < g.n_blocks(); ++bi)
        timed(bi, [&] {
            prior_map(g, bi);
            fine_substep(g, bi, t_n);
            post_map(g, bi);
        });

    ++g.iteration;
    g.time = t_n + g.dt0;
}

}  // namespace cskf
