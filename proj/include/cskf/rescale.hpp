#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "cskf/block.hpp"
#include "cskf/collision.hpp"
#include "cskf/moments.hpp"

namespace cskf {

// Reynolds-consistent viscosity for a scale with spacing dx_s, given the
// reference-scale lattice viscosity.
inline double rescaled_viscosity(double nu_ref, double dx_ref, double dx_s) {
    if (!(nu_ref >= 0) || !(dx_ref > 0) || !(dx_s > 0))
        throw std::invalid_argument("rescaled_viscosity: inputs must be positive");
    return nu_ref * dx_ref / dx_s;
}

// Diagonal distribution-function mapping between two scales.
// alpha = dx_src / dx_dst; K rescales the shear moments, K_hat is the
// post-collision combined form (I - S_dst) K (I - S_src)^{-1}.
struct ScaleMapping {
    double alpha = 1.0;
    std::array<double, kQ> K{};        // pre-collision non-equilibrium scaling (Eq. 5 route)
    std::array<double, kQ> K_hat{};    // post-collision combined form
    std::array<double, kQ> K_donor{};  // (I - S_dst) K: pre-collision source data
                                       // turned into a post-collision donor state
    bool identity = false;             // K_hat is exactly the identity
    bool identity_pre = false;         // K is exactly the identity
};

inline ScaleMapping build_mapping(const RelaxationDiagonal& s_src, const RelaxationDiagonal& s_dst,
                                  double alpha) {
    if (!(alpha > 0)) throw std::invalid_argument("build_mapping: alpha must be positive");
    ScaleMapping map;
    map.alpha = alpha;
    for (int i = 0; i < kQ; ++i) {
        if (std::fabs(1.0 - s_src.s[i]) < 1e-9 || std::fabs(1.0 - s_dst.s[i]) < 1e-9)
            throw std::invalid_argument("build_mapping: singular-relaxation (S entry equals 1)");
        map.K[i] = (i >= 4 && i <= 8) ? s_src.s[i] / (alpha * s_dst.s[i]) : 1.0;
        map.K_hat[i] = (1.0 - s_dst.s[i]) * map.K[i] / (1.0 - s_src.s[i]);
        map.K_donor[i] = (1.0 - s_dst.s[i]) * map.K[i];
    }
    map.identity = map.identity_pre = true;
    for (int i = 0; i < kQ; ++i) {
        if (map.K_hat[i] != 1.0) map.identity = false;
        if (map.K[i] != 1.0) map.identity_pre = false;
    }
    return map;
}

// Applies an arbitrary diagonal to the non-equilibrium part.
inline Populations map_with_diagonal(const Populations& f_src, double rho, const Vec3& u,
                                     const std::array<double, kQ>& diag) {
    MomentVector m = central_moments(f_src, u);
    const MomentVector m_eq = equilibrium_moments(rho, u);
    for (int j = 0; j < kQ; ++j) m[j] = m_eq[j] + diag[j] * (m[j] - m_eq[j]);
    return pops_from_central(m, u);
}

// f_dst = T (m_eq + D (m - m_eq)) with D = K_hat for post-collision states
// (the paper's tilde mapping) or D = K for aligned pre-collision states.
// Density and momentum pass through unchanged (conserved entries are 1).
inline Populations map_distribution(const Populations& f_src, double rho, const Vec3& u,
                                    const ScaleMapping& map, bool post_collision = true) {
    if (post_collision ? map.identity : map.identity_pre) return f_src;
    const auto& diag = post_collision ? map.K_hat : map.K;
    MomentVector m = central_moments(f_src, u);
    const MomentVector m_eq = equilibrium_moments(rho, u);
    for (int j = 0; j < kQ; ++j) m[j] = m_eq[j] + diag[j] * (m[j] - m_eq[j]);
    return pops_from_central(m, u);
}

// Component-wise trilinear interpolation of f over the enclosing cell's
// corners; rho and u are recomputed from the interpolated populations.
inline Populations trilinear_f(const ScaleBlock& blk, const std::vector<double>& buf,
                               const Vec3& p, double* rho_out = nullptr, Vec3* u_out = nullptr) {
    double loc[3];
    int i0[3];
    double fr[3];
    for (int a = 0; a < 3; ++a) {
        loc[a] = (p[a] - blk.origin[a]) / blk.spacing;
        const double max_i = double(blk.dims[a] - 1);
        if (loc[a] < -1e-9 || loc[a] > max_i + 1e-9)
            throw std::out_of_range("trilinear_f: point outside the interior hull");
        if (loc[a] < 0) loc[a] = 0;
        if (loc[a] > max_i) loc[a] = max_i;
        i0[a] = int(loc[a]);
        if (i0[a] > blk.dims[a] - 2) i0[a] = blk.dims[a] > 1 ? blk.dims[a] - 2 : 0;
        fr[a] = loc[a] - i0[a];
    }
    const int x1 = blk.dims.x > 1 ? 1 : 0, y1 = blk.dims.y > 1 ? 1 : 0,
              z1 = blk.dims.z > 1 ? 1 : 0;
    const std::int64_t c000 = blk.idx(i0[0], i0[1], i0[2]);
    const std::int64_t corner[8] = {
        c000,
        blk.idx(i0[0] + x1, i0[1], i0[2]),
        blk.idx(i0[0], i0[1] + y1, i0[2]),
        blk.idx(i0[0] + x1, i0[1] + y1, i0[2]),
        blk.idx(i0[0], i0[1], i0[2] + z1),
        blk.idx(i0[0] + x1, i0[1], i0[2] + z1),
        blk.idx(i0[0], i0[1] + y1, i0[2] + z1),
        blk.idx(i0[0] + x1, i0[1] + y1, i0[2] + z1),
    };
    const double w[8] = {
        (1 - fr[0]) * (1 - fr[1]) * (1 - fr[2]), fr[0] * (1 - fr[1]) * (1 - fr[2]),
        (1 - fr[0]) * fr[1] * (1 - fr[2]),       fr[0] * fr[1] * (1 - fr[2]),
        (1 - fr[0]) * (1 - fr[1]) * fr[2],       fr[0] * (1 - fr[1]) * fr[2],
        (1 - fr[0]) * fr[1] * fr[2],             fr[0] * fr[1] * fr[2],
    };
    Populations out;
    const std::int64_t n = blk.ncells();
    for (int q = 0; q < kQ; ++q) {
        const double* fq = buf.data() + std::size_t(q) * n;
        double s = 0;
        for (int k = 0; k < 8; ++k) s += w[k] * fq[corner[k]];
        out[q] = s;
    }
    if (rho_out || u_out) {
        double r;
        Vec3 u;
        pop_macroscopics(out, r, u);
        if (rho_out) *rho_out = r;
        if (u_out) *u_out = u;
    }
    return out;
}

inline Populations trilinear_f(const ScaleBlock& blk, const Vec3& p, double* rho_out = nullptr,
                               Vec3* u_out = nullptr) {
    return trilinear_f(blk, blk.f_curr, p, rho_out, u_out);
}

// Trilinear interpolation of the stored macroscopic fields (exact copy at
// coincident sample points).
inline void trilinear_macros(const ScaleBlock& blk, const Vec3& p, double& rho_out, Vec3& u_out) {
    double loc[3];
    int i0[3];
    double fr[3];
    for (int a = 0; a < 3; ++a) {
        loc[a] = (p[a] - blk.origin[a]) / blk.spacing;
        const double max_i = double(blk.dims[a] - 1);
        if (loc[a] < 0) loc[a] = 0;
        if (loc[a] > max_i) loc[a] = max_i;
        i0[a] = int(loc[a]);
        if (i0[a] > blk.dims[a] - 2) i0[a] = blk.dims[a] > 1 ? blk.dims[a] - 2 : 0;
        fr[a] = loc[a] - i0[a];
    }
    const int x1 = blk.dims.x > 1 ? 1 : 0, y1 = blk.dims.y > 1 ? 1 : 0,
              z1 = blk.dims.z > 1 ? 1 : 0;
    rho_out = 0;
    u_out = {0, 0, 0};
    for (int k = 0; k < 8; ++k) {
        const int dx = k & 1, dy = (k >> 1) & 1, dz = (k >> 2) & 1;
        const double w = (dx ? fr[0] : 1 - fr[0]) * (dy ? fr[1] : 1 - fr[1]) *
                         (dz ? fr[2] : 1 - fr[2]);
        if (w == 0.0) continue;
        const std::int64_t i = blk.idx(i0[0] + dx * x1, i0[1] + dy * y1, i0[2] + dz * z1);
        rho_out += w * blk.rho[i];
        u_out += Vec3{blk.ux[i], blk.uy[i], blk.uz[i]} * w;
    }
}

inline Populations temporal_linear(const Populations& fa, const Populations& fb, double theta) {
    if (theta < 0.0 || theta > 1.0)
        throw std::invalid_argument("temporal_linear: theta outside [0, 1]");
    Populations out;
    for (int q = 0; q < kQ; ++q) out[q] = (1.0 - theta) * fa[q] + theta * fb[q];
    return out;
}

// Lagrange quadratic through (t0, f0), (t1, f1), (t2, f2) evaluated at t_eval.
inline Populations temporal_quadratic(const Populations& f0, const Populations& f1,
                                      const Populations& f2, double t0, double t1, double t2,
                                      double t_eval) {
    if (!(t0 < t1 && t1 < t2)) throw std::invalid_argument("temporal_quadratic: coincident nodes");
    if (t_eval < t0 || t_eval > t2)
        throw std::invalid_argument("temporal_quadratic: t_eval outside [t0, t2]");
    const double w0 = (t_eval - t1) * (t_eval - t2) / ((t0 - t1) * (t0 - t2));
    const double w1 = (t_eval - t0) * (t_eval - t2) / ((t1 - t0) * (t1 - t2));
    const double w2 = (t_eval - t0) * (t_eval - t1) / ((t2 - t0) * (t2 - t1));
    Populations out;
    for (int q = 0; q < kQ; ++q) out[q] = w0 * f0[q] + w1 * f1[q] + w2 * f2[q];
    return out;
}

}  // namespace cskf
