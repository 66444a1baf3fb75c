#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "cskf/core.hpp"
#include "cskf/lattice.hpp"

namespace cskf {

using Populations = std::array<double, kQ>;
// Central moments m_0..m_26 in the non-orthogonal basis ordering.
using MomentVector = std::array<double, kQ>;

inline void pop_macroscopics(const Populations& f, double& rho, Vec3& u) {
    const auto& lat = d3q27();
    rho = 0;
    u = {0, 0, 0};
    for (int i = 0; i < kQ; ++i) {
        rho += f[i];
        u.x += f[i] * lat.velocities[i][0];
        u.y += f[i] * lat.velocities[i][1];
        u.z += f[i] * lat.velocities[i][2];
    }
    u = u * (1.0 / rho);
}

// Second-order truncated equilibrium. Identical to T(u) * equilibrium_moments(rho, u);
// the moments tests pin that equivalence.
inline Populations equilibrium_pops(double rho, const Vec3& u) {
    const auto& lat = d3q27();
    Populations f;
    const double uu = 1.5 * u.norm2();
    for (int i = 0; i < kQ; ++i) {
        const double cu =
            u.x * lat.velocities[i][0] + u.y * lat.velocities[i][1] + u.z * lat.velocities[i][2];
        f[i] = lat.weights[i] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - uu);
    }
    return f;
}

inline MomentVector equilibrium_moments(double rho, const Vec3& u) {
    const double ux = u.x, uy = u.y, uz = u.z;
    const double ux2 = ux * ux, uy2 = uy * uy, uz2 = uz * uz;
    MomentVector m{};
    m[0] = rho;
    // m[1..8] = 0
    m[9] = rho;
    m[10] = -rho * ux * (uy2 + uz2);
    m[11] = -rho * uy * (ux2 + uz2);
    m[12] = -rho * uz * (ux2 + uy2);
    m[13] = -rho * ux * (uy2 - uz2);
    m[14] = -rho * uy * (ux2 - uz2);
    m[15] = -rho * uz * (ux2 - uy2);
    m[16] = -rho * ux * uy * uz;
    m[17] = rho / 3.0 * (9.0 * ux2 * uy2 + 9.0 * ux2 * uz2 + 9.0 * uy2 * uz2 + 1.0);
    m[18] = rho / 9.0 * (27.0 * ux2 * uy2 + 27.0 * ux2 * uz2 - 27.0 * uy2 * uz2 + 1.0);
    m[19] = 3.0 * rho * ux2 * (uy2 - uz2);
    m[20] = 3.0 * rho * ux2 * uy * uz;
    m[21] = 3.0 * rho * ux * uy2 * uz;
    m[22] = 3.0 * rho * ux * uy * uz2;
    m[23] = -rho / 3.0 * ux * (18.0 * uy2 * uz2 + uy2 + uz2);
    m[24] = -rho / 3.0 * uy * (18.0 * ux2 * uz2 + ux2 + uz2);
    m[25] = -rho / 3.0 * uz * (18.0 * ux2 * uy2 + ux2 + uy2);
    m[26] = rho * (10.0 * ux2 * uy2 * uz2 + ux2 * uy2 + ux2 * uz2 + uy2 * uz2 + 1.0 / 27.0);
    return m;
}

// ------------------------------------------------------------------
// Explicit velocity-dependent basis: M(u), T = (M^T)^{-1}.
// ------------------------------------------------------------------
struct MomentBasis {
    Vec3 u;
    std::array<std::array<double, kQ>, kQ> M;  // M[i][j]
    std::array<std::array<double, kQ>, kQ> T;
};

namespace detail {

inline void fill_moment_row(double x, double y, double z, double* row) {
    const double x2 = x * x, y2 = y * y, z2 = z * z;
    row[0] = 1.0;
    row[1] = x;
    row[2] = y;
    row[3] = z;
    row[4] = x * y;
    row[5] = x * z;
    row[6] = y * z;
    row[7] = x2 - y2;
    row[8] = x2 - z2;
    row[9] = x2 + y2 + z2;
    row[10] = x * y2 + x * z2;
    row[11] = x2 * y + y * z2;
    row[12] = x2 * z + y2 * z;
    row[13] = x * y2 - x * z2;
    row[14] = x2 * y - y * z2;
    row[15] = x2 * z - y2 * z;
    row[16] = x * y * z;
    row[17] = x2 * y2 + x2 * z2 + y2 * z2;
    row[18] = x2 * y2 + x2 * z2 - y2 * z2;
    row[19] = x2 * y2 - x2 * z2;
    row[20] = x2 * y * z;
    row[21] = x * y2 * z;
    row[22] = x * y * z2;
    row[23] = x * y2 * z2;
    row[24] = x2 * y * z2;
    row[25] = x2 * y2 * z;
    row[26] = x2 * y2 * z2;
}

// Gauss-Jordan inverse with partial pivoting for the 27x27 system.
inline bool invert_dense(std::array<std::array<double, kQ>, kQ>& a,
                         std::array<std::array<double, kQ>, kQ>& inv) {
    for (int i = 0; i < kQ; ++i)
        for (int j = 0; j < kQ; ++j) inv[i][j] = (i == j) ? 1.0 : 0.0;
    for (int col = 0; col < kQ; ++col) {
        int piv = col;
        double best = std::fabs(a[col][col]);
        for (int r = col + 1; r < kQ; ++r)
            if (std::fabs(a[r][col]) > best) { best = std::fabs(a[r][col]); piv = r; }
        if (best < 1e-14) return false;
        if (piv != col) { std::swap(a[piv], a[col]); std::swap(inv[piv], inv[col]); }
        const double d = 1.0 / a[col][col];
        for (int j = 0; j < kQ; ++j) { a[col][j] *= d; inv[col][j] *= d; }
        for (int r = 0; r < kQ; ++r) {
            if (r == col) continue;
            const double fac = a[r][col];
            if (fac == 0.0) continue;
            for (int j = 0; j < kQ; ++j) {
                a[r][j] -= fac * a[col][j];
                inv[r][j] -= fac * inv[col][j];
            }
        }
    }
    return true;
}

}  // namespace detail

inline MomentBasis build_basis(const Vec3& u) {
    if (u.norm() > 0.4)
        throw std::invalid_argument("build_basis: |u| exceeds the incompressible bound 0.4");
    const auto& lat = d3q27();
    MomentBasis basis;
    basis.u = u;
    for (int i = 0; i < kQ; ++i)
        detail::fill_moment_row(lat.velocities[i][0] - u.x, lat.velocities[i][1] - u.y,
                                lat.velocities[i][2] - u.z, basis.M[i].data());

    std::array<std::array<double, kQ>, kQ> mt;  // M^T, destroyed by inversion
    for (int i = 0; i < kQ; ++i)
        for (int j = 0; j < kQ; ++j) mt[j][i] = basis.M[i][j];
    auto mt_copy = mt;
    if (!detail::invert_dense(mt, basis.T))
        throw std::logic_error("build_basis: singular M^T");

    double resid = 0;
    for (int i = 0; i < kQ; ++i)
        for (int j = 0; j < kQ; ++j) {
            double s = 0;
            for (int k = 0; k < kQ; ++k) s += mt_copy[i][k] * basis.T[k][j];
            resid = std::max(resid, std::fabs(s - (i == j ? 1.0 : 0.0)));
        }
    if (resid > 1e-8) throw std::logic_error("build_basis: inversion residual exceeds 1e-8");
    return basis;
}

inline MomentVector to_moments(const Populations& f, const MomentBasis& basis) {
    MomentVector m{};
    for (int i = 0; i < kQ; ++i) {
        const double fi = f[i];
        for (int j = 0; j < kQ; ++j) m[j] += basis.M[i][j] * fi;
    }
    return m;
}

inline Populations from_moments(const MomentVector& m, const MomentBasis& basis) {
    Populations f{};
    for (int i = 0; i < kQ; ++i) {
        double s = 0;
        for (int j = 0; j < kQ; ++j) s += basis.T[i][j] * m[j];
        f[i] = s;
    }
    return f;
}

// ------------------------------------------------------------------
// Factorized transform. Algebraically identical to M(u)^T f / T(u) m,
// expanded into raw monomial moments, per-axis binomial shifts, and the
// fixed sparse combination of the basis columns. This is the collision
// hot path; tests pin agreement with the explicit basis to 1e-12.
// ------------------------------------------------------------------
namespace detail {

constexpr int midx(int a, int b, int c) { return a * 9 + b * 3 + c; }

struct RawTables {
    // raw_terms[q] lists (velocity index, sign) contributing to monomial q.
    std::array<std::array<std::pair<int, int>, kQ>, kQ> terms;
    std::array<int, kQ> n_terms{};
    // inv_terms[i] lists (monomial q, coeff) reconstructing f_i from raw moments.
    std::array<std::array<std::pair<int, double>, 8>, kQ> inv_terms;
    std::array<int, kQ> n_inv{};
};

inline const RawTables& raw_tables() {
    static const RawTables tabs = [] {
        RawTables t{};
        const auto& lat = d3q27();
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) {
                    const int q = midx(a, b, c);
                    for (int i = 0; i < kQ; ++i) {
                        int px = a == 0 ? 1 : (a == 1 ? lat.velocities[i][0]
                                                      : std::abs(lat.velocities[i][0]));
                        int py = b == 0 ? 1 : (b == 1 ? lat.velocities[i][1]
                                                      : std::abs(lat.velocities[i][1]));
                        int pz = c == 0 ? 1 : (c == 1 ? lat.velocities[i][2]
                                                      : std::abs(lat.velocities[i][2]));
                        const int s = px * py * pz;
                        if (s != 0) t.terms[q][t.n_terms[q]++] = {i, s};
                    }
                }
        // 1D inverse Vandermonde rows over c in {-1, 0, 1}, moments (1, c, c^2).
        auto vinv = [](int c, int order) -> double {
            static const double rows[3][3] = {{0.0, -0.5, 0.5},   // c = -1
                                              {1.0, 0.0, -1.0},   // c = 0
                                              {0.0, 0.5, 0.5}};   // c = +1
            return rows[c + 1][order];
        };
        for (int i = 0; i < kQ; ++i) {
            for (int a = 0; a < 3; ++a) {
                double wx = vinv(lat.velocities[i][0], a);
                if (wx == 0.0) continue;
                for (int b = 0; b < 3; ++b) {
                    double wy = vinv(lat.velocities[i][1], b);
                    if (wy == 0.0) continue;
                    for (int c = 0; c < 3; ++c) {
                        double wz = vinv(lat.velocities[i][2], c);
                        if (wz == 0.0) continue;
                        t.inv_terms[i][t.n_inv[i]++] = {midx(a, b, c), wx * wy * wz};
                    }
                }
            }
        }
        return t;
    }();
    return tabs;
}

// Shift raw monomial moments about u along one exponent axis (in place).
inline void shift_axis(std::array<double, kQ>& nu, double u, int axis) {
    const int stride = axis == 0 ? 9 : (axis == 1 ? 3 : 1);
    for (int o1 = 0; o1 < 3; ++o1)
        for (int o2 = 0; o2 < 3; ++o2) {
            int base;
            if (axis == 0) base = o1 * 3 + o2;
            else if (axis == 1) base = o1 * 9 + o2;
            else base = o1 * 9 + o2 * 3;
            const double n0 = nu[base], n1 = nu[base + stride], n2 = nu[base + 2 * stride];
            nu[base + stride] = n1 - u * n0;
            nu[base + 2 * stride] = n2 - 2.0 * u * n1 + u * u * n0;
        }
}

inline MomentVector combine_monomials(const std::array<double, kQ>& mu) {
    MomentVector m;
    m[0] = mu[midx(0, 0, 0)];
    m[1] = mu[midx(1, 0, 0)];
    m[2] = mu[midx(0, 1, 0)];
    m[3] = mu[midx(0, 0, 1)];
    m[4] = mu[midx(1, 1, 0)];
    m[5] = mu[midx(1, 0, 1)];
    m[6] = mu[midx(0, 1, 1)];
    m[7] = mu[midx(2, 0, 0)] - mu[midx(0, 2, 0)];
    m[8] = mu[midx(2, 0, 0)] - mu[midx(0, 0, 2)];
    m[9] = mu[midx(2, 0, 0)] + mu[midx(0, 2, 0)] + mu[midx(0, 0, 2)];
    m[10] = mu[midx(1, 2, 0)] + mu[midx(1, 0, 2)];
    m[11] = mu[midx(2, 1, 0)] + mu[midx(0, 1, 2)];
    m[12] = mu[midx(2, 0, 1)] + mu[midx(0, 2, 1)];
    m[13] = mu[midx(1, 2, 0)] - mu[midx(1, 0, 2)];
    m[14] = mu[midx(2, 1, 0)] - mu[midx(0, 1, 2)];
    m[15] = mu[midx(2, 0, 1)] - mu[midx(0, 2, 1)];
    m[16] = mu[midx(1, 1, 1)];
    m[17] = mu[midx(2, 2, 0)] + mu[midx(2, 0, 2)] + mu[midx(0, 2, 2)];
    m[18] = mu[midx(2, 2, 0)] + mu[midx(2, 0, 2)] - mu[midx(0, 2, 2)];
    m[19] = mu[midx(2, 2, 0)] - mu[midx(2, 0, 2)];
    m[20] = mu[midx(2, 1, 1)];
    m[21] = mu[midx(1, 2, 1)];
    m[22] = mu[midx(1, 1, 2)];
    m[23] = mu[midx(1, 2, 2)];
    m[24] = mu[midx(2, 1, 2)];
    m[25] = mu[midx(2, 2, 1)];
    m[26] = mu[midx(2, 2, 2)];
    return m;
}

inline std::array<double, kQ> split_monomials(const MomentVector& m) {
    std::array<double, kQ> mu{};
    mu[midx(0, 0, 0)] = m[0];
    mu[midx(1, 0, 0)] = m[1];
    mu[midx(0, 1, 0)] = m[2];
    mu[midx(0, 0, 1)] = m[3];
    mu[midx(1, 1, 0)] = m[4];
    mu[midx(1, 0, 1)] = m[5];
    mu[midx(0, 1, 1)] = m[6];
    const double a200 = (m[7] + m[8] + m[9]) / 3.0;
    mu[midx(2, 0, 0)] = a200;
    mu[midx(0, 2, 0)] = a200 - m[7];
    mu[midx(0, 0, 2)] = a200 - m[8];
    mu[midx(1, 2, 0)] = 0.5 * (m[10] + m[13]);
    mu[midx(1, 0, 2)] = 0.5 * (m[10] - m[13]);
    mu[midx(2, 1, 0)] = 0.5 * (m[11] + m[14]);
    mu[midx(0, 1, 2)] = 0.5 * (m[11] - m[14]);
    mu[midx(2, 0, 1)] = 0.5 * (m[12] + m[15]);
    mu[midx(0, 2, 1)] = 0.5 * (m[12] - m[15]);
    mu[midx(1, 1, 1)] = m[16];
    const double sum220_202 = 0.5 * (m[17] + m[18]);
    mu[midx(0, 2, 2)] = 0.5 * (m[17] - m[18]);
    mu[midx(2, 2, 0)] = 0.5 * (sum220_202 + m[19]);
    mu[midx(2, 0, 2)] = 0.5 * (sum220_202 - m[19]);
    mu[midx(2, 1, 1)] = m[20];
    mu[midx(1, 2, 1)] = m[21];
    mu[midx(1, 1, 2)] = m[22];
    mu[midx(1, 2, 2)] = m[23];
    mu[midx(2, 1, 2)] = m[24];
    mu[midx(2, 2, 1)] = m[25];
    mu[midx(2, 2, 2)] = m[26];
    return mu;
}

}  // namespace detail

// m = M(u)^T f without building the basis.
inline MomentVector central_moments(const Populations& f, const Vec3& u) {
    const auto& tabs = detail::raw_tables();
    std::array<double, kQ> nu{};
    for (int q = 0; q < kQ; ++q) {
        double s = 0;
        for (int k = 0; k < tabs.n_terms[q]; ++k) {
            const auto& [i, sign] = tabs.terms[q][k];
            s += sign > 0 ? f[i] : -f[i];
        }
        nu[q] = s;
    }
    detail::shift_axis(nu, u.x, 0);
    detail::shift_axis(nu, u.y, 1);
    detail::shift_axis(nu, u.z, 2);
    return detail::combine_monomials(nu);
}

// f = T(u) m without building the basis.
inline Populations pops_from_central(const MomentVector& m, const Vec3& u) {
    const auto& tabs = detail::raw_tables();
    auto mu = detail::split_monomials(m);
    detail::shift_axis(mu, -u.z, 2);
    detail::shift_axis(mu, -u.y, 1);
    detail::shift_axis(mu, -u.x, 0);
    Populations f;
    for (int i = 0; i < kQ; ++i) {
        double s = 0;
        for (int k = 0; k < tabs.n_inv[i]; ++k) {
            const auto& [q, coeff] = tabs.inv_terms[i][k];
            s += coeff * mu[q];
        }
        f[i] = s;
    }
    return f;
}

}  // namespace cskf
