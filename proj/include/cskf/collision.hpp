#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "cskf/moments.hpp"

namespace cskf {

// Relaxation setup for one scale: physical viscosity nu plus the fixed
// high-order artificial-viscosity schedule and the adaptive-scaling knobs.
struct RelaxationSpec {
    double nu = 0.0;                      // kinematic viscosity, lattice units
    std::array<double, kQ> nu_prime{};    // entries 9..26 used
    double a = -4.0;
    double b = 5.0;
    double g_max = 0.115;

    void validate() const {
        if (nu < 0) throw std::invalid_argument("relaxation: nu must be >= 0");
        if (b < 1) throw std::invalid_argument("relaxation: b must be >= 1");
        double prev = 0;
        for (int i = 9; i < kQ; ++i) {
            // zero switches the artificial viscosity off (S = 2 on that moment)
            if (!(nu_prime[i] >= 0 && nu_prime[i] < 1.0 / 6.0))
                throw std::invalid_argument("relaxation: nu_prime out of [0, 1/6)");
            if (nu_prime[i] + 1e-15 < prev)
                throw std::invalid_argument("relaxation: nu_prime must be non-decreasing");
            prev = nu_prime[i];
        }
        if (b * nu_prime[kQ - 1] >= 1.0 / 6.0)
            throw std::invalid_argument("relaxation: b * max(nu_prime) crosses the S=1 singularity");
    }
};

struct RelaxationDiagonal {
    std::array<double, kQ> s{};
};

// The published schedule: two anchor artificial viscosities with the
// intermediate orders interpolated, a = -4, b = 5.
inline RelaxationSpec default_schedule() {
    RelaxationSpec spec;
    for (int i = 9; i <= 16; ++i) spec.nu_prime[i] = 0.005;
    for (int i = 17; i <= 22; ++i) spec.nu_prime[i] = 0.007;
    for (int i = 23; i <= 25; ++i) spec.nu_prime[i] = 0.009;
    spec.nu_prime[26] = 0.01;
    spec.a = -4.0;
    spec.b = 5.0;
    spec.g_max = 0.115;
    return spec;
}

// Scaling factor for the high-order artificial viscosities. The gradient is
// clamped to [0, g_max] so the affine law never produces a factor below 1
// (negative artificial viscosity).
inline double adaptive_factor(double grad_norm, const RelaxationSpec& spec) {
    const double g = std::min(grad_norm, spec.g_max);
    const double fac = spec.a * g / spec.g_max + spec.b;
    return std::max(fac, 1.0);
}

inline double relaxation_rate(double viscosity) { return 1.0 / (3.0 * viscosity + 0.5); }
inline double viscosity_from_rate(double s) { return (1.0 / s - 0.5) / 3.0; }

inline RelaxationDiagonal relaxation_diagonal(const RelaxationSpec& spec, double factor = 1.0) {
    if (factor < 1.0) throw std::invalid_argument("relaxation_diagonal: factor below 1");
    RelaxationDiagonal diag;
    for (int i = 0; i <= 3; ++i) diag.s[i] = 0.0;
    const double s_shear = relaxation_rate(spec.nu);
    for (int i = 4; i <= 8; ++i) diag.s[i] = s_shear;
    for (int i = 9; i < kQ; ++i) {
        const double nu_hat = factor * spec.nu_prime[i];
        if (nu_hat >= 1.0 / 6.0)
            throw std::invalid_argument("relaxation_diagonal: viscosity-overflow (S crosses 1)");
        diag.s[i] = relaxation_rate(nu_hat);
    }
    return diag;
}

// CMR collision: f + Omega with Omega = -T S (m - m_eq). Uses the factorized
// transform; collide_with_basis is the explicit-matrix reference route.
inline Populations collide(const Populations& f, double rho, const Vec3& u,
                           const RelaxationDiagonal& diag) {
    MomentVector m = central_moments(f, u);
    const MomentVector m_eq = equilibrium_moments(rho, u);
    for (int j = 0; j < kQ; ++j) m[j] = diag.s[j] * (m[j] - m_eq[j]);
    const Populations omega = pops_from_central(m, u);
    Populations out;
    for (int i = 0; i < kQ; ++i) out[i] = f[i] - omega[i];
    return out;
}

inline Populations collide_with_basis(const Populations& f, double rho, const Vec3& u,
                                      const RelaxationDiagonal& diag, const MomentBasis& basis) {
    MomentVector m = to_moments(f, basis);
    const MomentVector m_eq = equilibrium_moments(rho, u);
    for (int j = 0; j < kQ; ++j) m[j] = diag.s[j] * (m[j] - m_eq[j]);
    const Populations omega = from_moments(m, basis);
    Populations out;
    for (int i = 0; i < kQ; ++i) out[i] = f[i] - omega[i];
    return out;
}

}  // namespace cskf
