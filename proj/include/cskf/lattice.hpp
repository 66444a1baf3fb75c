#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "cskf/core.hpp"

namespace cskf {

inline constexpr int kQ = 27;

// The D3Q27 velocity set: index 0 rest, 1-6 axis, 7-18 edge, 19-26 corner.
struct LatticeModel {
    std::array<std::array<int, 3>, kQ> velocities;
    std::array<double, kQ> weights;
    double cs2;
    std::array<int, kQ> opposite;
};

namespace detail {

inline LatticeModel make_d3q27() {
    LatticeModel lat;
    constexpr int cx[kQ] = {0, 1, -1, 0, 0,  0, 0,  1, -1, 1, -1, 1, -1, 1,
                            -1, 0, 0,  0, 0, 1, -1, 1, -1, 1, -1, 1, -1};
    constexpr int cy[kQ] = {0, 0, 0, 1, -1, 0, 0, 1, 1, -1, -1, 0, 0, 0,
                            0, 1, -1, 1, -1, 1, 1, -1, -1, 1, 1, -1, -1};
    constexpr int cz[kQ] = {0, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, 1, 1, -1,
                            -1, 1, 1, -1, -1, 1, 1, 1, 1, -1, -1, -1, -1};
    for (int i = 0; i < kQ; ++i) lat.velocities[i] = {cx[i], cy[i], cz[i]};
    lat.cs2 = 1.0 / 3.0;

    // One weight per velocity class (rest/axis/edge/corner). Validated below
    // against the moment conditions rather than trusted as constants.
    for (int i = 0; i < kQ; ++i) {
        int n = std::abs(cx[i]) + std::abs(cy[i]) + std::abs(cz[i]);
        switch (n) {
            case 0: lat.weights[i] = 8.0 / 27.0; break;
            case 1: lat.weights[i] = 2.0 / 27.0; break;
            case 2: lat.weights[i] = 1.0 / 54.0; break;
            default: lat.weights[i] = 1.0 / 216.0; break;
        }
    }

    for (int i = 0; i < kQ; ++i) {
        int found = -1;
        for (int j = 0; j < kQ; ++j) {
            if (lat.velocities[j][0] == -cx[i] && lat.velocities[j][1] == -cy[i] &&
                lat.velocities[j][2] == -cz[i]) {
                if (found >= 0) throw std::logic_error("d3q27: duplicate opposite velocity");
                found = j;
            }
        }
        if (found < 0) throw std::logic_error("d3q27: missing opposite velocity");
        lat.opposite[i] = found;
    }

    // Moment conditions, exact in units of 1/216.
    long w216[kQ];
    for (int i = 0; i < kQ; ++i) w216[i] = std::lround(lat.weights[i] * 216.0);
    long s0 = 0, s1[3] = {0, 0, 0}, s2[3][3] = {};
    for (int i = 0; i < kQ; ++i) {
        s0 += w216[i];
        for (int a = 0; a < 3; ++a) {
            s1[a] += w216[i] * lat.velocities[i][a];
            for (int b = 0; b < 3; ++b) s2[a][b] += w216[i] * lat.velocities[i][a] * lat.velocities[i][b];
        }
    }
    if (s0 != 216) throw std::logic_error("d3q27: weights do not sum to 1");
    for (int a = 0; a < 3; ++a) {
        if (s1[a] != 0) throw std::logic_error("d3q27: first weight moment nonzero");
        for (int b = 0; b < 3; ++b) {
            long expect = (a == b) ? 72 : 0;  // cs2 * 216
            if (s2[a][b] != expect) throw std::logic_error("d3q27: second weight moment wrong");
        }
    }
    return lat;
}

}  // namespace detail

inline const LatticeModel& d3q27() {
    static const LatticeModel lat = detail::make_d3q27();
    return lat;
}

}  // namespace cskf
