#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cskf/block.hpp"
#include "cskf/core.hpp"

namespace cskf {

// Solid obstacles are voxelized into cell flags at each block's resolution.
struct SolidPrimitive {
    enum class Kind { Sphere, Box, Tube, Mesh };
    Kind kind = Kind::Sphere;

    Vec3 center{};
    double radius = 0;                      // sphere
    Box box{};                              // box
    Vec3 axis_a{}, axis_b{};                // tube axis segment
    double outer_radius = 0, inner_radius = 0;
    std::vector<std::array<Vec3, 3>> tris;  // mesh
    std::string mesh_path;
    Vec3 wall_velocity{};

    bool contains(const Vec3& p) const {
        switch (kind) {
            case Kind::Sphere: return (p - center).norm2() <= radius * radius;
            case Kind::Box: return box.contains(p);
            case Kind::Tube: {
                const Vec3 d = axis_b - axis_a;
                const double len2 = d.norm2();
                if (len2 <= 0) return false;
                const double t = (p - axis_a).dot(d) / len2;
                if (t < 0 || t > 1) return false;
                const double r2 = (p - (axis_a + d * t)).norm2();
                return r2 <= outer_radius * outer_radius && r2 >= inner_radius * inner_radius;
            }
            case Kind::Mesh: return false;  // meshes go through the column sweep
        }
        return false;
    }
};

// Minimal OBJ triangle loader (v / f lines, fan-triangulated polygons).
inline std::vector<std::array<Vec3, 3>> load_obj_triangles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("mesh file not found: " + path);
    std::vector<Vec3> verts;
    std::vector<std::array<Vec3, 3>> tris;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 v;
            ss >> v.x >> v.y >> v.z;
            verts.push_back(v);
        } else if (tag == "f") {
            std::vector<int> ids;
            std::string tok;
            while (ss >> tok) {
                const auto slash = tok.find('/');
                ids.push_back(std::stoi(slash == std::string::npos ? tok : tok.substr(0, slash)));
            }
            for (std::size_t k = 2; k < ids.size(); ++k)
                tris.push_back({verts.at(ids[0] - 1), verts.at(ids[k - 1] - 1), verts.at(ids[k] - 1)});
        }
    }
    if (tris.empty()) throw std::runtime_error("mesh has no triangles: " + path);
    return tris;
}

namespace detail {

// x-crossings of a +x ray from (x0, y, z) against one triangle.
inline bool ray_x_triangle(const Vec3& p, const std::array<Vec3, 3>& t, double& x_hit) {
    // project on the yz plane; barycentric test
    const double ay = t[0].y - p.y, az = t[0].z - p.z;
    const double by = t[1].y - p.y, bz = t[1].z - p.z;
    const double cy = t[2].y - p.y, cz = t[2].z - p.z;
    const double d0 = by * cz - bz * cy;
    const double d1 = cy * az - cz * ay;
    const double d2 = ay * bz - az * by;
    const double sum = d0 + d1 + d2;
    if (sum == 0.0) return false;  // degenerate in projection
    const double u = d0 / sum, v = d1 / sum, w = d2 / sum;
    if (u < 0 || v < 0 || w < 0) return false;
    x_hit = u * t[0].x + v * t[1].x + w * t[2].x;
    return true;
}

}  // namespace detail

// Flags Solid cells of a block; solid wall velocities land in the u field.
inline void rasterize_solids(ScaleBlock& blk, const std::vector<SolidPrimitive>& solids) {
    for (const auto& s : solids) {
        if (s.kind == SolidPrimitive::Kind::Mesh) {
            // parity sweep along x per (y, z) column
            for (int z = 0; z < blk.dims.z; ++z)
                for (int y = 0; y < blk.dims.y; ++y) {
                    const Vec3 col = blk.cell_center(0, y, z);
                    std::vector<double> hits;
                    for (const auto& tri : s.tris) {
                        double xh;
                        if (detail::ray_x_triangle({-1e30, col.y, col.z}, tri, xh)) hits.push_back(xh);
                    }
                    if (hits.empty()) continue;
                    std::sort(hits.begin(), hits.end());
                    for (int x = 0; x < blk.dims.x; ++x) {
                        const double px = blk.cell_center(x, y, z).x;
                        const std::size_t below =
                            std::upper_bound(hits.begin(), hits.end(), px) - hits.begin();
                        if (below % 2 == 1) {
                            const std::int64_t i = blk.idx(x, y, z);
                            blk.flags[i] = CellFlag::Solid;
                            blk.set_macros(i, 1.0, s.wall_velocity);
                        }
                    }
                }
        } else {
            for (int z = 0; z < blk.dims.z; ++z)
                for (int y = 0; y < blk.dims.y; ++y)
                    for (int x = 0; x < blk.dims.x; ++x)
                        if (s.contains(blk.cell_center(x, y, z))) {
                            const std::int64_t i = blk.idx(x, y, z);
                            blk.flags[i] = CellFlag::Solid;
                            blk.set_macros(i, 1.0, s.wall_velocity);
                        }
        }
    }
}

}  // namespace cskf
