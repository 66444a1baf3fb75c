#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cskf/geometry.hpp"
#include "cskf/scalegen.hpp"
#include "cskf/tracers.hpp"

namespace cskf {

using json = nlohmann::json;

struct TracerConfig {
    bool enabled = false;
    int inject_rate = 2000;
    TracerRegion region{};
};

struct RunConfig {
    long long iterations = 100;
    long long output_every = 0;      // 0: no field dumps
    long long checkpoint_every = 0;  // 0: only the final checkpoint
    TracerConfig tracers{};
    std::uint64_t seed = 12345;
};

struct SimulationConfig {
    DomainSetup domain{};
    std::vector<SolidPrimitive> solids;
    double nu0 = 1e-4;  // reference-scale lattice viscosity
    ScalePlan scales{};
    RelaxationSpec relaxation = default_schedule();
    RunConfig run{};

    void validate() const {
        scales.validate();
        if (!(nu0 >= 0)) throw std::invalid_argument("config-invalid: fluid.nu0 must be >= 0");
        if (dom_volume() <= 0) throw std::invalid_argument("config-invalid: empty domain");
        if (dom_volume_doi() <= 0) throw std::invalid_argument("config-invalid: empty DOI");
        if (dom().inlet.enabled && dom().inlet.speed > 0.13)
            throw std::invalid_argument("config-invalid: inlet speed exceeds 0.13");
        for (const auto& s : solids) {
            if (!(s.kind != SolidPrimitive::Kind::Sphere || s.radius > 0))
                throw std::invalid_argument("config-invalid: sphere radius must be positive");
            if (s.kind == SolidPrimitive::Kind::Mesh && !std::filesystem::exists(s.mesh_path))
                throw std::invalid_argument("config-invalid: mesh file missing: " + s.mesh_path);
        }
        RelaxationSpec r = relaxation;
        r.nu = nu0;
        r.validate();
        if (run.tracers.enabled &&
            (run.tracers.inject_rate < 0 || run.tracers.inject_rate > 100000))
            throw std::invalid_argument("config-invalid: tracer inject rate out of range");
    }

  private:
    const DomainSetup& dom() const { return domain; }
    double dom_volume() const {
        const Vec3 d = domain.domain.hi - domain.domain.lo;
        return d.x * d.y * d.z;
    }
    double dom_volume_doi() const {
        const Vec3 d = domain.doi.hi - domain.doi.lo;
        return d.x * d.y * d.z;
    }
};

namespace detail {

inline Vec3 vec3_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("config-invalid: expected [x,y,z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json vec3_to(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline FaceBC face_from(const std::string& s) {
    if (s == "wall") return FaceBC::Wall;
    if (s == "outflow") return FaceBC::Outflow;
    if (s == "periodic") return FaceBC::Periodic;
    throw std::invalid_argument("config-invalid: unknown face bc '" + s + "'");
}

inline std::string face_to(FaceBC f) {
    switch (f) {
        case FaceBC::Wall: return "wall";
        case FaceBC::Outflow: return "outflow";
        case FaceBC::Periodic: return "periodic";
    }
    return "outflow";
}

inline int axis_from(const std::string& s) {
    if (s.size() == 2 && (s[1] == '-' || s[1] == '+')) {
        const int axis = s[0] == 'x' ? 0 : (s[0] == 'y' ? 1 : (s[0] == 'z' ? 2 : -1));
        if (axis >= 0) return axis;
    }
    throw std::invalid_argument("config-invalid: face must be one of x-,x+,y-,y+,z-,z+");
}

}  // namespace detail

inline SimulationConfig parse_config(const json& j) {
    SimulationConfig c;
    const json& jd = j.at("domain");
    c.domain.domain.lo = detail::vec3_from(jd.at("min"));
    c.domain.domain.hi = c.domain.domain.lo + detail::vec3_from(jd.at("size"));
    if (jd.contains("doi_min") || jd.contains("doi_size")) {
        c.domain.doi.lo = detail::vec3_from(jd.at("doi_min"));
        c.domain.doi.hi = c.domain.doi.lo + detail::vec3_from(jd.at("doi_size"));
    } else {
        c.domain.doi = c.domain.domain;
    }
    c.domain.faces.fill(FaceBC::Outflow);
    if (jd.contains("faces")) {
        static const char* names[6] = {"x-", "x+", "y-", "y+", "z-", "z+"};
        for (int f = 0; f < 6; ++f)
            if (jd["faces"].contains(names[f]))
                c.domain.faces[f] = detail::face_from(jd["faces"][names[f]].get<std::string>());
    }

    if (j.contains("inlet")) {
        const json& ji = j["inlet"];
        c.domain.inlet.enabled = true;
        const std::string face = ji.value("face", "x-");
        c.domain.inlet.axis = detail::axis_from(face);
        c.domain.inlet.side = face[1] == '-' ? 0 : 1;
        const std::string shape = ji.value("shape", "disk");
        c.domain.inlet.full_face = shape == "full";
        if (!c.domain.inlet.full_face) {
            c.domain.inlet.center = detail::vec3_from(ji.at("center"));
            c.domain.inlet.radius = ji.at("radius").get<double>();
        }
        c.domain.inlet.speed = ji.value("speed", 0.1);
    }

    if (j.contains("solids")) {
        for (const json& js : j["solids"]) {
            SolidPrimitive s;
            const std::string type = js.at("type").get<std::string>();
            if (type == "sphere") {
                s.kind = SolidPrimitive::Kind::Sphere;
                s.center = detail::vec3_from(js.at("center"));
                s.radius = js.at("radius").get<double>();
            } else if (type == "box") {
                s.kind = SolidPrimitive::Kind::Box;
                s.box.lo = detail::vec3_from(js.at("min"));
                s.box.hi = detail::vec3_from(js.at("max"));
            } else if (type == "tube") {
                s.kind = SolidPrimitive::Kind::Tube;
                s.axis_a = detail::vec3_from(js.at("from"));
                s.axis_b = detail::vec3_from(js.at("to"));
                s.outer_radius = js.at("outer_radius").get<double>();
                s.inner_radius = js.value("inner_radius", 0.0);
            } else if (type == "mesh") {
                s.kind = SolidPrimitive::Kind::Mesh;
                s.mesh_path = js.at("file").get<std::string>();
                if (std::filesystem::exists(s.mesh_path))
                    s.tris = load_obj_triangles(s.mesh_path);
            } else {
                throw std::invalid_argument("config-invalid: unknown solid type '" + type + "'");
            }
            if (js.contains("wall_velocity")) s.wall_velocity = detail::vec3_from(js["wall_velocity"]);
            c.solids.push_back(std::move(s));
        }
    }

    c.nu0 = j.contains("fluid") ? j["fluid"].value("nu0", 1e-4) : 1e-4;

    if (j.contains("scales")) {
        const json& js = j["scales"];
        c.scales.n_levels = js.value("n_levels", 1);
        c.scales.dx_max = js.value("dx_max", 1.0);
        c.scales.dx_min = js.value("dx_min", c.scales.dx_max);
        if (js.contains("ffd_spacings"))
            c.scales.ffd_spacings = js["ffd_spacings"].get<std::vector<double>>();
        if (js.contains("quantization"))
            c.scales.quantization = js["quantization"].get<std::vector<double>>();
        c.scales.pad_cells = js.value("pad_cells", 4);
        if (js.contains("wake")) {
            const json& jw = js["wake"];
            c.scales.wake.enabled = jw.value("enabled", true);
            if (jw.contains("center")) c.scales.wake.center = detail::vec3_from(jw["center"]);
            c.scales.wake.radius = jw.value("radius", 0.0);
            if (jw.contains("normal")) c.scales.wake.normal = detail::vec3_from(jw["normal"]);
            c.scales.wake.ray_count = jw.value("ray_count", 16);
        }
        if (js.contains("dynamic")) {
            const json& jdn = js["dynamic"];
            c.scales.dynamic.grad_thresholds =
                jdn.value("gradient_thresholds", std::vector<double>{});
            c.scales.dynamic.vel_thresholds =
                jdn.value("velocity_thresholds", std::vector<double>{});
            c.scales.dynamic.spacings = jdn.value("spacings", std::vector<double>{});
            c.scales.dynamic.rebuild_interval = jdn.value("rebuild_interval", 40);
        }
    } else {
        c.scales.dx_min = c.scales.dx_max = 1.0;
    }

    if (j.contains("relaxation")) {
        const json& jr = j["relaxation"];
        c.relaxation.a = jr.value("a", -4.0);
        c.relaxation.b = jr.value("b", 5.0);
        c.relaxation.g_max = jr.value("g_max", 0.115);
        if (jr.contains("nu_prime")) {
            const auto v = jr["nu_prime"].get<std::vector<double>>();
            if (v.size() != 18)
                throw std::invalid_argument("config-invalid: nu_prime must list 18 values (moments 9..26)");
            for (int i = 0; i < 18; ++i) c.relaxation.nu_prime[9 + i] = v[i];
        }
    }

    if (j.contains("run")) {
        const json& jr = j["run"];
        c.run.iterations = jr.value("iterations", 100);
        c.run.output_every = jr.value("output_every", 0);
        c.run.checkpoint_every = jr.value("checkpoint_every", 0);
        c.run.seed = jr.value("seed", std::uint64_t(12345));
        if (jr.contains("tracers")) {
            const json& jt = jr["tracers"];
            c.run.tracers.enabled = jt.value("enabled", true);
            c.run.tracers.inject_rate = jt.value("inject_rate", 2000);
            const std::string shape = jt.value("region", "disk");
            if (shape == "disk") {
                c.run.tracers.region.kind = TracerRegion::Kind::Disk;
                if (jt.contains("center")) c.run.tracers.region.center = detail::vec3_from(jt["center"]);
                c.run.tracers.region.radius = jt.value("radius", 1.0);
                if (jt.contains("normal")) c.run.tracers.region.normal = detail::vec3_from(jt["normal"]);
            } else if (shape == "box") {
                c.run.tracers.region.kind = TracerRegion::Kind::Box;
                c.run.tracers.region.box.lo = detail::vec3_from(jt.at("min"));
                c.run.tracers.region.box.hi = detail::vec3_from(jt.at("max"));
            } else if (shape == "shell") {
                c.run.tracers.region.kind = TracerRegion::Kind::SphereShell;
                c.run.tracers.region.center = detail::vec3_from(jt.at("center"));
                c.run.tracers.region.radius = jt.at("radius").get<double>();
                c.run.tracers.region.shell_thickness = jt.value("thickness", 0.5);
            } else {
                throw std::invalid_argument("config-invalid: unknown tracer region '" + shape + "'");
            }
        }
    }
    c.validate();
    return c;
}

inline SimulationConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config-invalid: cannot open " + path);
    json j;
    in >> j;
    return parse_config(j);
}

// All defaults materialized; parse(serialize(c)) is the identity.
inline json serialize_config(const SimulationConfig& c) {
    json j;
    j["domain"]["min"] = detail::vec3_to(c.domain.domain.lo);
    j["domain"]["size"] = detail::vec3_to(c.domain.domain.hi - c.domain.domain.lo);
    j["domain"]["doi_min"] = detail::vec3_to(c.domain.doi.lo);
    j["domain"]["doi_size"] = detail::vec3_to(c.domain.doi.hi - c.domain.doi.lo);
    static const char* names[6] = {"x-", "x+", "y-", "y+", "z-", "z+"};
    for (int f = 0; f < 6; ++f) j["domain"]["faces"][names[f]] = detail::face_to(c.domain.faces[f]);
    if (c.domain.inlet.enabled) {
        json ji;
        ji["face"] = std::string(1, "xyz"[c.domain.inlet.axis]) +
                     (c.domain.inlet.side == 0 ? "-" : "+");
        ji["shape"] = c.domain.inlet.full_face ? "full" : "disk";
        if (!c.domain.inlet.full_face) {
            ji["center"] = detail::vec3_to(c.domain.inlet.center);
            ji["radius"] = c.domain.inlet.radius;
        }
        ji["speed"] = c.domain.inlet.speed;
        j["inlet"] = ji;
    }
    for (const auto& s : c.solids) {
        json js;
        switch (s.kind) {
            case SolidPrimitive::Kind::Sphere:
                js["type"] = "sphere";
                js["center"] = detail::vec3_to(s.center);
                js["radius"] = s.radius;
                break;
            case SolidPrimitive::Kind::Box:
                js["type"] = "box";
                js["min"] = detail::vec3_to(s.box.lo);
                js["max"] = detail::vec3_to(s.box.hi);
                break;
            case SolidPrimitive::Kind::Tube:
                js["type"] = "tube";
                js["from"] = detail::vec3_to(s.axis_a);
                js["to"] = detail::vec3_to(s.axis_b);
                js["outer_radius"] = s.outer_radius;
                js["inner_radius"] = s.inner_radius;
                break;
            case SolidPrimitive::Kind::Mesh:
                js["type"] = "mesh";
                js["file"] = s.mesh_path;
                break;
        }
        js["wall_velocity"] = detail::vec3_to(s.wall_velocity);
        j["solids"].push_back(js);
    }
    j["fluid"]["nu0"] = c.nu0;
    json& js = j["scales"];
    js["n_levels"] = c.scales.n_levels;
    js["dx_min"] = c.scales.dx_min;
    js["dx_max"] = c.scales.dx_max;
    js["ffd_spacings"] = c.scales.ffd_spacings;
    js["quantization"] = c.scales.quantization;
    js["pad_cells"] = c.scales.pad_cells;
    js["wake"]["enabled"] = c.scales.wake.enabled;
    js["wake"]["center"] = detail::vec3_to(c.scales.wake.center);
    js["wake"]["radius"] = c.scales.wake.radius;
    js["wake"]["normal"] = detail::vec3_to(c.scales.wake.normal);
    js["wake"]["ray_count"] = c.scales.wake.ray_count;
    js["dynamic"]["gradient_thresholds"] = c.scales.dynamic.grad_thresholds;
    js["dynamic"]["velocity_thresholds"] = c.scales.dynamic.vel_thresholds;
    js["dynamic"]["spacings"] = c.scales.dynamic.spacings;
    js["dynamic"]["rebuild_interval"] = c.scales.dynamic.rebuild_interval;
    std::vector<double> nu_prime(c.relaxation.nu_prime.begin() + 9, c.relaxation.nu_prime.end());
    j["relaxation"]["nu_prime"] = nu_prime;
    j["relaxation"]["a"] = c.relaxation.a;
    j["relaxation"]["b"] = c.relaxation.b;
    j["relaxation"]["g_max"] = c.relaxation.g_max;
    j["run"]["iterations"] = c.run.iterations;
    j["run"]["output_every"] = c.run.output_every;
    j["run"]["checkpoint_every"] = c.run.checkpoint_every;
    j["run"]["seed"] = c.run.seed;
    if (c.run.tracers.enabled) {
        json jt;
        jt["enabled"] = true;
        jt["inject_rate"] = c.run.tracers.inject_rate;
        switch (c.run.tracers.region.kind) {
            case TracerRegion::Kind::Disk:
                jt["region"] = "disk";
                jt["center"] = detail::vec3_to(c.run.tracers.region.center);
                jt["radius"] = c.run.tracers.region.radius;
                jt["normal"] = detail::vec3_to(c.run.tracers.region.normal);
                break;
            case TracerRegion::Kind::Box:
                jt["region"] = "box";
                jt["min"] = detail::vec3_to(c.run.tracers.region.box.lo);
                jt["max"] = detail::vec3_to(c.run.tracers.region.box.hi);
                break;
            case TracerRegion::Kind::SphereShell:
                jt["region"] = "shell";
                jt["center"] = detail::vec3_to(c.run.tracers.region.center);
                jt["radius"] = c.run.tracers.region.radius;
                jt["thickness"] = c.run.tracers.region.shell_thickness;
                break;
        }
        j["run"]["tracers"] = jt;
    }
    return j;
}

}  // namespace cskf
