#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cskf/scheduler.hpp"
#include "cskf/tracers.hpp"

namespace cskf {

namespace detail {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("io: truncated file");
}

inline void write_vec(std::ostream& os, const std::vector<double>& v) {
    const std::uint64_t n = v.size();
    write_pod(os, n);
    os.write(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size());
}

inline void read_vec(std::istream& is, std::vector<double>& v) {
    std::uint64_t n;
    read_pod(is, n);
    v.resize(n);
    is.read(reinterpret_cast<char*>(v.data()), sizeof(double) * n);
    if (!is) throw std::runtime_error("io: truncated field data");
}

inline std::uint64_t lattice_fingerprint() {
    const auto& lat = d3q27();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    auto mix = [&](int v) {
        h ^= std::uint64_t(std::uint8_t(v + 2));
        h *= 1099511628211ull;
    };
    for (int i = 0; i < kQ; ++i)
        for (int a = 0; a < 3; ++a) mix(lat.velocities[i][a]);
    return h;
}

}  // namespace detail

inline constexpr std::uint32_t kFieldDumpVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Little-endian block dump: header {magic "CSKF", version, dims 3xu32,
// origin 3xf64, spacing f64, time f64, field-count u32} then rho (f32/cell)
// and u (3xf32/cell), each field row-major x-fastest.
inline void write_field_dump(const ScaleBlock& b, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("dump_fields: cannot open " + path);
    os.write("CSKF", 4);
    detail::write_pod(os, kFieldDumpVersion);
    for (int a = 0; a < 3; ++a) detail::write_pod(os, std::uint32_t(b.dims[a]));
    for (int a = 0; a < 3; ++a) detail::write_pod(os, double(b.origin[a]));
    detail::write_pod(os, b.spacing);
    detail::write_pod(os, b.time);
    detail::write_pod(os, std::uint32_t(4));
    const std::int64_t n = b.ncells();
    std::vector<float> plane(n);
    auto emit = [&](const std::vector<double>& f) {
        for (std::int64_t i = 0; i < n; ++i) plane[i] = float(f[i]);
        os.write(reinterpret_cast<const char*>(plane.data()), sizeof(float) * n);
    };
    emit(b.rho);
    emit(b.ux);
    emit(b.uy);
    emit(b.uz);
    if (!os) throw std::runtime_error("dump_fields: write failed for " + path);
}

struct FieldDump {
    Vec3i dims;
    Vec3 origin;
    double spacing = 0, time = 0;
    std::vector<float> rho, ux, uy, uz;
};

inline FieldDump read_field_dump(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_field_dump: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::strncmp(magic, "CSKF", 4) != 0)
        throw std::runtime_error("read_field_dump: bad magic");
    std::uint32_t version;
    detail::read_pod(is, version);
    if (version != kFieldDumpVersion) throw std::runtime_error("read_field_dump: version mismatch");
    FieldDump d;
    for (int a = 0; a < 3; ++a) {
        std::uint32_t v;
        detail::read_pod(is, v);
        d.dims[a] = int(v);
    }
    for (int a = 0; a < 3; ++a) detail::read_pod(is, d.origin[a]);
    detail::read_pod(is, d.spacing);
    detail::read_pod(is, d.time);
    std::uint32_t nfields;
    detail::read_pod(is, nfields);
    if (nfields != 4) throw std::runtime_error("read_field_dump: unexpected field count");
    const std::int64_t n = d.dims.count();
    auto slurp = [&](std::vector<float>& f) {
        f.resize(n);
        is.read(reinterpret_cast<char*>(f.data()), sizeof(float) * n);
        if (!is) throw std::runtime_error("read_field_dump: truncated");
    };
    slurp(d.rho);
    slurp(d.ux);
    slurp(d.uy);
    slurp(d.uz);
    return d;
}

// One file per block plus a plain-text manifest listing blocks by spacing
// descending.
inline std::vector<std::string> dump_fields(const ScaleGraph& g, const std::string& dir,
                                            long long iteration) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    for (int i = 0; i < g.n_blocks(); ++i) {
        std::ostringstream name;
        name << "fields_iter" << iteration << "_block" << i << ".cskf";
        const std::string path = dir + "/" + name.str();
        write_field_dump(g.block(i), path);
        files.push_back(name.str());
    }
    std::ostringstream mname;
    mname << dir << "/manifest_iter" << iteration << ".txt";
    std::ofstream m(mname.str());
    m << "# block file spacing dims origin role\n";
    for (int i = 0; i < g.n_blocks(); ++i) {
        const ScaleBlock& b = g.block(i);
        m << i << " " << files[i] << " " << b.spacing << " " << b.dims.x << "x" << b.dims.y << "x"
          << b.dims.z << " " << b.origin.x << "," << b.origin.y << "," << b.origin.z << " "
          << (g.is_ffd[i] ? "ffd" : (i == g.reference ? "reference" : "doi")) << "\n";
    }
    files.push_back(mname.str());
    return files;
}

inline void write_particles(const TracerSet& t, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_particles: cannot open " + path);
    for (std::size_t i = 0; i < t.positions.size(); ++i)
        os << t.ids[i] << " " << t.positions[i].x << " " << t.positions[i].y << " "
           << t.positions[i].z << " " << t.ages[i] << "\n";
}

// ------------------------------------------------------------------
// Checkpointing: full state, bit-exact restore.
// ------------------------------------------------------------------
inline void checkpoint(const ScaleGraph& g, const TracerSet& tracers, const std::mt19937_64& rng,
                       const std::string& config_json, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
    os.write("CSKP", 4);
    detail::write_pod(os, kCheckpointVersion);
    detail::write_pod(os, detail::lattice_fingerprint());
    detail::write_pod(os, g.iteration);
    detail::write_pod(os, g.time);
    detail::write_pod(os, std::int32_t(g.reference));
    detail::write_pod(os, std::int32_t(g.n_blocks()));
    for (int i = 0; i < g.n_blocks(); ++i) {
        const ScaleBlock& b = g.block(i);
        for (int a = 0; a < 3; ++a) detail::write_pod(os, b.origin[a]);
        detail::write_pod(os, b.spacing);
        detail::write_pod(os, b.dt_phys);
        for (int a = 0; a < 3; ++a) detail::write_pod(os, std::int32_t(b.dims[a]));
        for (int a = 0; a < 3; ++a) detail::write_pod(os, std::uint8_t(b.periodic[a]));
        detail::write_pod(os, b.time);
        detail::write_pod(os, b.t_local);
        detail::write_pod(os, b.relax.nu);
        for (int q = 0; q < kQ; ++q) detail::write_pod(os, b.relax.nu_prime[q]);
        detail::write_pod(os, b.relax.a);
        detail::write_pod(os, b.relax.b);
        detail::write_pod(os, b.relax.g_max);
        detail::write_pod(os, std::uint8_t(g.is_ffd[i]));
        detail::write_pod(os, std::uint8_t(g.is_dynamic[i]));
        os.write(reinterpret_cast<const char*>(b.flags.data()), b.flags.size());
        detail::write_vec(os, b.f_curr);
        detail::write_vec(os, b.rho);
        detail::write_vec(os, b.ux);
        detail::write_vec(os, b.uy);
        detail::write_vec(os, b.uz);
    }
    // tracers
    detail::write_pod(os, std::uint64_t(tracers.positions.size()));
    for (std::size_t i = 0; i < tracers.positions.size(); ++i) {
        for (int a = 0; a < 3; ++a) detail::write_pod(os, tracers.positions[i][a]);
        detail::write_pod(os, tracers.ages[i]);
        detail::write_pod(os, tracers.ids[i]);
    }
    detail::write_pod(os, tracers.next_id);
    detail::write_pod(os, std::int32_t(tracers.inject_rate));
    detail::write_pod(os, std::int32_t(tracers.inlet_region.kind));
    for (int a = 0; a < 3; ++a) detail::write_pod(os, tracers.inlet_region.center[a]);
    detail::write_pod(os, tracers.inlet_region.radius);
    for (int a = 0; a < 3; ++a) detail::write_pod(os, tracers.inlet_region.normal[a]);
    for (int a = 0; a < 3; ++a) detail::write_pod(os, tracers.inlet_region.box.lo[a]);
    for (int a = 0; a < 3; ++a) detail::write_pod(os, tracers.inlet_region.box.hi[a]);
    detail::write_pod(os, tracers.inlet_region.shell_thickness);
    // rng state as text
    std::ostringstream rs;
    rs << rng;
    const std::string rstate = rs.str();
    detail::write_pod(os, std::uint64_t(rstate.size()));
    os.write(rstate.data(), rstate.size());
    detail::write_pod(os, std::uint64_t(config_json.size()));
    os.write(config_json.data(), config_json.size());
    if (!os) throw std::runtime_error("checkpoint: write failed");
}

struct RestoredState {
    ScaleGraph graph;
    TracerSet tracers;
    std::mt19937_64 rng;
    std::string config_json;
};

inline RestoredState restore(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("restore: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::strncmp(magic, "CSKP", 4) != 0) throw std::runtime_error("restore: bad magic");
    std::uint32_t version;
    detail::read_pod(is, version);
    if (version != kCheckpointVersion) throw std::runtime_error("restore: version mismatch");
    std::uint64_t fp;
    detail::read_pod(is, fp);
    if (fp != detail::lattice_fingerprint())
        throw std::runtime_error("restore: version mismatch (lattice ordering differs)");

    RestoredState st;
    detail::read_pod(is, st.graph.iteration);
    detail::read_pod(is, st.graph.time);
    std::int32_t reference, n_blocks;
    detail::read_pod(is, reference);
    detail::read_pod(is, n_blocks);
    st.graph.reference = reference;
    st.graph.is_dynamic.clear();
    std::vector<std::uint8_t> ffd_flags;
    for (int i = 0; i < n_blocks; ++i) {
        Vec3 origin;
        double spacing, dt_phys;
        Vec3i dims;
        for (int a = 0; a < 3; ++a) detail::read_pod(is, origin[a]);
        detail::read_pod(is, spacing);
        detail::read_pod(is, dt_phys);
        for (int a = 0; a < 3; ++a) {
            std::int32_t v;
            detail::read_pod(is, v);
            dims[a] = v;
        }
        auto b = std::make_unique<ScaleBlock>(origin, spacing, dims, dt_phys / spacing);
        for (int a = 0; a < 3; ++a) {
            std::uint8_t p;
            detail::read_pod(is, p);
            b->periodic[a] = p != 0;
        }
        detail::read_pod(is, b->time);
        detail::read_pod(is, b->t_local);
        detail::read_pod(is, b->relax.nu);
        for (int q = 0; q < kQ; ++q) detail::read_pod(is, b->relax.nu_prime[q]);
        detail::read_pod(is, b->relax.a);
        detail::read_pod(is, b->relax.b);
        detail::read_pod(is, b->relax.g_max);
        std::uint8_t ffd, dyn;
        detail::read_pod(is, ffd);
        detail::read_pod(is, dyn);
        ffd_flags.push_back(ffd);
        st.graph.is_dynamic.push_back(dyn);
        is.read(reinterpret_cast<char*>(b->flags.data()), b->flags.size());
        detail::read_vec(is, b->f_curr);
        detail::read_vec(is, b->rho);
        detail::read_vec(is, b->ux);
        detail::read_vec(is, b->uy);
        detail::read_vec(is, b->uz);
        if (std::int64_t(b->f_curr.size()) != b->ncells() * kQ)
            throw std::runtime_error("restore: corrupt file (field size mismatch)");
        b->f_next = b->f_curr;
        b->finalize();
        st.graph.blocks.push_back(std::move(b));
    }
    st.graph.finalize();
    for (int i = 0; i < n_blocks; ++i)
        if ((st.graph.is_ffd[i] != 0) != (ffd_flags[i] != 0))
            throw std::runtime_error("restore: corrupt file (role flags inconsistent)");

    std::uint64_t n_tr;
    detail::read_pod(is, n_tr);
    st.tracers.positions.resize(n_tr);
    st.tracers.ages.resize(n_tr);
    st.tracers.ids.resize(n_tr);
    for (std::uint64_t i = 0; i < n_tr; ++i) {
        for (int a = 0; a < 3; ++a) detail::read_pod(is, st.tracers.positions[i][a]);
        detail::read_pod(is, st.tracers.ages[i]);
        detail::read_pod(is, st.tracers.ids[i]);
    }
    detail::read_pod(is, st.tracers.next_id);
    std::int32_t inject_rate, region_kind;
    detail::read_pod(is, inject_rate);
    detail::read_pod(is, region_kind);
    st.tracers.inject_rate = inject_rate;
    st.tracers.inlet_region.kind = TracerRegion::Kind(region_kind);
    for (int a = 0; a < 3; ++a) detail::read_pod(is, st.tracers.inlet_region.center[a]);
    detail::read_pod(is, st.tracers.inlet_region.radius);
    for (int a = 0; a < 3; ++a) detail::read_pod(is, st.tracers.inlet_region.normal[a]);
    for (int a = 0; a < 3; ++a) detail::read_pod(is, st.tracers.inlet_region.box.lo[a]);
    for (int a = 0; a < 3; ++a) detail::read_pod(is, st.tracers.inlet_region.box.hi[a]);
    detail::read_pod(is, st.tracers.inlet_region.shell_thickness);
    std::uint64_t rn;
    detail::read_pod(is, rn);
    std::string rstate(rn, '\0');
    is.read(rstate.data(), rn);
    std::istringstream rs(rstate);
    rs >> st.rng;
    std::uint64_t cn;
    detail::read_pod(is, cn);
    st.config_json.resize(cn);
    is.read(st.config_json.data(), cn);
    if (!is) throw std::runtime_error("restore: corrupt file");
    return st;
}

}  // namespace cskf
