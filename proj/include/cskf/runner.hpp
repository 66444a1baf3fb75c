#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "cskf/config.hpp"
#include "cskf/diagnostics.hpp"
#include "cskf/io.hpp"
#include "cskf/scalegen.hpp"
#include "cskf/scheduler.hpp"
#include "cskf/tracers.hpp"

namespace cskf {

inline ScaleGraph build_graph(const SimulationConfig& c) {
    return static_scales(c.scales, c.domain, c.solids, c.nu0, c.relaxation);
}

namespace detail {

// Creates one dynamic block from a spec: fully overlapped, solids rasterized,
// state filled from the finest existing scale at the advance start time.
inline std::unique_ptr<ScaleBlock> instantiate_dynamic(const ScaleGraph& g, const BlockSpec& spec,
                                                       const SimulationConfig& c, double t_n) {
    auto b = std::make_unique<ScaleBlock>(spec.origin, spec.spacing, spec.dims);
    b->relax = c.relaxation;
    b->relax.nu = rescaled_viscosity(c.nu0, g.dx0, spec.spacing);
    rasterize_solids(*b, c.solids);
    flag_overlap_block(*b, 1);
    apply_domain_faces(*b, c.domain, false);
    b->finalize();
    const RelaxationDiagonal own_diag = relaxation_diagonal(b->relax, 1.0);
    for (std::int64_t i = 0; i < b->ncells(); ++i) {
        if (b->flags[i] == CellFlag::Solid) {
            b->set_f(b->f_curr, i, equilibrium_pops(1.0, b->velocity(i)));
            continue;
        }
        const Vec3 p = b->cell_center(i);
        int src = -1;
        for (int k = g.n_blocks() - 1; k >= 0; --k)
            if (g.block(k).interior_hull().contains(p)) { src = k; break; }
        if (src < 0) throw std::runtime_error("dynamic scale escapes every existing block");
        const Populations f = trilinear_f(g.block(src), g.block(src).f_prev, p);
        double r;
        Vec3 u;
        pop_macroscopics(f, r, u);
        // source diag computed directly: the graph's cache is stale while the
        // block list is being rebuilt
        const ScaleMapping m = build_mapping(relaxation_diagonal(g.block(src).relax, 1.0),
                                             own_diag, g.block(src).spacing / b->spacing);
        b->set_f(b->f_curr, i, map_distribution(f, r, u, m, /*post_collision=*/false));
        b->set_macros(i, r, u);
    }
    b->f_prev = b->f_curr;
    b->f_post = b->f_curr;
    b->time = t_n;
    return b;
}

}  // namespace detail

// Discards existing dynamic blocks and rebuilds them from the current
// threshold masks; new blocks join the DOI hierarchy sorted by spacing.
inline void rebuild_dynamic_blocks(ScaleGraph& g, const SimulationConfig& c, double t_n) {
    const auto specs = dynamic_scales(g, c.scales.dynamic);
    std::vector<std::unique_ptr<ScaleBlock>> keep;
    std::vector<std::uint8_t> keep_ffd, keep_dyn;
    int new_reference = -1;
    for (int i = 0; i < g.n_blocks(); ++i) {
        if (g.is_dynamic[i]) continue;
        if (i == g.reference) new_reference = int(keep.size());
        keep_ffd.push_back(g.is_ffd[i]);
        keep_dyn.push_back(0);
        keep.push_back(std::move(g.blocks[i]));
    }
    g.blocks = std::move(keep);
    g.is_ffd = keep_ffd;
    g.is_dynamic = keep_dyn;
    g.reference = new_reference;

    for (const auto& spec : specs) {
        auto blk = detail::instantiate_dynamic(g, spec, c, t_n);
        // insert by descending spacing within the DOI tail
        int pos = g.reference + 1;
        while (pos < g.n_blocks() && g.block(pos).spacing > blk->spacing + 1e-12) ++pos;
        g.blocks.insert(g.blocks.begin() + pos, std::move(blk));
        g.is_ffd.insert(g.is_ffd.begin() + pos, 0);
        g.is_dynamic.insert(g.is_dynamic.begin() + pos, 1);
    }
    g.finalize();
}

inline void attach_dynamic_rebuild(ScaleGraph& g, const SimulationConfig& c) {
    if (c.scales.dynamic.spacings.empty()) return;
    const int interval = std::max(1, c.scales.dynamic.rebuild_interval);
    g.dynamic_rebuild = [&c, interval](ScaleGraph& graph) {
        if (graph.iteration % interval != 0) return;
        rebuild_dynamic_blocks(graph, c, graph.time);
    };
}

struct RunOptions {
    std::string output_dir = "out";
    int threads = 0;          // 0: keep current worker count
    std::uint64_t seed = 0;   // 0: use the config seed
    bool quiet = false;
};

// Full config-driven run: advance loop, NaN guard, cadenced outputs, final
// checkpoint. Returns the iteration count executed.
inline long long run_simulation(const SimulationConfig& c, const RunOptions& opt,
                                ScaleGraph* graph_in = nullptr, TracerSet* tracers_in = nullptr,
                                std::mt19937_64* rng_in = nullptr) {
    if (opt.threads > 0) set_worker_count(opt.threads);
    std::filesystem::create_directories(opt.output_dir);

    ScaleGraph local_graph;
    ScaleGraph& g = graph_in ? *graph_in : local_graph;
    if (!graph_in) g = build_graph(c);
    attach_dynamic_rebuild(g, c);

    TracerSet local_tracers;
    TracerSet& tracers = tracers_in ? *tracers_in : local_tracers;
    if (!tracers_in && c.run.tracers.enabled) {
        tracers.inject_rate = c.run.tracers.inject_rate;
        tracers.inlet_region = c.run.tracers.region;
    }

    std::mt19937_64 local_rng(opt.seed ? opt.seed : c.run.seed);
    std::mt19937_64& rng = rng_in ? *rng_in : local_rng;

    // fresh runs start from rho = 1 and a calm field; inlet cells keep their
    // Dirichlet velocity
    if (!graph_in || (g.iteration == 0 && g.block(g.reference).t_local == 0))
        for (int i = 0; i < g.n_blocks(); ++i) g.block(i).initialize(1.0, Vec3{0, 0, 0});

    std::ofstream diag(opt.output_dir + "/diagnostics.txt",
                       g.iteration == 0 ? std::ios::trunc : std::ios::app);
    const std::string config_json = serialize_config(c).dump();

    const long long target = c.run.iterations;
    while (g.iteration < target) {
        advance(g);
        if (c.run.tracers.enabled) {
            tracers.inject(tracers.inject_rate, rng);
            advect_rk3(tracers, g, g.dt0);
        }
        const DiagnosticsReport rep = collect_diagnostics(g);
        write_report_line(diag, rep);
        if (!opt.quiet && g.iteration % 50 == 0) write_report_line(std::cout, rep);
        if (!std::isfinite(rep.total_kinetic_energy) || !std::isfinite(rep.max_speed_lattice))
            throw std::runtime_error("numerical-blowup detected at iteration " +
                                     std::to_string(g.iteration));
        for (int i = 0; i < g.n_blocks(); ++i)
            if (has_nan(g.block(i)))
                throw std::runtime_error("numerical-blowup on scale " + std::to_string(i) +
                                         " at iteration " + std::to_string(g.iteration));
        if (c.run.output_every > 0 && g.iteration % c.run.output_every == 0) {
            dump_fields(g, opt.output_dir, g.iteration);
            if (c.run.tracers.enabled) {
                std::ostringstream name;
                name << opt.output_dir << "/particles_iter" << g.iteration << ".txt";
                write_particles(tracers, name.str());
            }
        }
        if (c.run.checkpoint_every > 0 && g.iteration % c.run.checkpoint_every == 0)
            checkpoint(g, tracers, rng, config_json,
                       opt.output_dir + "/checkpoint_iter" + std::to_string(g.iteration) + ".cskp");
    }
    checkpoint(g, tracers, rng, config_json, opt.output_dir + "/checkpoint_final.cskp");
    return g.iteration;
}

// Continues a checkpointed run to the configured iteration count.
inline long long resume_simulation(const std::string& checkpoint_path, const RunOptions& opt) {
    RestoredState st = restore(checkpoint_path);
    const SimulationConfig c = parse_config(json::parse(st.config_json));
    return run_simulation(c, opt, &st.graph, &st.tracers, &st.rng);
}

}  // namespace cskf
