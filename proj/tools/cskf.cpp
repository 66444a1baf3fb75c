#include <CLI11.hpp>
#include <iostream>

#include "cskf/cskf.hpp"

int main(int argc, char** argv) {
    CLI::App app{"cskf - continuous-scale kinetic fluid solver"};
    app.require_subcommand(1);

    int threads = 0;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    app.add_option("--threads", threads, "worker thread count (default: CSKF_THREADS or hardware)");
    app.add_option("--output-dir", output_dir, "directory for dumps, particles and diagnostics");
    app.add_option("--seed", seed, "override the config RNG seed");

    std::string config_path;
    auto* run = app.add_subcommand("run", "run a simulation from a config file");
    run->add_option("config", config_path, "JSON simulation config")->required();

    std::string bench_name;
    int bench_steps = 0;
    auto* bench = app.add_subcommand("bench", "run a named verification benchmark");
    bench->add_option("name", bench_name,
                      "taylor-green | poiseuille | couette | two-scale-consistency")
        ->required();
    bench->add_option("--steps", bench_steps, "override the benchmark step count");

    std::string checkpoint_path;
    auto* resume = app.add_subcommand("resume", "continue a checkpointed run");
    resume->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        cskf::RunOptions opt;
        opt.output_dir = output_dir;
        opt.threads = threads;
        opt.seed = seed;
        if (*run) {
            const cskf::SimulationConfig config = cskf::parse_config_file(config_path);
            const long long iters = cskf::run_simulation(config, opt);
            std::cout << "completed " << iters << " iterations; outputs in " << output_dir << "\n";
        } else if (*bench) {
            if (threads > 0) cskf::set_worker_count(threads);
            cskf::BenchResult r;
            if (bench_name == "taylor-green" && bench_steps > 0)
                r = cskf::bench::taylor_green(32, 0.01, 0.03, bench_steps);
            else
                r = cskf::run_benchmark(bench_name);
            std::cout << (r.pass ? "PASS" : "FAIL") << " " << bench_name << ": " << r.detail
                      << "\n";
            return r.pass ? 0 : 1;
        } else if (*resume) {
            const long long iters = cskf::resume_simulation(checkpoint_path, opt);
            std::cout << "resumed to iteration " << iters << "; outputs in " << output_dir << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
