// Acceptance suite: one quantitative criterion per line, pinned tolerances.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cskf/cskf.hpp"

using namespace cskf;

namespace {

struct Criterion {
    int id;
    std::string name;
    bool pass;
    std::string detail;
    double seconds;
};

std::vector<Criterion> results;

template <typename Fn>
void run_criterion(int id, const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        auto r = fn();
        pass = r.first;
        detail = r.second;
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back({id, name, pass, detail, sec});
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str(), sec);
    std::fflush(stdout);
}

using Outcome = std::pair<bool, std::string>;

Populations random_state(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(-0.004, 0.004);
    std::uniform_real_distribution<double> uvel(-0.05, 0.05);
    Populations f = equilibrium_pops(1.0, {uvel(rng), uvel(rng), uvel(rng)});
    for (int i = 0; i < kQ; ++i) f[i] += uni(rng);
    return f;
}

// ---------------------------------------------------------------- criterion 1
Outcome moment_machinery() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> uvel(-0.2, 0.2);
    double worst_resid = 0, worst_rt = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Vec3 u{uvel(rng), uvel(rng), uvel(rng)};
        while (u.norm() > 0.2) u = u * 0.5;
        const MomentBasis basis = build_basis(u);
        double resid = 0;
        for (int i = 0; i < kQ; ++i)
            for (int j = 0; j < kQ; ++j) {
                double s = 0;
                for (int k = 0; k < kQ; ++k) s += basis.M[k][i] * basis.T[k][j];
                resid = std::max(resid, std::fabs(s - (i == j ? 1.0 : 0.0)));
            }
        worst_resid = std::max(worst_resid, resid);
        const Populations f = random_state(rng);
        const Populations back = from_moments(to_moments(f, basis), basis);
        for (int i = 0; i < kQ; ++i) worst_rt = std::max(worst_rt, std::fabs(back[i] - f[i]));
    }
    const MomentVector m0 = equilibrium_moments(1.0, {0, 0, 0});
    MomentVector expect{};
    expect[0] = 1.0;
    expect[9] = 1.0;
    expect[17] = 1.0 / 3.0;
    expect[18] = 1.0 / 9.0;
    expect[26] = 1.0 / 27.0;
    double worst_eq = 0;
    for (int j = 0; j < kQ; ++j) worst_eq = std::max(worst_eq, std::fabs(m0[j] - expect[j]));
    std::ostringstream os;
    os << "M^T T residual " << worst_resid << " (<1e-10), round trip " << worst_rt
       << " (<1e-10), rest equilibrium moments off by " << worst_eq << " (<1e-15)";
    return {worst_resid < 1e-10 && worst_rt < 1e-10 && worst_eq < 1e-15, os.str()};
}

// ---------------------------------------------------------------- criterion 2
Outcome conservation() {
    std::mt19937_64 rng(202);
    RelaxationSpec spec = default_schedule();
    spec.nu = 3e-3;
    const auto& lat = d3q27();
    double worst_mass = 0, worst_mom = 0;
    for (int trial = 0; trial < 100000; ++trial) {
        const Populations f = random_state(rng);
        double rho;
        Vec3 u;
        pop_macroscopics(f, rho, u);
        const auto diag = relaxation_diagonal(spec, adaptive_factor(trial % 7 * 0.02, spec));
        const Populations out = collide(f, rho, u, diag);
        double dm = -rho;
        Vec3 dp = {-rho * u.x, -rho * u.y, -rho * u.z};
        for (int i = 0; i < kQ; ++i) {
            dm += out[i];
            dp.x += out[i] * lat.velocities[i][0];
            dp.y += out[i] * lat.velocities[i][1];
            dp.z += out[i] * lat.velocities[i][2];
        }
        worst_mass = std::max(worst_mass, std::fabs(dm));
        worst_mom = std::max({worst_mom, std::fabs(dp.x), std::fabs(dp.y), std::fabs(dp.z)});
    }

    ScaleBlock b({0, 0, 0}, 1.0, {16, 16, 16});
    b.periodic = {true, true, true};
    b.relax = default_schedule();
    b.relax.nu = 0.005;
    b.finalize();
    std::uniform_real_distribution<double> uvel(-0.02, 0.02);
    b.initialize(1.0, [&](const Vec3&) { return Vec3{uvel(rng), uvel(rng), uvel(rng)}; });
    const double m0 = total_mass(b);
    double worst_drift = 0;
    for (int t = 0; t < 1000; ++t) {
        b.step();
        worst_drift = std::max(worst_drift, std::fabs(total_mass(b) - m0) / m0);
    }
    std::ostringstream os;
    os << "collide mass err " << worst_mass << ", momentum err " << worst_mom
       << " (<1e-12 each, 1e5 states); periodic 16^3 mass drift " << worst_drift
       << " rel (<1e-12, 1000 steps)";
    return {worst_mass < 1e-12 && worst_mom < 1e-12 && worst_drift < 1e-12, os.str()};
}

// ---------------------------------------------------------------- criterion 3
Outcome viscosity_oracle() {
    auto b1 = bench::periodic_box(32, 0.01);
    const double fit1 = taylor_green_fitted_nu(*b1, 0.02, 1, 2000);
    const double rel1 = std::fabs(fit1 - 0.01) / 0.01;
    auto b2 = bench::periodic_box(32, 0.002);
    const double fit2 = taylor_green_fitted_nu(*b2, 0.02, 1, 2000);
    const double rel2 = std::fabs(fit2 - 0.002) / 0.002;
    std::ostringstream os;
    os << "nu=0.01 fitted " << fit1 << " (err " << rel1 * 100 << "%, tol 3%); nu=0.002 fitted "
       << fit2 << " (err " << rel2 * 100 << "%, tol 5%)";
    return {rel1 < 0.03 && rel2 < 0.05, os.str()};
}

// ---------------------------------------------------------------- criterion 4
Outcome boundary_treatment() {
    const BenchResult c = bench::couette();
    const BenchResult p = bench::poiseuille();
    return {c.pass && p.pass, "couette: " + c.detail + "; poiseuille: " + p.detail};
}

// ---------------------------------------------------------------- criterion 5
Outcome mapping_identities() {
    RelaxationSpec spec = default_schedule();
    spec.nu = 0.01;
    const auto d = relaxation_diagonal(spec, 1.0);
    const ScaleMapping ident = build_mapping(d, d, 1.0);
    std::mt19937_64 rng(505);
    Populations f = random_state(rng);
    double rho;
    Vec3 u;
    pop_macroscopics(f, rho, u);
    const Populations same = map_distribution(f, rho, u, ident);
    double worst_ident = 0;
    for (int i = 0; i < kQ; ++i) worst_ident = std::max(worst_ident, std::fabs(same[i] - f[i]));

    double worst_eq = 0;
    for (const double alpha : {0.5, 1.4, 2.0, 3.7}) {
        RelaxationSpec s2 = spec;
        s2.nu = rescaled_viscosity(spec.nu, 1.0, 1.0 / alpha);
        const ScaleMapping m = build_mapping(d, relaxation_diagonal(s2, 1.0), alpha);
        const Populations feq = equilibrium_pops(1.03, {0.06, -0.02, 0.01});
        const Populations mapped = map_distribution(feq, 1.03, {0.06, -0.02, 0.01}, m);
        for (int i = 0; i < kQ; ++i)
            worst_eq = std::max(worst_eq, std::fabs(mapped[i] - feq[i]));
    }

    RelaxationDiagonal src{}, dst{};
    for (int i = 4; i <= 8; ++i) {
        src.s[i] = 1.9;
        dst.s[i] = 1.8;
    }
    for (int i = 9; i < kQ; ++i) {
        src.s[i] = 1.5;
        dst.s[i] = 1.5;
    }
    const double k4 = build_mapping(src, dst, 2.0).K[4];

    RelaxationSpec sf = spec;
    sf.nu = 0.014;
    const auto df = relaxation_diagonal(sf, 1.0);
    const ScaleMapping fwd = build_mapping(d, df, 1.4);
    const ScaleMapping bwd = build_mapping(df, d, 1.0 / 1.4);
    const Populations there = map_distribution(f, rho, u, fwd);
    const Populations back = map_distribution(there, rho, u, bwd);
    double worst_rt = 0;
    for (int i = 0; i < kQ; ++i) worst_rt = std::max(worst_rt, std::fabs(back[i] - f[i]));

    std::ostringstream os;
    os << "identity err " << worst_ident << " (<1e-12); equilibrium fixed point err " << worst_eq
       << "; K_4 = " << k4 << " (0.527778 +- 1e-6); round trip err " << worst_rt << " (<1e-10)";
    return {worst_ident < 1e-12 && worst_eq < 1e-12 && std::fabs(k4 - 0.527778) < 1e-6 &&
                worst_rt < 1e-10,
            os.str()};
}

// ---------------------------------------------------------------- criterion 6
Outcome two_scale_physics() {
    const BenchResult r = bench::two_scale_consistency(10, 500, 0.05);
    return {r.pass, r.detail};
}

// ---------------------------------------------------------------- criterion 7
Outcome temporal_alignment() {
    const int l = substep_count(1.0, 0.4);
    const bool l_ok = (l == 3) && substep_count(1.0, 0.5) == 3 && substep_count(1.0, 1.0) == 2;

    // manufactured quadratic-in-time field reproduced exactly at t_n + dt0
    auto quad = [](double t) { return 0.7 + 1.3 * t - 0.4 * t * t; };
    auto pops_at = [&](double t) {
        Populations f;
        for (int q = 0; q < kQ; ++q) f[q] = quad(t) + 0.01 * q;
        return f;
    };
    const double dtf = 0.4, dt0 = 1.0;
    const double t1 = (l - 1) * dtf, t2 = l * dtf;
    const Populations r =
        temporal_quadratic(pops_at(0.0), pops_at(t1), pops_at(t2), 0.0, t1, t2, dt0);
    double worst_quad = 0;
    for (int q = 0; q < kQ; ++q)
        worst_quad = std::max(worst_quad, std::fabs(r[q] - (quad(dt0) + 0.01 * q)));

    // coarse linear interpolation exact on linear-in-time data
    auto lin = [](double t) { return 0.2 + 0.9 * t; };
    auto lpops = [&](double t) {
        Populations f;
        for (int q = 0; q < kQ; ++q) f[q] = lin(t);
        return f;
    };
    const double theta = coarse_theta(1.0, 1.5);
    const Populations lr = temporal_linear(lpops(0.0), lpops(1.5), theta);
    const double worst_lin = std::fabs(lr[0] - lin(1.0));

    std::ostringstream os;
    os << "l(2.5)=" << l << ", quadratic reconstruction err " << worst_quad
       << " (<1e-12), linear err " << worst_lin << " (<1e-12)";
    return {l_ok && worst_quad < 1e-12 && worst_lin < 1e-12, os.str()};
}

// ---------------------------------------------------------------- criterion 8
Outcome adaptive_relaxation() {
    const RelaxationSpec spec = default_schedule();
    const bool endpoints = adaptive_factor(0.0, spec) == 5.0 &&
                           adaptive_factor(spec.g_max, spec) == 1.0 &&
                           adaptive_factor(3 * spec.g_max, spec) == 1.0;
    bool monotone = true;
    double prev = 1e30;
    for (double gn = 0; gn <= 2 * spec.g_max; gn += spec.g_max / 64) {
        const double f = adaptive_factor(gn, spec);
        if (f > prev + 1e-15 || f < 1.0) monotone = false;
        prev = f;
    }

    auto shear_layer = [](bool artificial_viscosity) {
        ScaleBlock b({0, 0, 0}, 1.0, {64, 32, 32});
        b.periodic = {true, true, true};
        b.relax = default_schedule();
        b.relax.nu = 1e-4;
        if (!artificial_viscosity)
            for (int i = 9; i < kQ; ++i) b.relax.nu_prime[i] = 0.0;  // pure CMR
        b.finalize();
        const double U = 0.1, w = 2.0;
        b.initialize(1.0, [&](const Vec3& p) {
            const double ux = U * (std::tanh((p.z - 8.0) / w) - std::tanh((p.z - 24.0) / w) - 1.0);
            const double uz = 0.004 * std::sin(2.0 * M_PI * p.x / 64.0);
            return Vec3{ux, 0.0, uz};
        });
        int survived = 0;
        for (int t = 0; t < 2000; ++t) {
            try {
                b.step();
            } catch (const std::exception&) {
                break;
            }
            if (has_nan(b) || max_speed(b) > 0.5) break;
            ++survived;
        }
        return survived;
    };

    const int adaptive_steps = shear_layer(true);
    const int pure_steps = shear_layer(false);
    std::ostringstream os;
    os << "factor endpoints/clamp " << (endpoints && monotone ? "ok" : "BAD")
       << "; adaptive run survived " << adaptive_steps << "/2000 steps at nu=1e-4; pure CMR (nu'=0) "
       << (pure_steps < 2000 ? "blew up at step " + std::to_string(pure_steps) + " (permitted)"
                             : "also survived (permitted)");
    return {endpoints && monotone && adaptive_steps == 2000, os.str()};
}

// ---------------------------------------------------------------- criterion 9
Outcome scale_construction() {
    // distance quantization against brute force (12^3 scene)
    const Vec3i dims{12, 12, 12};
    std::vector<std::uint8_t> solid(dims.count(), 0);
    auto at = [&](int x, int y, int z) { return x + 12 * (y + 12 * z); };
    for (int z = 4; z < 7; ++z)
        for (int y = 4; y < 7; ++y)
            for (int x = 4; x < 7; ++x) solid[at(x, y, z)] = 1;
    const auto d = distance_map(dims, 1.0, solid);
    double worst = 0;
    for (int z = 0; z < 12; ++z)
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 12; ++x) {
                double best = 1e30;
                for (int sz = 0; sz < 12; ++sz)
                    for (int sy = 0; sy < 12; ++sy)
                        for (int sx = 0; sx < 12; ++sx)
                            if (solid[at(sx, sy, sz)])
                                best = std::min(best, std::sqrt(double((x - sx) * (x - sx) +
                                                                       (y - sy) * (y - sy) +
                                                                       (z - sz) * (z - sz))));
                worst = std::max(worst, std::fabs(d[at(x, y, z)] - best));
            }

    // umbra / penumbra toy scene
    ScaleBlock ref({0.5, 0.5, 0.5}, 1.0, {16, 8, 8});
    std::vector<std::uint8_t> wall(ref.ncells(), 0);
    for (int z = 0; z < 8; ++z)
        for (int y = 0; y < 8; ++y) wall[ref.idx(6, y, z)] = 1;
    WakeSpec wake;
    wake.center = {0, 4, 4};
    wake.radius = 2.5;
    wake.normal = {1, 0, 0};
    wake.ray_count = 16;
    const double umbra = occlusion_fraction({12.5, 4.5, 4.5}, wake, ref, wall);
    const double open = occlusion_fraction({3.5, 4.5, 4.5}, wake, ref, wall);
    std::vector<std::uint8_t> half(ref.ncells(), 0);
    for (int z = 0; z < 8; ++z)
        for (int y = 0; y < 4; ++y) half[ref.idx(6, y, z)] = 1;
    const double pen = occlusion_fraction({12.5, 4.0, 4.0}, wake, ref, half);

    // dynamic thresholding against a brute-force mask, plus cadence 40
    ScaleGraph g;
    {
        auto b = std::make_unique<ScaleBlock>(Vec3{0, 0, 0}, 1.0, Vec3i{16, 16, 16});
        b->periodic = {true, true, true};
        b->relax = default_schedule();
        b->relax.nu = 0.01;
        b->finalize();
        b->initialize(1.0, Vec3{0, 0, 0});
        g.blocks.push_back(std::move(b));
        g.reference = 0;
        g.finalize();
    }
    ScaleBlock& rb = g.block(0);
    for (std::int64_t i = 0; i < rb.ncells(); ++i) {
        const Vec3i c = rb.coords(i);
        const bool core = c.x >= 5 && c.x <= 10 && c.y >= 6 && c.y <= 9 && c.z >= 6 && c.z <= 9;
        rb.set_macros(i, 1.0, {core ? 0.08 : 0.0, 0, 0});
    }
    DynamicSpec dyn;
    dyn.grad_thresholds = {1e-4};
    dyn.vel_thresholds = {0.01};
    dyn.spacings = {0.7};
    const auto specs = dynamic_scales(g, dyn);
    // brute-force mask bounding box
    rb.gradient_pass();
    Vec3 lo{1e30, 1e30, 1e30}, hi{-1e30, -1e30, -1e30};
    for (std::int64_t i = 0; i < rb.ncells(); ++i) {
        if (rb.grad[i] < 1e-4 || rb.velocity(i).norm() < 0.01) continue;
        const Vec3 p = rb.cell_center(i);
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
    bool box_ok = specs.size() == 1;
    if (box_ok) {
        ScaleBlock probe(specs[0].origin, specs[0].spacing, specs[0].dims);
        const Box ih = probe.interior_hull();
        // padded AABB must cover the mask and stay inside the reference
        box_ok = ih.lo.x <= lo.x && ih.hi.x >= hi.x && ih.lo.y <= lo.y && ih.hi.y >= hi.y &&
                 rb.interior_hull().contains(ih);
    }

    // rebuild cadence: hook fires every 40 iterations
    int rebuilds = 0;
    g.dynamic_rebuild = [&rebuilds](ScaleGraph& graph) {
        if (graph.iteration % 40 != 0) return;
        ++rebuilds;
    };
    rb.initialize(1.0, Vec3{0, 0, 0});
    for (int t = 0; t < 81; ++t) advance(g);
    const bool cadence_ok = rebuilds == 3;  // iterations 0, 40, 80

    // determinism of the construction under a fixed configuration
    const auto specs2 = dynamic_scales(g, dyn);
    bool det = specs2.size() == dynamic_scales(g, dyn).size();

    std::ostringstream os;
    os << "EDT err " << worst << " (exact); occlusion umbra=" << umbra << " open=" << open
       << " penumbra=" << pen << "; dynamic AABB " << (box_ok ? "ok" : "BAD") << "; rebuilds at "
       << rebuilds << "/3 expected; deterministic " << (det ? "yes" : "no");
    return {worst < 1e-10 && umbra == 1.0 && open == 0.0 && pen > 0 && pen < 1 && box_ok &&
                cadence_ok && det,
            os.str()};
}

// --------------------------------------------------------------- criterion 10
Outcome tracer_accuracy() {
    auto graph_of = [](const std::function<Vec3(const Vec3&)>& u_of_p) {
        auto b = std::make_unique<ScaleBlock>(Vec3{0, 0, 0}, 1.0, Vec3i{16, 16, 16});
        b->relax = default_schedule();
        b->relax.nu = 0.01;
        b->finalize();
        for (std::int64_t i = 0; i < b->ncells(); ++i) b->set_macros(i, 1.0, u_of_p(b->cell_center(i)));
        ScaleGraph g;
        g.blocks.push_back(std::move(b));
        g.reference = 0;
        g.finalize();
        return g;
    };
    const Vec3 center{8, 8, 8};
    auto g = graph_of([&](const Vec3& p) {
        const Vec3 r = p - center;
        return Vec3{-r.y, r.x, 0};
    });
    TracerSet t;
    t.positions = {{10, 8, 8}};
    t.ages = {0};
    t.ids = {0};
    for (int k = 0; k < 1000; ++k) advect_rk3(t, g, 0.01);
    const double drift = std::fabs((t.positions[0] - center).norm() - 2.0) / 2.0;

    auto one_step_err = [&](double dt) {
        TracerSet s;
        s.positions = {{10, 8, 8}};
        s.ages = {0};
        s.ids = {0};
        advect_rk3(s, g, dt);
        const Vec3 exact{8 + 2 * std::cos(dt), 8 + 2 * std::sin(dt), 8};
        return (s.positions[0] - exact).norm();
    };
    const double ratio = one_step_err(0.2) / one_step_err(0.1);
    std::ostringstream os;
    os << "rotation radius drift " << drift << " rel over 1000 steps (<1e-5); halving-dt error "
          "ratio "
       << ratio << " (>=7 for order 3)";
    return {drift < 1e-5 && ratio >= 7.0, os.str()};
}

// --------------------------------------------------------------- criterion 11
Outcome determinism() {
    json j;
    j["domain"]["min"] = {0, 0, 0};
    j["domain"]["size"] = {24, 16, 16};
    j["fluid"]["nu0"] = 5e-3;
    j["inlet"] = {{"face", "x-"}, {"shape", "disk"}, {"center", {0, 8, 8}},
                  {"radius", 3.0}, {"speed", 0.1}};
    j["solids"].push_back({{"type", "sphere"}, {"center", {10, 8, 8}}, {"radius", 2.0}});
    j["scales"]["n_levels"] = 2;
    j["scales"]["dx_max"] = 1.0;
    j["scales"]["dx_min"] = 0.7;
    j["scales"]["quantization"] = {4.0};
    j["run"]["iterations"] = 10;
    j["run"]["output_every"] = 10;
    j["run"]["seed"] = 777;
    j["run"]["tracers"] = {{"enabled", true}, {"inject_rate", 200}, {"region", "disk"},
                           {"center", {1, 8, 8}}, {"radius", 2.0}};
    const SimulationConfig c = parse_config(j);

    const auto dir_base = std::filesystem::temp_directory_path() / "cskf_acceptance_det";
    std::filesystem::remove_all(dir_base);
    auto run_with = [&](int threads) {
        RunOptions opt;
        opt.output_dir = (dir_base / ("t" + std::to_string(threads))).string();
        opt.threads = threads;
        opt.quiet = true;
        run_simulation(c, opt);
        return opt.output_dir;
    };
    const std::string d1 = run_with(1);
    const std::string d2 = run_with(2);

    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    int compared = 0;
    bool identical = true;
    for (const auto& e : std::filesystem::directory_iterator(d1)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("fields_", 0) != 0 && name.rfind("particles_", 0) != 0) continue;
        ++compared;
        if (slurp(e.path().string()) != slurp(d2 + "/" + name)) identical = false;
    }
    std::filesystem::remove_all(dir_base);
    std::ostringstream os;
    os << compared << " dump files byte-compared across thread counts 1 and 2: "
       << (identical ? "identical" : "DIFFER");
    return {compared > 0 && identical, os.str()};
}

}  // namespace

int main() {
    set_worker_count(2);
    std::printf("== acceptance suite ==\n");
    run_criterion(1, "moment machinery", moment_machinery);
    run_criterion(2, "conservation", conservation);
    run_criterion(3, "viscosity oracle", viscosity_oracle);
    run_criterion(4, "boundary treatment", boundary_treatment);
    run_criterion(5, "scale-mapping identities", mapping_identities);
    run_criterion(6, "two-scale physics consistency", two_scale_physics);
    run_criterion(7, "temporal alignment", temporal_alignment);
    run_criterion(8, "adaptive relaxation", adaptive_relaxation);
    run_criterion(9, "scale construction", scale_construction);
    run_criterion(10, "tracers", tracer_accuracy);
    run_criterion(11, "end-to-end determinism", determinism);

    int failures = 0;
    for (const auto& r : results)
        if (!r.pass) ++failures;
    std::printf("== %zu criteria, %d failed ==\n", results.size(), failures);
    return failures;
}
