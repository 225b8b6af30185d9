// Command-line driver: wires JSON configs and flags to the library operations
// and writes reproducible, file-based outputs (JSON reports + CSV tables plus
// a manifest echoing the effective configuration).
//
// Exit codes: 0 success, 1 validation error, 2 numerical non-convergence,
// 3 statistical-test failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "levykin/csv.hpp"
#include "levykin/dms.hpp"
#include "levykin/errors.hpp"
#include "levykin/fracops.hpp"
#include "levykin/generator.hpp"
#include "levykin/measures.hpp"
#include "levykin/model.hpp"
#include "levykin/poisson.hpp"
#include "levykin/quadrature.hpp"
#include "levykin/simulate.hpp"
#include "levykin/stable.hpp"
#include "levykin/suites.hpp"
#include "levykin/version.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace levykin;

namespace {

// ---------------------------------------------------------------------------
// Strict schema: unknown keys anywhere are rejected before any computation.

const json& config_schema() {
    static const json schema = {
        {"command", {}},
        {"seed", {}},
        {"out", {}},
        {"workers", {}},
        {"model",
         {{"d", {}},
          {"alpha", {}},
          {"u_family", {}},
          {"u_scale", {}},
          {"bump_amp", {}},
          {"bump_width", {}},
          {"phi_family", {}},
          {"beta", {}}}},
        {"quadrature",
         {{"inner_split", {}},
          {"outer_radius", {}},
          {"nodes_inner", {}},
          {"nodes_shell", {}},
          {"nodes_angular", {}},
          {"tail_rule", {}}}},
        {"simulation",
         {{"n_particles", {}},
          {"dt", {}},
          {"t_end", {}},
          {"thin_stride", {}},
          {"initial_law", {}},
          {"burn_in_fraction", {}},
          {"profile_r_max", {}},
          {"profile_nodes", {}},
          {"ks_level", {}},
          {"point_x", {}},
          {"point_v", {}},
          {"perturbation", {}}}},
        {"dms",
         {{"models", {}},
          {"n", {}},
          {"k", {}},
          {"lambda", {}},
          {"t_max", {}},
          {"t_nodes", {}},
          {"vectors", {}},
          {"slack", {}},
          {"entropy_vectors", {}}}},
        {"rate",
         {{"alpha1", {}},
          {"alpha2", {}},
          {"alpha3", {}},
          {"lambda", {}},
          {"optimize", {}},
          {"lambda_lo", {}},
          {"lambda_hi", {}}}},
        {"fracop", {{"func", {}}, {"points", {}}}},
        {"poisson",
         {{"method", {}},
          {"h", {}},
          {"x_points", {}},
          {"n_paths", {}},
          {"dt", {}},
          {"horizon", {}},
          {"half_width", {}},
          {"n_grid", {}},
          {"boundary", {}}}},
        {"poincare",
         {{"which", {}}, {"half_width", {}}, {"n", {}}, {"box", {}}, {"n_nonlocal", {}}}},
        {"decay_fit", {{"input", {}}, {"observable", {}}, {"max_lag", {}}}},
        {"invariance", {{"tolerance", {}}}},
        {"carre", {{"tolerance", {}}}},
        {"drift_profile", {{"r_max", {}}, {"nodes", {}}, {"tolerance", {}}}}};
    return schema;
}

void validate_keys(const json& cfg, const json& schema, const std::string& path) {
    if (!cfg.is_object()) return;
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        if (!schema.contains(it.key()))
            throw ValidationError("unknown config key: " + path + it.key());
        const json& sub = schema.at(it.key());
        if (sub.is_object() && !sub.empty()) validate_keys(it.value(), sub, path + it.key() + ".");
        else if (it.value().is_object() && sub.is_object() && sub.empty() && !it.value().empty())
            throw ValidationError("config key is not a block: " + path + it.key());
    }
}

struct Run {
    json cfg;
    uint64_t seed = 1;
    std::string out_dir = "out";
    int workers = 0;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    fs::path out(const std::string& name) {
        fs::create_directories(out_dir);
        outputs.push_back(name);
        return fs::path(out_dir) / name;
    }

    void write_report(const json& body) {
        auto p = out("report.json");
        std::ofstream os(p);
        os << body.dump(2) << "\n";
    }

    void finalize(const std::string& command, const std::string& status,
                  const std::string& error = "") {
        fs::create_directories(out_dir);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json m = {{"tool", "levykin"},  {"version", version_string}, {"command", command},
                  {"seed", seed},       {"workers", workers},        {"config", cfg},
                  {"wall_time_s", wall}, {"status", status},         {"outputs", outputs}};
        if (!error.empty()) m["error"] = error;
        std::ofstream os(fs::path(out_dir) / "manifest.json");
        os << m.dump(2) << "\n";
    }
};

double jget(const json& cfg, const std::string& block, const std::string& key, double dflt) {
    if (cfg.contains(block) && cfg[block].contains(key)) return cfg[block][key].get<double>();
    return dflt;
}

int jgeti(const json& cfg, const std::string& block, const std::string& key, int dflt) {
    if (cfg.contains(block) && cfg[block].contains(key)) return cfg[block][key].get<int>();
    return dflt;
}

std::string jgets(const json& cfg, const std::string& block, const std::string& key,
                  const std::string& dflt) {
    if (cfg.contains(block) && cfg[block].contains(key))
        return cfg[block][key].get<std::string>();
    return dflt;
}

ModelSpec model_from(const json& cfg) {
    ModelSpec s;
    s.d = jgeti(cfg, "model", "d", 1);
    s.alpha = jget(cfg, "model", "alpha", 1.5);
    const std::string uf = jgets(cfg, "model", "u_family", "quadratic");
    if (uf == "quadratic") s.u_family = UFamily::Quadratic;
    else if (uf == "quadratic_plus_bump") s.u_family = UFamily::QuadraticPlusBump;
    else throw ValidationError("unknown u_family: " + uf);
    s.u_scale = jget(cfg, "model", "u_scale", 1.0);
    s.bump_amp = jget(cfg, "model", "bump_amp", 0.0);
    s.bump_width = jget(cfg, "model", "bump_width", 1.0);
    const std::string pf = jgets(cfg, "model", "phi_family", "log_radial");
    if (pf != "log_radial") throw ValidationError("unknown phi_family: " + pf);
    s.phi_family = PhiFamily::LogRadial;
    s.beta = jget(cfg, "model", "beta", 1.5);
    return s;
}

QuadratureSpec quad_from(const json& cfg) {
    QuadratureSpec q;
    q.inner_split = jget(cfg, "quadrature", "inner_split", q.inner_split);
    q.outer_radius = jget(cfg, "quadrature", "outer_radius", q.outer_radius);
    q.nodes_inner = jgeti(cfg, "quadrature", "nodes_inner", q.nodes_inner);
    q.nodes_shell = jgeti(cfg, "quadrature", "nodes_shell", q.nodes_shell);
    q.nodes_angular = jgeti(cfg, "quadrature", "nodes_angular", q.nodes_angular);
    q.tail_rule = tail_rule_from_string(jgets(cfg, "quadrature", "tail_rule", "exponential-map"));
    q.validate();
    return q;
}

PotentialPair<1> pair1_from(const json& cfg) {
    ModelSpec s = model_from(cfg);
    if (s.d != 1) throw ValidationError("this command is desk-scale: model.d must be 1");
    return build_model<1>(s);
}

std::function<double(const Vec<1>&)> named_h(const std::string& name) {
    if (name == "one") return [](const Vec<1>&) { return 1.0; };
    if (name == "x") return [](const Vec<1>& x) { return x[0]; };
    if (name == "x2m1") return [](const Vec<1>& x) { return x[0] * x[0] - 1.0; };
    if (name == "sin") return [](const Vec<1>& x) { return std::sin(x[0]); };
    throw ValidationError("unknown forcing h: " + name);
}

// ---------------------------------------------------------------------------
// Command bodies. Each returns the process exit code.

int cmd_constants(Run& run) {
    const int d = jgeti(run.cfg, "model", "d", 1);
    const double alpha = jget(run.cfg, "model", "alpha", 1.5);
    const auto k = special_constants(d, alpha);
    json rep = {{"d", d},
                {"alpha", alpha},
                {"c_frac", k.c_frac},
                {"omega_d", k.omega_d},
                {"c_riesz", std::isnan(k.c_riesz) ? json(nullptr) : json(k.c_riesz)}};
    run.write_report(rep);
    std::cout << "c_{d,alpha}=" << std::setprecision(12) << k.c_frac
              << " omega_d=" << k.omega_d;
    if (!std::isnan(k.c_riesz)) std::cout << " C_{d,2-alpha}=" << k.c_riesz;
    std::cout << "\n";
    return 0;
}

int cmd_rate(Run& run) {
    const double a1 = jget(run.cfg, "rate", "alpha1", 1.0);
    const double a2 = jget(run.cfg, "rate", "alpha2", 1.0);
    const double a3 = jget(run.cfg, "rate", "alpha3", 1.0);
    const double lam = jget(run.cfg, "rate", "lambda", 1.0);
    const bool optimize = run.cfg.contains("rate") && run.cfg["rate"].value("optimize", false);
    dms::DmsRates r;
    if (optimize) {
        const double lo = jget(run.cfg, "rate", "lambda_lo", 0.01);
        const double hi = jget(run.cfg, "rate", "lambda_hi", 100.0);
        r = dms::optimize_lambda(a1, a2, a3, lo, hi).second;
    } else {
        r = dms::rate_bound(a1, a2, a3, lam);
    }
    json rep = {{"alpha1", r.alpha1}, {"alpha2", r.alpha2}, {"alpha3", r.alpha3},
                {"lambda", r.lambda}, {"eps0", r.eps0},     {"lambda0", r.lambda0},
                {"C", r.bigC}};
    run.write_report(rep);
    std::cout << std::setprecision(6) << "eps0=" << r.eps0 << " lambda0=" << r.lambda0
              << " C=" << r.bigC << " (lambda=" << r.lambda << ")\n";
    return 0;
}

int cmd_fracop(Run& run) {
    // the pointwise operator needs alpha in (0,2) only, not the full system
    // precondition d > 2 - alpha
    const auto q = quad_from(run.cfg);
    const double alpha = jget(run.cfg, "model", "alpha", 1.5);
    if (!(alpha > 0.0 && alpha < 2.0)) throw ValidationError("fracop: alpha in (0,2) required");
    const double beta = jget(run.cfg, "model", "beta", 1.5);
    const std::string func = jgets(run.cfg, "fracop", "func", "gaussian");
    Field<1> f;
    if (func == "gaussian")
        f = Field<1>{[](const Vec<1>& x) { return std::exp(-x[0] * x[0]); },
                     std::numeric_limits<double>::infinity()};
    else if (func == "equilibrium") {
        if (!(beta > 0.0)) throw ValidationError("fracop: beta > 0 required");
        f = Field<1>{[beta](const Vec<1>& v) {
                         return std::pow(1.0 + v[0] * v[0], -0.5 * (1.0 + beta));
                     },
                     1.0 + beta};
    } else throw ValidationError("unknown fracop func: " + func);

    std::vector<double> pts = {0.0, 0.5, 1.0, 2.0};
    if (run.cfg.contains("fracop") && run.cfg["fracop"].contains("points"))
        pts = run.cfg["fracop"]["points"].get<std::vector<double>>();

    csv::Writer w(run.out("fracop.csv").string());
    w.header({"v", "value", "refined"});
    json rows = json::array();
    for (double v : pts) {
        const auto r = frac_laplacian_checked(f, Vec<1>{v}, alpha, q, 1e-3);
        w.row(v, r.value, r.refined);
        rows.push_back({{"v", v}, {"value", r.value}, {"refined", r.refined}});
    }
    run.write_report({{"func", func}, {"alpha", alpha}, {"points", rows}});
    std::cout << "fractional laplacian of " << func << " at " << pts.size()
              << " points (refinement-checked)\n";
    return 0;
}

int cmd_drift_profile(Run& run) {
    const auto pair = pair1_from(run.cfg);
    const auto q = quad_from(run.cfg);
    const double r_max = jget(run.cfg, "drift_profile", "r_max", 2e4);
    const int nodes = jgeti(run.cfg, "drift_profile", "nodes", 320);
    const double tol = jget(run.cfg, "drift_profile", "tolerance", 1e-3);
    const auto prof = build_drift_profile(pair, pair.alpha, q, make_drift_radii(r_max, nodes), tol);
    csv::Writer w(run.out("profile.csv").string());
    w.header({"r", "rho"});
    for (size_t i = 0; i < prof.radii.size(); ++i) w.row(prof.radii[i], prof.rho[i]);
    run.write_report({{"r_max", r_max},
                      {"nodes", nodes},
                      {"validation_error", prof.max_validation_error},
                      {"validity_radius", prof.validity_radius}});
    std::cout << "drift profile over [0," << r_max << "] with held-out error "
              << prof.max_validation_error << "\n";
    return 0;
}

int cmd_check_invariance(Run& run) {
    const auto pair = pair1_from(run.cfg);
    const auto q = quad_from(run.cfg);
    const double tol = jget(run.cfg, "invariance", "tolerance", 5e-3);
    MarginalGrid grid;
    grid.mu2_radius = 1e4;
    json rows = json::array();
    bool all_ok = true;
    for (const auto& [name, f] : suites::invariance_suite()) {
        const auto r = invariance_residual(pair, f, pair.alpha, q, grid, tol);
        rows.push_back({{"function", name},
                        {"residual", r.residual},
                        {"budget", r.budget},
                        {"conclusive", r.conclusive}});
        if (!r.conclusive || std::fabs(r.residual) > tol) all_ok = false;
        std::cout << name << ": residual=" << r.residual << " budget=" << r.budget
                  << (r.conclusive ? "" : " (inconclusive)") << "\n";
    }
    run.write_report({{"tolerance", tol}, {"functions", rows}});
    if (!all_ok) throw NumericsError("invariance residual exceeded tolerance or was inconclusive");
    return 0;
}

int cmd_carre_gap(Run& run) {
    const auto pair = pair1_from(run.cfg);
    const double tol = jget(run.cfg, "carre", "tolerance", 1e-3);
    QuadratureSpec q_lhs = quad_from(run.cfg);
    QuadratureSpec q_rhs = q_lhs;
    q_rhs.inner_split = 0.07;
    q_rhs.nodes_inner = 40;
    q_rhs.nodes_shell = 16;
    const std::vector<std::pair<double, double>> bumps = {{0.0, 2.0}, {0.5, 1.5}, {-0.8, 1.2}};
    json rows = json::array();
    double worst = 0.0;
    for (auto [c, w] : bumps) {
        const double gap = carre_du_champ_gap(pair, suites::bump(c, w), pair.alpha, q_lhs, q_rhs);
        rows.push_back({{"center", c}, {"width", w}, {"gap", gap}});
        worst = std::max(worst, gap);
        std::cout << "bump(" << c << "," << w << "): gap=" << gap << "\n";
    }
    run.write_report({{"tolerance", tol}, {"bumps", rows}, {"worst_gap", worst}});
    if (worst > tol) throw NumericsError("carre-du-champ gap exceeded tolerance");
    return 0;
}

int cmd_c_star(Run& run) {
    const ModelSpec ms = model_from(run.cfg);
    json rep;
    auto fill = [&](auto pair) {
        const auto r = c_star(pair);
        rep = {{"d", ms.d},       {"beta", ms.beta},        {"value", r.value},
               {"alt_value", r.alt_value}, {"rel_gap", r.rel_gap}};
        std::cout << "c* = " << std::setprecision(12) << r.value
                  << " (cross-check gap " << r.rel_gap << ")\n";
    };
    if (ms.d == 1) fill(build_model<1>(ms));
    else if (ms.d == 2) fill(build_model<2>(ms));
    else if (ms.d == 3) fill(build_model<3>(ms));
    else throw ValidationError("c-star: d must be 1, 2 or 3");
    run.write_report(rep);
    return 0;
}

int cmd_poisson(Run& run) {
    const auto pair = pair1_from(run.cfg);
    const std::string method = jgets(run.cfg, "poisson", "method", "fk");
    const std::string hname = jgets(run.cfg, "poisson", "h", "x");
    const auto h = named_h(hname);
    std::vector<double> pts = {0.0, 0.7};
    if (run.cfg.contains("poisson") && run.cfg["poisson"].contains("x_points"))
        pts = run.cfg["poisson"]["x_points"].get<std::vector<double>>();

    json rows = json::array();
    if (method == "fk") {
        const int n_paths = jgeti(run.cfg, "poisson", "n_paths", 20000);
        const double dt = jget(run.cfg, "poisson", "dt", 1e-3);
        const double horizon = jget(run.cfg, "poisson", "horizon", 20.0);
        csv::Writer w(run.out("poisson.csv").string());
        w.header({"x", "estimate", "std_error"});
        for (double xq : pts) {
            const auto e =
                solve_poisson_fk<1>(pair, h, Vec<1>{xq}, n_paths, dt, horizon, run.seed,
                                    run.workers);
            w.row(xq, e.value, e.std_error);
            rows.push_back({{"x", xq}, {"estimate", e.value}, {"std_error", e.std_error}});
        }
        run.write_report({{"method", "fk"}, {"h", hname}, {"points", rows}});
    } else if (method == "fd") {
        const double hw = jget(run.cfg, "poisson", "half_width", 8.0);
        const int n = jgeti(run.cfg, "poisson", "n_grid", 1601);
        const std::string bc = jgets(run.cfg, "poisson", "boundary", "reflecting");
        const auto sol = solve_poisson_fd_1d(
            pair, [&](double x) { return h(Vec<1>{x}); }, hw, n,
            bc == "reflecting" ? PoissonBoundary::Reflecting : PoissonBoundary::FarFieldDecay);
        csv::Writer w(run.out("poisson.csv").string());
        w.header({"x", "f"});
        for (size_t i = 0; i < sol.x.size(); ++i) w.row(sol.x[i], sol.f[i]);
        for (double xq : pts) rows.push_back({{"x", xq}, {"estimate", sol.eval(xq)}});
        run.write_report({{"method", "fd"},
                          {"h", hname},
                          {"points", rows},
                          {"residual_inf", sol.residual_inf},
                          {"cond_estimate", sol.cond_estimate}});
    } else {
        throw ValidationError("poisson method must be fk or fd");
    }
    std::cout << "poisson solve (" << method << ", h=" << hname << ") at " << pts.size()
              << " points\n";
    return 0;
}

int cmd_poincare(Run& run) {
    const ModelSpec ms = model_from(run.cfg);
    if (ms.d != 1) throw ValidationError("poincare: d must be 1");
    const auto pair = build_model<1>(ms);
    const std::string which = jgets(run.cfg, "poincare", "which", "both");
    json rep;
    if (which == "mu1" || which == "both") {
        const double hw = jget(run.cfg, "poincare", "half_width", 8.0);
        const int n = jgeti(run.cfg, "poincare", "n", 801);
        const double k = ms.u_scale;
        rep["c1"] = dms::poincare_mu1_1d([k](double x) { return 0.5 * k * x * x; }, hw, n);
    }
    if (which == "mu2" || which == "both") {
        const double box = jget(run.cfg, "poincare", "box", 60.0);
        const int n = jgeti(run.cfg, "poincare", "n_nonlocal", 301);
        const auto np = dms::poincare_mu2_nonlocal_1d(pair, ms.alpha, box, n);
        rep["c2"] = np.c2;
        rep["c2_refined"] = np.c2_refined;
        rep["c2_rel_change"] = np.rel_change;
        rep["truncation_radius"] = np.truncation_radius;
    }
    run.write_report(rep);
    std::cout << "poincare constants: " << rep.dump() << "\n";
    return 0;
}

int cmd_dms_certify(Run& run) {
    const int models = jgeti(run.cfg, "dms", "models", 20);
    const int nmax = jgeti(run.cfg, "dms", "n", 10);
    const double lambda = jget(run.cfg, "dms", "lambda", 1.0);
    const double t_max = jget(run.cfg, "dms", "t_max", 50.0);
    const int t_nodes = jgeti(run.cfg, "dms", "t_nodes", 50);
    const int vectors = jgeti(run.cfg, "dms", "vectors", 20);
    const double slack = jget(run.cfg, "dms", "slack", 1e-9);
    const int evecs = jgeti(run.cfg, "dms", "entropy_vectors", 1000);

    std::vector<double> t_grid;
    for (int i = 0; i <= t_nodes; ++i) t_grid.push_back(t_max * i / t_nodes);

    csv::Writer w(run.out("decay.csv").string());
    w.header({"model_seed", "t", "worst_norm2", "bound"});
    json rows = json::array();
    RngStream vec_rng(run.seed ^ 0x9e3779b9ULL);
    double global_violation = -1e300;
    int skipped = 0;

    for (int m = 0; m < models; ++m) {
        const uint64_t seed = run.seed + m;
        RngStream size_rng(seed * 77 + 1);
        const int n = 4 + (int)(size_rng.raw() % (uint64_t)std::max(1, nmax - 3));
        const int kdim = 1 + (int)(size_rng.raw() % (uint64_t)std::max(1, n / 2));
        const auto md = dms::build_matrix_model(n, kdim, seed);
        const auto est = dms::estimate_alphas(md, lambda);
        if (!est.h3_feasible) {
            rows.push_back({{"seed", seed}, {"skipped", est.message}});
            ++skipped;
            continue;
        }
        const auto rates = dms::rate_bound(est.alpha1, est.alpha2, est.alpha3, lambda);
        std::vector<dms::VectorXd> fs;
        for (int i = 0; i < vectors; ++i) {
            dms::VectorXd f(md.n);
            for (int j = 0; j < md.n; ++j) f(j) = vec_rng.normal();
            fs.push_back(f);
        }
        const auto rep = dms::verify_decay(md, rates, t_grid, fs, slack);
        for (const auto& r : rep.rows) w.row(seed, r.t, r.worst_norm2, r.bound);
        std::vector<dms::VectorXd> efs;
        for (int i = 0; i < evecs / models + 1; ++i) {
            dms::VectorXd f(md.n);
            for (int j = 0; j < md.n; ++j) f(j) = vec_rng.normal();
            efs.push_back(f);
        }
        const auto erep = dms::entropy_equivalence_check(md, lambda, rates.eps0, efs);
        global_violation = std::max(global_violation, rep.max_violation);
        rows.push_back({{"seed", seed},
                        {"n", md.n},
                        {"k", md.k},
                        {"alpha1", est.alpha1},
                        {"alpha2", est.alpha2},
                        {"alpha3", est.alpha3},
                        {"lambda", lambda},
                        {"eps0", rates.eps0},
                        {"lambda0", rates.lambda0},
                        {"C", rates.bigC},
                        {"max_violation", rep.max_violation},
                        {"decay_pass", rep.pass},
                        {"entropy_lower_violation", erep.max_lower_violation},
                        {"entropy_upper_violation", erep.max_upper_violation}});
        if (!rep.pass) throw NumericsError("decay certification violated the bound");
        if (erep.max_lower_violation > 1e-12 || erep.max_upper_violation > 1e-12)
            throw NumericsError("entropy equivalence violated");
    }
    run.write_report({{"models", rows},
                      {"skipped", skipped},
                      {"max_violation", global_violation},
                      {"t_grid", t_grid}});
    std::cout << "certified " << (models - skipped) << "/" << models
              << " models, max violation " << global_violation << "\n";
    return 0;
}

int cmd_simulate(Run& run) {
    const auto pair = pair1_from(run.cfg);
    const auto q = quad_from(run.cfg);
    sim::EnsembleConfig cfg;
    cfg.n_particles = jgeti(run.cfg, "simulation", "n_particles", 2000);
    cfg.dt = jget(run.cfg, "simulation", "dt", 1e-3);
    cfg.t_end = jget(run.cfg, "simulation", "t_end", 50.0);
    cfg.thin_stride = jgeti(run.cfg, "simulation", "thin_stride", 100);
    cfg.initial_law =
        sim::initial_law_from_string(jgets(run.cfg, "simulation", "initial_law", "stationary"));
    cfg.burn_in_fraction = jget(run.cfg, "simulation", "burn_in_fraction", 0.1);
    cfg.point[0] = jget(run.cfg, "simulation", "point_x", 0.0);
    cfg.point[2] = jget(run.cfg, "simulation", "point_v", 0.0);
    cfg.perturbation = jget(run.cfg, "simulation", "perturbation", 1.0);
    cfg.seed = run.seed;
    cfg.workers = run.workers;
    const double ks_level = jget(run.cfg, "simulation", "ks_level", 0.01);

    const double r_max = jget(run.cfg, "simulation", "profile_r_max", 2e4);
    const int pnodes = jgeti(run.cfg, "simulation", "profile_nodes", 320);
    const auto profile =
        build_drift_profile(pair, pair.alpha, q, make_drift_radii(r_max, pnodes));

    const auto res = sim::run_ensemble(cfg, pair, pair.alpha, &profile, q);

    {
        csv::Writer w(run.out("trajectories.csv").string());
        w.header({"particle", "t", "x", "v", "tanh_v"});
        const double t0 = cfg.burn_in_fraction * cfg.t_end;
        for (int p = 0; p < res.n_particles; ++p)
            for (int s = 0; s < res.n_slices; ++s)
                w.row(p, t0 + (s + 1) * res.slice_dt, res.x_at(p, s), res.v_at(p, s),
                      std::tanh(res.v_at(p, s)));
    }
    {
        csv::Writer w(run.out("stats.csv").string());
        w.header({"t", "mean_x", "var_x", "mean_v_tanh", "se_v_tanh"});
        const double t0 = cfg.burn_in_fraction * cfg.t_end;
        for (int s = 0; s < res.n_slices; ++s) {
            double mx = 0, mx2 = 0, mt = 0, mt2 = 0;
            for (int p = 0; p < res.n_particles; ++p) {
                mx += res.x_at(p, s);
                mx2 += res.x_at(p, s) * res.x_at(p, s);
                const double o = std::tanh(res.v_at(p, s));
                mt += o;
                mt2 += o * o;
            }
            mx /= res.n_particles;
            mt /= res.n_particles;
            const double vx = mx2 / res.n_particles - mx * mx;
            const double vt = mt2 / res.n_particles - mt * mt;
            w.row(t0 + (s + 1) * res.slice_dt, mx, vx, mt,
                  std::sqrt(std::max(0.0, vt) / res.n_particles));
        }
    }

    const auto ks = sim::stationarity_test(res, pair);
    run.write_report({{"n_particles", res.n_particles},
                      {"n_slices", res.n_slices},
                      {"slice_dt", res.slice_dt},
                      {"profile_fallbacks", res.profile_fallbacks},
                      {"failed_particles", res.n_failed},
                      {"ks",
                       {{"d_x", ks.d_x},
                        {"p_x", ks.p_x},
                        {"n_eff_x", ks.n_eff_x},
                        {"d_v", ks.d_v},
                        {"p_v", ks.p_v},
                        {"n_eff_v", ks.n_eff_v}}}});
    std::cout << "simulate: KS p_x=" << ks.p_x << " p_v=" << ks.p_v
              << " (fallbacks=" << res.profile_fallbacks << ")\n";
    if (cfg.initial_law == sim::InitialLaw::Stationary &&
        (ks.p_x < ks_level || ks.p_v < ks_level))
        throw StatTestFailure("stationarity KS test rejected");
    return 0;
}

int cmd_decay_fit(Run& run) {
    const std::string input = jgets(run.cfg, "decay_fit", "input", "");
    if (input.empty()) throw ValidationError("decay-fit: decay_fit.input (trajectories.csv) required");
    const std::string obs = jgets(run.cfg, "decay_fit", "observable", "tanh_v");
    const int max_lag = jgeti(run.cfg, "decay_fit", "max_lag", 30);

    const auto table = csv::read_table(input);
    const int ip = table.column_index("particle"), it = table.column_index("t");
    const int ix = table.column_index("x"), iv = table.column_index("v");
    int n_particles = 0;
    for (const auto& r : table.rows) n_particles = std::max(n_particles, (int)r[ip] + 1);
    const int n_slices = (int)(table.rows.size() / n_particles);
    if ((size_t)n_particles * n_slices != table.rows.size())
        throw ValidationError("decay-fit: ragged trajectory table");

    sim::EnsembleResult<1> res;
    res.n_particles = n_particles;
    res.n_slices = n_slices;
    res.xs.assign(table.rows.size(), 0.0);
    res.vs.assign(table.rows.size(), 0.0);
    std::vector<int> counter(n_particles, 0);
    double t_first = 0.0, t_second = 0.0;
    for (const auto& r : table.rows) {
        const int p = (int)r[ip];
        const int s = counter[p]++;
        res.xs[(size_t)p * n_slices + s] = r[ix];
        res.vs[(size_t)p * n_slices + s] = r[iv];
        if (p == 0 && s == 0) t_first = r[it];
        if (p == 0 && s == 1) t_second = r[it];
    }
    res.slice_dt = t_second - t_first;
    if (!(res.slice_dt > 0.0)) throw ValidationError("decay-fit: could not infer slice spacing");

    std::function<double(double, double)> f;
    if (obs == "tanh_v") f = [](double, double v) { return std::tanh(v); };
    else if (obs == "x") f = [](double x, double) { return x; };
    else if (obs == "v") f = [](double, double v) { return v; };
    else throw ValidationError("unknown observable: " + obs);

    std::vector<int> lags;
    for (int l = 0; l <= std::min(max_lag, n_slices - 2); ++l) lags.push_back(l);
    const auto fit = sim::autocov_fit(res, f, lags);

    // informational juxtaposition: lambda0/2 with alpha_1, alpha_2 estimated
    // from the Poincare constants and a nominal alpha_3 = 1 (no computable
    // continuum value exists for alpha_3)
    const auto pair = pair1_from(run.cfg);
    const double c1 = dms::poincare_mu1_1d(
        [&pair](double x) { return pair.U(Vec<1>{x}); }, 8.0 / std::sqrt(pair.u_scale), 801);
    const auto np = dms::poincare_mu2_nonlocal_1d(pair, pair.alpha, 60.0, 301);
    const double c_frac = frac_laplacian_constant(1, pair.alpha);
    const double alpha1 = 2.0 * np.c2 / c_frac;
    const auto nz = normalizations(pair);
    const auto v_nodes = mu2_nodes<1>(pair, nz);
    const double grad_phi_sq =
        v_nodes.integrate([&](const Vec<1>& v) { return norm2(pair.grad_Phi(v)); });
    const double alpha2 = c1 * 1.0 / grad_phi_sq;
    const auto [lam_star, rates] = dms::optimize_lambda(alpha1, alpha2, 1.0, 0.01, 100.0);

    json rep = {{"observable", obs},
                {"rate", fit.rate},
                {"rate_se", fit.rate_se},
                {"rate_ci", {fit.rate_ci_lo, fit.rate_ci_hi}},
                {"window", fit.window},
                {"degenerate", fit.degenerate},
                {"informational",
                 {{"c1", c1},
                  {"c2", np.c2},
                  {"alpha1", alpha1},
                  {"alpha2", alpha2},
                  {"alpha3_nominal", 1.0},
                  {"lambda_star", lam_star},
                  {"lambda0_half", 0.5 * rates.lambda0}}}};
    run.write_report(rep);
    std::cout << "fitted rate=" << fit.rate << " (95% CI [" << fit.rate_ci_lo << ", "
              << fit.rate_ci_hi << "]), nominal lambda0/2=" << 0.5 * rates.lambda0 << "\n";
    if (fit.degenerate || fit.rate_ci_lo <= 0.0)
        throw StatTestFailure("decay fit degenerate or CI includes zero");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale numerics for the fractional kinetic Langevin system"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path, out_dir = "out";
    uint64_t seed = 1;
    int workers = 0;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--seed", seed, "64-bit unsigned seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--workers", workers, "parallel worker cap (0 = hardware)");

    struct Flag {
        std::string block, key;
        double value = 0.0;
    };
    std::vector<Flag> set_flags;
    auto add_numeric = [&](CLI::App* sub, const std::string& flag, const std::string& block,
                           const std::string& key) {
        auto holder = std::make_shared<double>();
        sub->add_option_function<double>(
            flag, [&set_flags, block, key](double v) { set_flags.push_back({block, key, v}); });
        (void)holder;
    };

    std::map<std::string, std::function<int(Run&)>> bodies;
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> string_flag_store;

    auto make_sub = [&](const std::string& name, const std::string& desc,
                        std::function<int(Run&)> body) {
        CLI::App* sub = app.add_subcommand(name, desc);
        bodies[name] = std::move(body);
        return sub;
    };

    auto* sc_constants = make_sub("constants", "kernel and geometric constants", cmd_constants);
    add_numeric(sc_constants, "--d", "model", "d");
    add_numeric(sc_constants, "--alpha", "model", "alpha");

    auto* sc_rate = make_sub("rate", "closed-form decay-rate constants", cmd_rate);
    add_numeric(sc_rate, "--alpha1", "rate", "alpha1");
    add_numeric(sc_rate, "--alpha2", "rate", "alpha2");
    add_numeric(sc_rate, "--alpha3", "rate", "alpha3");
    add_numeric(sc_rate, "--lambda", "rate", "lambda");
    sc_rate->add_flag_function("--optimize", [&](int64_t) {
        set_flags.push_back({"rate", "optimize", 1.0});
    });
    add_numeric(sc_rate, "--lambda-lo", "rate", "lambda_lo");
    add_numeric(sc_rate, "--lambda-hi", "rate", "lambda_hi");

    auto* sc_fracop = make_sub("fracop", "pointwise fractional laplacian", cmd_fracop);
    add_numeric(sc_fracop, "--alpha", "model", "alpha");
    add_numeric(sc_fracop, "--beta", "model", "beta");
    std::string fracop_func;
    sc_fracop->add_option("--func", fracop_func, "gaussian | equilibrium");

    auto* sc_profile = make_sub("drift-profile", "cached radial friction profile",
                                cmd_drift_profile);
    add_numeric(sc_profile, "--alpha", "model", "alpha");
    add_numeric(sc_profile, "--beta", "model", "beta");
    add_numeric(sc_profile, "--rmax", "drift_profile", "r_max");
    add_numeric(sc_profile, "--nodes", "drift_profile", "nodes");

    auto* sc_inv = make_sub("check-invariance", "weak-form invariance residuals",
                            cmd_check_invariance);
    add_numeric(sc_inv, "--alpha", "model", "alpha");
    add_numeric(sc_inv, "--beta", "model", "beta");
    add_numeric(sc_inv, "--tolerance", "invariance", "tolerance");

    auto* sc_carre = make_sub("carre-gap", "carre-du-champ identity gap", cmd_carre_gap);
    add_numeric(sc_carre, "--alpha", "model", "alpha");
    add_numeric(sc_carre, "--beta", "model", "beta");
    add_numeric(sc_carre, "--tolerance", "carre", "tolerance");

    auto* sc_cstar = make_sub("c-star", "macroscopic coupling constant", cmd_c_star);
    add_numeric(sc_cstar, "--d", "model", "d");
    add_numeric(sc_cstar, "--alpha", "model", "alpha");
    add_numeric(sc_cstar, "--beta", "model", "beta");

    auto* sc_poisson = make_sub("poisson", "resolvent equation solvers", cmd_poisson);
    std::string poisson_method, poisson_h;
    sc_poisson->add_option("--method", poisson_method, "fk | fd");
    sc_poisson->add_option("--forcing", poisson_h, "one | x | x2m1 | sin");
    add_numeric(sc_poisson, "--n-paths", "poisson", "n_paths");
    add_numeric(sc_poisson, "--dt", "poisson", "dt");
    add_numeric(sc_poisson, "--horizon", "poisson", "horizon");

    auto* sc_poincare = make_sub("poincare", "Poincare constants of the marginals", cmd_poincare);
    std::string poincare_which;
    sc_poincare->add_option("--which", poincare_which, "mu1 | mu2 | both");
    add_numeric(sc_poincare, "--alpha", "model", "alpha");
    add_numeric(sc_poincare, "--beta", "model", "beta");
    add_numeric(sc_poincare, "--box", "poincare", "box");

    auto* sc_dms = make_sub("dms-certify", "matrix-model decay certification", cmd_dms_certify);
    add_numeric(sc_dms, "--models", "dms", "models");
    add_numeric(sc_dms, "--n", "dms", "n");
    add_numeric(sc_dms, "--lambda", "dms", "lambda");
    add_numeric(sc_dms, "--t-max", "dms", "t_max");
    add_numeric(sc_dms, "--vectors", "dms", "vectors");
    add_numeric(sc_dms, "--slack", "dms", "slack");

    auto* sc_sim = make_sub("simulate", "Euler-Maruyama ensemble with stationarity tests",
                            cmd_simulate);
    add_numeric(sc_sim, "--alpha", "model", "alpha");
    add_numeric(sc_sim, "--beta", "model", "beta");
    add_numeric(sc_sim, "--n-particles", "simulation", "n_particles");
    add_numeric(sc_sim, "--dt", "simulation", "dt");
    add_numeric(sc_sim, "--t-end", "simulation", "t_end");
    add_numeric(sc_sim, "--thin", "simulation", "thin_stride");
    std::string initial_law;
    sc_sim->add_option("--initial-law", initial_law, "stationary | point | perturbed");

    auto* sc_fit = make_sub("decay-fit", "autocovariance decay fit", cmd_decay_fit);
    std::string fit_input, fit_obs;
    sc_fit->add_option("--in", fit_input, "trajectories.csv from a simulate run");
    sc_fit->add_option("--observable", fit_obs, "tanh_v | x | v");
    add_numeric(sc_fit, "--max-lag", "decay_fit", "max_lag");
    add_numeric(sc_fit, "--alpha", "model", "alpha");
    add_numeric(sc_fit, "--beta", "model", "beta");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    Run run;
    run.seed = seed;
    run.out_dir = out_dir;
    run.workers = workers;
    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();

    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ValidationError("cannot open config: " + config_path);
            in >> run.cfg;
        } else {
            run.cfg = json::object();
        }
        // flags override config
        for (const auto& fl : set_flags) {
            if (fl.key == "d" || fl.key == "n_particles" || fl.key == "thin_stride" ||
                fl.key == "models" || fl.key == "n" || fl.key == "k" || fl.key == "t_nodes" ||
                fl.key == "vectors" || fl.key == "n_paths" || fl.key == "n_grid" ||
                fl.key == "n" || fl.key == "n_nonlocal" || fl.key == "max_lag" ||
                fl.key == "nodes")
                run.cfg[fl.block][fl.key] = (int)std::llround(fl.value);
            else if (fl.key == "optimize")
                run.cfg[fl.block][fl.key] = true;
            else
                run.cfg[fl.block][fl.key] = fl.value;
        }
        if (!fracop_func.empty()) run.cfg["fracop"]["func"] = fracop_func;
        if (!poisson_method.empty()) run.cfg["poisson"]["method"] = poisson_method;
        if (!poisson_h.empty()) run.cfg["poisson"]["h"] = poisson_h;
        if (!poincare_which.empty()) run.cfg["poincare"]["which"] = poincare_which;
        if (!initial_law.empty()) run.cfg["simulation"]["initial_law"] = initial_law;
        if (!fit_input.empty()) run.cfg["decay_fit"]["input"] = fit_input;
        if (!fit_obs.empty()) run.cfg["decay_fit"]["observable"] = fit_obs;
        run.cfg["command"] = command;
        run.cfg["seed"] = seed;
        run.cfg["workers"] = workers;

        validate_keys(run.cfg, config_schema(), "");

        const int rc = bodies.at(command)(run);
        run.finalize(command, "ok");
        return rc;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        run.finalize(command, "validation-error", e.what());
        return 1;
    } catch (const StatTestFailure& e) {
        std::cerr << "statistical test failed: " << e.what() << "\n";
        run.finalize(command, "stat-test-failure", e.what());
        return 3;
    } catch (const NumericsError& e) {
        std::cerr << "numerical non-convergence: " << e.what() << "\n";
        run.finalize(command, "numerics-error", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        run.finalize(command, "error", e.what());
        return 1;
    }
}
