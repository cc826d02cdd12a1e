// Batch front end: every subcommand writes a JSON report plus CSV plot data
// into --out (env IMTK_OUT wins) and exits 0 on pass, 2 on a failed check,
// 1 on any error. Reports carry no timestamps; only run_manifest.json does.
#include <CLI11.hpp>

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "imtk/conditions.hpp"
#include "imtk/cone.hpp"
#include "imtk/dynamics.hpp"
#include "imtk/errors.hpp"
#include "imtk/flow.hpp"
#include "imtk/lyapunov.hpp"
#include "imtk/manifold.hpp"
#include "imtk/tracking.hpp"

namespace fs = std::filesystem;
using namespace imtk;

namespace {

constexpr const char* kVersion = "imtk 1.0.0";

struct RunContext {
    std::string command;
    std::string out = "imtk-out";
    std::string fixtures = "fixtures";
    std::uint64_t seed = 42;
    int threads = 1;
    std::string started;
    std::vector<std::string> configs;
    std::vector<std::string> artifacts;
    bool all_pass = true;
};

std::string iso_now() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void prepare(RunContext& ctx) {
    if (const char* env = std::getenv("IMTK_OUT"); env && *env) ctx.out = env;
    fs::create_directories(ctx.out);
}

std::string resolve_system(const RunContext& ctx, const std::string& name) {
    if (fs::exists(name)) return name;
    std::string file;
    for (char c : name) file += c == '-' ? '_' : static_cast<char>(std::tolower(c));
    if (file.find(".json") == std::string::npos) file += ".json";
    const std::string full = ctx.fixtures + "/" + file;
    if (!fs::exists(full))
        throw ParseError("unknown system '" + name + "' (no file " + full + ")");
    return full;
}

SystemSpec load_named(RunContext& ctx, const std::string& name) {
    const std::string path = resolve_system(ctx, name);
    ctx.configs.push_back(path);
    return load_system(path);
}

void emit_json(RunContext& ctx, const std::string& name, const Json& j) {
    const std::string path = ctx.out + "/" + name;
    write_json_file(path, j);
    ctx.artifacts.push_back(path);
}

void emit_csv(RunContext& ctx, const std::string& name, const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& rows) {
    const std::string path = ctx.out + "/" + name;
    write_csv(path, header, rows);
    ctx.artifacts.push_back(path);
}

void note(RunContext& ctx, const ConditionReport& rep) {
    ctx.all_pass = ctx.all_pass && rep.pass;
}

int finish(RunContext& ctx) {
    Json man;
    man["command"] = ctx.command;
    man["configs"] = ctx.configs;
    man["seed"] = ctx.seed;
    man["threads"] = ctx.threads;
    man["version"] = kVersion;
    man["started"] = ctx.started;
    man["finished"] = iso_now();
    man["artifacts"] = ctx.artifacts;
    write_json_file(ctx.out + "/run_manifest.json", man);
    return ctx.all_pass ? 0 : 2;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
}

Vector parse_vec(const std::string& s) {
    const std::vector<double> xs = parse_list(s);
    Vector v(static_cast<int>(xs.size()));
    for (size_t i = 0; i < xs.size(); ++i) v(static_cast<int>(i)) = xs[i];
    return v;
}

double sv_max(const CMatrix& W) { return W.jacobiSvd().singularValues()(0); }

std::vector<double> spectrum(const std::string& kind, int N) {
    std::vector<double> ls;
    if (kind == "squares")
        for (int k = 1; k <= N; ++k) ls.push_back(static_cast<double>(k) * k);
    else if (kind == "linear")
        for (int k = 1; k <= N; ++k) ls.push_back(k);
    else
        ls = parse_list(kind);
    return ls;
}

// flags shared by every manifold-building subcommand
struct GridFlags {
    double spacing = 0.5;
    double radius = 5.0;
    double h = 0.0;
    double T0 = 1.0;
    double T_max = 10.0;
    double tol = 1e-8;

    void attach(CLI::App* sub) {
        sub->add_option("--spacing", spacing, "chart lattice spacing");
        sub->add_option("--radius", radius, "chart lattice radius");
        sub->add_option("--grid-step", h, "integrator step for the build (0 = automatic)");
        sub->add_option("--T0", T0, "pullback sweep length");
        sub->add_option("--T-max", T_max, "total pullback horizon");
        sub->add_option("--tol", tol, "sup-norm convergence tolerance");
    }

    GridSpec grid() const {
        GridSpec g;
        g.spacing = spacing;
        g.radius = radius;
        g.h = h;
        g.T0 = T0;
        return g;
    }
};

ManifoldGraph build_graph(const SystemSpec& sys, const ConeField& cf, const GridFlags& gf) {
    return build_manifold(sys, cf, Vector(0), gf.grid(), gf.T_max, gf.tol);
}

void write_manifold_artifacts(RunContext& ctx, const std::string& stem, const ManifoldGraph& M) {
    const std::string path = ctx.out + "/" + stem + ".csv";
    write_manifold_csv(M, path);
    ctx.artifacts.push_back(path);
}

void emit_sweep_csv(RunContext& ctx, const TransferFunction& tf, double nu0, double omega_max) {
    std::vector<std::vector<double>> rows;
    const int samples = 256;
    for (int k = 0; k <= samples; ++k) {
        const double w = omega_max * k / samples;
        rows.push_back({w, sv_max(tf.eval(Complex(-nu0, w)))});
    }
    emit_csv(ctx, "sweep.csv", {"omega", "gain"}, rows);
}

Json tangents_json(const TangentField& tf, bool pass) {
    Json js;
    js["kind"] = "tangents";
    js["pass"] = pass;
    js["max_fd_angle"] = tf.max_fd_angle;
    js["fd_tol"] = tf.fd_tol;
    js["max_cone_eig"] = tf.max_cone_eig;
    js["min_chart_sigma"] = tf.min_chart_sigma;
    js["T_used"] = tf.T_used;
    return js;
}

void run_tracking(RunContext& ctx, const std::string& stem, const SystemSpec& sys,
                  const ConeField& cf, const ManifoldGraph& M, const Vector& v0,
                  std::vector<double> schedule, double tol, double T, double step) {
    TrackingResult tr = central_project(sys, cf, M, Vector(0), v0, std::move(schedule), tol, step);
    const double h = step > 0.0 ? step : default_step(sys);
    ConditionReport rep = verify_tracking(sys, cf, tr, T, h);
    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < tr.thetas.size(); ++i) rows.push_back({tr.thetas[i], tr.residuals[i]});
    emit_csv(ctx, stem + ".csv", {"theta", "residual"}, rows);
    Json js;
    js["projection"] = tr.to_json();
    js["tracking"] = rep.to_json();
    emit_json(ctx, stem + ".json", js);
    note(ctx, rep);
}

void run_reduction(RunContext& ctx, const std::string& stem, const SystemSpec& sys,
                   const ConeField& cf, const ManifoldGraph& M, const Vector& zeta0, double T,
                   double h) {
    const InertialForm form = extract_inertial_form(sys, cf, M);
    const Trajectory red = integrate_reduced(form, zeta0, T, h);
    const Trajectory full = integrate(sys, Vector(0), M.value_at(zeta0), T, h);
    double sup = 0.0;
    const size_t m = std::min(red.states.size(), full.states.size());
    std::vector<std::vector<double>> rows;
    for (size_t k = 0; k < m; ++k) {
        const Vector proj = M.chart_coords(full.states[k]);
        sup = std::max(sup, (proj - red.states[k]).norm());
        std::vector<double> row = {static_cast<double>(k) * h};
        for (int i = 0; i < red.states[k].size(); ++i) row.push_back(red.states[k](i));
        for (int i = 0; i < proj.size(); ++i) row.push_back(proj(i));
        rows.push_back(row);
    }
    std::vector<std::string> header = {"t"};
    for (int i = 0; i < form.j(); ++i) header.push_back("zeta" + std::to_string(i));
    for (int i = 0; i < form.j(); ++i) header.push_back("proj" + std::to_string(i));
    emit_csv(ctx, stem + ".csv", header, rows);

    ConditionReport rep;
    rep.kind = "reduce";
    rep.nu0 = cf.nu0;
    rep.j = cf.j;
    const double budget = 10.0 * M.tol;
    rep.margin = budget - sup;
    rep.pass = rep.margin > 0.0;
    rep.diagnostics["sup_error"] = sup;
    rep.diagnostics["budget"] = budget;
    rep.diagnostics["T"] = T;
    emit_json(ctx, stem + ".json", rep.to_json());
    note(ctx, rep);
}

void run_analysis(RunContext& ctx, const std::string& stem, const SystemSpec& sys,
                  const ConeField& cf, const ManifoldGraph& M, const Vector& zeta0,
                  double T_transient, double T_obs, double h) {
    const InertialForm form = extract_inertial_form(sys, cf, M);
    const OrbitClassification orb = classify_omega_limit(form, zeta0, T_transient, T_obs, h);
    std::vector<std::vector<double>> rows;
    for (size_t k = 0; k < orb.samples.size(); ++k) {
        std::vector<double> row = {static_cast<double>(k)};
        for (int i = 0; i < orb.samples[k].size(); ++i) row.push_back(orb.samples[k](i));
        rows.push_back(row);
    }
    std::vector<std::string> header = {"index"};
    for (int i = 0; i < form.j(); ++i) header.push_back("zeta" + std::to_string(i));
    emit_csv(ctx, stem + ".csv", header, rows);
    Json js = orb.to_json();
    js["kind"] = "analyze";
    emit_json(ctx, stem + ".json", js);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quadratic cone field / inertial manifold toolkit"};
    app.require_subcommand(1);

    RunContext ctx;
    for (int i = 0; i < argc; ++i) ctx.command += (i ? " " : "") + std::string(argv[i]);
    ctx.started = iso_now();
    if (const char* env = std::getenv("IMTK_FIXTURES"); env && *env) ctx.fixtures = env;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", ctx.out, "output directory for reports and CSV data");
        sub->add_option("--seed", ctx.seed, "seed for all sampled checks");
        sub->add_option("--threads", ctx.threads, "worker threads (results are independent of N)");
        sub->add_option("--fixtures", ctx.fixtures, "directory for named system specs");
    };

    // --- check-freq ---------------------------------------------------------
    auto* freq = app.add_subcommand("check-freq", "frequency-domain certificate sweep");
    common(freq);
    std::string freq_system;
    double freq_nu0 = 0.0, freq_lambda = -1.0, freq_omega_max = 0.0;
    freq->add_option("--system", freq_system, "system name or spec path")->required();
    freq->add_option("--nu0", freq_nu0, "dichotomy rate")->required();
    freq->add_option("--lambda-lip", freq_lambda, "Lipschitz bound (default: declared)");
    freq->add_option("--omega-max", freq_omega_max, "sweep extent (0 = automatic)");
    freq->callback([&] {
        prepare(ctx);
        const SystemSpec sys = load_named(ctx, freq_system);
        const TransferFunction tf = sys.delay ? TransferFunction::from_delay(*sys.delay)
                                              : TransferFunction::rational(sys.A, sys.B, sys.C);
        const double Lambda = freq_lambda >= 0.0 ? freq_lambda : sys.lambda();
        const ConditionReport rep = frequency_sweep(tf, freq_nu0, Lambda, freq_omega_max);
        emit_sweep_csv(ctx, tf, freq_nu0, rep.diagnostics["omega_max"].get<double>());
        emit_json(ctx, "check_freq.json", rep.to_json());
        note(ctx, rep);
    });

    // --- gap ----------------------------------------------------------------
    auto* gap = app.add_subcommand("gap", "self-adjoint spectral gap certificate");
    common(gap);
    std::string gap_lambdas = "squares";
    int gap_N = 8, gap_j = 1;
    double gap_ab = 0.0, gap_lambda = 0.0;
    gap->add_option("--lambdas", gap_lambdas, "squares | linear | comma list");
    gap->add_option("--N", gap_N, "number of modes");
    gap->add_option("--j", gap_j, "split index")->required();
    gap->add_option("--alpha-beta", gap_ab, "nonlinearity exponent difference a-b");
    gap->add_option("--lambda-lip", gap_lambda, "Lipschitz bound")->required();
    gap->callback([&] {
        prepare(ctx);
        GalerkinSpec g;
        g.lambdas = spectrum(gap_lambdas, gap_N);
        g.N = static_cast<int>(g.lambdas.size());
        g.alpha = gap_ab;
        g.beta = 0.0;
        const ConditionReport rep = spectral_gap(g, gap_j, gap_lambda);
        std::vector<std::vector<double>> rows;
        for (int k = 0; k < g.N; ++k) rows.push_back({static_cast<double>(k + 1), g.lambdas[k]});
        emit_csv(ctx, "spectrum.csv", {"k", "lambda"}, rows);
        emit_json(ctx, "gap.json", rep.to_json());
        note(ctx, rep);
    });

    // --- small-delay --------------------------------------------------------
    auto* sd = app.add_subcommand("small-delay", "small-delay certificate");
    common(sd);
    double sd_tau = 0.0, sd_d0 = 0.0, sd_lambda = 1.0, sd_nu0 = 1.0;
    int sd_r = 1;
    sd->add_option("--tau", sd_tau, "delay length")->required();
    sd->add_option("--d0-norm", sd_d0, "norm of the instantaneous tap");
    sd->add_option("--r", sd_r, "number of delay taps");
    sd->add_option("--lambda-lip", sd_lambda, "Lipschitz bound")->required();
    sd->add_option("--nu0", sd_nu0, "dichotomy rate")->required();
    sd->callback([&] {
        prepare(ctx);
        DelaySpec spec;
        spec.tau = sd_tau;
        spec.d0_norm = sd_d0;
        const ConditionReport rep = small_delay_check(spec, sd_r, sd_lambda, sd_nu0);
        std::vector<std::vector<double>> rows;
        const double hi = std::max(2.0 * sd_tau, 1.0);
        for (int k = 0; k <= 100; ++k) {
            DelaySpec s = spec;
            s.tau = hi * k / 100;
            try {
                rows.push_back({s.tau, small_delay_check(s, sd_r, sd_lambda, sd_nu0).margin});
            } catch (const Error&) {
                break;  // contraction factor reached 1: the curve ends here
            }
        }
        emit_csv(ctx, "delay_margin.csv", {"tau", "margin"}, rows);
        emit_json(ctx, "small_delay.json", rep.to_json());
        note(ctx, rep);
    });

    // --- synth-p ------------------------------------------------------------
    auto* synth = app.add_subcommand("synth-p", "synthesize the quadratic cone certificate");
    common(synth);
    std::string synth_system;
    double synth_nu0 = 0.0, synth_delta = -1.0;
    synth->add_option("--system", synth_system)->required();
    synth->add_option("--nu0", synth_nu0)->required();
    synth->add_option("--delta", synth_delta, "explicit LMI margin (default: automatic)");
    synth->callback([&] {
        prepare(ctx);
        const SystemSpec sys = load_named(ctx, synth_system);
        SynthesisOptions opts;
        if (synth_delta >= 0.0) opts.delta_override = synth_delta;
        const ConeField cf = synthesize_P(sys, synth_nu0, opts);
        validate_cone_field(cf, ctx.seed);
        std::vector<std::vector<double>> rows;
        for (Eigen::Index i = 0; i < cf.P.rows(); ++i) {
            std::vector<double> row;
            for (Eigen::Index k = 0; k < cf.P.cols(); ++k) row.push_back(cf.P(i, k));
            rows.push_back(row);
        }
        std::vector<std::string> header;
        for (Eigen::Index k = 0; k < cf.P.cols(); ++k) header.push_back("p" + std::to_string(k));
        emit_csv(ctx, "P.csv", header, rows);
        Json js;
        js["kind"] = "synth-p";
        js["pass"] = true;
        js["margin"] = cf.delta_P;
        js["nu0"] = cf.nu0;
        js["j"] = cf.j;
        js["cone_field"] = cf.to_json();
        emit_json(ctx, "synth_p.json", js);
    });

    // --- verify-h3 ----------------------------------------------------------
    auto* h3 = app.add_subcommand("verify-h3", "sampled squeezing inequality suite");
    common(h3);
    std::string h3_system, h3_grid = "0.5,1,1.5,2";
    double h3_nu0 = 0.0, h3_step = 0.0;
    int h3_pairs = 100;
    h3->add_option("--system", h3_system)->required();
    h3->add_option("--nu0", h3_nu0)->required();
    h3->add_option("--pairs", h3_pairs, "random pair count");
    h3->add_option("--r-grid", h3_grid, "comma list of horizon checkpoints");
    h3->add_option("--step", h3_step, "integrator step (0 = automatic)");
    h3->callback([&] {
        prepare(ctx);
        const SystemSpec sys = load_named(ctx, h3_system);
        const ConeField cf = synthesize_P(sys, h3_nu0);
        const std::vector<double> grid = parse_list(h3_grid);
        const double step = h3_step > 0.0 ? h3_step : default_step(sys);
        const ConditionReport rep = verify_h3_discrete(sys, cf, h3_pairs, grid, step, ctx.seed);
        std::vector<std::vector<double>> rows;
        for (double r : grid) rows.push_back({r, rep.margin});
        emit_csv(ctx, "h3_grid.csv", {"r", "margin"}, rows);
        emit_json(ctx, "verify_h3.json", rep.to_json());
        note(ctx, rep);
    });

    // --- build-manifold -----------------------------------------------------
    auto* bm = app.add_subcommand("build-manifold", "graph-transform pullback build");
    common(bm);
    std::string bm_system;
    double bm_nu0 = 0.0;
    GridFlags bm_grid;
    bm->add_option("--system", bm_system)->required();
    bm->add_option("--nu0", bm_nu0)->required();
    bm_grid.attach(bm);
    bm->callback([&] {
        prepare(ctx);
        const SystemSpec sys = load_named(ctx, bm_system);
        const ConeField cf = synthesize_P(sys, bm_nu0);
        const ManifoldGraph M = build_graph(sys, cf, bm_grid);
        write_manifold_artifacts(ctx, "manifold", M);
        Json js = M.to_json();
        js["kind"] = "build-manifold";
        js["pass"] = M.converged;
        js["lipschitz_est"] = empirical_lipschitz(M);
        emit_json(ctx, "manifold.json", js);
        ctx.all_pass = ctx.all_pass && M.converged;
    });

    // --- tangents -----------------------------------------------------------
    auto* tg = app.add_subcommand("tangents", "tangent bundle by subspace iteration");
    common(tg);
    std::string tg_system;
    double tg_nu0 = 0.0, tg_T = 6.0;
    GridFlags tg_grid;
    tg->add_option("--system", tg_system)->required();
    tg->add_option("--nu0", tg_nu0)->required();
    tg->add_option("--T-iter", tg_T, "transport horizon for the iteration");
    tg_grid.attach(tg);
    tg->callback([&] {
        prepare(ctx);
        const SystemSpec sys = load_named(ctx, tg_system);
        const ConeField cf = synthesize_P(sys, tg_nu0);
        const ManifoldGraph M = build_graph(sys, cf, tg_grid);
        const TangentField tf = build_tangents(sys, cf, M, tg_T, tg_grid.h);
        std::vector<std::vector<double>> rows;
        for (int k = 0; k < M.nodes(); ++k) {
            std::vector<double> row;
            for (int i = 0; i < M.j(); ++i) row.push_back(M.zetas[k](i));
            for (Eigen::Index i = 0; i < tf.bases[k].rows(); ++i)
                row.push_back(tf.bases[k](i, 0));
            rows.push_back(row);
        }
        std::vector<std::string> header;
        for (int i = 0; i < M.j(); ++i) header.push_back("zeta" + std::to_string(i));
        for (int i = 0; i < M.n(); ++i) header.push_back("t" + std::to_string(i));
        emit_csv(ctx, "tangents.csv", header, rows);
        const bool pass = tf.max_fd_angle <= tf.fd_tol && tf.max_cone_eig < 0.0;
        emit_json(ctx, "tangents.json", tangents_json(tf, pass));
        ctx.all_pass = ctx.all_pass && pass;
    });

    // --- track --------------------------------------------------------------
    auto* tr = app.add_subcommand("track", "central projection and tracking verification");
    common(tr);
    std::string tr_system, tr_v0, tr_schedule;
    double tr_nu0 = 0.0, tr_T = 3.0, tr_tol = 1e-8, tr_step = 0.0;
    GridFlags tr_grid;
    tr->add_option("--system", tr_system)->required();
    tr->add_option("--nu0", tr_nu0)->required();
    tr->add_option("--v0", tr_v0, "initial state, comma separated")->required();
    tr->add_option("--schedule", tr_schedule, "projection horizons (default: automatic)");
    tr->add_option("--T", tr_T, "tracking verification horizon");
    tr->add_option("--proj-tol", tr_tol, "projection convergence tolerance");
    tr->add_option("--step", tr_step, "integrator step (0 = automatic)");
    tr_grid.attach(tr);
    tr->callback([&] {
        prepare(ctx);
        const SystemSpec sys = load_named(ctx, tr_system);
        const ConeField cf = synthesize_P(sys, tr_nu0);
        const ManifoldGraph M = build_graph(sys, cf, tr_grid);
        run_tracking(ctx, "track", sys, cf, M, parse_vec(tr_v0), parse_list(tr_schedule), tr_tol,
                     tr_T, tr_step);
    });

    // --- leaf ---------------------------------------------------------------
    auto* lf = app.add_subcommand("leaf", "sample a vertical leaf of the tracking foliation");
    common(lf);
    std::string lf_system, lf_v0;
    double lf_nu0 = 0.0, lf_vspacing = 0.5, lf_vradius = 1.0, lf_tol = 1e-8, lf_step = 0.0;
    GridFlags lf_grid;
    lf->add_option("--system", lf_system)->required();
    lf->add_option("--nu0", lf_nu0)->required();
    lf->add_option("--v0-star", lf_v0, "leaf base point on the manifold")->required();
    lf->add_option("--v-spacing", lf_vspacing, "vertical lattice spacing");
    lf->add_option("--v-radius", lf_vradius, "vertical lattice radius");
    lf->add_option("--leaf-tol", lf_tol, "per-node solve tolerance");
    lf->add_option("--step", lf_step, "integrator step (0 = automatic)");
    lf_grid.attach(lf);
    lf->callback([&] {
        prepare(ctx);
        const SystemSpec sys = load_named(ctx, lf_system);
        const ConeField cf = synthesize_P(sys, lf_nu0);
        const ManifoldGraph M = build_graph(sys, cf, lf_grid);
        GridSpec vg;
        vg.spacing = lf_vspacing;
        vg.radius = lf_vradius;
        const std::vector<Vector> leaf =
            sample_vertical_leaf(sys, cf, M, parse_vec(lf_v0), vg, lf_tol, lf_step);
        std::vector<std::vector<double>> rows;
        for (const auto& p : leaf) {
            std::vector<double> row;
            for (int i = 0; i < p.size(); ++i) row.push_back(p(i));
            rows.push_back(row);
        }
        std::vector<std::string> header;
        for (int i = 0; i < sys.n(); ++i) header.push_back("v" + std::to_string(i));
        emit_csv(ctx, "leaf.csv", header, rows);
        Json js;
        js["kind"] = "leaf";
        js["pass"] = true;
        js["count"] = leaf.size();
        js["v_spacing"] = lf_vspacing;
        js["v_radius"] = lf_vradius;
        emit_json(ctx, "leaf.json", js);
    });

    // --- reduce -------------------------------------------------------------
    auto* rd = app.add_subcommand("reduce", "inertial form extraction and semiconjugacy check");
    common(rd);
    std::string rd_system, rd_zeta0 = "0";
    double rd_nu0 = 0.0, rd_T = 2.0, rd_h = 1e-3;
    GridFlags rd_grid;
    rd->add_option("--system", rd_system)->required();
    rd->add_option("--nu0", rd_nu0)->required();
    rd->add_option("--zeta0", rd_zeta0, "chart start point, comma separated");
    rd->add_option("--T", rd_T, "comparison horizon");
    rd->add_option("--step-reduced", rd_h, "reduced integrator step");
    rd_grid.attach(rd);
    rd->callback([&] {
        prepare(ctx);
        const SystemSpec sys = load_named(ctx, rd_system);
        const ConeField cf = synthesize_P(sys, rd_nu0);
        const ManifoldGraph M = build_graph(sys, cf, rd_grid);
        run_reduction(ctx, "reduced", sys, cf, M, parse_vec(rd_zeta0), rd_T, rd_h);
    });

    // --- analyze ------------------------------------------------------------
    auto* an = app.add_subcommand("analyze", "omega-limit classification on the chart");
    common(an);
    std::string an_system, an_zeta0 = "0";
    double an_nu0 = 0.0, an_T_transient = 0.0, an_T_obs = 10.0, an_h = 1e-3;
    GridFlags an_grid;
    an->add_option("--system", an_system)->required();
    an->add_option("--nu0", an_nu0)->required();
    an->add_option("--zeta0", an_zeta0, "chart start point");
    an->add_option("--T-transient", an_T_transient, "discarded transient");
    an->add_option("--T-obs", an_T_obs, "observation window");
    an->add_option("--step-reduced", an_h, "reduced integrator step");
    an_grid.attach(an);
    an->callback([&] {
        prepare(ctx);
        const SystemSpec sys = load_named(ctx, an_system);
        const ConeField cf = synthesize_P(sys, an_nu0);
        const ManifoldGraph M = build_graph(sys, cf, an_grid);
        run_analysis(ctx, "orbit", sys, cf, M, parse_vec(an_zeta0), an_T_transient, an_T_obs,
                     an_h);
    });

    // --- robustness ---------------------------------------------------------
    auto* rb = app.add_subcommand("robustness", "manifold drift under nonlinearity scaling");
    common(rb);
    std::string rb_system, rb_eps = "0.1,0.01,0.001";
    double rb_nu0 = 0.0, rb_T_max = 14.0, rb_tol = 1e-6, rb_step = 0.0;
    GridFlags rb_grid;
    rb->add_option("--system", rb_system)->required();
    rb->add_option("--nu0", rb_nu0)->required();
    rb->add_option("--eps", rb_eps, "scaling factors, comma separated");
    rb->add_option("--T-build", rb_T_max, "pullback horizon per build");
    rb->add_option("--build-tol", rb_tol, "per-build convergence tolerance");
    rb->add_option("--step", rb_step, "integrator step (0 = automatic)");
    rb_grid.attach(rb);
    rb->callback([&] {
        prepare(ctx);
        const SystemSpec sys = load_named(ctx, rb_system);
        const SystemSpec base = scale_nonlinearity(sys, 0.0);
        const ConeField cf = synthesize_P(base, rb_nu0);
        GridFlags gf = rb_grid;
        gf.T_max = rb_T_max;
        gf.tol = rb_tol;
        const ManifoldGraph M = build_graph(base, cf, gf);
        const RobustnessResult rr =
            robustness_experiment(sys, cf, M, parse_list(rb_eps), rb_T_max, rb_tol, rb_step);
        std::vector<std::vector<double>> rows;
        for (size_t i = 0; i < rr.eps.size(); ++i) {
            const double ratio = rr.eps[i] > 0.0 ? rr.dist[i] / rr.eps[i] : 0.0;
            rows.push_back({rr.eps[i], rr.dist[i], ratio});
        }
        emit_csv(ctx, "robustness.csv", {"eps", "dist", "ratio"}, rows);
        const bool pass = rr.decreasing && rr.ratio_spread <= 3.0;
        Json js = rr.to_json();
        js["kind"] = "robustness";
        js["pass"] = pass;
        emit_json(ctx, "robustness.json", js);
        ctx.all_pass = ctx.all_pass && pass;
    });

    // --- verify-all ---------------------------------------------------------
    auto* va = app.add_subcommand("verify-all", "full certificate-to-dynamics pipeline");
    common(va);
    std::string va_system;
    double va_nu0 = 1.0;
    int va_pairs = 100;
    GridFlags va_grid;
    va->add_option("system", va_system, "system name or spec path")->required();
    va->add_option("--nu0", va_nu0, "dichotomy rate");
    va->add_option("--pairs", va_pairs, "sampled pairs for the cone suite");
    va_grid.attach(va);
    va->callback([&] {
        prepare(ctx);
        const SystemSpec sys = load_named(ctx, va_system);
        Json summary;
        summary["fixture"] = ctx.configs.back();
        summary["nu0"] = va_nu0;
        summary["seed"] = ctx.seed;
        Json steps = Json::array();
        auto record = [&](const std::string& name, const Json& body) {
            Json s;
            s["name"] = name;
            s["pass"] = body.value("pass", true);
            s["margin"] = body.value("margin", 0.0);
            steps.push_back(s);
        };

        const TransferFunction tf = sys.delay ? TransferFunction::from_delay(*sys.delay)
                                              : TransferFunction::rational(sys.A, sys.B, sys.C);
        const ConditionReport freq_rep = frequency_sweep(tf, va_nu0, sys.lambda());
        emit_json(ctx, "01_frequency.json", freq_rep.to_json());
        note(ctx, freq_rep);
        record("frequency", freq_rep.to_json());

        const ConeField cf = synthesize_P(sys, va_nu0);
        validate_cone_field(cf, ctx.seed);
        Json synth_js;
        synth_js["kind"] = "synth-p";
        synth_js["pass"] = true;
        synth_js["margin"] = cf.delta_P;
        synth_js["cone_field"] = cf.to_json();
        emit_json(ctx, "02_cone_field.json", synth_js);
        record("synth-p", synth_js);

        const ConditionReport h3_rep = verify_h3_discrete(sys, cf, va_pairs, {0.5, 1.0, 1.5, 2.0},
                                                          default_step(sys), ctx.seed);
        emit_json(ctx, "03_h3.json", h3_rep.to_json());
        note(ctx, h3_rep);
        record("verify-h3", h3_rep.to_json());

        const ConditionReport inv_rep =
            check_cone_invariance(sys, cf, va_pairs, 2.0, 0.5, ctx.seed);
        emit_json(ctx, "04_cone_invariance.json", inv_rep.to_json());
        note(ctx, inv_rep);
        record("cone-invariance", inv_rep.to_json());

        const ConditionReport sq_rep = check_squeezing(sys, cf, va_pairs, 2.0, ctx.seed);
        emit_json(ctx, "05_squeezing.json", sq_rep.to_json());
        note(ctx, sq_rep);
        record("squeezing", sq_rep.to_json());

        const double kappa = std::clamp(cf.kappa0, 0.05, 0.95);
        const ConditionReport rom_rep = romanov_check(cf, kappa, 10000, ctx.seed);
        emit_json(ctx, "06_romanov.json", rom_rep.to_json());
        note(ctx, rom_rep);
        record("romanov", rom_rep.to_json());

        const ManifoldGraph M = build_graph(sys, cf, va_grid);
        write_manifold_artifacts(ctx, "manifold", M);
        Json mjs = M.to_json();
        mjs["kind"] = "build-manifold";
        mjs["pass"] = M.converged;
        mjs["lipschitz_est"] = empirical_lipschitz(M);
        emit_json(ctx, "07_manifold.json", mjs);
        ctx.all_pass = ctx.all_pass && M.converged;
        record("build-manifold", mjs);

        const TangentField tfield = build_tangents(sys, cf, M, 6.0, va_grid.h);
        const bool tg_pass = tfield.max_fd_angle <= tfield.fd_tol && tfield.max_cone_eig < 0.0;
        const Json tg_js = tangents_json(tfield, tg_pass);
        emit_json(ctx, "08_tangents.json", tg_js);
        ctx.all_pass = ctx.all_pass && tg_pass;
        record("tangents", tg_js);

        Vector v0 = M.anchor;
        if (M.n() > M.j())
            v0 += 0.5 * cf.Eplus.col(0);
        else
            v0 += 0.3 * M.basis.col(0);
        run_tracking(ctx, "09_tracking", sys, cf, M, v0, {}, 1e-8, 3.0, 0.0);
        record("track", parse_json_file(ctx.out + "/09_tracking.json")["tracking"]);

        Vector zeta0 = M.center;
        zeta0(0) += 0.3;
        run_reduction(ctx, "10_reduction", sys, cf, M, zeta0, 2.0, 1e-3);
        record("reduce", parse_json_file(ctx.out + "/10_reduction.json"));

        run_analysis(ctx, "11_classification", sys, cf, M, M.center, 0.0, 5.0, 1e-3);
        record("analyze", parse_json_file(ctx.out + "/11_classification.json"));

        summary["steps"] = steps;
        summary["all_pass"] = ctx.all_pass;
        emit_json(ctx, "verify_all.json", summary);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return finish(ctx);
}
