// Acceptance battery: one criterion per invocation, selected by argv[1].
// Prints exactly one "PASS criterion-N <label>" / "FAIL criterion-N <label>"
// line; failure details follow indented.  Exit 0 iff the criterion holds.
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "imtk/cone.hpp"
#include "imtk/conditions.hpp"
#include "imtk/dynamics.hpp"
#include "imtk/errors.hpp"
#include "imtk/flow.hpp"
#include "imtk/lyapunov.hpp"
#include "imtk/manifold.hpp"
#include "imtk/system.hpp"
#include "imtk/tracking.hpp"

using namespace imtk;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) { return std::string(IMTK_FIXTURE_DIR) + "/" + name; }

const Vector kNoDrive = Vector(0);

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

// collects failed expectations; the criterion passes iff none accumulate
struct Checker {
    std::vector<std::string> failures;
    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream os;
            os << what << ": got " << got << ", want " << want << " +/- " << tol;
            failures.push_back(os.str());
        }
    }
    void below(double got, double bound, const std::string& what) {
        if (!(got <= bound)) {
            std::ostringstream os;
            os << what << ": got " << got << " > " << bound;
            failures.push_back(os.str());
        }
    }
};

// saddle shell with a quadratic cross-feed of strength eps
SystemSpec coupled(double eps) {
    SystemSpec sys;
    sys.name = "coupled";
    sys.A = Matrix::Zero(2, 2);
    sys.A(0, 0) = 1.0;
    sys.A(1, 1) = -3.0;
    sys.B = Matrix::Zero(2, 1);
    sys.B(1, 0) = 1.0;
    sys.C = Matrix::Ones(1, 2);
    sys.F.kind = NonlinKind::PolyClamp;
    sys.F.coeffs = {0.0, 0.0, eps};
    sys.F.clamp = 6.0;
    sys.F.lambda = 12.0 * eps;
    return sys;
}

// slow/fast stable shell carrying a one-dimensional chart
SystemSpec slow_fast() {
    SystemSpec sys;
    sys.name = "slowfast";
    sys.A = Matrix::Zero(2, 2);
    sys.A(0, 0) = -1.0;
    sys.A(1, 1) = -3.0;
    sys.B = Matrix::Zero(2, 1);
    sys.C = Matrix::Zero(1, 2);
    return sys;
}

SystemSpec with_periodic_drive(SystemSpec sys) {
    sys.forcing.mode = ForcingMode::Periodic;
    sys.forcing.sigma = 1.0;
    sys.forcing.w0 = Vector::Zero(2);
    sys.forcing.wc = Matrix::Zero(2, 1);
    sys.forcing.wc(0, 0) = 0.3;
    sys.forcing.wc(1, 0) = 0.2;
    sys.forcing.ws = Matrix::Zero(2, 1);
    sys.forcing.ws(0, 0) = 0.1;
    return sys;
}

// scalar contraction under a two-frequency torus drive
SystemSpec torus_driven() {
    SystemSpec sys;
    sys.name = "torus";
    sys.A = -Matrix::Identity(1, 1);
    sys.B = Matrix::Identity(1, 1);
    sys.C = Matrix::Identity(1, 1);
    sys.F.kind = NonlinKind::Sigmoid;
    sys.F.scale = 0.3;
    sys.F.gain = 1.0;
    sys.F.lambda = 0.3;
    sys.forcing.mode = ForcingMode::Quasiperiodic;
    sys.forcing.omega = vec({1.0, std::sqrt(2.0)});
    sys.forcing.w0 = Vector::Zero(1);
    sys.forcing.wc = Matrix::Zero(1, 2);
    sys.forcing.wc(0, 0) = 0.5;
    sys.forcing.wc(0, 1) = 0.3;
    sys.forcing.ws = Matrix::Zero(1, 2);
    sys.forcing.ws(0, 0) = 0.1;
    return sys;
}

// conservative Lipschitz constant of the time-1 flow map
double flow_lip(const SystemSpec& sys) {
    return std::exp(sys.A.norm() + sys.lambda() * sys.B.norm() * sys.C.norm());
}

// ---------------------------------------------------------------------------
// criterion 1: quadratic eigenvalue ladder, explicit gap thresholds
void criterion1(Checker& c) {
    GalerkinSpec g;
    g.N = 8;
    g.lambdas.clear();
    for (int k = 1; k <= 8; ++k) g.lambdas.push_back(static_cast<double>(k) * k);

    // equal exponents: plain gap (16 - 9)/2 against Lambda = 3
    g.alpha = 0.0;
    g.beta = 0.0;
    ConditionReport rep = spectral_gap(g, 3, 3.0);
    c.expect(rep.pass, "equal-exponent gap should certify");
    c.near(rep.margin, 0.5, 1e-12, "equal-exponent margin");
    c.near(rep.nu0, 12.5, 1e-12, "equal-exponent nu0");

    // exponent difference 1/2: weights sqrt(lambda), gap exactly one
    g.alpha = 0.5;
    g.beta = 0.0;
    ConditionReport rep2 = spectral_gap(g, 3, 0.5);
    c.expect(rep2.pass, "sqrt-weighted gap should certify");
    c.near(rep2.diagnostics["lhs"].get<double>(), 1.0, 1e-12, "sqrt-weighted lhs");
    c.near(rep2.nu0, 12.0, 1e-12, "sqrt-weighted nu0");
}

// criterion 2: scalar resolvent supremum against the closed form 1/|nu0 - 2|
void criterion2(Checker& c) {
    SystemSpec sc = load_system(fixture("sys_scalar.json"));
    TransferFunction tf = TransferFunction::rational(sc.A, sc.B, sc.C);
    for (double nu0 : {0.0, 1.0}) {
        SweepResult sw = sweep_supremum(tf, nu0);
        std::ostringstream os;
        os << "sweep supremum at nu0 = " << nu0;
        c.near(sw.sup, 1.0 / std::abs(nu0 - 2.0), 1e-6, os.str());
    }
}

// criterion 3: saddle synthesis lands on the analytic Riccati solution
void criterion3(Checker& c) {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    SynthesisOptions opts;
    opts.lambda_override = 1.0;
    opts.delta_override = 0.0;  // marginal oracle run: closed-form per-axis roots
    ConeField cf = synthesize_P(lin2, 1.0, opts);
    const double s3 = std::sqrt(3.0);
    Matrix Pstar = Matrix::Zero(2, 2);
    Pstar(0, 0) = -(2.0 + s3);
    Pstar(1, 1) = 2.0 - s3;
    c.below((cf.P - Pstar).cwiseAbs().maxCoeff(), 1e-8, "entrywise distance to diag(-(2+sqrt3), 2-sqrt3)");

    Eigen::SelfAdjointEigenSolver<Matrix> es(cf.P);
    int neg = 0, pos = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        if (es.eigenvalues()(i) < 0.0) ++neg;
        if (es.eigenvalues()(i) > 0.0) ++pos;
    }
    c.expect(neg == 1 && pos == 1, "inertia should be (1, 1)");

    // dissipation block [[An'P + PAn + Lam^2 C'C, PB], [B'P, -I]] <= 0
    const int n = 2, m = static_cast<int>(lin2.B.cols());
    Matrix An = lin2.A + cf.nu0 * Matrix::Identity(n, n);
    Matrix L = Matrix::Zero(n + m, n + m);
    L.topLeftCorner(n, n) = An.transpose() * cf.P + cf.P * An + lin2.C.transpose() * lin2.C;
    L.topRightCorner(n, m) = cf.P * lin2.B;
    L.bottomLeftCorner(m, n) = lin2.B.transpose() * cf.P;
    L.bottomRightCorner(m, m) = -Matrix::Identity(m, m);
    Eigen::SelfAdjointEigenSolver<Matrix> el(L);
    c.below(el.eigenvalues().maxCoeff(), 1e-8, "largest eigenvalue of the dissipation block");
}

// criterion 4: sampled squeezing over trajectory pairs, plus an adversarial run
void criterion4(Checker& c) {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    std::vector<double> grid{0.0, 0.5, 1.0, 1.5, 2.0};
    ConditionReport rep = verify_h3_discrete(lin2, cf, 100, grid, 1e-3);
    c.expect(rep.pass, "saddle pairs should squeeze along the certificate");
    c.expect(rep.diagnostics["checked"].get<int>() == 100 * 15, "all pair/time combinations checked");

    SystemSpec ode3 = load_system(fixture("sys_ode3.json"));
    ConeField cf3 = synthesize_P(ode3, 2.0);
    ConditionReport rep3 = verify_h3_discrete(ode3, cf3, 100, {0.0, 1.0, 2.0}, 1e-3);
    c.expect(rep3.pass, "rotating pairs should squeeze along the certificate");

    // inflating the decay rate must break the sampled inequality
    ConeField hot = cf;
    hot.delta_P *= 10.0;
    ConditionReport reph = verify_h3_discrete(lin2, hot, 100, grid, 1e-3);
    c.expect(!reph.pass, "a tenfold decay rate should be refuted");
    c.expect(reph.diagnostics["violations"].size() >= 1, "refutation should list violations");
}

// criterion 5: bulk cone algebra (1e5 random triples) and flow invariance
void criterion5(Checker& c) {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    SystemSpec ode3 = load_system(fixture("sys_ode3.json"));
    ConeField cf3 = synthesize_P(ode3, 2.0);

    for (const ConeField* f : {&cf, &cf3}) {
        double kappa = std::clamp(f->kappa0, 0.05, 0.95);
        ConditionReport rom = romanov_check(*f, kappa, 100000);
        c.expect(rom.pass, "interpolation inequality should hold on random triples");
        c.below(rom.diagnostics["worst_gap"].get<double>(), 1e-10, "worst triple gap");
    }

    c.expect(check_cone_invariance(lin2, cf, 100, 3.0, 0.0).pass, "saddle cone invariance");
    c.expect(check_squeezing(lin2, cf, 100, 3.0).pass, "saddle squeezing");
    c.expect(check_cone_invariance(ode3, cf3, 30, 2.0, 0.0).pass, "rotating cone invariance");
    c.expect(check_squeezing(ode3, cf3, 25, 2.0).pass, "rotating squeezing");
}

// criterion 6: graphs reproduce the flat manifold and its weak perturbations
void criterion6(Checker& c) {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    GridSpec gs;
    ManifoldGraph M = build_manifold(lin2, cf, kNoDrive, gs, 10.0, 1e-8);
    c.expect(M.converged, "flat build should converge");
    double sup = 0.0;
    for (int k = 0; k < M.nodes(); ++k)
        sup = std::max(sup, (M.values[k] - M.basis * M.zetas[k]).norm());
    c.below(sup, 1e-6, "distance to the flat graph");
    c.below(M.lipschitz_est, 1.1 * clip_constant(cf, flow_lip(lin2), -3.0, 1.0, 0.0),
            "flat graph Lipschitz estimate");

    for (double eps : {1e-2, 1e-3}) {
        SystemSpec sysc = coupled(eps);
        ConeField cfc = synthesize_P(sysc, 1.0);
        ManifoldGraph Mc = build_manifold(sysc, cfc, kNoDrive, gs, 14.0, 1e-6);
        std::ostringstream os;
        os << "coupled eps = " << eps;
        c.expect(Mc.converged, os.str() + ": build should converge");
        double dist = 0.0;
        for (int k = 0; k < Mc.nodes(); ++k) dist = std::max(dist, std::abs(Mc.values[k](1)));
        c.below(dist, 10.0 * eps, os.str() + ": vertical drift");
        c.below(Mc.lipschitz_est, 1.1 * clip_constant(cfc, flow_lip(sysc), -3.0, 1.0, 0.0),
                os.str() + ": Lipschitz estimate");
    }
}

// criterion 7: tangent planes agree with finite differences of the graph
void criterion7(Checker& c) {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    GridSpec gs;
    ManifoldGraph M = build_manifold(lin2, cf, kNoDrive, gs, 10.0, 1e-8);
    c.expect(M.converged, "saddle build should converge");
    TangentField tf = build_tangents(lin2, cf, M, 10.0);
    c.below(tf.max_fd_angle, std::max(1e-3, 5.0 * gs.spacing * gs.spacing),
            "saddle tangent/finite-difference angle");
    c.below(tf.max_cone_eig, 0.0, "saddle tangent cone eigenvalue");

    SystemSpec ode3 = load_system(fixture("sys_ode3.json"));
    ConeField cf3 = synthesize_P(ode3, 2.0);
    GridSpec gs3;
    gs3.spacing = 0.25;
    gs3.radius = 2.0;
    gs3.h = 5e-3;
    ManifoldGraph M3 = build_manifold(ode3, cf3, kNoDrive, gs3, 8.0, 1e-4);
    c.expect(M3.converged, "rotating build should converge");
    TangentField tf3 = build_tangents(ode3, cf3, M3, 10.0, 5e-3);
    c.below(tf3.max_fd_angle, std::max(1e-3, 5.0 * gs3.spacing * gs3.spacing),
            "rotating tangent/finite-difference angle");
    c.below(tf3.max_cone_eig, 0.0, "rotating tangent cone eigenvalue");
}

// criterion 8: tracked orbits contract at the certified exponential rate
void criterion8(Checker& c) {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    GridSpec gs;
    ManifoldGraph M = build_manifold(lin2, cf, kNoDrive, gs, 10.0, 1e-8);
    Vector v0 = M.value_at(vec({0.5})) + 0.4 * cf.Eplus.col(0);
    TrackingResult tr = central_project(lin2, cf, M, kNoDrive, v0, {}, 1e-8, 1e-3);
    c.expect(tr.converged, "saddle projection should converge");
    ConditionReport rep = verify_tracking(lin2, cf, tr, 3.0, 1e-3);
    c.expect(rep.pass, "saddle tracking certificate");
    c.below(tr.exponent, -0.85 * cf.nu0, "saddle tracking exponent");
    c.near(tr.exponent, -3.0, 0.75, "saddle tracking rate vs the fast eigenvalue");

    SystemSpec ode3 = load_system(fixture("sys_ode3.json"));
    ConeField cf3 = synthesize_P(ode3, 2.0);
    GridSpec gs3;
    gs3.spacing = 0.25;
    gs3.radius = 2.0;
    gs3.h = 5e-3;
    ManifoldGraph M3 = build_manifold(ode3, cf3, kNoDrive, gs3, 8.0, 1e-4);
    const double tol = 5e-4;
    const double step = 5e-3;
    Vector w0 = M3.value_at(vec({0.5, 0.25})) + 0.4 * cf3.Eplus.col(0);
    TrackingResult tr3 = central_project(ode3, cf3, M3, kNoDrive, w0, {}, tol, step);
    c.expect(tr3.converged, "rotating projection should converge");
    ConditionReport rep3 = verify_tracking(ode3, cf3, tr3, 3.0, step);
    c.expect(rep3.pass, "rotating tracking certificate");
    c.below(tr3.exponent, -0.85 * cf3.nu0, "rotating tracking exponent");

    // projecting the projection stays put; schedules do not matter
    TrackingResult again = central_project(ode3, cf3, M3, kNoDrive, tr3.v0_star, {}, tol, step);
    c.expect(again.converged, "re-projection should converge");
    c.below((again.v0_star - tr3.v0_star).norm(), 2.0 * tol, "re-projection drift");
    std::vector<double> odd;
    for (int k = 3; k <= 39; k += 3) odd.push_back(k / cf3.nu0);
    TrackingResult trb = central_project(ode3, cf3, M3, kNoDrive, w0, odd, tol, step);
    c.expect(trb.converged, "odd-schedule projection should converge");
    c.below((trb.v0_star - tr3.v0_star).norm(), 2.0 * tol, "schedule dependence");
}

// criterion 9: the chart flow reproduces the full flow from a graph point
void criterion9(Checker& c) {
    SystemSpec ode3 = load_system(fixture("sys_ode3.json"));
    ConeField cf = synthesize_P(ode3, 2.0);
    GridSpec gs;
    gs.spacing = 0.25;
    gs.radius = 2.0;
    gs.h = 5e-3;
    const double build_tol = 1e-4;
    ManifoldGraph M = build_manifold(ode3, cf, kNoDrive, gs, 8.0, build_tol);
    c.expect(M.converged, "rotating build should converge");
    InertialForm form = extract_inertial_form(ode3, cf, M);

    Vector z0 = vec({-0.5, 0.75});
    Vector p = M.value_at(z0);
    Trajectory full = integrate(ode3, kNoDrive, p, 10.0, 5e-3);
    Trajectory red = integrate_reduced(form, z0, 10.0, 5e-3);
    c.expect(full.states.size() == red.states.size(), "sample counts should line up");
    double worst = 0.0;
    size_t m = std::min(full.states.size(), red.states.size());
    for (size_t k = 0; k < m; ++k)
        worst = std::max(worst, (M.chart_coords(full.states[k]) - red.states[k]).norm());
    c.below(worst, 10.0 * build_tol, "chart/full flow mismatch over [0, 10]");

    // running backwards then forwards returns to the start
    Vector mid = integrate_reduced(form, z0, -1.0, 5e-3).back();
    Vector back = integrate_reduced(form, mid, 1.0, 5e-3).back();
    c.below((back - z0).norm(), 1e-6, "backward/forward identity");
}

// criterion 10: delay margins match the closed form
void criterion10(Checker& c) {
    // with no static feedback the optimal-rate margin vanishes at tau = 1/e
    auto margin_at = [](double tau) {
        DelaySpec d;
        d.tau = tau;
        d.d0_norm = 0.0;
        return small_delay_check(d, 1, 1.0, 1.0 / tau).margin;
    };
    double lo = 0.2, hi = 0.6;
    c.expect(margin_at(lo) > 0.0 && margin_at(hi) < 0.0, "threshold bracket");
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (margin_at(mid) > 0.0 ? lo : hi) = mid;
    }
    c.near(0.5 * (lo + hi), std::exp(-1.0), 1e-12, "critical delay");

    DelaySpec d;
    d.tau = 0.1;
    d.d0_norm = 0.2;
    ConditionReport rep = small_delay_check(d, 1, 1.0, 5.0);
    c.expect(rep.pass, "worked example should certify");
    c.near(rep.diagnostics["kappa"].get<double>(), 0.3297, 1e-4, "worked example kappa");
    c.near(rep.diagnostics["lhs"].get<double>(), 0.4919, 1e-4, "worked example lhs");
}

// criterion 11: omega limits are classified and forced responses certified
void criterion11(Checker& c) {
    // supercritical oscillator: unit cycle, angular speed 2, period pi
    auto field = [](const Vector& z) {
        const double rho2 = std::min(z.squaredNorm(), 4.0);
        return vec({z(0) - 2.0 * z(1) - z(0) * rho2, 2.0 * z(0) + z(1) - z(1) * rho2});
    };
    InertialForm form = synthetic_form(2, 0.05, 1.6, field);
    OrbitClassification orb = classify_omega_limit(form, vec({0.3, 0.0}), 12.0, 10.0, 1e-3);
    c.expect(orb.verdict == "periodic", "oscillator verdict should be periodic, got " + orb.verdict);
    c.below(std::abs(orb.period - M_PI) / M_PI, 0.01, "relative period error");
    c.below(orb.return_residual, 1e-8, "shooting residual");

    // periodically driven stable shell: iterates converge onto the response
    SystemSpec sysu = slow_fast();
    SystemSpec sysf = with_periodic_drive(sysu);
    ConeField cf = synthesize_P(sysu, 1.8);
    GridSpec gs;
    ManifoldGraph M = build_manifold(sysu, cf, kNoDrive, gs, 10.0, 1e-8);
    ConditionReport rep = check_convergence_periodic(sysf, cf, M, vec({2.0, 1.0}), 1.0, 30.0, 1e-3);
    c.expect(rep.pass, "periodic response convergence");
    c.below(rep.diagnostics["ratio"].get<double>(), 1e-4, "tail to initial ratio");

    // torus-driven scalar contraction: pairwise contraction at j = 0
    SystemSpec tor = torus_driven();
    ConeField cf0 = synthesize_P(tor, 0.5);
    c.expect(cf0.j == 0, "torus certificate should have an empty chart");
    std::vector<Vector> qs = {vec({0.0, 0.0}), vec({0.3, 0.7})};
    std::vector<std::pair<Vector, Vector>> pairs = {{vec({2.0}), vec({-1.0})},
                                                    {vec({0.5}), vec({0.5})}};
    ConditionReport rep0 = check_ap_stability(tor, cf0, qs, pairs, 6.0, 1e-3);
    c.expect(rep0.pass, "quasiperiodic contraction");
}

// criterion 12: manifold drift scales linearly with the coupling strength
void criterion12(Checker& c) {
    SystemSpec shape = coupled(1.0);
    SystemSpec base = scale_nonlinearity(shape, 0.0);
    ConeField cf = synthesize_P(base, 1.0);
    GridSpec gs;
    ManifoldGraph M = build_manifold(base, cf, kNoDrive, gs, 14.0, 1e-6);
    c.expect(M.converged, "uncoupled base build should converge");

    RobustnessResult rr = robustness_experiment(shape, cf, M, {0.1, 0.01, 0.001}, 14.0, 1e-6);
    c.expect(rr.dist.size() == 3, "one distance per coupling strength");
    for (size_t i = 0; i < rr.dist.size(); ++i) {
        std::ostringstream os;
        os << "drift at eps = " << rr.eps[i] << " should be positive";
        c.expect(rr.dist[i] > 0.0, os.str());
    }
    c.expect(rr.decreasing, "drift should shrink with the coupling");
    c.expect(rr.ratio_spread >= 1.0, "ratio spread should be reported");
    c.below(rr.ratio_spread, 3.0, "drift/eps ratio spread");
}

// criterion 13: identical seeds produce byte-identical reports
void criterion13(Checker& c) {
    unsetenv("IMTK_OUT");
    unsetenv("IMTK_FIXTURES");
    fs::path base = fs::temp_directory_path();
    fs::path da = base / "imtk-acceptance-a";
    fs::path db = base / "imtk-acceptance-b";
    std::error_code ec;
    fs::remove_all(da, ec);
    fs::remove_all(db, ec);

    auto run = [&](const fs::path& out) {
        std::string cmd = std::string(IMTK_CLI_PATH) + " verify-all SYS-LIN2 --seed 42 --fixtures " +
                          IMTK_FIXTURE_DIR + " --out " + out.string() + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    c.expect(run(da) == 0, "first run should exit cleanly");
    c.expect(run(db) == 0, "second run should exit cleanly");

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    };
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(da))
        if (entry.is_regular_file()) names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    c.expect(names.size() >= 12, "the pipeline should emit its full report set");

    int compared = 0;
    for (const std::string& name : names) {
        if (name == "run_manifest.json") continue;  // carries wall-clock timestamps
        c.expect(fs::exists(db / name), name + " should exist in both runs");
        if (!fs::exists(db / name)) continue;
        if (slurp(da / name) != slurp(db / name)) c.expect(false, name + " differs between runs");
        ++compared;
    }
    c.expect(compared >= 10, "enough artifacts compared");
    c.expect(fs::exists(da / "run_manifest.json"), "run manifest should be written");

    fs::remove_all(da, ec);
    fs::remove_all(db, ec);
}

struct Entry {
    const char* label;
    std::function<void(Checker&)> fn;
};

const std::vector<Entry>& table() {
    static const std::vector<Entry> t = {
        {"spectral gap thresholds are exact", criterion1},
        {"scalar transfer supremum matches the closed form", criterion2},
        {"saddle certificate recovers the analytic matrix", criterion3},
        {"trajectory squeezing holds for random pairs", criterion4},
        {"cone algebra and invariance hold in bulk", criterion5},
        {"graphs reproduce flat and weakly coupled manifolds", criterion6},
        {"tangent fields agree with finite differences", criterion7},
        {"tracked orbits contract at the certified rate", criterion8},
        {"chart flow reproduces the full flow", criterion9},
        {"delay margins match the closed form", criterion10},
        {"omega limits are classified correctly", criterion11},
        {"manifold drift scales linearly with the coupling", criterion12},
        {"reports are reproducible byte for byte", criterion13},
    };
    return t;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: acceptance <criterion 1.." << table().size() << ">\n";
        return 2;
    }
    int idx = std::atoi(argv[1]);
    if (idx < 1 || idx > static_cast<int>(table().size())) {
        std::cerr << "unknown criterion " << argv[1] << "\n";
        return 2;
    }
    const Entry& entry = table()[static_cast<size_t>(idx - 1)];
    Checker c;
    try {
        entry.fn(c);
    } catch (const std::exception& e) {
        c.expect(false, std::string("unexpected exception: ") + e.what());
    }
    const bool ok = c.failures.empty();
    std::cout << (ok ? "PASS" : "FAIL") << " criterion-" << idx << " " << entry.label << "\n";
    for (const std::string& f : c.failures) std::cout << "  " << f << "\n";
    return ok ? 0 : 1;
}
