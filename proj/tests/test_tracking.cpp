#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "imtk/errors.hpp"
#include "imtk/tracking.hpp"

using namespace imtk;

namespace {

std::string fixture(const std::string& name) { return std::string(IMTK_FIXTURE_DIR) + "/" + name; }

const Vector kNoDrive = Vector(0);

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

}  // namespace

TEST_CASE("reduced field of the linear graph") {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    GridSpec gs;
    ManifoldGraph M = build_manifold(lin2, cf, kNoDrive, gs, 10.0, 1e-8);
    InertialForm form = extract_inertial_form(lin2, cf, M);
    CHECK(form.j() == 1);
    CHECK(form.nodes() == 21);

    // the reduced field is the unstable eigenvalue: f(zeta) = zeta
    CHECK(form.f_at(vec({1.0}))(0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(form.f_at(vec({0.3}))(0) == doctest::Approx(0.3).epsilon(1e-8));
    CHECK(form.f_at(vec({-2.7}))(0) == doctest::Approx(-2.7).epsilon(1e-8));
    // linear extrapolation past the last node
    CHECK(form.f_at(vec({5.5}))(0) == doctest::Approx(5.5).epsilon(1e-8));
    // equilibrium anchor pins the field to zero
    CHECK(form.f_at(M.center).norm() <= 1e-6);
}

TEST_CASE("reduced integration follows the scalar exponential") {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    GridSpec gs;
    ManifoldGraph M = build_manifold(lin2, cf, kNoDrive, gs, 10.0, 1e-8);
    InertialForm form = extract_inertial_form(lin2, cf, M);

    Trajectory tr = integrate_reduced(form, vec({1.0}), 1.0, 1e-3);
    CHECK(tr.states.size() == 1001);
    CHECK(tr.back()(0) == doctest::Approx(std::exp(1.0)).epsilon(1e-9));

    // backward then forward unit time is the identity
    Vector mid = integrate_reduced(form, vec({1.0}), -1.0, 1e-3).back();
    CHECK(mid(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    Vector round = integrate_reduced(form, mid, 1.0, 1e-3).back();
    CHECK(std::abs(round(0) - 1.0) <= 1e-6);

    CHECK_THROWS_AS(integrate_reduced(form, vec({4.0}), 1.0, 1e-3), LeftGrid);
    CHECK_THROWS_AS(integrate_reduced(form, vec({1.0}), 1.0, 0.0), DimensionError);
    CHECK_THROWS_AS(integrate_reduced(form, vec({1.0, 2.0}), 1.0, 1e-3), DimensionError);
}

TEST_CASE("central projection on the linear fixture") {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    GridSpec gs;
    ManifoldGraph M = build_manifold(lin2, cf, kNoDrive, gs, 10.0, 1e-8);

    // a purely vertical query lands on the origin
    TrackingResult tr = central_project(lin2, cf, M, kNoDrive, vec({0.0, 1.0}));
    CHECK(tr.converged);
    CHECK(tr.thetas.size() == 2);
    CHECK(tr.thetas[1] == doctest::Approx(2.0));
    CHECK(tr.residuals[0] == doctest::Approx(1.0));
    CHECK(tr.v0_star.norm() <= 1e-8);

    // a point already on the graph is fixed at the first theta
    Vector on = M.value_at(vec({0.5}));
    TrackingResult tr2 = central_project(lin2, cf, M, kNoDrive, on);
    CHECK(tr2.converged);
    CHECK(tr2.thetas.size() == 2);
    CHECK((tr2.v0_star - on).norm() <= 1e-8);

    // off the chart box, or swept out of it by the forward flow
    CHECK_THROWS_AS(central_project(lin2, cf, M, kNoDrive, vec({20.0, 0.0})), LeftGrid);
    CHECK_THROWS_AS(central_project(lin2, cf, M, kNoDrive, vec({4.5, 0.0})), LeftGrid);

    // an unreachable tolerance exhausts the schedule
    CHECK_THROWS_AS(central_project(lin2, cf, M, kNoDrive, vec({0.0, 1.0}), {0.5}, 0.0),
                    NoConvergence);

    // the default schedule needs a positive rate
    ConeField bad = cf;
    bad.nu0 = -1.0;
    CHECK_THROWS_AS(central_project(lin2, bad, M, kNoDrive, vec({0.0, 1.0})), DimensionError);
}

TEST_CASE("tracking verification fits the vertical decay rate") {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    GridSpec gs;
    ManifoldGraph M = build_manifold(lin2, cf, kNoDrive, gs, 10.0, 1e-8);

    TrackingResult tr = central_project(lin2, cf, M, kNoDrive, vec({0.0, 1.0}));
    ConditionReport rep = verify_tracking(lin2, cf, tr, 4.0, 1e-3);
    CHECK(rep.kind == "tracking");
    CHECK(rep.pass);
    CHECK(tr.exponent == doctest::Approx(-3.0).epsilon(1e-6));
    CHECK(rep.margin == doctest::Approx(2.15).epsilon(1e-6));
    CHECK(tr.R == doctest::Approx(1.0).epsilon(1e-6));

    // identical endpoints short-circuit the fit
    TrackingResult same;
    same.v0 = M.value_at(vec({0.3}));
    same.v0_star = same.v0;
    same.converged = true;
    ConditionReport rep2 = verify_tracking(lin2, cf, same, 4.0, 1e-3);
    CHECK(rep2.pass);
    CHECK(rep2.diagnostics.value("degenerate", false));
    CHECK(rep2.margin == doctest::Approx(0.85));
}

TEST_CASE("central projection on the rotating fixture") {
    SystemSpec ode3 = load_system(fixture("sys_ode3.json"));
    ConeField cf = synthesize_P(ode3, 2.0);
    GridSpec gs;
    gs.spacing = 0.25;
    gs.radius = 2.0;
    gs.h = 5e-3;
    const double build_tol = 1e-4;
    ManifoldGraph M = build_manifold(ode3, cf, kNoDrive, gs, 8.0, build_tol);
    REQUIRE(M.converged);
    InertialForm form = extract_inertial_form(ode3, cf, M);
    CHECK(form.f_at(M.center).norm() <= 1e-6);

    const double tol = 5e-4;
    const double step = 5e-3;
    Vector v0 = M.value_at(vec({0.5, 0.25})) + 0.4 * cf.Eplus.col(0);
    TrackingResult tr = central_project(ode3, cf, M, kNoDrive, v0, {}, tol, step);
    CHECK(tr.converged);

    ConditionReport rep = verify_tracking(ode3, cf, tr, 3.0, step);
    CHECK(rep.pass);
    CHECK(tr.exponent <= -1.7);
    CHECK(tr.exponent >= -6.0);

    // projecting the projection stays put
    TrackingResult again = central_project(ode3, cf, M, kNoDrive, tr.v0_star, {}, tol, step);
    CHECK(again.converged);
    CHECK((again.v0_star - tr.v0_star).norm() <= tol);

    // a different theta schedule lands on the same point
    std::vector<double> odd;
    for (int k = 3; k <= 39; k += 3) odd.push_back(k / cf.nu0);
    TrackingResult trb = central_project(ode3, cf, M, kNoDrive, v0, odd, tol, step);
    CHECK(trb.converged);
    CHECK((trb.v0_star - tr.v0_star).norm() <= 2.0 * tol);

    // chart of the full flow tracks the reduced flow from a graph point
    Vector z0 = vec({-0.5, 0.75});
    Vector p = M.value_at(z0);
    Trajectory full = integrate(ode3, kNoDrive, p, 5.0, step);
    Trajectory red = integrate_reduced(form, z0, 5.0, step);
    REQUIRE(full.states.size() == red.states.size());
    double worst = 0.0;
    for (size_t k = 0; k < full.states.size(); ++k)
        worst = std::max(worst, (M.chart_coords(full.states[k]) - red.states[k]).norm());
    CHECK(worst <= 10.0 * build_tol);
}

TEST_CASE("vertical leaf of the linear fixture") {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    GridSpec gs;
    ManifoldGraph M = build_manifold(lin2, cf, kNoDrive, gs, 10.0, 1e-8);

    GridSpec vg;
    vg.spacing = 1.0;
    vg.radius = 2.0;
    std::vector<Vector> leaf = sample_vertical_leaf(lin2, cf, M, Vector::Zero(2), vg, 1e-8);
    REQUIRE(leaf.size() == 5);
    for (int k = 0; k < 5; ++k) {
        CHECK(std::abs(leaf[k](0)) <= 1e-6);  // the leaf is the vertical axis
        CHECK(std::abs(leaf[k](1) - (k - 2)) <= 1e-6);
        // forward differences stay on the nonnegative side of V
        Vector d = leaf[k];
        for (double t : {0.0, 0.5, 1.0, 2.0}) {
            Vector dt = std::exp(-3.0 * t) * d;
            CHECK(dt.dot(cf.P * dt) >= -1e-12);
        }
    }
    CHECK(leaf[2].norm() <= 1e-6);  // the base point itself sits on the leaf

    // the sampling grid only covers low-dimensional verticals
    SystemSpec wide;
    wide.name = "lin6";
    wide.A = Matrix::Zero(6, 6);
    const double diag[6] = {1.0, 0.5, -2.2, -3.3, -4.4, -5.5};
    for (int i = 0; i < 6; ++i) wide.A(i, i) = diag[i];
    wide.B = Matrix::Zero(6, 1);
    wide.C = Matrix::Zero(1, 6);
    ConeField cf6 = synthesize_P(wide, 1.0);
    REQUIRE(cf6.j == 2);
    GridSpec tiny;
    tiny.radius = 0.0;
    ManifoldGraph M6 = build_manifold(wide, cf6, kNoDrive, tiny, 4.0, 1e-8);
    CHECK_THROWS_AS(sample_vertical_leaf(wide, cf6, M6, Vector::Zero(6), vg, 1e-8),
                    DimensionError);
}

TEST_CASE("tracking result serialization") {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    GridSpec gs;
    ManifoldGraph M = build_manifold(lin2, cf, kNoDrive, gs, 10.0, 1e-8);
    TrackingResult tr = central_project(lin2, cf, M, kNoDrive, vec({0.0, 1.0}));
    verify_tracking(lin2, cf, tr, 4.0, 1e-3);

    Json js = tr.to_json();
    CHECK(js["converged"].get<bool>());
    CHECK(js["thetas"].size() == tr.thetas.size());
    CHECK(js["residuals"].size() == tr.residuals.size());
    CHECK(js["v0"].size() == 2);
    CHECK(js["exponent"].get<double>() == tr.exponent);
    CHECK(js.dump() == tr.to_json().dump());
}
