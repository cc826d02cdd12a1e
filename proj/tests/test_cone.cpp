#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "imtk/cone.hpp"
#include "imtk/errors.hpp"
#include "imtk/lyapunov.hpp"
#include "imtk/rng.hpp"

using namespace imtk;

namespace {

std::string fixture(const std::string& name) { return std::string(IMTK_FIXTURE_DIR) + "/" + name; }

// Cone field assembled by hand from a diagonal P whose entries are ascending.
ConeField diag_field(const Vector& diag, int j) {
    const int n = static_cast<int>(diag.size());
    ConeField cf;
    cf.P = Matrix(diag.asDiagonal());
    cf.nu0 = 1.0;
    cf.delta_P = 1.0;
    cf.tau_P = 0.0;
    cf.j = j;
    Matrix I = Matrix::Identity(n, n);
    cf.Eminus = I.leftCols(j);
    cf.Eplus = I.rightCols(n - j);
    cf.Pi = cf.Eminus * cf.Eminus.transpose();
    cf.C_q = j > 0 ? std::sqrt(-diag(j - 1)) : 1e300;
    cf.M_P = diag.cwiseAbs().maxCoeff();
    cf.M_Pi = j > 0 ? 1.0 : 0.0;
    cf.kappa0 = 0.5;
    return cf;
}

// Random indefinite quadratic form with an orthonormal eigenbasis.
ConeField random_field(int n, int j, Rng& rng) {
    Matrix G(n, n);
    for (int r = 0; r < n; ++r) G.row(r) = rng.gauss_vec(n).transpose();
    Matrix Q = orthonormalize(G);
    Vector d(n);
    for (int i = 0; i < j; ++i) d(i) = -rng.uniform(0.5, 3.0);
    for (int i = j; i < n; ++i) d(i) = rng.uniform(0.5, 3.0);
    ConeField cf;
    cf.P = Q * d.asDiagonal() * Q.transpose();
    cf.P = 0.5 * (cf.P + Matrix(cf.P.transpose()));
    cf.nu0 = 1.0;
    cf.delta_P = 1.0;
    cf.tau_P = 0.0;
    cf.j = j;
    cf.Eminus = Q.leftCols(j);
    cf.Eplus = Q.rightCols(n - j);
    cf.Pi = cf.Eminus * cf.Eminus.transpose();
    cf.C_q = std::sqrt(d.head(j).cwiseAbs().minCoeff());
    cf.M_P = d.cwiseAbs().maxCoeff();
    cf.M_Pi = 1.0;
    cf.kappa0 = 0.5;
    return cf;
}

}  // namespace

TEST_CASE("form values and pair classification") {
    ConeField c1 = diag_field(Vector{{-1.0, 1.0}}, 1);
    CHECK(v_value(c1, Vector::Zero(2)) == 0.0);
    CHECK(v_value(c1, Vector{{1.0, 0.0}}) == doctest::Approx(-1.0).epsilon(1e-14));

    const double s3 = std::sqrt(3.0);
    ConeField c2 = diag_field(Vector{{-(2.0 + s3), 2.0 - s3}}, 1);
    CHECK(v_value(c2, Vector{{1.0, 1.0}}) == doctest::Approx(-2.0 * s3).epsilon(1e-12));

    CHECK_THROWS_AS(v_value(c1, Vector::Zero(3)), DimensionError);

    PseudoOrderWitness w = classify_pair(c1, Vector{{1.0, 0.0}}, Vector::Zero(2));
    CHECK(w.classification == "strict-negative");
    CHECK(w.value == doctest::Approx(-1.0));
    CHECK(classify_pair(c1, Vector{{0.0, 1.0}}, Vector::Zero(2)).classification == "positive");
    PseudoOrderWitness z = classify_pair(c1, Vector{{0.3, -0.2}}, Vector{{0.3, -0.2}});
    CHECK(z.classification == "zero");
    CHECK(z.value == 0.0);
}

TEST_CASE("quadratic scaling and projector injectivity") {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    Rng rng(7);
    for (int k = 0; k < 200; ++k) {
        Vector v = rng.gauss_vec(2);
        double a = rng.uniform(-3.0, 3.0);
        double lhs = v_value(cf, a * v);
        double rhs = a * a * v_value(cf, v);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
    // pairs inside the cone keep distinct base projections
    for (int k = 0; k < 500; ++k) {
        Vector d = cf.Eminus * rng.gauss_vec(1);
        Vector p = cf.Eplus * rng.gauss_vec(1);
        double vd = v_value(cf, d), vp = v_value(cf, p);
        double u = rng.uniform(0.0, 1.0);
        if (vp > 0.0) d += std::sqrt(-u * u * vd / vp) * p;
        REQUIRE(v_value(cf, d) <= 1e-12);
        CHECK((cf.Pi * d).squaredNorm() >= -v_value(cf, d) / cf.M_P - 1e-12);
    }
}

TEST_CASE("cone invariance holds on certified fields and fails on a flipped one") {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);

    ConditionReport rep = check_cone_invariance(lin2, cf, 60, 3.0, 0.0);
    CHECK(rep.pass);
    CHECK(rep.kind == "cone-invariance");
    CHECK(rep.diagnostics["checked"].get<int>() == 60);
    CHECK(rep.diagnostics["violations"].empty());
    CHECK(rep.margin > 0.0);

    SystemSpec ode3 = load_system(fixture("sys_ode3.json"));
    ConeField cf3 = synthesize_P(ode3, 2.0);
    ConditionReport rep3 = check_cone_invariance(ode3, cf3, 30, 2.0, 0.0);
    CHECK(rep3.pass);
    CHECK(rep3.diagnostics["checked"].get<int>() == 30);

    // positive definite P: the cone degenerates to the origin, nothing to check
    SystemSpec scalar = load_system(fixture("sys_scalar.json"));
    ConeField cf0 = synthesize_P(scalar, 0.5);
    ConditionReport rep0 = check_cone_invariance(scalar, cf0, 10, 1.0, 0.0);
    CHECK(rep0.pass);
    CHECK(rep0.diagnostics["checked"].get<int>() == 0);
    CHECK(rep0.diagnostics["skipped"].get<int>() == 10);

    // sign-flipped form: sampled pairs leave the flipped cone along the way
    ConeField bad = cf;
    bad.P = -cf.P;
    std::swap(bad.Eminus, bad.Eplus);
    bad.Pi = bad.Eminus * bad.Eminus.transpose();
    ConditionReport repb = check_cone_invariance(lin2, bad, 40, 3.0, 0.0);
    CHECK(!repb.pass);
    CHECK(repb.diagnostics["violations"].size() >= 1);
    CHECK(repb.margin < 0.0);
}

TEST_CASE("squeezing bounds hold for pairs anchored on the vertical side") {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    ConditionReport rep = check_squeezing(lin2, cf, 40, 3.0);
    CHECK(rep.pass);
    CHECK(rep.kind == "squeezing");
    CHECK(rep.diagnostics["checked"].get<int>() >= 35);
    CHECK(rep.margin > 0.0);
    CHECK(rep.diagnostics["worst_exp_ratio"].get<double>() < 1.0);

    SystemSpec ode3 = load_system(fixture("sys_ode3.json"));
    ConeField cf3 = synthesize_P(ode3, 2.0);
    ConditionReport rep3 = check_squeezing(ode3, cf3, 25, 2.0);
    CHECK(rep3.pass);
    CHECK(rep3.diagnostics["checked"].get<int>() >= 20);
    CHECK(rep3.diagnostics["worst_exp_ratio"].get<double>() < 1.0);

    ConeField broken = cf;
    broken.delta_P = 0.0;
    CHECK_THROWS_AS(check_squeezing(lin2, broken, 5, 1.0), Error);
}

TEST_CASE("contraction comparison on the vertical part") {
    // P = diag(1, -1): vertical axis is the first coordinate
    ConeField cf;
    cf.P = Matrix{{1.0, 0.0}, {0.0, -1.0}};
    cf.nu0 = 1.0;
    cf.delta_P = 1.0;
    cf.tau_P = 0.0;
    cf.j = 1;
    cf.Eminus = Matrix{{0.0}, {1.0}};
    cf.Eplus = Matrix{{1.0}, {0.0}};
    cf.Pi = cf.Eminus * cf.Eminus.transpose();
    cf.C_q = 1.0;
    cf.M_P = 1.0;
    cf.M_Pi = 1.0;
    cf.kappa0 = 0.5;

    Vector w1{{1.0, 0.5}}, w2{{0.2, 0.5}}, w3{{0.0, 0.0}};
    const double kappa = 0.4;
    CHECK(classify_pair(cf, w1, w3).classification == "positive");
    CHECK(std::abs(cf.V_kappa(w2 - w3, kappa)) <= 1e-15);
    Matrix Ip = Matrix::Identity(2, 2) - cf.Pi;
    double lhs = v_value(cf, Ip * (w1 - w3));
    double rhs = v_value(cf, Ip * (w1 - w2)) / ((1.0 - kappa) * (1.0 - kappa));
    CHECK(lhs == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rhs == doctest::Approx(0.64 / 0.36).epsilon(1e-14));
    CHECK(lhs <= rhs);

    ConditionReport rep = romanov_check(cf, kappa, 5000);
    CHECK(rep.pass);
    CHECK(rep.diagnostics["worst_gap"].get<double>() <= 1e-10);
    CHECK(rep.diagnostics["C_kappa"].get<double>() ==
          doctest::Approx(1.0 / 0.36).epsilon(1e-14));

    ConditionReport rep0 = romanov_check(cf, 0.0, 2000);
    CHECK(rep0.pass);

    CHECK_THROWS_AS(romanov_check(cf, 1.0, 10), KappaExceedsOne);
    CHECK_THROWS_AS(romanov_check(cf, -0.1, 10), KappaExceedsOne);

    Rng rng(11);
    for (int f = 0; f < 10; ++f) {
        int n = 2 + f % 4;
        int j = 1 + f % (n - 1);
        ConeField rf = random_field(n, j, rng);
        double k = rng.uniform(0.05, 0.9);
        ConditionReport rr = romanov_check(rf, k, 2000, 100 + f);
        CHECK(rr.pass);
        CHECK(rr.diagnostics["worst_gap"].get<double>() <= 1e-10);
    }
}

TEST_CASE("discrete squeezing certificate on trajectories") {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    std::vector<double> grid{0.0, 0.5, 1.0, 1.5, 2.0};

    ConditionReport rep = verify_h3_discrete(lin2, cf, 100, grid, 1e-3);
    CHECK(rep.pass);
    CHECK(rep.kind == "h3-discrete");
    CHECK(rep.diagnostics["checked"].get<int>() == 100 * 15);
    CHECK(rep.margin >= 0.0);

    // inflating the decay rate of the certificate must break it
    ConeField hot = cf;
    hot.delta_P *= 10.0;
    ConditionReport reph = verify_h3_discrete(lin2, hot, 100, grid, 1e-3);
    CHECK(!reph.pass);
    CHECK(reph.diagnostics["violations"].size() >= 1);

    SystemSpec ode3 = load_system(fixture("sys_ode3.json"));
    ConeField cf3 = synthesize_P(ode3, 2.0);
    ConditionReport rep3 = verify_h3_discrete(ode3, cf3, 20, {0.0, 1.0, 2.0}, 1e-3);
    CHECK(rep3.pass);

    CHECK_THROWS_AS(verify_h3_discrete(lin2, cf, 1, {}, 1e-3), DimensionError);
}

TEST_CASE("reports are deterministic in the seed") {
    SystemSpec lin2 = load_system(fixture("sys_lin2.json"));
    ConeField cf = synthesize_P(lin2, 1.0);
    std::string a = dump_json(romanov_check(cf, 0.3, 500, 5).to_json());
    std::string b = dump_json(romanov_check(cf, 0.3, 500, 5).to_json());
    CHECK(a == b);
    std::string c = dump_json(check_cone_invariance(lin2, cf, 10, 1.0, 0.0, 5).to_json());
    std::string d = dump_json(check_cone_invariance(lin2, cf, 10, 1.0, 0.0, 5).to_json());
    CHECK(c == d);
}
