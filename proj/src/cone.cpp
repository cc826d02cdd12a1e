#include "imtk/cone.hpp"

#include <algorithm>
#include <cmath>

#include "imtk/flow.hpp"
#include "imtk/rng.hpp"

namespace imtk {

namespace {

constexpr double kZeroBand = 1e-12;  // relative width of the "zero" classification band

// Difference vector with V(d) <= 0: minus-cone part plus a vertical part scaled
// to stay inside. `up` in [0,1) is the fraction of the boundary to use.
Vector sample_in_cone(const ConeField& cf, Rng& rng, double up) {
    const int n = static_cast<int>(cf.P.rows());
    if (cf.j == 0) return Vector::Zero(n);
    Vector d = cf.Eminus * rng.gauss_vec(cf.j);
    if (cf.j < n) {
        Vector p = cf.Eplus * rng.gauss_vec(n - cf.j);
        double vp = p.dot(cf.P * p);
        double vd = d.dot(cf.P * d);
        if (vp > 0.0 && vd < 0.0) d += std::sqrt(-up * up * vd / vp) * p;
    }
    return d;
}

// Vertical difference vector with V(d) > 0.
Vector sample_vertical(const ConeField& cf, Rng& rng) {
    const int n = static_cast<int>(cf.P.rows());
    if (cf.j == n) return Vector::Zero(n);
    return cf.Eplus * rng.gauss_vec(n - cf.j);
}

// Time-reversed copy; only valid without external forcing.
SystemSpec reversed(const SystemSpec& sys) {
    SystemSpec r = sys;
    r.A = -sys.A;
    r.B = -sys.B;
    return r;
}

double trapezoid(const std::vector<double>& f, double h, int lo, int hi) {
    double s = 0.0;
    for (int k = lo; k < hi; ++k) s += 0.5 * (f[k] + f[k + 1]);
    return s * h;
}

// (h/12) sum |f_{k+1} - 2 f_k + f_{k-1}|: composite trapezoid error estimate.
double trapezoid_error(const std::vector<double>& f, double h, int lo, int hi) {
    double s = 0.0;
    for (int k = std::max(lo, 1); k + 1 <= hi && k + 1 < static_cast<int>(f.size()); ++k)
        s += std::abs(f[k + 1] - 2.0 * f[k] + f[k - 1]);
    return s * h / 12.0;
}

}  // namespace

double v_value(const ConeField& cf, const Vector& v) {
    if (v.size() != cf.P.rows()) throw DimensionError("v_value: vector length != field dimension");
    return v.dot(cf.P * v);
}

PseudoOrderWitness classify_pair(const ConeField& cf, const Vector& v1, const Vector& v2) {
    PseudoOrderWitness w;
    w.v1 = v1;
    w.v2 = v2;
    Vector d = v1 - v2;
    w.value = v_value(cf, d);
    double tol = kZeroBand * cf.M_P * d.squaredNorm();
    if (w.value < -tol)
        w.classification = "strict-negative";
    else if (w.value > tol)
        w.classification = "positive";
    else
        w.classification = "zero";
    return w;
}

ConditionReport check_cone_invariance(const SystemSpec& sys, const ConeField& cf, int pairs,
                                      double horizon, double tau_V, std::uint64_t seed) {
    ConditionReport rep;
    rep.kind = "cone-invariance";
    rep.nu0 = cf.nu0;
    rep.j = cf.j;

    Rng rng(seed);
    const int n = sys.n();
    const double h = default_step(sys);
    Json violations = Json::array();
    int skipped = 0, checked = 0;
    double margin = 1e300;

    for (int k = 0; k < pairs; ++k) {
        Vector v1 = rng.ball(n, 5.0);
        Vector d0 = sample_in_cone(cf, rng, rng.uniform(0.05, 0.999));
        if (d0.norm() < 1e-12) {
            ++skipped;
            continue;
        }
        d0 *= rng.uniform(0.1, 1.0) / d0.norm();
        Trajectory t1 = integrate(sys, Vector(0), v1, horizon, h);
        Trajectory t2 = integrate(sys, Vector(0), Vector(v1 + d0), horizon, h);
        ++checked;
        for (int s = 0; s <= t1.steps(); ++s) {
            double t = s * t1.h;
            if (t < tau_V) continue;
            Vector d = t2.states[s] - t1.states[s];
            double n2 = d.squaredNorm();
            if (n2 < 1e-280) continue;
            double V = d.dot(cf.P * d);
            if (V >= 0.0) {
                if (violations.size() < 16)
                    violations.push_back(
                        Json{{"pair", k}, {"t", t}, {"V", V}, {"norm2", n2}});
                margin = std::min(margin, -V / (cf.M_P * n2));
            } else {
                margin = std::min(margin, -V / (cf.M_P * n2));
            }
        }
    }
    rep.pass = violations.empty();
    rep.margin = checked == 0 ? 0.0 : margin;
    rep.diagnostics["pairs"] = pairs;
    rep.diagnostics["checked"] = checked;
    rep.diagnostics["skipped"] = skipped;
    rep.diagnostics["tau_V"] = tau_V;
    rep.diagnostics["horizon"] = horizon;
    rep.diagnostics["violations"] = violations;
    return rep;
}

ConditionReport check_squeezing(const SystemSpec& sys, const ConeField& cf, int pairs,
                                double horizon, std::uint64_t seed) {
    ConditionReport rep;
    rep.kind = "squeezing";
    rep.nu0 = cf.nu0;
    rep.j = cf.j;
    if (cf.delta_P <= 0.0) throw Error("check_squeezing: field has no squeezing rate");

    Rng rng(seed);
    const int n = sys.n();
    const double h = default_step(sys);
    const double tau_S = 0.0;
    const double L_A = operator_norm2(sys.A) +
                       sys.F.analytic_lipschitz() * operator_norm2(sys.B) * operator_norm2(sys.C);
    const double L = std::exp(L_A * (tau_S + 1.0));
    const double factor = L * L * std::exp(2.0 * cf.nu0 * (tau_S + 1.0)) / cf.delta_P;
    const bool backward_ok = sys.forcing.driving_dim() == 0;
    const SystemSpec sysR = reversed(sys);

    Json violations = Json::array();
    int skipped = 0, checked = 0;
    double int_margin = 1e300, exp_ratio = 0.0;

    for (int k = 0; k < pairs; ++k) {
        // Pairs are anchored at the horizon: the difference there is vertical,
        // and initial states are pulled back through the reversed flow, so the
        // forward pair meets V(delta(T)) >= 0 by construction.
        Vector v1, v2;
        if (backward_ok) {
            Vector vT = rng.ball(n, 2.0);
            Vector dT = sample_vertical(cf, rng);
            if (dT.norm() < 1e-12) {
                ++skipped;
                continue;
            }
            dT *= rng.uniform(1e-3, 1e-2) / dT.norm();
            try {
                v1 = flow_state(sysR, Vector(0), vT, horizon, h);
                v2 = flow_state(sysR, Vector(0), Vector(vT + dT), horizon, h);
            } catch (const NonFinite&) {
                ++skipped;
                continue;
            }
        } else {
            v1 = rng.ball(n, 5.0);
            Vector d0 = sample_vertical(cf, rng);
            if (d0.norm() < 1e-12) {
                ++skipped;
                continue;
            }
            v2 = v1 + d0 * (rng.uniform(0.1, 1.0) / d0.norm());
        }
        Vector d0 = v2 - v1;
        double V0 = d0.dot(cf.P * d0);
        if (V0 <= 0.0) {
            ++skipped;
            continue;
        }
        Trajectory t1 = integrate(sys, Vector(0), v1, horizon, h);
        Trajectory t2 = integrate(sys, Vector(0), v2, horizon, h);
        int m = t1.steps();
        Vector dT = t2.states[m] - t1.states[m];
        double VT = dT.dot(cf.P * dT);
        if (VT < -kZeroBand * cf.M_P * dT.squaredNorm()) {
            ++skipped;  // fell into the cone before the horizon
            continue;
        }
        ++checked;

        std::vector<double> f(m + 1);
        for (int s = 0; s <= m; ++s) {
            Vector d = t2.states[s] - t1.states[s];
            f[s] = std::exp(2.0 * cf.nu0 * s * t1.h) * d.squaredNorm();
        }
        double quad = trapezoid(f, t1.h, 0, m);
        double eps = trapezoid_error(f, t1.h, 0, m) + 1e-9 * (1.0 + std::abs(V0));
        double im = V0 / cf.delta_P - quad;
        int_margin = std::min(int_margin, im);
        if (im < -eps && violations.size() < 16)
            violations.push_back(Json{{"pair", k}, {"check", "integral"}, {"margin", im}});

        for (int s = 0; s <= m; ++s) {
            double t = s * t1.h;
            if (t < tau_S + 1.0) continue;
            Vector d = t2.states[s] - t1.states[s];
            double bound = factor * V0 * std::exp(-2.0 * cf.nu0 * t);
            double ratio = d.squaredNorm() / std::max(bound, 1e-300);
            exp_ratio = std::max(exp_ratio, ratio);
            if (d.squaredNorm() > bound * (1.0 + 1e-6) + 1e-12 && violations.size() < 16)
                violations.push_back(
                    Json{{"pair", k}, {"check", "exponential"}, {"t", t}, {"ratio", ratio}});
        }
    }
    rep.pass = violations.empty();
    rep.margin = checked == 0 ? 0.0 : int_margin;
    rep.diagnostics["pairs"] = pairs;
    rep.diagnostics["checked"] = checked;
    rep.diagnostics["skipped"] = skipped;
    rep.diagnostics["horizon"] = horizon;
    rep.diagnostics["lipschitz"] = L;
    rep.diagnostics["tau_S"] = tau_S;
    rep.diagnostics["worst_exp_ratio"] = exp_ratio;
    rep.diagnostics["violations"] = violations;
    return rep;
}

ConditionReport romanov_check(const ConeField& cf, double kappa, int triples,
                              std::uint64_t seed) {
    if (kappa >= 1.0 || kappa < 0.0)
        throw KappaExceedsOne("romanov_check: kappa must lie in [0,1)");
    ConditionReport rep;
    rep.kind = "romanov";
    rep.nu0 = cf.nu0;
    rep.j = cf.j;

    Rng rng(seed);
    const int n = static_cast<int>(cf.P.rows());
    const int np = n - cf.j;
    const double C = 1.0 / ((1.0 - kappa) * (1.0 - kappa));
    Json violations = Json::array();
    double worst = -1e300;

    for (int k = 0; k < triples; ++k) {
        Vector w3 = rng.gauss_vec(n);
        Vector d = Vector::Zero(n);
        double s = 0.0;
        bool degenerate = (k % 97 == 96);
        if (cf.j > 0 && !degenerate) {
            d = cf.Eminus * rng.gauss_vec(cf.j);
            s = -d.dot(cf.P * d);
        }
        Vector p1 = Vector::Zero(n), p2 = Vector::Zero(n);
        if (np > 0 && !degenerate) {
            Vector dir = cf.Eplus * rng.gauss_vec(np);
            double vp = dir.dot(cf.P * dir);
            double target = s > 0.0 ? s * rng.uniform(1.0, 4.0) : rng.uniform(0.25, 4.0);
            if (vp > 0.0) p1 = std::sqrt(target / vp) * dir;
            if (s > 0.0) {
                Vector dir2 = cf.Eplus * rng.gauss_vec(np);
                double vp2 = dir2.dot(cf.P * dir2);
                double t2 = kappa * kappa * s * rng.uniform(0.0, 1.0);
                if (vp2 > 0.0 && t2 > 0.0) p2 = std::sqrt(t2 / vp2) * dir2;
            }
        }
        Vector w1 = w3 + d + p1;
        Vector w2 = w3 + d + p2;

        Matrix Iplus = Matrix::Identity(n, n) - cf.Pi;
        Vector q13 = Iplus * (w1 - w3);
        Vector q12 = Iplus * (w1 - w2);
        double lhs = q13.dot(cf.P * q13);
        double rhs = C * q12.dot(cf.P * q12);
        double gap = lhs - rhs;
        worst = std::max(worst, gap);
        if (gap > 1e-10 * std::max({1.0, std::abs(lhs), std::abs(rhs)}) &&
            violations.size() < 16)
            violations.push_back(Json{{"triple", k}, {"lhs", lhs}, {"rhs", rhs}});
    }
    rep.pass = violations.empty();
    rep.margin = -worst;
    rep.diagnostics["triples"] = triples;
    rep.diagnostics["kappa"] = kappa;
    rep.diagnostics["C_kappa"] = C;
    rep.diagnostics["worst_gap"] = worst;
    rep.diagnostics["violations"] = violations;
    return rep;
}

ConditionReport verify_h3_discrete(const SystemSpec& sys, const ConeField& cf, int pairs,
                                   const std::vector<double>& r_grid, double step,
                                   std::uint64_t seed, double radius) {
    if (r_grid.empty()) throw DimensionError("verify_h3_discrete: empty time grid");
    ConditionReport rep;
    rep.kind = "h3-discrete";
    rep.nu0 = cf.nu0;
    rep.j = cf.j;

    std::vector<double> grid = r_grid;
    std::sort(grid.begin(), grid.end());
    std::vector<int> idx(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        idx[i] = static_cast<int>(std::llround(grid[i] / step));
        if (idx[i] < 0) throw DimensionError("verify_h3_discrete: negative grid time");
    }
    const double T = idx.back() * step;

    Rng rng(seed);
    const int n = sys.n();
    Json violations = Json::array();
    double margin = 1e300;
    int checked = 0;

    for (int k = 0; k < pairs; ++k) {
        Vector v1 = rng.ball(n, radius);
        Vector d0 = rng.ball(n, 0.5 * radius);
        if (d0.norm() < 1e-12) continue;
        Trajectory t1 = integrate(sys, Vector(0), v1, T, step);
        Trajectory t2 = integrate(sys, Vector(0), Vector(v1 + d0), T, step);
        int m = t1.steps();
        std::vector<double> f(m + 1), ev(m + 1);
        for (int s = 0; s <= m; ++s) {
            Vector d = t2.states[s] - t1.states[s];
            double w = std::exp(2.0 * cf.nu0 * s * step);
            f[s] = w * d.squaredNorm();
            ev[s] = w * d.dot(cf.P * d);
        }
        std::vector<double> cum(m + 1, 0.0);
        for (int s = 0; s < m; ++s) cum[s + 1] = cum[s] + 0.5 * step * (f[s] + f[s + 1]);
        for (size_t a = 0; a < idx.size(); ++a)
            for (size_t b = a; b < idx.size(); ++b) {
                int il = std::min(idx[a], m), ir = std::min(idx[b], m);
                if (ir - il < 0 || (grid[b] - grid[a]) < cf.tau_P) continue;
                ++checked;
                double quad = cum[ir] - cum[il];
                double lhs = ev[ir] - ev[il] + cf.delta_P * quad;
                double eps = cf.delta_P * trapezoid_error(f, step, il, ir) +
                             1e-9 * (1.0 + std::abs(ev[il]) + std::abs(ev[ir]));
                margin = std::min(margin, eps - lhs);
                if (lhs > eps && violations.size() < 16)
                    violations.push_back(Json{{"pair", k},
                                              {"l", grid[a]},
                                              {"r", grid[b]},
                                              {"lhs", lhs},
                                              {"eps", eps}});
            }
    }
    rep.pass = violations.empty();
    rep.margin = checked == 0 ? 0.0 : margin;
    rep.diagnostics["pairs"] = pairs;
    rep.diagnostics["checked"] = checked;
    rep.diagnostics["step"] = step;
    rep.diagnostics["grid"] = Json(grid);
    rep.diagnostics["violations"] = violations;
    return rep;
}

}  // namespace imtk
