#include "imtk/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace imtk {

namespace {

constexpr double kStrict = 1e-9;
constexpr double kMarginCap = 1e300;

double capped(double x) { return std::clamp(x, -kMarginCap, kMarginCap); }

// round a horizon up to a whole number of steps so forward full flows and
// backward reduced flows cover exactly the same interval
double whole_steps(double T, double h) { return std::ceil(T / h - 1e-12) * h; }

}  // namespace

Json TrackingResult::to_json() const {
    Json js;
    js["v0"] = vector_to_json(v0);
    js["v0_star"] = vector_to_json(v0_star);
    js["thetas"] = thetas;
    js["residuals"] = residuals;
    js["exponent"] = exponent;
    js["R"] = R;
    js["converged"] = converged;
    return js;
}

bool InertialForm::in_box(const Vector& c, double slack) const {
    for (int i = 0; i < j(); ++i)
        if (std::abs(c(i) - center(i)) > radius + slack) return false;
    return true;
}

Vector InertialForm::f_at(const Vector& c) const {
    const int jj = j();
    int cell[2] = {0, 0};
    double fr[2] = {0.0, 0.0};
    for (int i = 0; i < jj; ++i) {
        if (dims[i] == 1) continue;
        double o = center(i) - (dims[i] - 1) / 2.0 * spacing;
        double u = (c(i) - o) / spacing;
        int cl = static_cast<int>(std::floor(u));
        cl = std::clamp(cl, 0, dims[i] - 2);
        cell[i] = cl;
        fr[i] = u - cl;  // unclamped: extrapolates linearly beyond the box
    }
    if (jj == 1) {
        if (dims[0] == 1) return fvals[0];
        return (1.0 - fr[0]) * fvals[cell[0]] + fr[0] * fvals[cell[0] + 1];
    }
    auto at = [&](int a, int b) -> const Vector& { return fvals[a + dims[0] * b]; };
    int a1 = dims[0] == 1 ? 0 : cell[0] + 1;
    int b1 = dims[1] == 1 ? 0 : cell[1] + 1;
    Vector low = (1.0 - fr[0]) * at(cell[0], cell[1]) + fr[0] * at(a1, cell[1]);
    Vector high = (1.0 - fr[0]) * at(cell[0], b1) + fr[0] * at(a1, b1);
    return (1.0 - fr[1]) * low + fr[1] * high;
}

InertialForm extract_inertial_form(const SystemSpec& sys, const ConeField& cf,
                                   const ManifoldGraph& M) {
    (void)cf;
    InertialForm form;
    form.basis = M.basis;
    form.spacing = M.spacing;
    form.radius = M.radius;
    form.center = M.center;
    form.dims = M.dims;
    form.zetas = M.zetas;
    form.fvals.resize(M.nodes());
    const Vector q0(0);
    for (int k = 0; k < M.nodes(); ++k)
        form.fvals[k] = M.chart_coords(sys.rhs(M.values[k], q0));
    return form;
}

Trajectory integrate_reduced(const InertialForm& form, const Vector& zeta0, double T, double h) {
    if (h <= 0.0) throw DimensionError("integrate_reduced: step must be positive");
    if (zeta0.size() != form.j()) throw DimensionError("integrate_reduced: chart dim mismatch");
    const double dir = T < 0.0 ? -1.0 : 1.0;
    const int steps = static_cast<int>(std::ceil(std::abs(T) / h - 1e-12));
    Trajectory tr;
    tr.h = h;
    tr.q0 = Vector(0);
    tr.states.reserve(static_cast<size_t>(steps) + 1);
    Vector c = zeta0;
    if (!form.in_box(c)) throw LeftGrid("reduced path starts off the grid");
    tr.states.push_back(c);
    const double hs = dir * h;
    for (int k = 0; k < steps; ++k) {
        const Vector k1 = form.f_at(c);
        const Vector k2 = form.f_at(c + 0.5 * hs * k1);
        const Vector k3 = form.f_at(c + 0.5 * hs * k2);
        const Vector k4 = form.f_at(c + hs * k3);
        c += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!form.in_box(c))
            throw LeftGrid("reduced path left the grid at elapsed time " +
                           format_g17((k + 1) * h));
        tr.states.push_back(c);
    }
    return tr;
}

TrackingResult central_project(const SystemSpec& sys, const ConeField& cf, const ManifoldGraph& M,
                               const Vector& q, const Vector& v0, std::vector<double> schedule,
                               double tol, double step) {
    if (schedule.empty()) {
        if (cf.nu0 <= 0.0) throw DimensionError("central projection needs a schedule or nu0 > 0");
        for (int k = 2; k <= 40; k += 2) schedule.push_back(k / cf.nu0);
    }
    const double h = step > 0.0 ? step : default_step(sys);
    const InertialForm form = extract_inertial_form(sys, cf, M);

    TrackingResult out;
    out.v0 = v0;
    Vector c0 = M.chart_coords(v0);
    if (!M.in_box(c0)) throw LeftGrid("query chart sits off the grid");
    Vector est = M.value_at(c0);  // naive lift seeds the estimate sequence
    out.thetas.push_back(0.0);
    out.residuals.push_back((est - v0).norm());

    for (double th : schedule) {
        const double te = whole_steps(th, h);
        Vector vth = flow_state(sys, q, v0, te, h);
        Vector cth = M.chart_coords(vth);
        if (!M.in_box(cth))
            throw LeftGrid("forward image chart left the box at theta = " + format_g17(th));
        Vector c_back = integrate_reduced(form, cth, -te, h).back();
        Vector cand = M.value_at(c_back);
        out.thetas.push_back(th);
        const double r = (cand - est).norm();
        out.residuals.push_back(r);
        est = cand;
        if (r < tol) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged)
        throw NoConvergence("central projection: schedule exhausted, last residual " +
                            format_g17(out.residuals.back()));
    out.v0_star = est;
    return out;
}

ConditionReport verify_tracking(const SystemSpec& sys, const ConeField& cf, TrackingResult& result,
                                double T, double h) {
    ConditionReport rep;
    rep.kind = "tracking";
    rep.nu0 = cf.nu0;
    rep.j = cf.j;
    const double threshold = -0.85 * cf.nu0;
    rep.diagnostics["threshold"] = threshold;

    const double d0 = (result.v0 - result.v0_star).norm();
    if (d0 <= 1e-12 * std::max(1.0, result.v0.norm())) {
        rep.pass = true;
        rep.margin = capped(std::abs(threshold));
        rep.diagnostics["degenerate"] = true;
        return rep;
    }

    const Vector q0(0);
    Trajectory ta = integrate(sys, q0, result.v0, T, h);
    Trajectory tb = integrate(sys, q0, result.v0_star, T, h);
    std::vector<double> ts, ys;
    const size_t m = std::min(ta.states.size(), tb.states.size());
    for (size_t k = 0; k < m; ++k) {
        const double t = static_cast<double>(k) * h;
        if (t < T / 4.0 - 1e-12 || t > 3.0 * T / 4.0 + 1e-12) continue;
        const double d = (ta.states[k] - tb.states[k]).norm();
        ts.push_back(t);
        ys.push_back(std::log(std::max(d, 1e-300)));
    }
    const double slope = fit_slope(ts, ys);
    double tbar = 0.0, ybar = 0.0;
    for (size_t k = 0; k < ts.size(); ++k) tbar += ts[k], ybar += ys[k];
    tbar /= static_cast<double>(ts.size());
    ybar /= static_cast<double>(ts.size());
    const double intercept = ybar - slope * tbar;

    result.exponent = slope;
    result.R = std::exp(intercept) / d0;
    rep.margin = capped(threshold - slope);
    rep.pass = rep.margin > kStrict;
    rep.diagnostics["slope"] = slope;
    rep.diagnostics["dist0"] = d0;
    rep.diagnostics["R_empirical"] = result.R;
    rep.diagnostics["R_formula"] =
        capped(1.0 / std::max(cf.C_q, 1e-300) / std::max(1.0 - cf.kappa0, 1e-300));
    return rep;
}

std::vector<Vector> sample_vertical_leaf(const SystemSpec& sys, const ConeField& cf,
                                         const ManifoldGraph& M, const Vector& v0_star,
                                         const GridSpec& vgrid, double tol, double step) {
    const int j = M.j();
    const int m = M.n() - j;
    if (j > 2 || m > 3)
        throw DimensionError("vertical sampling needs a base dim <= 2 and codim <= 3");
    const Vector q0(0);
    const double h = step > 0.0 ? step : default_step(sys);

    // vertical lattice over the Eplus coordinates
    const int K = std::max(0, static_cast<int>(std::llround(vgrid.radius / vgrid.spacing)));
    const int per = 2 * K + 1;
    int total = 1;
    for (int i = 0; i < m; ++i) total *= per;

    // chart residual of the central projection of the candidate point
    auto residual = [&](const Vector& base, const Vector& zm) -> Vector {
        Vector p = base + cf.Eminus * zm;
        TrackingResult tr = central_project(sys, cf, M, q0, p, {}, tol, step);
        return M.chart_coords(tr.v0_star - v0_star);
    };

    std::vector<Vector> leaf;
    for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        Vector zp = Vector::Zero(m);
        for (int i = 0; i < m; ++i) {
            zp(i) = (rem % per - K) * vgrid.spacing;
            rem /= per;
        }
        const Vector base = v0_star + cf.Eplus * zp;

        // damped Newton on the j-dimensional chart residual
        Vector zm = Vector::Zero(j);
        Vector r = residual(base, zm);
        const double rtol = std::max(2.0 * tol, 1e-10);
        const double fd = std::max(1e-4, 1e3 * tol);
        bool ok = false;
        for (int it = 0; it < 30 && !ok; ++it) {
            if (r.norm() <= rtol) {
                ok = true;
                break;
            }
            Matrix J(j, j);
            for (int i = 0; i < j; ++i) {
                Vector e = Vector::Zero(j);
                e(i) = fd;
                J.col(i) = (residual(base, zm + e) - residual(base, zm - e)) / (2.0 * fd);
            }
            Vector dz;
            try {
                dz = solve_linear(J, Matrix(-r));
            } catch (const SingularMatrix&) {
                throw NewtonDiverged("leaf node " + std::to_string(idx) +
                                     ": singular chart residual");
            }
            double alpha = 1.0;
            bool accepted = false;
            for (int halves = 0; halves < 12 && !accepted; ++halves) {
                Vector rc = residual(base, zm + alpha * dz);
                if (rc.norm() < r.norm()) {
                    zm += alpha * dz;
                    r = rc;
                    accepted = true;
                }
                alpha *= 0.5;
            }
            if (!accepted) throw NewtonDiverged("leaf node " + std::to_string(idx) + ": no descent");
        }
        if (!ok && r.norm() > rtol)
            throw NewtonDiverged("leaf node " + std::to_string(idx) + ": iteration cap");

        // positive-equivalence filter: the forward difference keeps V >= 0
        const Vector p = base + cf.Eminus * zm;
        Trajectory tp = integrate(sys, q0, p, 2.0, h);
        Trajectory tstar = integrate(sys, q0, v0_star, 2.0, h);
        const double eps_quad = 1e-9 * (1.0 + cf.M_P * (p - v0_star).squaredNorm());
        bool positive = true;
        const size_t ns = std::min(tp.states.size(), tstar.states.size());
        const size_t stride = std::max<size_t>(1, ns / 20);
        for (size_t k = 0; k < ns && positive; k += stride) {
            Vector d = tp.states[k] - tstar.states[k];
            if (d.dot(cf.P * d) < -eps_quad) positive = false;
        }
        if (positive) leaf.push_back(p);
    }
    return leaf;
}

}  // namespace imtk
