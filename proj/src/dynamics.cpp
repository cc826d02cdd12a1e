#include "imtk/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imtk/conditions.hpp"
#include "imtk/rng.hpp"

namespace imtk {

namespace {

constexpr double kStrict = 1e-9;
constexpr double kMarginCap = 1e300;

double capped(double x) { return std::clamp(x, -kMarginCap, kMarginCap); }

Vector rk4_step(const InertialForm& form, const Vector& c, double hs) {
    const Vector k1 = form.f_at(c);
    const Vector k2 = form.f_at(c + 0.5 * hs * k1);
    const Vector k3 = form.f_at(c + 0.5 * hs * k2);
    const Vector k4 = form.f_at(c + hs * k3);
    return c + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// decay slope of log||a - b|| over the window [T/4, 3T/4]
double fit_pair_slope(const Trajectory& ta, const Trajectory& tb, double T, double h) {
    std::vector<double> ts, ys;
    const size_t m = std::min(ta.states.size(), tb.states.size());
    for (size_t k = 0; k < m; ++k) {
        const double t = static_cast<double>(k) * h;
        if (t < T / 4.0 - 1e-12 || t > 3.0 * T / 4.0 + 1e-12) continue;
        ts.push_back(t);
        ys.push_back(std::log(std::max((ta.states[k] - tb.states[k]).norm(), 1e-300)));
    }
    return fit_slope(ts, ys);
}

}  // namespace

Json OrbitClassification::to_json() const {
    Json js;
    js["verdict"] = verdict;
    js["period"] = period;
    js["return_residual"] = return_residual;
    js["closest_return"] = closest_return;
    js["velocity_norm"] = velocity_norm;
    js["T_transient"] = T_transient;
    Json arr = Json::array();
    for (const auto& s : samples) arr.push_back(vector_to_json(s));
    js["samples"] = arr;
    return js;
}

Json PoincareIterates::to_json() const {
    Json js;
    js["iterates"] = iterates;
    js["monotone"] = monotone;
    return js;
}

Json RobustnessResult::to_json() const {
    Json js;
    js["eps"] = eps;
    js["dist"] = dist;
    js["decreasing"] = decreasing;
    js["ratio_spread"] = ratio_spread;
    return js;
}

InertialForm synthetic_form(int j, double spacing, double radius,
                            const std::function<Vector(const Vector&)>& f) {
    if (j < 1 || j > 2) throw DimensionError("synthetic form: chart dimension must be 1 or 2");
    if (spacing <= 0.0 || radius < 0.0) throw DimensionError("synthetic form: bad lattice");
    InertialForm form;
    form.basis = Matrix::Identity(j, j);
    form.spacing = spacing;
    form.radius = radius;
    form.center = Vector::Zero(j);
    const int K = static_cast<int>(std::llround(radius / spacing));
    const int per = 2 * K + 1;
    form.dims.assign(j, per);
    int total = 1;
    for (int i = 0; i < j; ++i) total *= per;
    form.zetas.reserve(total);
    form.fvals.reserve(total);
    for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        Vector z = Vector::Zero(j);
        for (int i = 0; i < j; ++i) {
            z(i) = (rem % per - K) * spacing;
            rem /= per;
        }
        form.zetas.push_back(z);
        form.fvals.push_back(f(z));
    }
    return form;
}

Vector reduced_at(const InertialForm& form, const Vector& zeta0, double T, double h) {
    if (h <= 0.0) throw DimensionError("reduced_at: step must be positive");
    if (zeta0.size() != form.j()) throw DimensionError("reduced_at: chart dim mismatch");
    const double dir = T < 0.0 ? -1.0 : 1.0;
    const double aT = std::abs(T);
    const int steps = static_cast<int>(std::floor(aT / h + 1e-12));
    const double rem = aT - steps * h;
    Vector c = zeta0;
    if (!form.in_box(c)) throw LeftGrid("reduced path starts off the grid");
    for (int k = 0; k < steps; ++k) {
        c = rk4_step(form, c, dir * h);
        if (!form.in_box(c)) throw LeftGrid("reduced path left the grid");
    }
    if (rem > 1e-14 * std::max(1.0, aT)) {
        c = rk4_step(form, c, dir * rem);
        if (!form.in_box(c)) throw LeftGrid("reduced path left the grid");
    }
    return c;
}

OrbitClassification classify_omega_limit(const InertialForm& form, const Vector& zeta0,
                                         double T_transient, double T_obs, double h) {
    if (form.j() < 1 || form.j() > 2)
        throw DimensionError("classification needs a 1- or 2-dimensional chart");
    if (T_obs <= 0.0) throw DimensionError("classification needs a positive observation window");

    OrbitClassification out;
    out.T_transient = T_transient;
    const Vector start =
        T_transient > 0.0 ? integrate_reduced(form, zeta0, T_transient, h).back() : zeta0;
    const Trajectory obs = integrate_reduced(form, start, T_obs, h);
    out.velocity_norm = form.f_at(obs.back()).norm();

    if (out.velocity_norm <= 1e-6) {
        out.verdict = "stationary";
        out.samples = {obs.back()};
        return out;
    }
    if (form.j() == 1) {
        out.verdict = "other";
        out.samples = {obs.back()};
        return out;
    }

    // near-return scan against the start of the observation window
    const Vector zr = obs.states.front();
    const double thresh = 1e-3;
    const double leave = 10.0 * thresh;
    bool left = false;
    double best = std::numeric_limits<double>::infinity();
    int cand = -1;
    for (size_t k = 1; k < obs.states.size(); ++k) {
        const double d = (obs.states[k] - zr).norm();
        if (!left) {
            left = d > leave;
            continue;
        }
        best = std::min(best, d);
        if (d < thresh) {
            size_t kk = k;  // slide to the bottom of the dip
            while (kk + 1 < obs.states.size() &&
                   (obs.states[kk + 1] - zr).norm() < (obs.states[kk] - zr).norm())
                ++kk;
            cand = static_cast<int>(kk);
            best = std::min(best, (obs.states[kk] - zr).norm());
            break;
        }
    }
    out.closest_return = std::isfinite(best) ? best : (obs.back() - zr).norm();
    if (cand < 0) {
        out.verdict = "other";
        out.samples = {obs.back()};
        return out;
    }

    // single shooting on (point, period) with a phase section through zr
    Vector x = zr;
    double Tp = cand * h;
    const Vector s = form.f_at(zr);
    auto resid = [&](const Vector& z, double Tper) {
        Vector r(3);
        r.head(2) = reduced_at(form, z, Tper, h) - z;
        r(2) = s.dot(z - zr);
        return r;
    };
    double rr = std::numeric_limits<double>::infinity();
    try {
        Vector R = resid(x, Tp);
        for (int it = 0; it < 40 && R.norm() > 1e-12; ++it) {
            Matrix J(3, 3);
            const double dz = 1e-6 * (1.0 + x.norm());
            const double dT = 1e-6 * (1.0 + Tp);
            for (int i = 0; i < 2; ++i) {
                Vector e = Vector::Zero(2);
                e(i) = dz;
                J.col(i) = (resid(x + e, Tp) - resid(x - e, Tp)) / (2.0 * dz);
            }
            J.col(2) = (resid(x, Tp + dT) - resid(x, Tp - dT)) / (2.0 * dT);
            const Vector d = solve_linear(J, Matrix(-R));
            double alpha = 1.0;
            bool accepted = false;
            for (int halves = 0; halves < 12 && !accepted; ++halves) {
                const Vector xc = x + alpha * d.head(2);
                const double Tc = Tp + alpha * d(2);
                if (Tc > 5.0 * h) {
                    const Vector Rc = resid(xc, Tc);
                    if (Rc.norm() < R.norm()) {
                        x = xc;
                        Tp = Tc;
                        R = Rc;
                        accepted = true;
                    }
                }
                alpha *= 0.5;
            }
            if (!accepted) break;
        }
        rr = R.head(2).norm();
    } catch (const Error&) {
        rr = std::numeric_limits<double>::infinity();  // refinement escaped: not periodic
    }

    if (rr <= 1e-8 && Tp > 10.0 * h) {
        out.verdict = "periodic";
        out.period = Tp;
        out.return_residual = rr;
        const Trajectory cyc = integrate_reduced(form, x, Tp, h);
        const size_t stride = std::max<size_t>(1, cyc.states.size() / 128);
        for (size_t k = 0; k < cyc.states.size(); k += stride) out.samples.push_back(cyc.states[k]);
        return out;
    }
    out.verdict = "other";
    out.samples = {obs.back()};
    return out;
}

PoincareIterates poincare_map(const SystemSpec& sys, const ConeField& cf, const ManifoldGraph& M,
                              double sigma, const Vector& zeta0, int k, double step) {
    (void)cf;
    if (M.j() != 1) throw DimensionError("Poincare iteration needs a one-dimensional chart");
    if (sigma <= 0.0) throw DimensionError("Poincare iteration needs a positive period");
    if (k < 1) throw DimensionError("Poincare iteration needs at least one iterate");
    const double h0 = step > 0.0 ? step : default_step(sys);
    const int m = std::max(1, static_cast<int>(std::ceil(sigma / h0 - 1e-12)));
    const double h = sigma / m;  // whole steps per period keep the phase aligned
    const Vector q0 = Vector::Zero(sys.forcing.driving_dim());

    PoincareIterates out;
    Vector z = zeta0;
    if (!M.in_box(z)) throw LeftGrid("Poincare start off the chart box");
    out.iterates.push_back(z(0));
    for (int i = 0; i < k; ++i) {
        const Vector v = flow_state(sys, q0, M.value_at(z), sigma, h);
        z = M.chart_coords(v);
        if (!M.in_box(z))
            throw LeftGrid("Poincare iterate " + std::to_string(i + 1) + " left the chart box");
        out.iterates.push_back(z(0));
    }

    // sign-constant differences after the first quarter of the track
    const size_t startq = out.iterates.size() / 4;
    int sign = 0;
    bool mono = true;
    for (size_t i = startq + 1; i < out.iterates.size(); ++i) {
        const double d = out.iterates[i] - out.iterates[i - 1];
        if (std::abs(d) <= 1e-14) continue;
        const int sd = d > 0.0 ? 1 : -1;
        if (sign == 0)
            sign = sd;
        else if (sd != sign)
            mono = false;
    }
    out.monotone = mono;
    return out;
}

ConditionReport check_convergence_periodic(const SystemSpec& sys, const ConeField& cf,
                                           const ManifoldGraph& M, const Vector& v0, double sigma,
                                           double T, double step) {
    (void)M;
    if (cf.j != 1) throw DimensionError("periodic convergence needs a j = 1 certificate");
    if (sigma <= 0.0) throw DimensionError("periodic convergence needs a positive period");
    const int P = static_cast<int>(std::ceil(T / sigma - 1e-12));
    if (P < 12) throw DimensionError("periodic convergence needs at least 12 periods");
    const double h0 = step > 0.0 ? step : default_step(sys);
    const int m = std::max(1, static_cast<int>(std::ceil(sigma / h0 - 1e-12)));
    const double h = sigma / m;
    const Vector q0 = Vector::Zero(sys.forcing.driving_dim());
    const double bound = 1e6 * std::max(1.0, v0.norm());

    auto sup_norm = [](const Trajectory& tr) {
        double s = 0.0;
        for (const auto& v : tr.states) s = std::max(s, v.norm());
        return s;
    };

    Trajectory prev = integrate(sys, q0, v0, sigma, h);
    if (sup_norm(prev) > bound) throw Unbounded("trajectory escaped during the first period");
    std::vector<double> dsup;  // dsup[p] = sup_t in period p of ||v(t+sigma) - v(t)||
    for (int p = 1; p < P; ++p) {
        const Trajectory cur = integrate(sys, q0, prev.back(), sigma, h);
        if (sup_norm(cur) > bound)
            throw Unbounded("trajectory escaped during period " + std::to_string(p));
        double d = 0.0;
        for (size_t k = 0; k < cur.states.size(); ++k)
            d = std::max(d, (cur.states[k] - prev.states[k]).norm());
        dsup.push_back(d);
        prev = cur;
    }

    ConditionReport rep;
    rep.kind = "periodic-convergence";
    rep.nu0 = cf.nu0;
    rep.j = cf.j;
    const double initial = dsup.front();
    double tail = 0.0;
    for (size_t p = dsup.size() - 10; p < dsup.size(); ++p) tail = std::max(tail, dsup[p]);
    rep.diagnostics["initial"] = initial;
    rep.diagnostics["tail"] = tail;
    rep.diagnostics["periods"] = P;
    if (initial <= 1e-12 * std::max(1.0, v0.norm())) {
        rep.pass = true;
        rep.margin = 1.0;
        rep.diagnostics["already_periodic"] = true;
        return rep;
    }
    rep.diagnostics["ratio"] = tail / initial;
    rep.margin = capped(1e-4 * initial - tail);
    rep.pass = rep.margin > kStrict;
    return rep;
}

ConditionReport check_ap_stability(const SystemSpec& sys, const ConeField& cf,
                                   const std::vector<Vector>& q_samples,
                                   const std::vector<std::pair<Vector, Vector>>& v_pairs,
                                   double T, double step) {
    if (cf.j != 0) throw DimensionError("almost-periodic stability needs a j = 0 certificate");
    if (T <= 0.0) throw DimensionError("almost-periodic stability needs a positive horizon");
    const double h = step > 0.0 ? step : default_step(sys);
    const double threshold = -0.85 * cf.nu0;

    double worst = -std::numeric_limits<double>::infinity();
    double worst_ratio = 0.0;
    int fits = 0, skipped = 0;
    for (const auto& q : q_samples) {
        for (const auto& [a, b] : v_pairs) {
            const double d0 = (a - b).norm();
            if (d0 <= 1e-12 * std::max(1.0, a.norm())) {
                ++skipped;
                continue;
            }
            const Trajectory ta = integrate(sys, q, a, T, h);
            const Trajectory tb = integrate(sys, q, b, T, h);
            worst = std::max(worst, fit_pair_slope(ta, tb, T, h));
            worst_ratio = std::max(worst_ratio, (ta.back() - tb.back()).norm() / d0);
            ++fits;
        }
    }

    ConditionReport rep;
    rep.kind = "ap-stability";
    rep.nu0 = cf.nu0;
    rep.j = cf.j;
    rep.diagnostics["threshold"] = threshold;
    rep.diagnostics["pairs"] = fits;
    rep.diagnostics["skipped"] = skipped;
    if (fits == 0) {
        rep.pass = true;
        rep.margin = std::abs(threshold);
        rep.diagnostics["degenerate"] = true;
        return rep;
    }
    rep.diagnostics["worst_slope"] = worst;
    rep.diagnostics["worst_end_ratio"] = worst_ratio;
    rep.margin = capped(threshold - worst);
    rep.pass = rep.margin > kStrict;
    return rep;
}

ConditionReport stability_transfer_check(const SystemSpec& sys, const ConeField& cf,
                                         const ManifoldGraph& M, const OrbitClassification& orbit,
                                         double delta, int probes, double T, double step,
                                         std::uint64_t seed) {
    if (orbit.verdict != "stationary" && orbit.verdict != "periodic")
        throw DimensionError("transfer check needs a stationary or periodic orbit");
    if (orbit.samples.empty()) throw DimensionError("transfer check: orbit carries no samples");
    if (delta <= 0.0 || probes < 1) throw DimensionError("transfer check: bad probe setup");
    const double h = step > 0.0 ? step : default_step(sys);
    const double Trun = T > 0.0 ? T : 10.0 / std::max(std::abs(cf.nu0), 0.1);
    const Vector q0 = Vector::Zero(sys.forcing.driving_dim());

    std::vector<Vector> set;
    set.reserve(orbit.samples.size());
    for (const auto& s : orbit.samples) set.push_back(M.value_at(s));
    auto dist_set = [&](const Vector& v) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& s : set) d = std::min(d, (v - s).norm());
        return d;
    };

    Rng rng(seed);
    const int jj = M.j();
    const int nv = M.n() - jj;
    double worst_on = 0.0, worst_off = 0.0, probe0 = -1.0;
    bool on_div = false, off_div = false;
    auto run = [&](const Vector& v) -> std::pair<double, bool> {
        const double d0 = dist_set(v);
        try {
            const double de = dist_set(flow_state(sys, q0, v, Trun, h));
            return {de, de > std::max(d0, delta)};
        } catch (const NonFinite&) {
            return {kMarginCap, true};
        }
    };
    for (int i = 0; i < probes; ++i) {
        const Vector& zc = orbit.samples[i % orbit.samples.size()];
        const Vector dz = i == 0 ? Vector::Zero(jj) : Vector(rng.ball(jj, delta));
        const Vector von = M.value_at(zc + dz);
        const Vector voff =
            nv > 0 ? Vector(von + cf.Eplus * rng.ball(nv, delta)) : von;
        const auto [don, divon] = run(von);
        const auto [doff, divoff] = run(voff);
        if (i == 0) probe0 = don;
        worst_on = std::max(worst_on, don);
        worst_off = std::max(worst_off, doff);
        on_div = on_div || divon;
        off_div = off_div || divoff;
    }

    const double Rf = cf.j > 0 && std::isfinite(cf.C_q)
                          ? 1.0 / (std::max(cf.C_q, 1e-300) * std::max(1.0 - cf.kappa0, 1e-300))
                          : 1.0;
    const double slack = std::max(1e-6, 10.0 * M.tol);
    const double track = delta * std::max(Rf, 1.0) * std::exp(-0.85 * cf.nu0 * Trun) + slack;
    const bool on_stable = worst_on <= 10.0 * delta + slack;
    const bool off_ok = worst_off <= worst_on + track;

    ConditionReport rep;
    rep.kind = "stability-transfer";
    rep.nu0 = cf.nu0;
    rep.j = cf.j;
    rep.pass = on_stable && off_ok;
    rep.margin = capped(on_stable ? (worst_on + track) - worst_off
                                  : (10.0 * delta + slack) - worst_on);
    rep.diagnostics["worst_on"] = worst_on;
    rep.diagnostics["worst_off"] = worst_off;
    rep.diagnostics["tracking_bound"] = track;
    rep.diagnostics["probe0_dist"] = probe0;
    rep.diagnostics["on_diverged"] = on_div;
    rep.diagnostics["off_diverged"] = off_div;
    rep.diagnostics["verdict"] = rep.pass ? "stability transfers"
                                          : (on_div && off_div ? "divergence on both levels"
                                                               : "no transfer");
    return rep;
}

SystemSpec scale_nonlinearity(const SystemSpec& sys, double eps) {
    SystemSpec out = sys;
    out.F.lambda = sys.F.lambda * eps;
    switch (sys.F.kind) {
        case NonlinKind::Zero:
            break;
        case NonlinKind::Sigmoid:
        case NonlinKind::SaturatedCubic:
            out.F.scale = sys.F.scale * eps;
            break;
        case NonlinKind::PolyClamp:
            for (double& c : out.F.coeffs) c *= eps;
            break;
    }
    return out;
}

RobustnessResult robustness_experiment(const SystemSpec& sys, const ConeField& cf,
                                       const ManifoldGraph& M, const std::vector<double>& eps_list,
                                       double T_max, double tol, double step) {
    RobustnessResult out;
    out.eps = eps_list;
    GridSpec gs;
    gs.spacing = M.spacing;
    gs.radius = M.radius;
    gs.h = step;
    const Vector q0 = Vector::Zero(sys.forcing.driving_dim());

    for (double eps : eps_list) {
        if (eps < 0.0) throw DimensionError("robustness: negative eps");
        const SystemSpec se = scale_nonlinearity(sys, eps);
        if (se.lambda() > 0.0) {
            const double sup =
                sweep_supremum(TransferFunction::rational(se.A, se.B, se.C), cf.nu0).sup;
            if (se.lambda() * sup >= 1.0)
                throw CertificateLostAtEpsilon("eps = " + format_g17(eps) +
                                               ": Lambda sup|W| = " + format_g17(se.lambda() * sup));
        }
        ConeField ce;
        try {
            ce = synthesize_P(se, cf.nu0);
        } catch (const Error& err) {
            throw CertificateLostAtEpsilon("eps = " + format_g17(eps) + ": " + err.what());
        }
        const ManifoldGraph Me = build_manifold(se, ce, q0, gs, T_max, tol);
        double d = 0.0;
        for (int k = 0; k < M.nodes(); ++k)
            d = std::max(d, (Me.value_at(Me.chart_coords(M.values[k])) - M.values[k]).norm());
        out.dist.push_back(d);
    }

    out.decreasing = true;
    for (size_t i = 0; i < out.eps.size(); ++i)
        for (size_t k = 0; k < out.eps.size(); ++k)
            if (out.eps[i] > out.eps[k] && out.dist[i] + 1e-15 < out.dist[k])
                out.decreasing = false;
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (size_t i = 0; i < out.eps.size(); ++i) {
        if (out.eps[i] <= 0.0) continue;
        const double r = out.dist[i] / out.eps[i];
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    out.ratio_spread = rmax > 0.0 && std::isfinite(rmin) && rmin > 0.0 ? rmax / rmin : 0.0;
    return out;
}

}  // namespace imtk
