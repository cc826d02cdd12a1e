#include "imtk/conditions.hpp"

#include <algorithm>
#include <cmath>

#include "imtk/errors.hpp"
#include "imtk/flow.hpp"
#include "imtk/linalg.hpp"
#include "imtk/lyapunov.hpp"
#include "imtk/rng.hpp"

namespace imtk {

namespace {

constexpr double kMarginCap = 1e300;
constexpr double kStrict = 1e-9;

double capped(double x) { return std::min(x, kMarginCap); }

}  // namespace

Json ConditionReport::to_json() const {
    Json js;
    js["kind"] = kind;
    js["pass"] = pass;
    js["margin"] = margin;
    js["nu0"] = nu0;
    js["j"] = j;
    for (const auto& item : diagnostics.items()) js[item.key()] = item.value();
    return js;
}

TransferFunction TransferFunction::rational(const Matrix& A, const Matrix& B, const Matrix& C) {
    if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.rows())
        throw DimensionError("transfer function: incompatible A/B/C shapes");
    TransferFunction tf;
    tf.kind = Kind::Rational;
    tf.A = A;
    tf.B = B;
    tf.C = C;
    return tf;
}

TransferFunction TransferFunction::from_delay(const DelaySpec& spec) {
    TransferFunction tf;
    tf.kind = Kind::Delay;
    tf.delay = spec;
    return tf;
}

CMatrix TransferFunction::eval(const Complex& p) const {
    if (kind == Kind::Rational) {
        CMatrix M = A.cast<Complex>();
        M.diagonal().array() -= p;
        return C.cast<Complex>() * solve_linear(M, B.cast<Complex>());
    }
    const int nx = delay.state_dim();
    CMatrix M = CMatrix::Zero(nx, nx);
    for (const auto& tap : delay.a_taps) M += std::exp(p * tap.theta) * tap.weight.cast<Complex>();
    M.diagonal().array() -= p;
    for (const auto& tap : delay.d_taps)
        M -= p * std::exp(p * tap.theta) * tap.weight.cast<Complex>();
    CMatrix gamma = CMatrix::Zero(delay.c_taps.empty() ? nx : delay.c_taps[0].weight.rows(), nx);
    for (const auto& tap : delay.c_taps)
        gamma += std::exp(p * tap.theta) * tap.weight.cast<Complex>();
    if (delay.c_taps.empty()) gamma = CMatrix::Identity(nx, nx);
    return gamma * solve_linear(M, delay.b_tilde.cast<Complex>());
}

std::pair<int, double> count_unstable(const Matrix& A, double nu0) {
    const GeneralEigen ge = eig_general(A);
    int j = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < ge.eigenvalues().size(); ++i) {
        const double re = ge.eigenvalues()(i).real();
        dist = std::min(dist, std::abs(re + nu0));
        if (re > -nu0) ++j;
    }
    if (dist < 1e-8)
        throw OnDichotomyLine("eigenvalue within 1e-8 of Re p = " + std::to_string(-nu0));
    return {j, dist};
}

namespace {

struct TapSums {
    double a = 0.0, c = 0.0, d = 0.0, b = 0.0;
};

TapSums tap_sums(const DelaySpec& spec, double nu0) {
    TapSums s;
    const double anu = std::abs(nu0);
    for (const auto& t : spec.a_taps) s.a += operator_norm2(t.weight) * std::exp(anu * std::abs(t.theta));
    for (const auto& t : spec.c_taps) s.c += operator_norm2(t.weight) * std::exp(anu * std::abs(t.theta));
    for (const auto& t : spec.d_taps) s.d += operator_norm2(t.weight) * std::exp(anu * std::abs(t.theta));
    s.b = operator_norm2(spec.b_tilde);
    if (spec.c_taps.empty()) s.c = 1.0;
    return s;
}

struct Peak {
    double omega = 0.0;
    double value = 0.0;
};

// Golden-section maximization of f on [a, b]; returns the best sample seen.
template <typename F>
Peak golden_max(const F& f, double a, double b, double tol) {
    static const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    Peak best = fc >= fd ? Peak{c, fc} : Peak{d, fd};
    for (int it = 0; it < 200 && b - a > tol; ++it) {
        if (fc < fd) {
            a = c, c = d, fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
            if (fd > best.value) best = {d, fd};
        } else {
            b = d, d = c, fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
            if (fc > best.value) best = {c, fc};
        }
    }
    return best;
}

}  // namespace

SweepResult sweep_supremum(const TransferFunction& tf, double nu0, double omega_max) {
    // |W| is even in omega for real state-space data, so sweep [0, omega_max].
    double rho = 0.0;    // spectral scale steering the default grid extents
    double tail_c = 0.0, tail_s = 0.0;  // tail(w) = tail_c / (w (1-s_D) - tail_s)
    double sD = 0.0;
    if (tf.kind == TransferFunction::Kind::Rational) {
        const GeneralEigen ge = eig_general(tf.A);
        for (int i = 0; i < ge.eigenvalues().size(); ++i)
            rho = std::max(rho, std::abs(ge.eigenvalues()(i)));
        const double na = operator_norm2(tf.A);
        tail_c = operator_norm2(tf.C) * operator_norm2(tf.B);
        tail_s = na + std::abs(nu0);
    } else {
        const TapSums s = tap_sums(tf.delay, nu0);
        if (s.d >= 1.0)
            throw TailUnbounded("neutral taps reach total mass " + std::to_string(s.d) +
                                " on the sweep line");
        sD = s.d;
        rho = s.a + std::abs(nu0) + 1.0;
        tail_c = s.c * s.b;
        tail_s = s.a;
    }
    const double scale = rho + std::abs(nu0) + 1.0;
    double wmax = omega_max > 0.0 ? omega_max : 1e3 * scale;

    const auto f = [&](double w) { return operator_norm2(tf.eval(Complex(-nu0, w))); };

    SweepResult out{0.0, 0.0, wmax, 0.0};
    for (int attempt = 0; attempt < 4; ++attempt) {
        std::vector<double> xs;
        const double lin_hi = std::min(wmax, 10.0 * scale);
        for (int i = 0; i <= 512; ++i) xs.push_back(lin_hi * i / 512.0);
        if (wmax > lin_hi)
            for (int i = 1; i <= 512; ++i)
                xs.push_back(lin_hi * std::pow(wmax / lin_hi, i / 512.0));

        std::vector<double> fs(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = f(xs[i]);

        out = SweepResult{0.0, 0.0, wmax, 0.0};
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (fs[i] > out.sup) out.sup = fs[i], out.worst_omega = xs[i];
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const bool lmax = (i == 0 || fs[i] >= fs[i - 1]) &&
                              (i + 1 == xs.size() || fs[i] >= fs[i + 1]);
            if (!lmax) continue;
            const double a = i == 0 ? xs[0] : xs[i - 1];
            const double b = i + 1 == xs.size() ? xs[i] : xs[i + 1];
            if (b - a < 1e-300) continue;
            const Peak p = golden_max(f, a, b, 1e-4 * std::max(1e-3, std::abs(xs[i])));
            if (p.value > out.sup) out.sup = p.value, out.worst_omega = p.omega;
        }

        const double denom = wmax * (1.0 - sD) - tail_s;
        out.tail = denom > 0.0 ? tail_c / denom : std::numeric_limits<double>::infinity();
        if (out.tail <= out.sup + 1e-12) return out;
        wmax *= 4.0;  // tail not yet dominated by the interior supremum
    }
    return out;  // tail < sup could not be certified at 64x the default extent
}

ConditionReport frequency_sweep(const TransferFunction& tf, double nu0, double Lambda,
                                double omega_max) {
    ConditionReport rep;
    rep.kind = "frequency";
    rep.nu0 = nu0;
    if (tf.kind == TransferFunction::Kind::Rational) {
        rep.j = count_unstable(tf.A, nu0).first;
    } else {
        const SystemSpec chain = discretize_delay(tf.delay, NonlinSpec{});
        rep.j = count_unstable(chain.A, nu0).first;
    }
    const SweepResult sw = sweep_supremum(tf, nu0, omega_max);
    const double bound = Lambda > 0.0 ? 1.0 / Lambda : std::numeric_limits<double>::infinity();
    rep.margin = capped(bound - sw.sup);
    rep.pass = rep.margin > kStrict;
    rep.diagnostics["worst_omega"] = sw.worst_omega;
    rep.diagnostics["sup"] = sw.sup;
    rep.diagnostics["omega_max"] = sw.omega_max;
    rep.diagnostics["tail_bound"] = sw.tail;
    return rep;
}

ConditionReport spectral_gap(const GalerkinSpec& spec, int j, double Lambda) {
    const int N = static_cast<int>(spec.lambdas.size());
    if (j < 1 || j >= N) throw DimensionError("spectral gap: j must lie in [1, N-1]");
    const double lj = spec.lambdas[j - 1], lj1 = spec.lambdas[j];
    if (lj1 - lj <= 0.0) throw DegenerateGap("lambda_j == lambda_{j+1} at j = " + std::to_string(j));
    const double e = spec.alpha - spec.beta;
    const double wj = std::pow(lj, e), wj1 = std::pow(lj1, e);
    const double lhs = (lj1 - lj) / (wj + wj1);
    ConditionReport rep;
    rep.kind = "spectral-gap";
    rep.j = j;
    rep.nu0 = (wj * lj1 + wj1 * lj) / (wj + wj1);
    rep.margin = capped(lhs - Lambda);
    rep.pass = rep.margin > kStrict;
    rep.diagnostics["lambda_j"] = lj;
    rep.diagnostics["lambda_jp1"] = lj1;
    rep.diagnostics["lhs"] = lhs;
    rep.diagnostics["weight_j"] = wj;
    rep.diagnostics["weight_jp1"] = wj1;
    rep.diagnostics["equalization_residual"] =
        std::abs(wj / (rep.nu0 - lj) - wj1 / (lj1 - rep.nu0));
    return rep;
}

ConditionReport small_delay_check(const DelaySpec& spec, int r, double Lambda, double nu0) {
    if (nu0 <= 0.0) throw Error("small delay: nu0 must be positive");
    if (r < 1) throw DimensionError("small delay: r must be at least 1");
    const double kappa = std::exp(spec.tau * nu0) * spec.d0_norm;
    if (kappa >= 1.0)
        throw KappaExceedsOne("e^{tau nu0} ||D0|| = " + std::to_string(kappa));
    const double lhs = std::sqrt(static_cast<double>(r)) * std::exp(spec.tau * nu0) / nu0 /
                       (1.0 - kappa);
    const double bound = Lambda > 0.0 ? 1.0 / Lambda : std::numeric_limits<double>::infinity();
    ConditionReport rep;
    rep.kind = "small-delay";
    rep.j = r;
    rep.nu0 = nu0;
    rep.margin = capped(bound - lhs);
    rep.pass = rep.margin > kStrict;
    rep.diagnostics["kappa"] = kappa;
    rep.diagnostics["lhs"] = lhs;
    rep.diagnostics["tau"] = spec.tau;
    rep.diagnostics["d0_norm"] = spec.d0_norm;
    return rep;
}

ConditionReport scp_sampled_check(const SystemSpec& sys, const ConeField& cf, double alpha_lo,
                                  double alpha_hi, int samples, double horizon, double delta,
                                  double h, std::uint64_t seed) {
    if (alpha_hi < alpha_lo) throw DimensionError("scp: empty alpha band");
    if (delta <= 0.0) delta = cf.delta_P / 2.0;
    if (h <= 0.0) h = default_step(sys);
    Rng rng(seed);
    const int n = sys.n();
    const Vector q0 = Vector::Zero(sys.forcing.driving_dim());

    double margin = std::numeric_limits<double>::infinity();
    double worst_time = 0.0;
    int worst_sample = -1;
    for (int s = 0; s < samples; ++s) {
        const Vector v0 = rng.ball(n, 2.0);
        Vector xi0 = rng.gauss_vec(n);
        xi0 /= xi0.norm();
        const VariationalTrajectory vt = integrate_variational(sys, q0, v0, horizon, h);
        for (int k = 0; k <= vt.base.steps(); ++k) {
            const Vector xi = vt.fundamental[k] * xi0;
            const double n2 = xi.squaredNorm();
            if (n2 < 1e-280) continue;
            const Matrix J = sys.jacobian(vt.base.states[k]);
            const double V = xi.dot(cf.P * xi);
            const double dV = 2.0 * xi.dot(cf.P * (J * xi));
            const double g = -delta * n2 - dV;
            const double lower = std::min(2.0 * alpha_lo * V, 2.0 * alpha_hi * V);
            const double m = (g - lower) / n2;
            if (m < margin) margin = m, worst_time = k * vt.base.h, worst_sample = s;
        }
    }

    ConditionReport rep;
    rep.kind = "scp-sampled";
    rep.j = cf.j;
    rep.nu0 = cf.nu0;
    rep.margin = capped(margin);
    rep.pass = rep.margin > kStrict;
    rep.diagnostics["alpha_lo"] = alpha_lo;
    rep.diagnostics["alpha_hi"] = alpha_hi;
    rep.diagnostics["delta"] = delta;
    rep.diagnostics["worst_time"] = worst_time;
    rep.diagnostics["worst_sample"] = worst_sample;
    rep.diagnostics["samples"] = samples;
    return rep;
}

}  // namespace imtk
