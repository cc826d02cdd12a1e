#include "imtk/flow.hpp"

#include <cmath>

namespace imtk {

Vector Trajectory::at_time(double t) const {
    if (h <= 0 || states.empty()) throw DimensionError("at_time: empty trajectory");
    if (t < -1e-9 || t > t_end() + 1e-9) throw DimensionError("at_time: t outside stored range");
    const double s = std::clamp(t / h, 0.0, static_cast<double>(steps()));
    const int k = std::min(static_cast<int>(s), steps() - 1 >= 0 ? steps() - 1 : 0);
    if (steps() == 0) return states[0];
    const double w = s - k;
    return (1.0 - w) * states[static_cast<size_t>(k)] + w * states[static_cast<size_t>(k) + 1];
}

namespace {

void check_finite(const Vector& v, double t) {
    if (!v.allFinite() || v.norm() > 1e12)
        throw NonFinite("state blew up at t = " + std::to_string(t));
}

}  // namespace

Trajectory integrate(const SystemSpec& sys, const Vector& q0, const Vector& v0, double T,
                     double h) {
    if (h <= 0) throw DimensionError("integrate: step must be positive");
    if (T < 0) throw DimensionError("integrate: horizon must be nonnegative");
    const int steps = static_cast<int>(std::ceil(T / h - 1e-12));
    Trajectory tr;
    tr.h = h;
    tr.q0 = q0;
    tr.forcing = sys.forcing;
    tr.states.reserve(static_cast<size_t>(steps) + 1);
    Vector v = v0;
    check_finite(v, 0.0);
    tr.states.push_back(v);
    for (int k = 0; k < steps; ++k) {
        const double t = k * h;
        const Vector k1 = sys.rhs(v, sys.forcing.flow(q0, t));
        const Vector k2 = sys.rhs(v + 0.5 * h * k1, sys.forcing.flow(q0, t + 0.5 * h));
        const Vector k3 = sys.rhs(v + 0.5 * h * k2, sys.forcing.flow(q0, t + 0.5 * h));
        const Vector k4 = sys.rhs(v + h * k3, sys.forcing.flow(q0, t + h));
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_finite(v, t + h);
        tr.states.push_back(v);
    }
    return tr;
}

VariationalTrajectory integrate_variational(const SystemSpec& sys, const Vector& q0,
                                            const Vector& v0, double T, double h) {
    if (!sys.F.has_derivative && sys.F.kind != NonlinKind::Zero)
        throw DerivativeUnavailable("nonlinearity has no analytic derivative");
    if (h <= 0) throw DimensionError("integrate_variational: step must be positive");
    if (T < 0) throw DimensionError("integrate_variational: horizon must be nonnegative");
    const int steps = static_cast<int>(std::ceil(T / h - 1e-12));
    const int n = sys.n();

    VariationalTrajectory out;
    out.base.h = h;
    out.base.q0 = q0;
    out.base.forcing = sys.forcing;
    Vector v = v0;
    Matrix L = Matrix::Identity(n, n);
    check_finite(v, 0.0);
    out.base.states.push_back(v);
    out.fundamental.push_back(L);

    for (int k = 0; k < steps; ++k) {
        const double t = k * h;
        const Vector q1 = sys.forcing.flow(q0, t);
        const Vector qm = sys.forcing.flow(q0, t + 0.5 * h);
        const Vector q2 = sys.forcing.flow(q0, t + h);

        const Vector k1 = sys.rhs(v, q1);
        const Matrix m1 = sys.jacobian(v) * L;
        const Vector v2 = v + 0.5 * h * k1;
        const Vector k2 = sys.rhs(v2, qm);
        const Matrix m2 = sys.jacobian(v2) * (L + 0.5 * h * m1);
        const Vector v3 = v + 0.5 * h * k2;
        const Vector k3 = sys.rhs(v3, qm);
        const Matrix m3 = sys.jacobian(v3) * (L + 0.5 * h * m2);
        const Vector v4 = v + h * k3;
        const Vector k4 = sys.rhs(v4, q2);
        const Matrix m4 = sys.jacobian(v4) * (L + h * m3);

        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        L += (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
        check_finite(v, t + h);
        if (!L.allFinite()) throw NonFinite("fundamental matrix blew up");
        out.base.states.push_back(v);
        out.fundamental.push_back(L);
    }
    return out;
}

double default_step(const SystemSpec& sys) {
    const double scale =
        operator_norm2(sys.A) + sys.lambda() * operator_norm2(sys.B) * operator_norm2(sys.C) + 1.0;
    return std::clamp(1e-3 / scale, 1e-5, 1e-2);
}

}  // namespace imtk
