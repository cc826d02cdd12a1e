#include "imtk/system.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "imtk/rng.hpp"

namespace imtk {

// ---------------------------------------------------------------------------
// nonlinearities

double NonlinSpec::eval1(double y) const {
    switch (kind) {
        case NonlinKind::Zero:
            return 0.0;
        case NonlinKind::Sigmoid:
            return scale * std::tanh(gain * y);
        case NonlinKind::SaturatedCubic:
            return scale * y * y * y / (1.0 + y * y);
        case NonlinKind::PolyClamp: {
            const double yc = std::clamp(y, -clamp, clamp);
            double p = 0.0;
            for (size_t k = coeffs.size(); k-- > 0;) p = p * yc + coeffs[k];
            return p;
        }
    }
    return 0.0;
}

double NonlinSpec::deriv1(double y) const {
    switch (kind) {
        case NonlinKind::Zero:
            return 0.0;
        case NonlinKind::Sigmoid: {
            const double c = std::cosh(gain * y);
            return scale * gain / (c * c);
        }
        case NonlinKind::SaturatedCubic: {
            const double u = y * y;
            const double d = 1.0 + u;
            return scale * (3.0 * u + u * u) / (d * d);
        }
        case NonlinKind::PolyClamp: {
            if (std::abs(y) > clamp) return 0.0;
            double p = 0.0;
            for (size_t k = coeffs.size(); k-- > 1;)
                p = p * y + static_cast<double>(k) * coeffs[k];
            return p;
        }
    }
    return 0.0;
}

Vector NonlinSpec::eval(const Vector& y) const {
    Vector out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) out(i) = eval1(y(i));
    return out;
}

Matrix NonlinSpec::deriv(const Vector& y) const {
    Vector d(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) d(i) = deriv1(y(i));
    return d.asDiagonal();
}

double NonlinSpec::analytic_lipschitz() const {
    switch (kind) {
        case NonlinKind::Zero:
            return 0.0;
        case NonlinKind::Sigmoid:
            return std::abs(scale * gain);
        case NonlinKind::SaturatedCubic:
            // sup of (3u+u^2)/(1+u)^2 over u = y^2 >= 0 sits at u = 3
            return 1.125 * std::abs(scale);
        case NonlinKind::PolyClamp: {
            double sup = 0.0;
            const int grid = 20001;
            for (int i = 0; i < grid; ++i) {
                const double y = -clamp + 2.0 * clamp * i / (grid - 1);
                sup = std::max(sup, std::abs(deriv1(y)));
            }
            return sup;
        }
    }
    return 0.0;
}

void check_lipschitz(const NonlinSpec& F, int samples, std::uint64_t seed) {
    if (F.kind == NonlinKind::Zero) return;
    Rng rng(seed);
    const double R = (F.kind == NonlinKind::PolyClamp) ? 1.5 * F.clamp : 12.0;
    const double slack = 1e-9 * std::max(1.0, F.lambda);
    for (int i = 0; i < samples; ++i) {
        const double y1 = rng.uniform(-R, R);
        // log-scaled gaps so local slopes near the steep region are sampled
        const double gap = rng.uniform(-1, 1) * std::pow(10.0, rng.uniform(-6, 0));
        const double y2 = y1 + gap;
        const double dy = std::abs(y1 - y2);
        if (dy < 1e-300) continue;
        const double df = std::abs(F.eval1(y1) - F.eval1(y2));
        if (df > (F.lambda + slack) * dy)
            throw LipschitzViolation("slope " + std::to_string(df / dy) + " > " +
                                     std::to_string(F.lambda) + " at pair (" +
                                     std::to_string(y1) + ", " + std::to_string(y2) + ")");
    }
}

// ---------------------------------------------------------------------------
// driving system

int ForcingSpec::driving_dim() const {
    switch (mode) {
        case ForcingMode::None:
            return 0;
        case ForcingMode::Periodic:
            return 1;
        case ForcingMode::Quasiperiodic:
            return static_cast<int>(omega.size());
    }
    return 0;
}

namespace {
double wrap(double x, double period) {
    double y = std::fmod(x, period);
    if (y < 0) y += period;
    return y;
}
}  // namespace

Vector ForcingSpec::flow(const Vector& q0, double t) const {
    switch (mode) {
        case ForcingMode::None:
            return Vector(0);
        case ForcingMode::Periodic: {
            Vector q(1);
            q(0) = wrap((q0.size() > 0 ? q0(0) : 0.0) + t, sigma);
            return q;
        }
        case ForcingMode::Quasiperiodic: {
            Vector q(omega.size());
            for (Eigen::Index k = 0; k < omega.size(); ++k)
                q(k) = wrap((q0.size() > k ? q0(k) : 0.0) + omega(k) * t, 1.0);
            return q;
        }
    }
    return Vector(0);
}

Vector ForcingSpec::eval(const Vector& q, int n) const {
    if (mode == ForcingMode::None || w0.size() == 0) return Vector::Zero(n);
    Vector w = w0;
    if (mode == ForcingMode::Periodic) {
        const double ph = 2.0 * M_PI * q(0) / sigma;
        w += wc.col(0) * std::cos(ph) + ws.col(0) * std::sin(ph);
    } else {
        for (Eigen::Index k = 0; k < omega.size(); ++k) {
            const double ph = 2.0 * M_PI * q(k);
            w += wc.col(k) * std::cos(ph) + ws.col(k) * std::sin(ph);
        }
    }
    return w;
}

// ---------------------------------------------------------------------------
// system evaluation

Vector SystemSpec::rhs(const Vector& v, const Vector& q) const {
    if (v.size() != A.rows()) throw DimensionError("rhs: state has wrong dimension");
    Vector out = A * v;
    if (F.kind != NonlinKind::Zero) out += B * F.eval(C * v);
    if (forcing.mode != ForcingMode::None) out += forcing.eval(q, n());
    return out;
}

Matrix SystemSpec::jacobian(const Vector& v) const {
    if (F.kind == NonlinKind::Zero) return A;
    return A + B * F.deriv(C * v) * C;
}

// ---------------------------------------------------------------------------
// JSON schema

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw SchemaError(where + "." + it.key() + ": unknown field");
}

const Json& need(const Json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw SchemaError(where + "." + key + ": missing");
    return j.at(key);
}

double need_num(const Json& j, const std::string& key, const std::string& where) {
    const Json& v = need(j, key, where);
    if (!v.is_number()) throw SchemaError(where + "." + key + ": expected a number");
    return v.get<double>();
}

NonlinSpec nonlin_from_json(const Json& j, const std::string& where) {
    check_keys(j, {"kind", "params", "lambda"}, where);
    NonlinSpec F;
    const std::string kind = need(j, "kind", where).get<std::string>();
    const Json params = j.contains("params") ? j.at("params") : Json::object();
    const std::string pw = where + ".params";
    if (kind == "zero") {
        F.kind = NonlinKind::Zero;
        check_keys(params, {}, pw);
    } else if (kind == "sigmoid") {
        F.kind = NonlinKind::Sigmoid;
        check_keys(params, {"scale", "gain"}, pw);
        F.scale = need_num(params, "scale", pw);
        F.gain = need_num(params, "gain", pw);
    } else if (kind == "saturated-cubic") {
        F.kind = NonlinKind::SaturatedCubic;
        check_keys(params, {"scale"}, pw);
        F.scale = need_num(params, "scale", pw);
    } else if (kind == "polynomial-with-clamp") {
        F.kind = NonlinKind::PolyClamp;
        check_keys(params, {"coeffs", "clamp"}, pw);
        const Vector c = vector_from_json(need(params, "coeffs", pw), pw + ".coeffs");
        F.coeffs.assign(c.data(), c.data() + c.size());
        F.clamp = need_num(params, "clamp", pw);
        if (F.clamp <= 0) throw SchemaError(pw + ".clamp: must be positive");
    } else {
        throw SchemaError(where + ".kind: unknown nonlinearity '" + kind + "'");
    }
    F.lambda = need_num(j, "lambda", where);
    if (F.lambda < 0) throw SchemaError(where + ".lambda: must be nonnegative");
    return F;
}

Json nonlin_to_json(const NonlinSpec& F) {
    Json j;
    Json params = Json::object();
    switch (F.kind) {
        case NonlinKind::Zero:
            j["kind"] = "zero";
            break;
        case NonlinKind::Sigmoid:
            j["kind"] = "sigmoid";
            params["scale"] = F.scale;
            params["gain"] = F.gain;
            break;
        case NonlinKind::SaturatedCubic:
            j["kind"] = "saturated-cubic";
            params["scale"] = F.scale;
            break;
        case NonlinKind::PolyClamp: {
            j["kind"] = "polynomial-with-clamp";
            Json c = Json::array();
            for (double ck : F.coeffs) c.push_back(ck);
            params["coeffs"] = c;
            params["clamp"] = F.clamp;
            break;
        }
    }
    j["params"] = params;
    j["lambda"] = F.lambda;
    return j;
}

ForcingSpec forcing_from_json(const Json& j, int n, const std::string& where) {
    ForcingSpec f;
    const std::string mode = need(j, "mode", where).get<std::string>();
    if (mode == "none") {
        check_keys(j, {"mode"}, where);
        return f;
    }
    if (mode == "periodic") {
        check_keys(j, {"mode", "sigma", "w0", "wc", "ws"}, where);
        f.mode = ForcingMode::Periodic;
        f.sigma = need_num(j, "sigma", where);
        if (f.sigma <= 0) throw SchemaError(where + ".sigma: must be positive");
        f.w0 = vector_from_json(need(j, "w0", where), where + ".w0");
        f.wc = vector_from_json(need(j, "wc", where), where + ".wc");
        f.ws = vector_from_json(need(j, "ws", where), where + ".ws");
    } else if (mode == "quasiperiodic") {
        check_keys(j, {"mode", "omega", "w0", "wc", "ws"}, where);
        f.mode = ForcingMode::Quasiperiodic;
        f.omega = vector_from_json(need(j, "omega", where), where + ".omega");
        if (f.omega.size() < 1 || f.omega.size() > 3)
            throw SchemaError(where + ".omega: torus dimension must be 1..3");
        if (f.omega.cwiseAbs().minCoeff() <= 0)
            throw SchemaError(where + ".omega: frequencies must be nonzero");
        f.w0 = vector_from_json(need(j, "w0", where), where + ".w0");
        f.wc = matrix_from_json(need(j, "wc", where), where + ".wc");
        f.ws = matrix_from_json(need(j, "ws", where), where + ".ws");
        if (f.wc.cols() != f.omega.size() || f.ws.cols() != f.omega.size())
            throw SchemaError(where + ".wc/ws: need one column per torus frequency");
    } else {
        throw SchemaError(where + ".mode: unknown mode '" + mode + "'");
    }
    if (f.w0.size() != n || f.wc.rows() != n || f.ws.rows() != n)
        throw SchemaError(where + ": coefficient rows must equal the state dimension " +
                          std::to_string(n));
    return f;
}

Json forcing_to_json(const ForcingSpec& f) {
    Json j;
    switch (f.mode) {
        case ForcingMode::None:
            j["mode"] = "none";
            return j;
        case ForcingMode::Periodic:
            j["mode"] = "periodic";
            j["sigma"] = f.sigma;
            j["w0"] = vector_to_json(f.w0);
            j["wc"] = vector_to_json(f.wc.col(0));
            j["ws"] = vector_to_json(f.ws.col(0));
            return j;
        case ForcingMode::Quasiperiodic:
            j["mode"] = "quasiperiodic";
            j["omega"] = vector_to_json(f.omega);
            j["w0"] = vector_to_json(f.w0);
            j["wc"] = matrix_to_json(f.wc);
            j["ws"] = matrix_to_json(f.ws);
            return j;
    }
    return j;
}

std::vector<DelayTap> taps_from_json(const Json& j, double tau, const std::string& where) {
    if (!j.is_array()) throw SchemaError(where + ": expected an array");
    std::vector<DelayTap> taps;
    double total_variation = 0.0;
    for (size_t i = 0; i < j.size(); ++i) {
        const std::string tw = where + "[" + std::to_string(i) + "]";
        check_keys(j[i], {"theta", "weight"}, tw);
        DelayTap tap;
        tap.theta = need_num(j[i], "theta", tw);
        if (tap.theta < -tau - 1e-12 || tap.theta > 1e-12)
            throw SchemaError(tw + ".theta: must lie in [-tau, 0]");
        tap.weight = matrix_from_json(need(j[i], "weight", tw), tw + ".weight");
        total_variation += operator_norm2(tap.weight);
        taps.push_back(tap);
    }
    if (total_variation > 1.0 + 1e-12)
        throw SchemaError(where + ": total variation " + std::to_string(total_variation) +
                          " exceeds 1");
    return taps;
}

Json taps_to_json(const std::vector<DelayTap>& taps) {
    Json arr = Json::array();
    for (const auto& tap : taps) {
        Json t;
        t["theta"] = tap.theta;
        t["weight"] = matrix_to_json(tap.weight);
        arr.push_back(t);
    }
    return arr;
}

DelaySpec delay_from_json(const Json& j, const std::string& where) {
    check_keys(j, {"tau", "d0_norm", "chain_order", "b_tilde", "a_taps", "c_taps", "d_taps"},
               where);
    DelaySpec d;
    d.tau = need_num(j, "tau", where);
    if (d.tau <= 0) throw SchemaError(where + ".tau: must be positive");
    d.d0_norm = j.contains("d0_norm") ? need_num(j, "d0_norm", where) : 0.0;
    d.chain_order = j.contains("chain_order")
                        ? static_cast<int>(need_num(j, "chain_order", where))
                        : 64;
    if (d.chain_order < 1) throw SchemaError(where + ".chain_order: must be >= 1");
    d.b_tilde = matrix_from_json(need(j, "b_tilde", where), where + ".b_tilde");
    d.a_taps = j.contains("a_taps") ? taps_from_json(j.at("a_taps"), d.tau, where + ".a_taps")
                                    : std::vector<DelayTap>{};
    d.c_taps = j.contains("c_taps") ? taps_from_json(j.at("c_taps"), d.tau, where + ".c_taps")
                                    : std::vector<DelayTap>{};
    d.d_taps = j.contains("d_taps") ? taps_from_json(j.at("d_taps"), d.tau, where + ".d_taps")
                                    : std::vector<DelayTap>{};
    return d;
}

Json delay_to_json(const DelaySpec& d) {
    Json j;
    j["tau"] = d.tau;
    j["d0_norm"] = d.d0_norm;
    j["chain_order"] = d.chain_order;
    j["b_tilde"] = matrix_to_json(d.b_tilde);
    j["a_taps"] = taps_to_json(d.a_taps);
    j["c_taps"] = taps_to_json(d.c_taps);
    j["d_taps"] = taps_to_json(d.d_taps);
    return j;
}

GalerkinSpec galerkin_from_json(const Json& j, const std::string& where) {
    check_keys(j, {"lambdas", "alpha", "beta", "N"}, where);
    GalerkinSpec g;
    const Vector l = vector_from_json(need(j, "lambdas", where), where + ".lambdas");
    g.lambdas.assign(l.data(), l.data() + l.size());
    g.alpha = need_num(j, "alpha", where);
    g.beta = need_num(j, "beta", where);
    g.N = static_cast<int>(need_num(j, "N", where));
    if (g.N != static_cast<int>(g.lambdas.size()))
        throw SchemaError(where + ".N: must match lambdas length");
    for (size_t i = 0; i < g.lambdas.size(); ++i) {
        if (g.lambdas[i] <= 0) throw SchemaError(where + ".lambdas: must be strictly positive");
        if (i > 0 && g.lambdas[i] < g.lambdas[i - 1])
            throw SchemaError(where + ".lambdas: must be nondecreasing");
    }
    if (!(0 <= g.beta && g.beta <= g.alpha && g.alpha < 1))
        throw SchemaError(where + ".alpha/beta: need 0 <= beta <= alpha < 1");
    return g;
}

Json galerkin_to_json(const GalerkinSpec& g) {
    Json j;
    Json l = Json::array();
    for (double lk : g.lambdas) l.push_back(lk);
    j["lambdas"] = l;
    j["alpha"] = g.alpha;
    j["beta"] = g.beta;
    j["N"] = g.N;
    return j;
}

}  // namespace

SystemSpec system_from_json(const Json& j, const std::string& where) {
    check_keys(j, {"family", "name", "A", "B", "C", "nonlinearity", "forcing", "delay", "galerkin"},
               where);
    const std::string family = need(j, "family", where).get<std::string>();
    const NonlinSpec F = nonlin_from_json(need(j, "nonlinearity", where), where + ".nonlinearity");
    check_lipschitz(F);

    SystemSpec sys;
    if (j.contains("name")) sys.name = j.at("name").get<std::string>();

    if (family == "ode") {
        sys.family = Family::Ode;
        sys.A = matrix_from_json(need(j, "A", where), where + ".A");
        sys.B = matrix_from_json(need(j, "B", where), where + ".B");
        sys.C = matrix_from_json(need(j, "C", where), where + ".C");
        sys.F = F;
        if (j.contains("delay") || j.contains("galerkin"))
            throw SchemaError(where + ": ode family takes no delay/galerkin block");
    } else if (family == "delay-discretized") {
        if (j.contains("A") || j.contains("B") || j.contains("C"))
            throw SchemaError(where + ": delay-discretized derives A/B/C from the delay block");
        const DelaySpec d = delay_from_json(need(j, "delay", where), where + ".delay");
        ForcingSpec forcing;
        if (j.contains("forcing"))
            forcing = forcing_from_json(j.at("forcing"), d.state_dim(), where + ".forcing");
        SystemSpec chain = discretize_delay(d, F, forcing);
        chain.name = sys.name;
        return chain;
    } else if (family == "parabolic-galerkin") {
        if (j.contains("A"))
            throw SchemaError(where + ": parabolic-galerkin derives A from the galerkin block");
        const GalerkinSpec g = galerkin_from_json(need(j, "galerkin", where), where + ".galerkin");
        std::optional<Matrix> B, C;
        if (j.contains("B")) B = matrix_from_json(j.at("B"), where + ".B");
        if (j.contains("C")) C = matrix_from_json(j.at("C"), where + ".C");
        SystemSpec gs = galerkin_system(g, F, B, C);
        gs.name = sys.name;
        if (j.contains("forcing"))
            gs.forcing = forcing_from_json(j.at("forcing"), gs.n(), where + ".forcing");
        return gs;
    } else {
        throw SchemaError(where + ".family: unknown family '" + family + "'");
    }

    if (sys.A.rows() != sys.A.cols()) throw SchemaError(where + ".A: must be square");
    if (sys.B.rows() != sys.A.rows())
        throw SchemaError(where + ".B: row count must match state dimension");
    if (sys.C.cols() != sys.A.rows())
        throw SchemaError(where + ".C: column count must match state dimension");
    if (sys.B.cols() != sys.C.rows())
        throw SchemaError(where + ".B/C: input dimension must match measurement dimension");
    if (j.contains("forcing"))
        sys.forcing = forcing_from_json(j.at("forcing"), sys.n(), where + ".forcing");
    return sys;
}

SystemSpec load_system(const std::string& path) {
    return system_from_json(parse_json_file(path), path);
}

Json system_to_json(const SystemSpec& sys) {
    Json j;
    switch (sys.family) {
        case Family::Ode:
            j["family"] = "ode";
            break;
        case Family::DelayDiscretized:
            j["family"] = "delay-discretized";
            break;
        case Family::ParabolicGalerkin:
            j["family"] = "parabolic-galerkin";
            break;
    }
    if (!sys.name.empty()) j["name"] = sys.name;
    if (sys.family == Family::Ode) {
        j["A"] = matrix_to_json(sys.A);
        j["B"] = matrix_to_json(sys.B);
        j["C"] = matrix_to_json(sys.C);
    } else if (sys.family == Family::ParabolicGalerkin) {
        j["B"] = matrix_to_json(sys.B);
        j["C"] = matrix_to_json(sys.C);
    }
    j["nonlinearity"] = nonlin_to_json(sys.F);
    ForcingSpec persisted = sys.forcing;
    if (sys.family == Family::DelayDiscretized && sys.delay &&
        persisted.mode != ForcingMode::None) {
        // the chain pads the head forcing with zeros; persist the head block
        const int nx = sys.delay->state_dim();
        persisted.w0 = Vector(sys.forcing.w0.head(nx));
        persisted.wc = Matrix(sys.forcing.wc.topRows(nx));
        persisted.ws = Matrix(sys.forcing.ws.topRows(nx));
    }
    j["forcing"] = forcing_to_json(persisted);
    if (sys.family == Family::DelayDiscretized && sys.delay) j["delay"] = delay_to_json(*sys.delay);
    if (sys.family == Family::ParabolicGalerkin && sys.galerkin)
        j["galerkin"] = galerkin_to_json(*sys.galerkin);
    return j;
}

void save_system(const SystemSpec& sys, const std::string& path) {
    write_json_file(path, system_to_json(sys));
}

SystemSpec discretize_delay(const DelaySpec& spec, const NonlinSpec& F,
                            const ForcingSpec& forcing) {
    if (spec.d0_norm > 0) throw UnsupportedNeutralTerm("d0_norm > 0");
    for (const auto& tap : spec.d_taps)
        if (operator_norm2(tap.weight) > 0) throw UnsupportedNeutralTerm("nonzero neutral tap");
    const int nx = spec.state_dim();
    const int N = spec.chain_order;
    const int nv = nx * (N + 1);
    const double rate = N / spec.tau;

    // state (x, u_1..u_N) with u_i ~ x(t - i tau / N); taps read the nearest node
    auto node_of = [&](double theta) {
        const int i = static_cast<int>(std::lround(-theta * N / spec.tau));
        return std::clamp(i, 0, N);
    };

    SystemSpec sys;
    sys.family = Family::DelayDiscretized;
    sys.A = Matrix::Zero(nv, nv);
    for (const auto& tap : spec.a_taps)
        sys.A.block(0, node_of(tap.theta) * nx, nx, nx) += tap.weight;
    for (int i = 1; i <= N; ++i) {
        sys.A.block(i * nx, i * nx, nx, nx) -= rate * Matrix::Identity(nx, nx);
        sys.A.block(i * nx, (i - 1) * nx, nx, nx) += rate * Matrix::Identity(nx, nx);
    }

    sys.B = Matrix::Zero(nv, spec.b_tilde.cols());
    sys.B.topRows(nx) = spec.b_tilde;

    const int ry = static_cast<int>(spec.b_tilde.cols());
    sys.C = Matrix::Zero(ry, nv);
    for (const auto& tap : spec.c_taps) {
        if (tap.weight.rows() != ry || tap.weight.cols() != nx)
            throw DimensionError("discretize_delay: c_tap weight must be " + std::to_string(ry) +
                                 "x" + std::to_string(nx));
        sys.C.block(0, node_of(tap.theta) * nx, ry, nx) += tap.weight;
    }

    sys.F = F;
    sys.delay = spec;
    if (forcing.mode != ForcingMode::None) {
        ForcingSpec padded = forcing;
        padded.w0 = Vector::Zero(nv);
        padded.w0.head(nx) = forcing.w0;
        const Eigen::Index d = forcing.wc.cols();
        padded.wc = Matrix::Zero(nv, d);
        padded.wc.topRows(nx) = forcing.wc;
        padded.ws = Matrix::Zero(nv, d);
        padded.ws.topRows(nx) = forcing.ws;
        sys.forcing = padded;
    }
    return sys;
}

SystemSpec galerkin_system(const GalerkinSpec& spec, const NonlinSpec& F,
                           const std::optional<Matrix>& B, const std::optional<Matrix>& C) {
    const int N = spec.N;
    if (N < 1) throw DimensionError("galerkin_system: empty truncation");
    SystemSpec sys;
    sys.family = Family::ParabolicGalerkin;
    Vector diag(N);
    for (int i = 0; i < N; ++i) diag(i) = -spec.lambdas[static_cast<size_t>(i)];
    sys.A = diag.asDiagonal();
    sys.B = B.value_or(Matrix::Identity(N, N));
    sys.C = C.value_or(Matrix::Identity(N, N));
    if (sys.B.rows() != N) throw DimensionError("galerkin_system: B rows must equal N");
    if (sys.C.cols() != N) throw DimensionError("galerkin_system: C cols must equal N");
    sys.F = F;
    sys.galerkin = spec;
    return sys;
}

}  // namespace imtk
