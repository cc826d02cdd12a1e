#include "imtk/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "imtk/conditions.hpp"
#include "imtk/errors.hpp"
#include "imtk/flow.hpp"
#include "imtk/linalg.hpp"
#include "imtk/rng.hpp"

namespace imtk {

double ConeField::V_kappa(const Vector& v, double kappa) const {
    const Vector vm = Pi * v;
    const Vector vp = v - vm;
    return V(vp) + kappa * kappa * V(vm);
}

Json ConeField::to_json() const {
    Json js;
    js["P"] = matrix_to_json(P);
    js["nu0"] = nu0;
    js["delta_P"] = delta_P;
    js["tau_P"] = tau_P;
    js["j"] = j;
    js["Eminus"] = matrix_to_json(Eminus);
    js["Eplus"] = matrix_to_json(Eplus);
    js["Pi"] = matrix_to_json(Pi);
    js["C_q"] = C_q;
    js["M_P"] = M_P;
    js["M_Pi"] = M_Pi;
    js["kappa0"] = kappa0;
    return js;
}

ConeField ConeField::from_json(const Json& js) {
    static const char* keys[] = {"P",  "nu0", "delta_P", "tau_P", "j",    "Eminus",
                                 "Eplus", "Pi", "C_q",   "M_P",   "M_Pi", "kappa0"};
    for (const char* k : keys)
        if (!js.contains(k)) throw SchemaError(std::string("cone field: missing key ") + k);
    for (const auto& item : js.items()) {
        if (std::find_if(std::begin(keys), std::end(keys), [&](const char* k) {
                return item.key() == k;
            }) == std::end(keys))
            throw SchemaError("cone field: unknown key " + item.key());
    }
    ConeField cf;
    cf.P = matrix_from_json(js["P"], "cone.P");
    cf.nu0 = js["nu0"].get<double>();
    cf.delta_P = js["delta_P"].get<double>();
    cf.tau_P = js["tau_P"].get<double>();
    cf.j = js["j"].get<int>();
    cf.Eminus = matrix_from_json(js["Eminus"], "cone.Eminus");
    cf.Eplus = matrix_from_json(js["Eplus"], "cone.Eplus");
    cf.Pi = matrix_from_json(js["Pi"], "cone.Pi");
    cf.C_q = js["C_q"].get<double>();
    cf.M_P = js["M_P"].get<double>();
    cf.M_Pi = js["M_Pi"].get<double>();
    cf.kappa0 = js["kappa0"].get<double>();
    return cf;
}

void validate_cone_field(const ConeField& cf, std::uint64_t seed) {
    const int n = static_cast<int>(cf.P.rows());
    if (cf.P.cols() != n || n == 0) throw DimensionError("cone field: P not square");
    const double np = operator_norm2(cf.P);
    if (operator_norm2(cf.P - cf.P.transpose()) > 1e-12 * std::max(1.0, np))
        throw Error("cone field: P not symmetric");
    if (cf.j < 0 || cf.j > n) throw DimensionError("cone field: j out of range");
    const Inertia in = inertia_of(cf.P);
    if (in.zero != 0 || in.neg != cf.j || in.pos != n - cf.j)
        throw InertiaMismatch("cone field: inertia (" + std::to_string(in.neg) + "," +
                              std::to_string(in.zero) + "," + std::to_string(in.pos) +
                              ") vs expected (" + std::to_string(cf.j) + ",0," +
                              std::to_string(n - cf.j) + ")");
    if (cf.Eminus.rows() != n || cf.Eminus.cols() != cf.j || cf.Eplus.rows() != n ||
        cf.Eplus.cols() != n - cf.j)
        throw DimensionError("cone field: basis shapes");
    if (cf.tau_P != 0.0) throw Error("cone field: tau_P must be 0");
    if (cf.delta_P < 0.0) throw Error("cone field: delta_P negative");
    if (!(cf.kappa0 >= 0.0) || cf.kappa0 > 1.0) throw Error("cone field: kappa0 outside [0,1]");

    // definiteness on the splitting
    if (cf.j > 0) {
        const SymmetricEigen em = sym_eigen(cf.Eminus.transpose() * cf.P * cf.Eminus);
        if (em.values.maxCoeff() >= 0.0) throw Error("cone field: V not negative on Eminus");
    }
    if (cf.j < n) {
        const SymmetricEigen ep = sym_eigen(cf.Eplus.transpose() * cf.P * cf.Eplus);
        if (ep.values.minCoeff() <= 0.0) throw Error("cone field: V not positive on Eplus");
    }

    if (operator_norm2(cf.Pi * cf.Pi - cf.Pi) > 1e-10)
        throw NotAdmissibleProjector("cone field: Pi not idempotent");
    if (cf.j > 0 && operator_norm2(cf.Pi * cf.Eminus - cf.Eminus) > 1e-9)
        throw NotAdmissibleProjector("cone field: Pi does not fix Eminus");
    if (cf.j < n && operator_norm2(cf.Pi * cf.Eplus) > 1e-9)
        throw NotAdmissibleProjector("cone field: Pi does not kill Eplus");

    Rng rng(seed);
    for (int t = 0; t < 100; ++t) {
        const Vector v = rng.gauss_vec(n);
        const Vector vm = cf.Pi * v;
        const double gap = std::abs(cf.V(v) - cf.V(vm) - cf.V(v - vm));
        if (gap > 1e-9 * std::max(1.0, np) * v.squaredNorm())
            throw NotAdmissibleProjector("cone field: splitting not V-orthogonal");
    }

    const double npi = operator_norm2(cf.Pi);
    if (std::abs(cf.M_P - np) > 1e-9 * std::max(1.0, np)) throw Error("cone field: stale M_P");
    if (std::abs(cf.M_Pi - npi) > 1e-9 * std::max(1.0, npi)) throw Error("cone field: stale M_Pi");
    if (cf.j > 0) {
        if (!(cf.C_q > 0.0)) throw Error("cone field: C_q must be positive");
        if (npi > np / (cf.C_q * cf.C_q) + 1e-9) throw Error("cone field: ||Pi|| bound violated");
    }
}

namespace {

// Orthogonal controllability staircase: T^T A T = [[Ac, A12],[0, Au]] with
// (Ac, Bc) controllable, T^T B = [Bc; 0]. Returns the controllable dimension.
int staircase(const Matrix& A, const Matrix& B, Matrix& T) {
    const int n = static_cast<int>(A.rows());
    T = Matrix::Identity(n, n);
    const double scale = std::max({1.0, operator_norm2(A), operator_norm2(B)});
    Matrix Acur = A;
    Matrix Bcur = B;
    int k = 0;
    while (k < n && Bcur.cols() > 0) {
        Eigen::JacobiSVD<Matrix> svd(Bcur, Eigen::ComputeFullU);
        int r = 0;
        for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-9 * scale) ++r;
        if (r == 0) break;
        Matrix G = Matrix::Identity(n, n);
        G.bottomRightCorner(n - k, n - k) = svd.matrixU();
        Acur = (G.transpose() * Acur * G).eval();
        T = (T * G).eval();
        const int prev = k;
        k += r;
        if (k >= n) break;
        Bcur = Acur.block(k, prev, n - k, r);
    }
    return k;
}

// M X + X N + R = 0 by Kronecker elimination; sized for small coupling blocks.
Matrix sylvester_small(const Matrix& M, const Matrix& N, const Matrix& R) {
    const int p = static_cast<int>(M.rows()), q = static_cast<int>(N.cols());
    if (static_cast<long>(p) * q > 10000)
        throw NoConvergence("coupling block too large for dense Sylvester solve");
    Matrix K = Matrix::Zero(p * q, p * q);
    for (int c = 0; c < q; ++c) K.block(p * c, p * c, p, p) = M;
    for (int c = 0; c < q; ++c)
        for (int c2 = 0; c2 < q; ++c2)
            K.block(p * c, p * c2, p, p) += N(c2, c) * Matrix::Identity(p, p);
    Vector rv(p * q);
    for (int c = 0; c < q; ++c) rv.segment(p * c, p) = -R.col(c);
    Vector xv;
    try {
        xv = solve_linear(K, rv);
    } catch (const SingularMatrix&) {
        throw XSingular("resonant spectra in the coupling Sylvester solve");
    }
    Matrix X(p, q);
    for (int c = 0; c < q; ++c) X.col(c) = xv.segment(p * c, p);
    return X;
}

// Riccati solution over the stable invariant subspace of the Hamiltonian,
// for a controllable pair (Anu, B) and packaged cost Q >= 0.
Matrix riccati_stable(const Matrix& Anu, const Matrix& B, const Matrix& Q) {
    const int n = static_cast<int>(Anu.rows());
    Matrix H(2 * n, 2 * n);
    H.topLeftCorner(n, n) = Anu;
    H.topRightCorner(n, n) = B * B.transpose();
    H.bottomLeftCorner(n, n) = -Q;
    H.bottomRightCorner(n, n) = -Anu.transpose();

    const GeneralEigen ge = eig_general(H);
    int stable = 0;
    double axis = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 2 * n; ++i) {
        axis = std::min(axis, std::abs(ge.eigenvalues()(i).real()));
        if (ge.eigenvalues()(i).real() < 0.0) ++stable;
    }
    if (axis < 1e-9 * std::max(1.0, operator_norm2(H)) || stable != n)
        throw HamiltonianEigsOnAxis("Hamiltonian spectrum touches the imaginary axis (min |Re| = " +
                                    std::to_string(axis) + ")");

    const Matrix Z = ge.invariant_subspace([](const Complex& z) { return z.real() < 0.0; });
    const Matrix X = Z.topRows(n), Y = Z.bottomRows(n);
    Matrix P;
    try {
        P = solve_linear(X.transpose(), Y.transpose()).transpose();
    } catch (const SingularMatrix&) {
        throw XSingular("stable subspace has singular state projection");
    }
    return ((P + P.transpose()) / 2.0).eval();
}

// Dichotomy Riccati A^T P + P A + P B B^T P + Q = 0: stabilizing on the
// controllable part, uncontrollable hyperbolic modes keep their own splitting.
Matrix riccati_dichotomy(const Matrix& Anu, const Matrix& B, const Matrix& Q) {
    const int n = static_cast<int>(Anu.rows());
    Matrix T;
    const int nc = staircase(Anu, B, T);
    Matrix P;
    if (nc == n) {
        P = riccati_stable(Anu, B, Q);
    } else {
        const Matrix At = T.transpose() * Anu * T;
        const Matrix Bt = T.transpose() * B;
        const Matrix Qt = T.transpose() * Q * T;
        const Matrix Ac = At.topLeftCorner(nc, nc), A12 = At.topRightCorner(nc, n - nc);
        const Matrix Au = At.bottomRightCorner(n - nc, n - nc);
        const Matrix Bc = Bt.topRows(nc);
        Matrix Pt = Matrix::Zero(n, n);
        Matrix Px(nc, 0);
        if (nc > 0) {
            const Matrix Pc = riccati_stable(Ac, Bc, Qt.topLeftCorner(nc, nc));
            const Matrix Acl = Ac + Bc * Bc.transpose() * Pc;
            Px = sylvester_small(Acl.transpose(), Au,
                                 Pc * A12 + Qt.topRightCorner(nc, n - nc));
            Pt.topLeftCorner(nc, nc) = Pc;
            Pt.topRightCorner(nc, n - nc) = Px;
            Pt.bottomLeftCorner(n - nc, nc) = Px.transpose();
        } else {
            Px = Matrix::Zero(0, n);
        }
        Matrix Ru = Qt.bottomRightCorner(n - nc, n - nc);
        if (nc > 0)
            Ru += A12.transpose() * Px + Px.transpose() * A12 +
                  Px.transpose() * Bc * Bc.transpose() * Px;
        Pt.bottomRightCorner(n - nc, n - nc) = sylvester_small(Au.transpose(), Au, Ru);
        P = T * Pt * T.transpose();
        P = ((P + P.transpose()) / 2.0).eval();
    }

    const Matrix R = Anu.transpose() * P + P * Anu + P * B * B.transpose() * P + Q;
    const double scale = std::max(1.0, operator_norm2(P)) * std::max(1.0, operator_norm2(Anu));
    if (operator_norm2(R) > 1e-7 * scale)
        throw NoConvergence("Riccati residual " + std::to_string(operator_norm2(R)));
    return P;
}

}  // namespace

ConeField synthesize_P(const SystemSpec& sys, double nu0, const SynthesisOptions& opts) {
    const int n = sys.n();
    const double Lambda = opts.lambda_override.value_or(sys.lambda());
    const Matrix Anu = sys.A + nu0 * Matrix::Identity(n, n);
    const int j = count_unstable(sys.A, nu0).first;

    double delta;
    if (opts.delta_override) {
        delta = *opts.delta_override;
        if (delta < 0.0) throw Error("synthesize_P: negative delta");
    } else {
        // delta-fraction of the squared frequency margin, scaled by the worst
        // input-to-state gain on the shifted axis.
        const double supW =
            Lambda > 0.0
                ? sweep_supremum(TransferFunction::rational(sys.A, sys.B, sys.C), nu0).sup
                : 0.0;
        const double s_min = 1.0 - Lambda * Lambda * supW * supW;
        const double g =
            sweep_supremum(TransferFunction::rational(Anu, sys.B, Matrix::Identity(n, n)), 0.0)
                .sup;
        const double gg = g > 0.0 ? g * g : 1.0;  // no input channel: unit gain scale
        delta = s_min > 0.0 ? opts.delta_fraction * s_min / gg : 0.0;
    }

    Matrix P;
    for (int attempt = 0;; ++attempt) {
        try {
            const Matrix Q = Lambda * Lambda * sys.C.transpose() * sys.C +
                             delta * Matrix::Identity(n, n);
            P = riccati_dichotomy(Anu, sys.B, Q);
            break;
        } catch (const Error&) {
            if (opts.delta_override || attempt >= 8 || delta <= 0.0) throw;
            delta /= 2.0;  // marginal solvability: back off along a halving ladder
        }
    }

    // quadratic-form certificate: the full dissipation block must be <= 0
    const int m = sys.m();
    Matrix L(n + m, n + m);
    L.topLeftCorner(n, n) = Anu.transpose() * P + P * Anu +
                            Lambda * Lambda * sys.C.transpose() * sys.C +
                            delta * Matrix::Identity(n, n);
    L.topRightCorner(n, m) = P * sys.B;
    L.bottomLeftCorner(m, n) = sys.B.transpose() * P;
    L.bottomRightCorner(m, m) = -Matrix::Identity(m, m);
    const SymmetricEigen le = sym_eigen(L);
    if (le.values.maxCoeff() > 1e-8)
        throw NoConvergence("dissipation block max eigenvalue " +
                            std::to_string(le.values.maxCoeff()));

    const Inertia in = inertia_of(P);
    if (in.zero != 0 || in.neg != j || in.pos != n - j)
        throw InertiaMismatch("P inertia (" + std::to_string(in.neg) + "," +
                              std::to_string(in.zero) + "," + std::to_string(in.pos) +
                              ") vs splitting dimension " + std::to_string(j));

    ConeField cf;
    cf.P = P;
    cf.nu0 = nu0;
    cf.delta_P = delta;
    cf.tau_P = 0.0;
    cf.j = j;
    const SymmetricEigen pe = sym_eigen(P);  // ascending, negatives first
    cf.Eminus = pe.vectors.leftCols(j);
    cf.Eplus = pe.vectors.rightCols(n - j);
    cf.Pi = cf.Eminus * cf.Eminus.transpose();
    cf.C_q = j > 0 ? std::sqrt(-pe.values(j - 1)) : std::numeric_limits<double>::infinity();
    cf.M_P = operator_norm2(P);
    cf.M_Pi = operator_norm2(cf.Pi);
    cf.kappa0 = kappa_analytic(cf, std::max(1.0, Lambda), 0.0);
    validate_cone_field(cf);
    return cf;
}

double kappa_analytic(const ConeField& cf, double L, double tau_S) {
    if (L < 1.0) throw Error("kappa threshold: L must be at least 1");
    if (cf.j == 0) return 0.0;  // no contracting directions to shrink around
    const double rhs = (cf.delta_P / 2.0) *
                       std::exp(-2.0 * std::abs(cf.nu0) * (tau_S + 1.0)) /
                       (cf.M_P * cf.M_Pi * cf.M_Pi * L * L);
    if (rhs >= 1.0) return 0.0;
    return std::sqrt(1.0 - rhs);
}

double kappa_threshold(const SystemSpec& sys, const ConeField& cf, double L, double tau_S,
                       int pairs, std::uint64_t seed) {
    if (L < 1.0) throw Error("kappa threshold: L must be at least 1");
    const int n = sys.n();
    if (cf.j == 0) return 0.05;  // V^(kappa) degenerates to V(v+); any factor works

    const double T = tau_S + 2.0;
    double h = default_step(sys);
    const int steps = static_cast<int>(std::ceil(T / h - 1e-12));
    h = T / steps;
    const int r_lo = static_cast<int>(std::ceil((tau_S + 1.0) / h - 1e-12));
    const std::vector<int> r_idx = {r_lo, (r_lo + steps) / 2, steps};

    Rng rng(seed);
    const Vector q0 = Vector::Zero(sys.forcing.driving_dim());

    // per pair: a_k = V(dplus), b_k = V(dminus), c_k = e^{2 nu0 t} |d|^2
    struct PairData {
        std::vector<double> a, b, c;
    };
    std::vector<PairData> data;
    data.reserve(pairs);
    for (int i = 0; i < pairs; ++i) {
        const Vector v0 = rng.ball(n, 2.0);
        Vector d0 = cf.Eminus * rng.gauss_vec(cf.j);
        if (cf.j < n) {
            const Vector up = cf.Eplus * rng.gauss_vec(n - cf.j);
            const double vp = cf.V(up);
            if (vp > 1e-300)
                d0 += rng.uniform(0.0, 0.9) * std::sqrt(-cf.V(d0) / vp) * up;
        }
        d0 *= rng.uniform(0.1, 1.0) / std::max(1e-12, d0.norm());

        const Trajectory ta = integrate(sys, q0, v0, T, h);
        const Trajectory tb = integrate(sys, q0, v0 + d0, T, h);
        PairData pd;
        for (int k = 0; k <= steps; ++k) {
            const Vector d = tb.states[k] - ta.states[k];
            const Vector dm = cf.Pi * d;
            pd.a.push_back(cf.V(d - dm));
            pd.b.push_back(cf.V(dm));
            pd.c.push_back(std::exp(2.0 * cf.nu0 * k * h) * d.squaredNorm());
        }
        data.push_back(std::move(pd));
    }

    const auto passes = [&](double kappa) {
        const double k2 = kappa * kappa;
        for (const PairData& pd : data) {
            double integral = 0.0, slack = 0.0;
            int done = 0;
            for (int r : r_idx) {
                for (int k = done; k < r; ++k) {
                    integral += 0.5 * h * (pd.c[k] + pd.c[k + 1]);
                    if (k > 0) slack += (h / 12.0) * std::abs(pd.c[k + 1] - 2.0 * pd.c[k] + pd.c[k - 1]);
                }
                done = r;
                const double lhs = std::exp(2.0 * cf.nu0 * r * h) * (pd.a[r] + k2 * pd.b[r]) -
                                   (pd.a[0] + k2 * pd.b[0]);
                const double rhs = -(cf.delta_P / 2.0) * integral;
                const double tol = (cf.delta_P / 2.0) * slack +
                                   1e-9 * (1.0 + std::abs(lhs) + std::abs(rhs));
                if (lhs > rhs + tol) return false;
            }
        }
        return true;
    };

    // smallest grid value whose whole upper range passes
    double kappa0 = 1.0;
    if (!passes(1.0)) return 1.0;
    for (int k = 19; k >= 1; --k) {
        const double kappa = 0.05 * k;
        if (!passes(kappa)) break;
        kappa0 = kappa;
    }
    return kappa0;
}

double clip_constant(const ConeField& cf, double L, double alpha_lo, double alpha_hi,
                     double tau_S) {
    if (!(cf.delta_P > 0.0)) throw Error("clip constant: delta_P must be positive");
    if (alpha_hi < alpha_lo) throw DimensionError("clip constant: empty alpha range");
    const double a = std::max(std::abs(alpha_lo), std::abs(alpha_hi));
    return std::sqrt(cf.M_P / cf.delta_P) * L * std::exp(a * (tau_S + 1.0));
}

}  // namespace imtk
