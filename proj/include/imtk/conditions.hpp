#pragma once

#include "imtk/report.hpp"
#include "imtk/system.hpp"

namespace imtk {

struct ConeField;  // lyapunov.hpp

struct ConditionReport {
    std::string kind;      // frequency | spectral-gap | small-delay | scp-sampled
    bool pass = false;     // margin strictly positive (1e-9 absolute floor)
    double margin = 0.0;
    double nu0 = 0.0;
    int j = 0;
    Json diagnostics;      // worst omega / worst index / worst sample, kind-specific

    Json to_json() const;  // {"kind","pass","margin","nu0","j", <diagnostics inline>}
};

// p -> W(p), rational W = C (A - pI)^{-1} B or delay
// W = gamma(p) (alpha(p) - pI - p delta(p))^{-1} B~ with discrete taps.
struct TransferFunction {
    enum class Kind { Rational, Delay };
    Kind kind = Kind::Rational;
    Matrix A, B, C;    // rational data
    DelaySpec delay;   // tap data

    CMatrix eval(const Complex& p) const;

    static TransferFunction rational(const Matrix& A, const Matrix& B, const Matrix& C);
    static TransferFunction from_delay(const DelaySpec& spec);
};

// Eigenvalue count right of the line Re p = -nu0, plus the distance of the
// nearest eigenvalue to it. OnDichotomyLine when any eigenvalue is within 1e-8.
std::pair<int, double> count_unstable(const Matrix& A, double nu0);

struct SweepResult {
    double sup = 0.0;
    double worst_omega = 0.0;
    double omega_max = 0.0;  // extent actually used (grows until the tail is dominated)
    double tail = 0.0;       // certified bound past omega_max
};

// sup over the line Re p = -nu0 of ||W||, adaptive grid + local-max refinement
// to 1e-4 relative resolution, with a decay tail bound past omega_max.
// omega_max = 0 picks the default 1e3 (rho + |nu0| + 1).
SweepResult sweep_supremum(const TransferFunction& tf, double nu0, double omega_max = 0.0);

// Wraps sweep_supremum; margin = 1/Lambda - sup.
ConditionReport frequency_sweep(const TransferFunction& tf, double nu0, double Lambda,
                                double omega_max = 0.0);

// (lambda_{j+1} - lambda_j) / (lambda_j^{a-b} + lambda_{j+1}^{a-b}) > Lambda,
// with the equalizing nu0 in (lambda_j, lambda_{j+1}).
ConditionReport spectral_gap(const GalerkinSpec& spec, int j, double Lambda);

// sqrt(r) e^{tau nu0} / nu0 / (1 - kappa) < 1/Lambda with
// kappa = e^{tau nu0} ||D0||.
ConditionReport small_delay_check(const DelaySpec& spec, int r, double Lambda, double nu0);

// Sampled check of d/dt V(xi) + 2 alpha(t) V(xi) <= -delta |xi|^2 for some
// measurable alpha(t) in [alpha_lo, alpha_hi]: feasible iff the per-time
// residual interval is nonempty. delta <= 0 picks delta_P/2. Residuals are
// normalized by |xi|^2.
ConditionReport scp_sampled_check(const SystemSpec& sys, const ConeField& cf, double alpha_lo,
                                  double alpha_hi, int samples = 40, double horizon = 2.0,
                                  double delta = -1.0, double h = 0.0, std::uint64_t seed = 42);

}  // namespace imtk
