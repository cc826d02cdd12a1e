#pragma once

#include <optional>

#include "imtk/report.hpp"
#include "imtk/system.hpp"

namespace imtk {

// Quadratic form V(v) = <Pv, v> with a j-dimensional negative eigenspace,
// together with the spectral splitting and the constants the manifold and
// tracking layers consume.
struct ConeField {
    Matrix P;            // symmetric, inertia (n-j, j), no zero eigenvalues
    double nu0 = 0.0;
    double delta_P = 0.0;
    double tau_P = 0.0;  // contraction onset; synthesis always yields 0
    int j = 0;
    Matrix Eminus;       // n x j, orthonormal, negative eigenspace of P
    Matrix Eplus;        // n x (n-j), orthonormal, positive eigenspace of P
    Matrix Pi;           // V-orthogonal projector onto Eminus
    double C_q = 0.0;    // sqrt(min |eig| over the negative eigenvalues)
    double M_P = 0.0;    // ||P||
    double M_Pi = 0.0;   // ||Pi||
    double kappa0 = 0.0; // smallest certified cone-shrink factor

    double V(const Vector& v) const { return v.dot(P * v); }
    // V(v+) + kappa^2 V(v-) with v-+ the Pi splitting.
    double V_kappa(const Vector& v, double kappa) const;

    Json to_json() const;
    static ConeField from_json(const Json& js);
};

// Throws on any violated structural invariant (symmetry, inertia, definiteness
// on the two eigenspaces, Pi idempotence and V-orthogonality, norm bounds).
void validate_cone_field(const ConeField& cf, std::uint64_t seed = 777);

struct SynthesisOptions {
    double delta_fraction = 0.5;            // of the squared frequency margin scale
    std::optional<double> lambda_override;  // default: the system's declared bound
    std::optional<double> delta_override;   // explicit delta (0 = marginal oracle runs)
};

// Solve A_nu^T P + P A_nu + P B B^T P + Lambda^2 C^T C + delta I = 0 over the
// stable invariant subspace of the Hamiltonian, A_nu = A + nu0 I. Checks the
// quadratic-form LMI and the inertia before assembling the splitting.
ConeField synthesize_P(const SystemSpec& sys, double nu0, const SynthesisOptions& opts = {});

// Largest admissible cone-shrink factor: smallest grid value in (0,1] whose
// whole upper range passes the shifted-form squeezing battery on sampled
// trajectory pairs. L is the nonlinearity growth bound on [0, tau_S + 1].
double kappa_threshold(const SystemSpec& sys, const ConeField& cf, double L, double tau_S,
                       int pairs = 40, std::uint64_t seed = 42);

// Closed-form candidate from the perturbation bound, same arguments.
double kappa_analytic(const ConeField& cf, double L, double tau_S);

// Graph Lipschitz bound sqrt(||P|| / delta_P) * L * e^{max(|a|,|b|)(tau_S+1)}.
double clip_constant(const ConeField& cf, double L, double alpha_lo, double alpha_hi,
                     double tau_S);

}  // namespace imtk
