#pragma once

#include <functional>

#include "imtk/tracking.hpp"

namespace imtk {

// Omega-limit classification of the reduced flow: a stationary point, a
// shooting-refined periodic orbit, or "other".
struct OrbitClassification {
    std::string verdict;           // stationary | periodic | other
    double period = 0.0;           // periodic verdict only
    std::vector<Vector> samples;   // orbit samples in chart coordinates
    double return_residual = 0.0;  // ||flow^period(zeta*) - zeta*|| after refinement
    double closest_return = 0.0;   // best near-return distance seen during the scan
    double velocity_norm = 0.0;    // ||f|| at the end of the observation window
    double T_transient = 0.0;

    Json to_json() const;
};

// Lattice form over [-radius, radius]^j around the origin, filled from an
// analytic field. Basis is the identity; chart coordinates are the state.
InertialForm synthetic_form(int j, double spacing, double radius,
                            const std::function<Vector(const Vector&)>& f);

// Endpoint of the reduced flow at exactly time T: whole steps plus one final
// partial step, so the result is continuous in T (unlike the stored
// trajectory convention, which always completes the last step).
Vector reduced_at(const InertialForm& form, const Vector& zeta0, double T, double h);

// Integrates past the transient, then detects stationarity by velocity norm
// and periodicity by a near-return scan followed by single-shooting
// refinement of (point, period). j = 1 charts only classify stationary/other.
OrbitClassification classify_omega_limit(const InertialForm& form, const Vector& zeta0,
                                         double T_transient, double T_obs, double h);

// Iterates of the time-sigma chart map zeta -> chart(flow^sigma(lift(zeta)))
// through the full (possibly forced) system, driving phase reset per iterate.
struct PoincareIterates {
    std::vector<double> iterates;  // scalar chart track (j = 1)
    bool monotone = false;         // sign-constant differences past the first quarter

    Json to_json() const;
};

PoincareIterates poincare_map(const SystemSpec& sys, const ConeField& cf, const ManifoldGraph& M,
                              double sigma, const Vector& zeta0, int k, double step = 0.0);

// ||v(t+sigma) - v(t)|| must decay: the sup over the last 10 periods is
// compared against 1e-4 times the first-period sup. Throws Unbounded when the
// trajectory escapes a norm bound, before the integrator overflows.
ConditionReport check_convergence_periodic(const SystemSpec& sys, const ConeField& cf,
                                           const ManifoldGraph& M, const Vector& v0, double sigma,
                                           double T, double step = 0.0);

// j = 0 contraction: for every driving sample and state pair, fits the decay
// exponent of the pair difference and compares the worst fit against
// -0.85 nu0. Identical pairs are skipped as degenerate.
ConditionReport check_ap_stability(const SystemSpec& sys, const ConeField& cf,
                                   const std::vector<Vector>& q_samples,
                                   const std::vector<std::pair<Vector, Vector>>& v_pairs,
                                   double T, double step = 0.0);

// Probes around a stationary/periodic orbit: off-manifold starts must end no
// farther from the orbit set than on-manifold starts plus the tracking bound.
ConditionReport stability_transfer_check(const SystemSpec& sys, const ConeField& cf,
                                         const ManifoldGraph& M, const OrbitClassification& orbit,
                                         double delta, int probes, double T = 0.0,
                                         double step = 0.0, std::uint64_t seed = 42);

// The given system is the unit shape: eps scales the nonlinearity amplitude
// (polynomial coefficients or sigmoid/cubic scale) and the declared Lipschitz
// bound linearly.
SystemSpec scale_nonlinearity(const SystemSpec& sys, double eps);

// Sup node distance of the eps-manifold from the reference graph, one
// certificate re-check and rebuild per eps.
struct RobustnessResult {
    std::vector<double> eps;    // as given
    std::vector<double> dist;   // sup distance to the reference graph
    bool decreasing = false;    // distances ordered like the eps values
    double ratio_spread = 0.0;  // max/min of dist/eps over eps > 0

    Json to_json() const;
};

RobustnessResult robustness_experiment(const SystemSpec& sys, const ConeField& cf,
                                       const ManifoldGraph& M, const std::vector<double>& eps_list,
                                       double T_max = 14.0, double tol = 1e-6, double step = 0.0);

}  // namespace imtk
