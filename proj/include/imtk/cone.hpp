#pragma once

#include "imtk/conditions.hpp"
#include "imtk/lyapunov.hpp"

namespace imtk {

// Sign of V on a difference vector, with the tolerance band around zero.
struct PseudoOrderWitness {
    Vector v1, v2;
    double value = 0.0;
    std::string classification;  // strict-negative | zero | positive
};

double v_value(const ConeField& cf, const Vector& v);

PseudoOrderWitness classify_pair(const ConeField& cf, const Vector& v1, const Vector& v2);

// Pairs entering the cone stay strictly inside it: samples pairs with
// V(delta(0)) <= 0 and reports any grid time t >= tau_V with V(delta(t)) >= 0.
ConditionReport check_cone_invariance(const SystemSpec& sys, const ConeField& cf, int pairs,
                                      double horizon, double tau_V, std::uint64_t seed = 42);

// Pairs still outside the cone at the horizon obey the integral bound
// delta^{-1} V(delta(0)) >= int_0^t e^{2 nu0 s} |delta|^2 ds and the
// exponential bound with constant delta^{-1} L^2 e^{2 nu0 (tau_S+1)}.
// Pairs that fall into the cone before the horizon are skipped.
ConditionReport check_squeezing(const SystemSpec& sys, const ConeField& cf, int pairs,
                                double horizon, std::uint64_t seed = 42);

// V(w1+ - w3+) <= V(w1+ - w2+) / (1-kappa)^2 on constructed triples with
// V(w1-w3) >= 0, shrunken-form V of (w2-w3) <= 0, and Pi w1 = Pi w2.
ConditionReport romanov_check(const ConeField& cf, double kappa, int triples,
                              std::uint64_t seed = 42);

// Trajectory-form squeezing on all ordered pairs of the time grid:
// e^{2 nu0 r} V(delta(r)) - e^{2 nu0 l} V(delta(l)) + delta_P Quad(l,r) <= eps_quad.
ConditionReport verify_h3_discrete(const SystemSpec& sys, const ConeField& cf, int pairs,
                                   const std::vector<double>& r_grid, double step,
                                   std::uint64_t seed = 42, double radius = 5.0);

}  // namespace imtk
