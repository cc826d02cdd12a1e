#pragma once

#include <optional>
#include <string>
#include <vector>

#include "imtk/linalg.hpp"
#include "imtk/report.hpp"

namespace imtk {

enum class Family { Ode, DelayDiscretized, ParabolicGalerkin };

enum class NonlinKind { Zero, Sigmoid, SaturatedCubic, PolyClamp };

// Scalar nonlinearity applied componentwise: y -> F(y).
struct NonlinSpec {
    NonlinKind kind = NonlinKind::Zero;
    double scale = 1.0;                // sigmoid / saturated-cubic amplitude
    double gain = 1.0;                 // sigmoid argument gain
    std::vector<double> coeffs;        // polynomial sum c_k y^k on the clamped argument
    double clamp = 1.0;                // |y| clamped to this radius before the polynomial
    double lambda = 0.0;               // declared global Lipschitz bound
    bool has_derivative = true;        // all stock shapes are smooth

    double eval1(double y) const;
    double deriv1(double y) const;
    Vector eval(const Vector& y) const;
    Matrix deriv(const Vector& y) const;  // diagonal Jacobian
    // Tight Lipschitz bound of the shape (used to validate the declared lambda).
    double analytic_lipschitz() const;
};

enum class ForcingMode { None, Periodic, Quasiperiodic };

// Driving system: constant, periodic (phase in [0, sigma)), or a linear flow on
// a d-torus with d <= 3 (phases in [0,1)^d).
struct ForcingSpec {
    ForcingMode mode = ForcingMode::None;
    double sigma = 0.0;   // period (periodic mode)
    Vector omega;         // torus frequencies (quasiperiodic mode)
    Vector w0;            // constant offset, dimension n
    Matrix wc, ws;        // n x d cosine / sine coefficient columns

    int driving_dim() const;
    Vector flow(const Vector& q0, double t) const;  // theta^t(q0)
    Vector eval(const Vector& q, int n) const;      // W(q), zero vector when none
};

struct DelayTap {
    double theta = 0.0;  // in [-tau, 0]
    Matrix weight;
};

// d/dt (x + D0 x_t) = sum_k A_k x(t+theta_k) + B~ F(C~ x_t); only D0 = 0 is
// simulated (neutral terms are check-only).
struct DelaySpec {
    double tau = 0.0;
    double d0_norm = 0.0;
    int chain_order = 64;
    Matrix b_tilde;
    std::vector<DelayTap> a_taps, c_taps, d_taps;
    int state_dim() const { return b_tilde.rows() > 0 ? static_cast<int>(b_tilde.rows()) : 1; }
};

struct GalerkinSpec {
    std::vector<double> lambdas;  // 0 < lambda_1 <= ... <= lambda_N
    double alpha = 0.0, beta = 0.0;
    int N = 0;
};

struct SystemSpec {
    std::string name;
    Family family = Family::Ode;
    Matrix A, B, C;
    NonlinSpec F;
    ForcingSpec forcing;
    std::optional<DelaySpec> delay;        // kept for re-save / exact transfer checks
    std::optional<GalerkinSpec> galerkin;

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int r() const { return static_cast<int>(C.rows()); }
    double lambda() const { return F.lambda; }

    Vector rhs(const Vector& v, const Vector& q) const;   // A v + B F(C v) + W(q)
    Matrix jacobian(const Vector& v) const;               // A + B F'(C v) C
};

// Empirical Lipschitz confirmation: 10^4 sampled scalar pairs, 1e-9 slack.
// Throws LipschitzViolation naming a witnessing pair.
void check_lipschitz(const NonlinSpec& F, int samples = 10000, std::uint64_t seed = 42);

SystemSpec load_system(const std::string& path);
SystemSpec system_from_json(const Json& j, const std::string& where);
Json system_to_json(const SystemSpec& sys);
void save_system(const SystemSpec& sys, const std::string& path);

// Linear-chain ("transport cascade") ODE surrogate of the delay system.
SystemSpec discretize_delay(const DelaySpec& spec, const NonlinSpec& F,
                            const ForcingSpec& forcing = {});

// Diagonal spectral truncation v' = -diag(lambda) v + B F(C v).
SystemSpec galerkin_system(const GalerkinSpec& spec, const NonlinSpec& F,
                           const std::optional<Matrix>& B = std::nullopt,
                           const std::optional<Matrix>& C = std::nullopt);

}  // namespace imtk
