#pragma once

#include "imtk/system.hpp"

namespace imtk {

// Solution samples on a uniform time grid starting at relative time 0; the
// driving state at grid time t is forcing.flow(q0, t).
struct Trajectory {
    double h = 0.0;
    Vector q0;
    ForcingSpec forcing;
    std::vector<Vector> states;

    int steps() const { return static_cast<int>(states.size()) - 1; }
    double t_end() const { return h * steps(); }
    const Vector& front() const { return states.front(); }
    const Vector& back() const { return states.back(); }
    Vector q_at(double t) const { return forcing.flow(q0, t); }
    // linear interpolation between grid samples
    Vector at_time(double t) const;
};

// Classical fixed-step RK4. T is padded up to the next grid multiple of h.
// Throws NonFinite when a state leaves [-1e12, 1e12] or stops being finite.
Trajectory integrate(const SystemSpec& sys, const Vector& q0, const Vector& v0, double T,
                     double h);

inline Vector flow_state(const SystemSpec& sys, const Vector& q0, const Vector& v0, double T,
                         double h) {
    return integrate(sys, q0, v0, T, h).back();
}

// Trajectory plus the fundamental matrix of the linearization along it.
struct VariationalTrajectory {
    Trajectory base;
    std::vector<Matrix> fundamental;  // fundamental[k] at grid time k h, [0] = I
};

VariationalTrajectory integrate_variational(const SystemSpec& sys, const Vector& q0,
                                            const Vector& v0, double T, double h);

// Driving flow theta^t.
inline Vector drive(const ForcingSpec& f, const Vector& q0, double t) { return f.flow(q0, t); }

// 1e-3 / (||A|| + Lambda ||B|| ||C|| + 1), clamped to [1e-5, 1e-2].
double default_step(const SystemSpec& sys);

}  // namespace imtk
