#pragma once

#include "imtk/manifold.hpp"

namespace imtk {

// Result of the theta-procedure: flow forward, project onto the chart, pull
// the chart point back through the reduced flow.
struct TrackingResult {
    Vector v0;
    Vector v0_star;
    std::vector<double> thetas;     // 0 stands for the naive lift seed
    std::vector<double> residuals;  // successive estimate differences
    double exponent = 0.0;          // decay slope filled by verify_tracking
    double R = 0.0;                 // empirical prefactor at t = 0
    bool converged = false;

    Json to_json() const;
};

// Reduced vector field on the chart lattice: f(zeta) = chart(rhs(Phi(zeta))).
struct InertialForm {
    Matrix basis;  // chart basis of the source graph
    double spacing = 0.0;
    double radius = 0.0;
    Vector center;
    std::vector<int> dims;
    std::vector<Vector> zetas;
    std::vector<Vector> fvals;

    int j() const { return static_cast<int>(center.size()); }
    int nodes() const { return static_cast<int>(fvals.size()); }
    // interpolated field value; linear extrapolation beyond the box
    Vector f_at(const Vector& c) const;
    bool in_box(const Vector& c, double slack = 0.0) const;
};

InertialForm extract_inertial_form(const SystemSpec& sys, const ConeField& cf,
                                   const ManifoldGraph& M);

// RK4 on the interpolated reduced field. T < 0 integrates backward; states[k]
// sits at elapsed time k*h toward T. Throws LeftGrid when the path exits the
// box.
Trajectory integrate_reduced(const InertialForm& form, const Vector& zeta0, double T, double h);

// Central projection of v0 onto the graph: for each theta, flow forward,
// project, and pull the chart point back by the reduced flow; stop when
// successive estimates differ by < tol. Empty schedule picks
// {2,4,...,40}/nu0. Throws LeftGrid when a chart leaves the box and
// NoConvergence when the schedule runs out.
TrackingResult central_project(const SystemSpec& sys, const ConeField& cf, const ManifoldGraph& M,
                               const Vector& q, const Vector& v0,
                               std::vector<double> schedule = {}, double tol = 1e-8,
                               double step = 0.0);

// Integrates v0 and v0_star forward over [0, T] and fits the decay exponent
// of log||difference|| over [T/4, 3T/4]; pass iff slope <= -0.85 nu0. Fills
// result.exponent and result.R. Identical endpoints report "degenerate".
ConditionReport verify_tracking(const SystemSpec& sys, const ConeField& cf, TrackingResult& result,
                                double T, double h);

// Per node of a lattice over the vertical subspace, solves for the horizontal
// correction keeping the central projection of
// v0_star + Eplus zeta+ + Eminus zeta- at v0_star, then keeps the points whose
// forward differences from v0_star stay on the nonnegative side of V.
std::vector<Vector> sample_vertical_leaf(const SystemSpec& sys, const ConeField& cf,
                                         const ManifoldGraph& M, const Vector& v0_star,
                                         const GridSpec& vgrid, double tol, double step = 0.0);

}  // namespace imtk
