#pragma once

#include "imtk/conditions.hpp"
#include "imtk/flow.hpp"
#include "imtk/lyapunov.hpp"

namespace imtk {

// Regular lattice spec for graph charts over the base subspace (j <= 2).
struct GridSpec {
    double spacing = 0.5;
    double radius = 5.0;
    double T0 = 1.0;  // pullback sweep length
    double h = 0.0;   // integrator step; 0 = default_step(system)
};

// Graph of a map from a box in the base subspace into state space.
// Chart coordinates of v are basis^T (projector v); node values satisfy
// chart(value) = zeta.
struct ManifoldGraph {
    Matrix basis;      // n x j, orthonormal columns spanning the chart range
    Matrix projector;  // chart projector (n x n)
    double spacing = 0.0;
    double radius = 0.0;
    Vector center;          // lattice center in chart coordinates
    std::vector<int> dims;  // nodes per axis
    std::vector<Vector> zetas;
    std::vector<Vector> values;
    Vector anchor;
    double lipschitz_est = 0.0;
    bool converged = false;
    double T_used = 0.0;
    double tol = 0.0;

    int j() const { return static_cast<int>(basis.cols()); }
    int n() const { return static_cast<int>(basis.rows()); }
    int nodes() const { return static_cast<int>(values.size()); }
    Vector chart_coords(const Vector& v) const { return basis.transpose() * (projector * v); }
    // interpolated graph value; linear extrapolation beyond the box
    Vector value_at(const Vector& c) const;
    bool in_box(const Vector& c, double slack = 0.0) const;

    Json to_json() const;
    static ManifoldGraph from_json(const Json& js);
};

void write_manifold_csv(const ManifoldGraph& M, const std::string& path);

// Largest ratio of vertical to horizontal chord length over node pairs.
double empirical_lipschitz(const ManifoldGraph& M);

// Node invariants: chart consistency and strict chord pseudo-order.
void check_admissible(const ConeField& cf, const ManifoldGraph& M);

// Equilibrium by damped Newton from the origin; falls back to the origin when
// Newton stalls but the dynamics stay bounded.
Vector find_anchor(const SystemSpec& sys);

// One pullback sweep: re-solves every node of the time-t image graph.
ManifoldGraph graph_transform_step(const SystemSpec& sys, const ConeField& cf,
                                   const ManifoldGraph& M, const Vector& q, double t,
                                   double step = 0.0);

// Pullback limit starting from the affine base plane through the anchor.
ManifoldGraph build_manifold(const SystemSpec& sys, const ConeField& cf, const Vector& q,
                             const GridSpec& grid, double T_max, double tol);

// Per-node tangent subspaces.
struct TangentField {
    std::vector<Matrix> bases;  // n x j orthonormal per node
    double T_used = 0.0;
    double max_fd_angle = 0.0;  // worst angle against grid finite differences
    double fd_tol = 0.0;
    double max_cone_eig = -1e300;  // largest eigenvalue of basis^T P basis (should be < 0)
    double min_chart_sigma = 0.0;  // worst conditioning of the chart restricted to a tangent
};

TangentField build_tangents(const SystemSpec& sys, const ConeField& cf, const ManifoldGraph& M,
                            double T_max, double step = 0.0);

// Re-index the graph over the range of an alternative admissible projector.
ManifoldGraph rechart(const ConeField& cf, const ManifoldGraph& M, const Matrix& Pi_alt);

struct NestedManifolds {
    ManifoldGraph M1, M2;
    ConditionReport containment;
};

// Builds a coarse and a slow manifold and checks that the slow one lies inside
// the coarse one.
NestedManifolds build_nested(const SystemSpec& sys, const ConeField& cf1, const ConeField& cf2,
                             const GridSpec& g1, const GridSpec& g2, double T_max, double tol,
                             double containment_tol = 1e-6);

// sup over interior nodes of the distance between the flowed node value and
// the graph above its own image coordinates.
double invariance_residual(const SystemSpec& sys, const ManifoldGraph& M, const Vector& q,
                           double t, double step = 0.0);

}  // namespace imtk
