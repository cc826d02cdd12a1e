#include "imtk/manifold.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace imtk {

namespace {

constexpr double kChartTol = 1e-6;   // node chart-consistency bound
constexpr double kNewtonTol = 1e-10;  // reduced Newton residual target

void make_lattice(ManifoldGraph& M) {
    const int j = M.j();
    std::vector<int> K(j);
    M.dims.assign(j, 0);
    int total = 1;
    for (int i = 0; i < j; ++i) {
        K[i] = std::max(0, static_cast<int>(std::llround(M.radius / M.spacing)));
        M.dims[i] = 2 * K[i] + 1;
        total *= M.dims[i];
    }
    M.zetas.assign(total, Vector::Zero(j));
    for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        for (int i = 0; i < j; ++i) {
            int ii = rem % M.dims[i];
            rem /= M.dims[i];
            M.zetas[idx](i) = M.center(i) + (ii - K[i]) * M.spacing;
        }
    }
    M.values.assign(total, Vector::Zero(M.n()));
}

// Damped Newton with a fresh central-difference Jacobian each iteration.
Vector newton_solve(const std::function<Vector(const Vector&)>& g, const Vector& target, Vector c,
                    double fd_eps, double tol, const std::string& what) {
    const int j = static_cast<int>(target.size());
    Vector r = g(c) - target;
    for (int it = 0; it < 50; ++it) {
        if (r.norm() <= tol) return c;
        Matrix J(j, j);
        for (int i = 0; i < j; ++i) {
            Vector e = Vector::Zero(j);
            e(i) = fd_eps;
            J.col(i) = (g(c + e) - g(c - e)) / (2.0 * fd_eps);
        }
        Vector step;
        try {
            step = solve_linear(J, Matrix(-r));
        } catch (const SingularMatrix&) {
            throw NewtonDiverged(what + ": singular reduced Jacobian");
        }
        double alpha = 1.0;
        bool accepted = false;
        for (int halves = 0; halves < 12 && !accepted; ++halves) {
            Vector cand = c + alpha * step;
            Vector rc = g(cand) - target;
            if (rc.norm() < r.norm()) {
                c = cand;
                r = rc;
                accepted = true;
            }
            alpha *= 0.5;
        }
        if (!accepted) throw NewtonDiverged(what + ": no descent");
    }
    throw NewtonDiverged(what + ": iteration cap");
}

std::vector<int> outward_order(const ManifoldGraph& M, const Vector& from) {
    std::vector<int> order(M.nodes());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double da = (M.zetas[a] - from).norm(), db = (M.zetas[b] - from).norm();
        if (da != db) return da < db;
        return a < b;
    });
    return order;
}

// range (sigma ~ >= 1) and kernel (sigma ~ 0) bases of a projector
void projector_bases(const Matrix& Pi, Matrix& range, Matrix& kernel) {
    if (Pi.rows() != Pi.cols()) throw NotAdmissibleProjector("chart projector is not square");
    if (operator_norm2(Matrix(Pi * Pi - Pi)) > 1e-9 * std::max(1.0, operator_norm2(Pi)))
        throw NotAdmissibleProjector("chart candidate is not idempotent");
    Eigen::JacobiSVD<Matrix> svd(Pi, Eigen::ComputeFullU | Eigen::ComputeFullV);
    int rank = 0;
    while (rank < svd.singularValues().size() && svd.singularValues()(rank) > 1e-9) ++rank;
    range = svd.matrixU().leftCols(rank);
    kernel = svd.matrixV().rightCols(Pi.cols() - rank);
}

}  // namespace

bool ManifoldGraph::in_box(const Vector& c, double slack) const {
    for (int i = 0; i < j(); ++i)
        if (std::abs(c(i) - center(i)) > radius + slack) return false;
    return true;
}

Vector ManifoldGraph::value_at(const Vector& c) const {
    const int jj = j();
    int cell[2] = {0, 0};
    double fr[2] = {0.0, 0.0};
    for (int i = 0; i < jj; ++i) {
        if (dims[i] == 1) continue;
        double o = center(i) - (dims[i] - 1) / 2.0 * spacing;
        double u = (c(i) - o) / spacing;
        int cl = static_cast<int>(std::floor(u));
        cl = std::clamp(cl, 0, dims[i] - 2);
        cell[i] = cl;
        fr[i] = u - cl;  // unclamped: extrapolates linearly beyond the box
    }
    if (jj == 1) {
        if (dims[0] == 1) return values[0];
        return (1.0 - fr[0]) * values[cell[0]] + fr[0] * values[cell[0] + 1];
    }
    auto at = [&](int a, int b) -> const Vector& { return values[a + dims[0] * b]; };
    int a1 = dims[0] == 1 ? 0 : cell[0] + 1;
    int b1 = dims[1] == 1 ? 0 : cell[1] + 1;
    Vector low = (1.0 - fr[0]) * at(cell[0], cell[1]) + fr[0] * at(a1, cell[1]);
    Vector high = (1.0 - fr[0]) * at(cell[0], b1) + fr[0] * at(a1, b1);
    return (1.0 - fr[1]) * low + fr[1] * high;
}

Json ManifoldGraph::to_json() const {
    Json js;
    js["basis"] = matrix_to_json(basis);
    js["projector"] = matrix_to_json(projector);
    js["spacing"] = spacing;
    js["radius"] = radius;
    js["center"] = vector_to_json(center);
    js["dims"] = dims;
    js["anchor"] = vector_to_json(anchor);
    js["lipschitz_est"] = lipschitz_est;
    js["converged"] = converged;
    js["T_used"] = T_used;
    js["tol"] = tol;
    Json zs = Json::array(), vs = Json::array();
    for (const Vector& z : zetas) zs.push_back(vector_to_json(z));
    for (const Vector& v : values) vs.push_back(vector_to_json(v));
    js["zetas"] = zs;
    js["values"] = vs;
    return js;
}

ManifoldGraph ManifoldGraph::from_json(const Json& js) {
    ManifoldGraph M;
    M.basis = matrix_from_json(js.at("basis"), "manifold basis");
    M.projector = matrix_from_json(js.at("projector"), "manifold projector");
    M.spacing = js.at("spacing").get<double>();
    M.radius = js.at("radius").get<double>();
    M.center = vector_from_json(js.at("center"), "manifold center");
    M.dims = js.at("dims").get<std::vector<int>>();
    M.anchor = vector_from_json(js.at("anchor"), "manifold anchor");
    M.lipschitz_est = js.at("lipschitz_est").get<double>();
    M.converged = js.at("converged").get<bool>();
    M.T_used = js.at("T_used").get<double>();
    M.tol = js.at("tol").get<double>();
    for (const Json& z : js.at("zetas")) M.zetas.push_back(vector_from_json(z, "manifold zeta"));
    for (const Json& v : js.at("values")) M.values.push_back(vector_from_json(v, "manifold value"));
    return M;
}

void write_manifold_csv(const ManifoldGraph& M, const std::string& path) {
    std::vector<std::string> header;
    for (int i = 1; i <= M.j(); ++i) header.push_back("zeta_" + std::to_string(i));
    for (int i = 1; i <= M.n(); ++i) header.push_back("v_" + std::to_string(i));
    std::vector<std::vector<double>> rows;
    for (int k = 0; k < M.nodes(); ++k) {
        std::vector<double> row;
        for (int i = 0; i < M.j(); ++i) row.push_back(M.zetas[k](i));
        for (int i = 0; i < M.n(); ++i) row.push_back(M.values[k](i));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

double empirical_lipschitz(const ManifoldGraph& M) {
    double lip = 0.0;
    for (int p = 0; p < M.nodes(); ++p)
        for (int q = p + 1; q < M.nodes(); ++q) {
            Vector d = M.values[p] - M.values[q];
            Vector hor = M.projector * d;
            double hn = hor.norm();
            if (hn < 1e-14) continue;
            lip = std::max(lip, (d - hor).norm() / hn);
        }
    return lip;
}

void check_admissible(const ConeField& cf, const ManifoldGraph& M) {
    for (int k = 0; k < M.nodes(); ++k)
        if ((M.chart_coords(M.values[k]) - M.zetas[k]).norm() > kChartTol)
            throw Error("manifold graph: node " + std::to_string(k) + " drifted off its chart");
    for (int p = 0; p < M.nodes(); ++p)
        for (int q = p + 1; q < M.nodes(); ++q) {
            Vector d = M.values[p] - M.values[q];
            if (d.dot(cf.P * d) >= 0.0)
                throw AdmissibilityLost("chord (" + std::to_string(p) + "," + std::to_string(q) +
                                        ") left the cone");
        }
}

Vector find_anchor(const SystemSpec& sys) {
    const Vector q0(0);
    Vector v = Vector::Zero(sys.n());
    bool ok = false;
    for (int it = 0; it < 100; ++it) {
        Vector r = sys.rhs(v, q0);
        if (r.norm() <= 1e-12 * std::max(1.0, v.norm())) {
            ok = true;
            break;
        }
        Vector step;
        try {
            step = solve_linear(sys.jacobian(v), Matrix(-r));
        } catch (const SingularMatrix&) {
            break;
        }
        double alpha = 1.0;
        bool accepted = false;
        for (int halves = 0; halves < 30 && !accepted; ++halves) {
            if (sys.rhs(v + alpha * step, q0).norm() < r.norm()) {
                v += alpha * step;
                accepted = true;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
    }
    if (ok || sys.rhs(v, q0).norm() <= 1e-10) return v;
    try {
        integrate(sys, q0, Vector::Zero(sys.n()), 5.0, default_step(sys));
    } catch (const NonFinite&) {
        throw AnchorNotFound("Newton stalled and the origin escapes in finite time");
    }
    return Vector::Zero(sys.n());
}

ManifoldGraph graph_transform_step(const SystemSpec& sys, const ConeField& cf,
                                   const ManifoldGraph& M, const Vector& q, double t,
                                   double step) {
    check_admissible(cf, M);
    const double h = step > 0.0 ? step : default_step(sys);
    ManifoldGraph out = M;
    out.anchor = flow_state(sys, q, M.anchor, t, h);

    auto g = [&](const Vector& c) -> Vector {
        return M.chart_coords(flow_state(sys, q, M.value_at(c), t, h));
    };

    std::vector<int> order = outward_order(M, M.chart_coords(M.anchor));
    std::vector<char> solved(M.nodes(), 0);
    std::vector<Vector> sources(M.nodes());
    for (int idx : order) {
        const Vector& target = M.zetas[idx];
        Vector guess = target;
        double best = 1e300;
        for (int o : order) {
            if (!solved[o]) continue;
            double d = (M.zetas[o] - target).norm();
            if (d < best) {
                best = d;
                guess = sources[o] + (target - M.zetas[o]);
            }
        }
        Vector c = newton_solve(g, target, guess, 1e-5 * std::max(1.0, target.norm()),
                                kNewtonTol * std::max(1.0, target.norm()),
                                "graph transform node " + std::to_string(idx));
        out.values[idx] = flow_state(sys, q, M.value_at(c), t, h);
        sources[idx] = c;
        solved[idx] = 1;
    }
    out.lipschitz_est = empirical_lipschitz(out);
    check_admissible(cf, out);
    return out;
}

ManifoldGraph build_manifold(const SystemSpec& sys, const ConeField& cf, const Vector& q,
                             const GridSpec& grid, double T_max, double tol) {
    if (cf.j < 1 || cf.j > 2) throw DimensionError("graph grids need a base of dimension 1 or 2");
    ManifoldGraph M;
    M.basis = cf.Eminus;
    M.projector = cf.Pi;
    M.spacing = grid.spacing;
    M.radius = grid.radius;
    M.anchor = find_anchor(sys);
    M.center = M.chart_coords(M.anchor);
    M.tol = tol;
    make_lattice(M);
    for (int k = 0; k < M.nodes(); ++k)
        M.values[k] = M.anchor + M.basis * (M.zetas[k] - M.center);
    M.lipschitz_est = 0.0;

    const double h = grid.h > 0.0 ? grid.h : default_step(sys);
    for (int sweep = 1; sweep * grid.T0 <= T_max + 1e-9; ++sweep) {
        ManifoldGraph next = graph_transform_step(sys, cf, M, q, grid.T0, h);
        next.T_used = sweep * grid.T0;
        next.tol = tol;
        double change = 0.0;
        for (int k = 0; k < M.nodes(); ++k)
            change = std::max(change, (next.values[k] - M.values[k]).norm());
        M = std::move(next);
        if (change < tol) {
            M.converged = true;
            break;
        }
    }
    return M;
}

TangentField build_tangents(const SystemSpec& sys, const ConeField& cf, const ManifoldGraph& M,
                            double T_max, double step) {
    const double h = step > 0.0 ? step : default_step(sys);
    const double T0 = 1.0;
    const double tol_angle = 1e-8;
    const Vector q0(0);
    TangentField tf;
    tf.bases.resize(M.nodes());
    tf.fd_tol = std::max(1e-3, 5.0 * M.spacing * M.spacing);
    double worst_T = 0.0;
    double min_sigma = 1e300;

    auto reduced_rhs = [&](const Vector& c) -> Vector {
        return M.chart_coords(sys.rhs(M.value_at(c), q0));
    };

    for (int k = 0; k < M.nodes(); ++k) {
        // backward orbit checkpoints on the graph
        std::vector<Vector> back{M.zetas[k]};
        const double hb = M.spacing > 0.0 ? std::min(M.spacing / 10.0, 1e-2) : 1e-2;
        Vector c = M.zetas[k];
        int max_windows = static_cast<int>(std::floor(T_max / T0 + 1e-9));
        for (int w = 1; w <= max_windows; ++w) {
            int steps = static_cast<int>(std::llround(T0 / hb));
            bool left = false;
            for (int s = 0; s < steps && !left; ++s) {
                Vector k1 = reduced_rhs(c);
                Vector k2 = reduced_rhs(c - 0.5 * hb * k1);
                Vector k3 = reduced_rhs(c - 0.5 * hb * k2);
                Vector k4 = reduced_rhs(c - hb * k3);
                c -= hb / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                // generous slack: box corners may rotate outside the box while
                // staying on their ring, where extrapolation is still usable
                if (!M.in_box(c, 0.5 * M.radius + 0.25 * M.spacing)) left = true;
            }
            if (left) break;
            back.push_back(c);
        }
        if (back.size() < 2) throw SubspaceStalled("node " + std::to_string(k) +
                                                   ": backward orbit leaves the box immediately");

        // one-window transports along the backward orbit, each re-anchored on
        // the graph so vertical drift cannot accumulate
        std::vector<Matrix> win;
        for (size_t i = 1; i < back.size(); ++i) {
            VariationalTrajectory vt =
                integrate_variational(sys, q0, M.value_at(back[i]), T0, h);
            win.push_back(vt.fundamental.back());
        }
        // S_w = orth(win_1 ... win_w basis); deepening the pullback leaves the
        // leading transports untouched, so successive angles genuinely contract
        Matrix S = orthonormalize(M.basis);
        bool done = false;
        for (size_t w = 1; w <= win.size() && !done; ++w) {
            Matrix Sw = orthonormalize(M.basis);
            for (size_t i = w; i >= 1; --i) Sw = orthonormalize(Matrix(win[i - 1] * Sw));
            double ang = max_principal_angle(Sw, S);
            S = Sw;
            if (ang < tol_angle) {
                done = true;
                worst_T = std::max(worst_T, static_cast<double>(w) * T0);
            }
        }
        if (!done) throw SubspaceStalled("node " + std::to_string(k) +
                                         ": subspace iteration did not settle");
        tf.bases[k] = S;

        Eigen::JacobiSVD<Matrix> svd(Matrix(M.basis.transpose() * (M.projector * S)));
        min_sigma = std::min(min_sigma, svd.singularValues().minCoeff());
        tf.max_cone_eig = std::max(tf.max_cone_eig,
                                   sym_eigen(Matrix(S.transpose() * cf.P * S)).values.maxCoeff());
    }
    tf.T_used = worst_T;
    tf.min_chart_sigma = min_sigma;

    // cross-check against grid finite differences of the graph
    const int j = M.j();
    std::vector<int> K(j);
    for (int i = 0; i < j; ++i) K[i] = (M.dims[i] - 1) / 2;
    for (int idx = 0; idx < M.nodes(); ++idx) {
        Matrix D(M.n(), j);
        int rem = idx;
        int coord[2] = {0, 0};
        for (int i = 0; i < j; ++i) {
            coord[i] = rem % M.dims[i];
            rem /= M.dims[i];
        }
        bool usable = true;
        for (int i = 0; i < j; ++i) {
            int strid = i == 0 ? 1 : M.dims[0];
            if (M.dims[i] == 1) {
                usable = false;
                break;
            }
            int lo = coord[i] > 0 ? idx - strid : idx;
            int hi = coord[i] < M.dims[i] - 1 ? idx + strid : idx;
            D.col(i) = (M.values[hi] - M.values[lo]) / ((hi - lo) / strid * M.spacing);
        }
        if (!usable) continue;
        double ang = max_principal_angle(orthonormalize(D), tf.bases[idx]);
        tf.max_fd_angle = std::max(tf.max_fd_angle, ang);
    }
    return tf;
}

ManifoldGraph rechart(const ConeField& cf, const ManifoldGraph& M, const Matrix& Pi_alt) {
    if (Pi_alt.rows() != M.n()) throw DimensionError("rechart: projector dimension mismatch");
    Matrix range, kernel;
    projector_bases(Pi_alt, range, kernel);
    if (range.cols() != M.j())
        throw NotAdmissibleProjector("chart candidate rank " + std::to_string(range.cols()) +
                                     " != base dimension " + std::to_string(M.j()));
    if (sym_eigen(Matrix(range.transpose() * cf.P * range)).values.maxCoeff() >= 0.0)
        throw NotAdmissibleProjector("nonnegative direction in the candidate range");
    if (sym_eigen(Matrix(kernel.transpose() * cf.P * kernel)).values.minCoeff() <= 0.0)
        throw NotAdmissibleProjector("nonpositive direction in the candidate kernel");

    ManifoldGraph out;
    out.basis = range;
    out.projector = Pi_alt;
    out.spacing = M.spacing;
    out.anchor = M.anchor;
    out.center = out.chart_coords(M.anchor);
    out.lipschitz_est = 0.0;
    out.converged = M.converged;
    out.T_used = M.T_used;
    out.tol = M.tol;

    // shrink the box so every new node stays interpolable from old data
    double r = 1e300;
    for (int i = 0; i < out.j(); ++i) {
        double lo = 1e300, hi = -1e300;
        for (int k = 0; k < M.nodes(); ++k) {
            double ci = out.chart_coords(M.values[k])(i) - out.center(i);
            lo = std::min(lo, ci);
            hi = std::max(hi, ci);
        }
        r = std::min(r, std::min(-lo, hi));
    }
    out.radius = std::max(M.spacing, std::floor(r / M.spacing + 1e-9) * M.spacing);
    make_lattice(out);

    auto g = [&](const Vector& c) -> Vector { return out.chart_coords(M.value_at(c)); };
    for (int idx = 0; idx < out.nodes(); ++idx) {
        const Vector& target = out.zetas[idx];
        Vector guess = M.center;
        double best = 1e300;
        for (int k = 0; k < M.nodes(); ++k) {
            double d = (out.chart_coords(M.values[k]) - target).norm();
            if (d < best) {
                best = d;
                guess = M.zetas[k];
            }
        }
        Vector c = newton_solve(g, target, guess, 0.01 * M.spacing,
                                1e-9 * std::max(1.0, target.norm()),
                                "rechart node " + std::to_string(idx));
        out.values[idx] = M.value_at(c);
    }
    out.lipschitz_est = empirical_lipschitz(out);
    return out;
}

NestedManifolds build_nested(const SystemSpec& sys, const ConeField& cf1, const ConeField& cf2,
                             const GridSpec& g1, const GridSpec& g2, double T_max, double tol,
                             double containment_tol) {
    if (cf1.P.rows() != sys.n() || cf2.P.rows() != sys.n())
        throw DimensionError("build_nested: certificates do not match the system");
    NestedManifolds out;
    const Vector q0(0);
    out.M1 = build_manifold(sys, cf1, q0, g1, T_max, tol);
    out.M2 = build_manifold(sys, cf2, q0, g2, T_max, tol);

    double worst = 0.0;
    int worst_node = -1, checked = 0;
    for (int k = 0; k < out.M2.nodes(); ++k) {
        Vector c1 = out.M1.chart_coords(out.M2.values[k]);
        if (!out.M1.in_box(c1)) continue;
        ++checked;
        double d = (out.M2.values[k] - out.M1.value_at(c1)).norm();
        if (d > worst) {
            worst = d;
            worst_node = k;
        }
    }
    if (worst > containment_tol)
        throw ContainmentViolated("node " + std::to_string(worst_node) + " sits " +
                                  format_g17(worst) + " away from the coarse graph");
    out.containment.kind = "containment";
    out.containment.pass = true;
    out.containment.margin = containment_tol - worst;
    out.containment.nu0 = cf2.nu0;
    out.containment.j = cf2.j;
    out.containment.diagnostics["worst_dist"] = worst;
    out.containment.diagnostics["worst_node"] = worst_node;
    out.containment.diagnostics["checked"] = checked;
    out.containment.diagnostics["containment_tol"] = containment_tol;
    return out;
}

double invariance_residual(const SystemSpec& sys, const ManifoldGraph& M, const Vector& q,
                           double t, double step) {
    const double h = step > 0.0 ? step : default_step(sys);
    auto g = [&](const Vector& c) -> Vector {
        return M.chart_coords(flow_state(sys, q, M.value_at(c), t, h));
    };
    // Refresh the graph with one time-t pullback and compare nodewise; the
    // off-node lookup error contracts through the flow, so this measures the
    // invariance defect rather than the interpolant's curvature loss. Nodes
    // whose preimage leaves the box (no interpolable source) are exterior.
    double worst = 0.0;
    std::vector<int> order = outward_order(M, M.center);
    std::vector<char> solved(M.nodes(), 0);
    std::vector<Vector> sources(M.nodes());
    for (int idx : order) {
        const Vector& target = M.zetas[idx];
        Vector guess = target;
        double best = 1e300;
        for (int o : order) {
            if (!solved[o]) continue;
            double d = (M.zetas[o] - target).norm();
            if (d < best) {
                best = d;
                guess = sources[o] + (target - M.zetas[o]);
            }
        }
        Vector c;
        try {
            c = newton_solve(g, target, guess, 1e-5 * std::max(1.0, target.norm()),
                             kNewtonTol * std::max(1.0, target.norm()),
                             "invariance probe node " + std::to_string(idx));
        } catch (const NewtonDiverged&) {
            continue;  // far-exterior preimage; not an interior node
        } catch (const NonFinite&) {
            continue;
        }
        sources[idx] = c;
        solved[idx] = 1;
        if (!M.in_box(c)) continue;
        Vector w = flow_state(sys, q, M.value_at(c), t, h);
        worst = std::max(worst, (w - M.values[idx]).norm());
    }
    return worst;
}

}  // namespace imtk
