#include "imtk/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace imtk {

namespace {

template <typename Mat>
void require_square(const Mat& M, const char* who) {
    if (M.rows() != M.cols())
        throw DimensionError(std::string(who) + ": matrix is " + std::to_string(M.rows()) +
                             "x" + std::to_string(M.cols()));
}

template <typename Mat, typename Rhs>
Rhs lu_solve(const Mat& M, const Rhs& rhs, const char* who) {
    require_square(M, who);
    if (M.rows() != rhs.rows())
        throw DimensionError(std::string(who) + ": rhs has " + std::to_string(rhs.rows()) +
                             " rows, expected " + std::to_string(M.rows()));
    if (M.rows() == 0) return rhs;
    Eigen::FullPivLU<Mat> lu(M);
    const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
    double min_pivot = std::abs(lu.matrixLU()(0, 0));
    for (Eigen::Index i = 1; i < M.rows(); ++i)
        min_pivot = std::min(min_pivot, std::abs(lu.matrixLU()(i, i)));
    if (min_pivot < 1e-14 * scale)
        throw SingularMatrix(std::string(who) + ": pivot " + std::to_string(min_pivot) +
                             " below 1e-14 * " + std::to_string(scale));
    return lu.solve(rhs);
}

}  // namespace

namespace detail {

Matrix solve_linear_real(const Matrix& M, const Matrix& rhs) {
    return lu_solve<Matrix, Matrix>(M, rhs, "solve_linear");
}

CMatrix solve_linear_complex(const CMatrix& M, const CMatrix& rhs) {
    return lu_solve<CMatrix, CMatrix>(M, rhs, "solve_linear");
}

double operator_norm2_real(const Matrix& M) {
    if (M.rows() == 0 || M.cols() == 0) return 0.0;
    if (std::max(M.rows(), M.cols()) <= 32)
        return Eigen::JacobiSVD<Matrix>(M).singularValues()(0);
    return Eigen::BDCSVD<Matrix>(M).singularValues()(0);
}

double operator_norm2_complex(const CMatrix& M) {
    if (M.rows() == 0 || M.cols() == 0) return 0.0;
    return Eigen::JacobiSVD<CMatrix>(M).singularValues()(0);
}

}  // namespace detail

SymmetricEigen sym_eigen(const Matrix& M) {
    require_square(M, "sym_eigen");
    const Matrix S = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    if (es.info() != Eigen::Success) throw NoConvergence("sym_eigen failed to converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

GeneralEigen::GeneralEigen(const Matrix& M) : M_(M) {
    require_square(M, "eig_general");
    Eigen::ComplexSchur<CMatrix> schur(M.cast<Complex>(), /*computeU=*/true);
    if (schur.info() != Eigen::Success) throw NoConvergence("eig_general: Schur iteration failed");
    T_ = schur.matrixT();
    U_ = schur.matrixU();
    eigs_ = T_.diagonal();
}

namespace {

// Swap the eigenvalues at positions (i, i+1) of an upper-triangular T by a
// unitary similarity; U picks up the same rotation. The first rotation column is
// the normalized (T(i,i+1), T(i+1,i+1)-T(i,i)), an eigenvector of the 2x2
// diagonal block for its lower eigenvalue.
void swap_adjacent(CMatrix& T, CMatrix& U, Eigen::Index i) {
    const Complex a = T(i, i), b = T(i, i + 1), d = T(i + 1, i + 1);
    Complex v0 = b, v1 = d - a;
    const double nv = std::sqrt(std::norm(v0) + std::norm(v1));
    if (nv < 1e-300) return;  // equal defective pair: nothing to move
    v0 /= nv;
    v1 /= nv;
    Eigen::Matrix2cd G;
    G << v0, -std::conj(v1), v1, std::conj(v0);
    T.middleRows(i, 2) = G.adjoint() * T.middleRows(i, 2);
    T.middleCols(i, 2) = T.middleCols(i, 2) * G;
    U.middleCols(i, 2) = U.middleCols(i, 2) * G;
    T(i + 1, i) = Complex(0, 0);
}

}  // namespace

Matrix GeneralEigen::invariant_subspace(const std::function<bool(const Complex&)>& select) const {
    const Eigen::Index n = T_.rows();
    CMatrix T = T_;
    CMatrix U = U_;
    std::vector<char> flag(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) flag[i] = select(T(i, i)) ? 1 : 0;

    // Bubble every selected eigenvalue to the top while preserving triangularity.
    Eigen::Index filled = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!flag[i]) continue;
        for (Eigen::Index k = i; k > filled; --k) {
            swap_adjacent(T, U, k - 1);
            std::swap(flag[k - 1], flag[k]);
        }
        ++filled;
    }
    const Eigen::Index k = filled;
    if (k == 0) return Matrix(n, 0);

    // Realify: the selected span is conjugation-closed iff [Re S, Im S] has real
    // rank exactly k.
    const CMatrix S = U.leftCols(k);
    Matrix R(n, 2 * k);
    R << S.real(), S.imag();
    Eigen::JacobiSVD<Matrix> svd(R, Eigen::ComputeThinU);
    const Matrix B = svd.matrixU().leftCols(k);

    const double scale = std::max(M_.cwiseAbs().maxCoeff(), 1e-300);
    const double resid = operator_norm2(M_ * B - B * (B.transpose() * M_ * B));
    if (resid > 1e-8 * scale)
        throw DimensionError(
            "invariant_subspace: selected eigenvalues are not closed under conjugation "
            "(residual " + std::to_string(resid) + ")");
    return B;
}

Inertia inertia_of(const Matrix& P, double tol_rel) {
    const SymmetricEigen es = sym_eigen(P);
    const double scale = std::max(es.values.cwiseAbs().maxCoeff(), 1e-300);
    Inertia in;
    for (Eigen::Index i = 0; i < es.values.size(); ++i) {
        const double v = es.values(i);
        if (std::abs(v) <= tol_rel * scale)
            ++in.zero;
        else if (v < 0)
            ++in.neg;
        else
            ++in.pos;
    }
    return in;
}

double fit_slope(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size() || t.size() < 2) throw DimensionError("fit_slope: need >= 2 samples");
    const double n = static_cast<double>(t.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        st += t[i];
        sy += y[i];
        stt += t[i] * t[i];
        sty += t[i] * y[i];
    }
    const double det = n * stt - st * st;
    if (std::abs(det) < 1e-300) throw SingularMatrix("fit_slope: degenerate abscissae");
    return (n * sty - st * sy) / det;
}

double max_principal_angle(const Matrix& S1, const Matrix& S2) {
    if (S1.rows() != S2.rows() || S1.cols() != S2.cols())
        throw DimensionError("max_principal_angle: shape mismatch");
    if (S1.cols() == 0) return 0.0;
    // sine form: accurate at small angles, where the cosine version floors
    // at the square root of machine precision
    Eigen::JacobiSVD<Matrix> svd(Matrix(S2 - S1 * (S1.transpose() * S2)));
    const double s = std::clamp(svd.singularValues().maxCoeff(), 0.0, 1.0);
    return std::asin(s);
}

Matrix orthonormalize(const Matrix& S) {
    if (S.cols() == 0) return S;
    Eigen::HouseholderQR<Matrix> qr(S);
    Matrix Q = qr.householderQ() * Matrix::Identity(S.rows(), S.cols());
    // fix signs for determinism: make the largest entry of each column positive
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
        Eigen::Index imax = 0;
        Q.col(j).cwiseAbs().maxCoeff(&imax);
        if (Q(imax, j) < 0) Q.col(j) = -Q.col(j);
    }
    return Q;
}

}  // namespace imtk
