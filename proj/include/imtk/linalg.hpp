#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "imtk/errors.hpp"

namespace imtk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

namespace detail {
Matrix solve_linear_real(const Matrix& M, const Matrix& rhs);
CMatrix solve_linear_complex(const CMatrix& M, const CMatrix& rhs);
double operator_norm2_real(const Matrix& M);
double operator_norm2_complex(const CMatrix& M);
}  // namespace detail

// Solve M X = rhs for square M (full-pivot LU). Throws SingularMatrix when the
// smallest pivot falls below 1e-14 * scale(M).
template <typename DM, typename DR>
auto solve_linear(const Eigen::MatrixBase<DM>& M, const Eigen::MatrixBase<DR>& rhs) {
    if constexpr (std::is_same_v<typename DM::Scalar, double>) {
        Matrix X = detail::solve_linear_real(M, rhs);
        if constexpr (DR::ColsAtCompileTime == 1) return Vector(X.col(0));
        else return X;
    } else {
        return detail::solve_linear_complex(M, rhs);
    }
}

// Largest singular value.
template <typename D>
double operator_norm2(const Eigen::MatrixBase<D>& M) {
    if constexpr (std::is_same_v<typename D::Scalar, double>)
        return detail::operator_norm2_real(M);
    else
        return detail::operator_norm2_complex(M);
}

// Eigendecomposition of a symmetric matrix: values ascending, orthonormal columns.
struct SymmetricEigen {
    Vector values;
    Matrix vectors;
};
SymmetricEigen sym_eigen(const Matrix& M);

// Eigenvalues and real invariant subspaces of a general real matrix, via a
// complex Schur form with unitary adjacent-pair reordering (no eigenvector
// assembly).
class GeneralEigen {
  public:
    explicit GeneralEigen(const Matrix& M);

    const CVector& eigenvalues() const { return eigs_; }

    // Orthonormal basis of the real invariant subspace belonging to the selected
    // eigenvalues. The selection must be closed under complex conjugation;
    // DimensionError otherwise.
    Matrix invariant_subspace(const std::function<bool(const Complex&)>& select) const;

  private:
    Matrix M_;
    CMatrix T_, U_;  // M = U T U^*, T upper triangular
    CVector eigs_;
};

inline GeneralEigen eig_general(const Matrix& M) { return GeneralEigen(M); }

// Inertia (negative / zero / positive eigenvalue counts) of a symmetric matrix.
struct Inertia {
    int neg = 0, zero = 0, pos = 0;
};
Inertia inertia_of(const Matrix& P, double tol_rel = 1e-12);

// Least-squares slope of y against t.
double fit_slope(const std::vector<double>& t, const std::vector<double>& y);

// Principal-angle distance between the column spans of two orthonormal bases.
double max_principal_angle(const Matrix& S1, const Matrix& S2);

// Gram-Schmidt re-orthonormalization (thin QR).
Matrix orthonormalize(const Matrix& S);

}  // namespace imtk
