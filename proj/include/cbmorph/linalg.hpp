#pragma once

#include <complex>

#include <Eigen/Dense>

namespace cbmorph {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Eigenpairs of K phi = lambda M phi. `values` ascending (lambda = omega^2),
/// column l of `vectors` is the mass-normalized mode of values[l].
struct EigenPairs {
    Vector values;
    Matrix vectors;
};

/// Thin SVD, singular values descending.
struct SvdResult {
    Matrix U;
    Matrix V;
    Vector singular_values;
};

struct LogDet {
    int sign = 0;  // 0 for an exactly singular matrix
    double log_abs = 0.0;
};

/// The q lowest eigenpairs of the symmetric pencil (K, M), M positive definite.
/// Solved by Cholesky reduction M = L L^T and a dense symmetric eigensolver.
/// Each mode's sign is fixed so that its largest-magnitude entry is positive.
EigenPairs sym_generalized_eig(const Matrix& K, const Matrix& M, Index q);

SvdResult svd(const Matrix& A);
Vector singular_values(const Matrix& A);

/// Count of singular values above tau * sigma_max; 0 for the zero matrix.
Index numerical_rank(const Matrix& A, double tau = 1e-8);

/// sigma_min / sigma_max of a square matrix; 0 when singular.
double rcond(const Matrix& A);

LogDet log_determinant(const Matrix& A);

/// Dense LU solves. Throw SingularSystemError when the LU condition
/// estimate drops below `min_rcond`.
Matrix solve(const Matrix& A, const Matrix& B, double min_rcond = 1e-14);
CMatrix solve(const CMatrix& A, const CMatrix& B, double min_rcond = 1e-14);

bool is_symmetric(const Matrix& A, double rel_tol = 1e-12);
Matrix symmetrized(const Matrix& A);

}  // namespace cbmorph
