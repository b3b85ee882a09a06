#include "cbmorph/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cbmorph/errors.hpp"

namespace cbmorph {

namespace {

void require_square(const Matrix& A, const char* name) {
    if (A.rows() != A.cols() || A.rows() == 0) {
        std::ostringstream os;
        os << name << " must be square and non-empty, got " << A.rows() << "x" << A.cols();
        throw DimensionError(os.str());
    }
}

template <class Mat>
Mat lu_solve(const Mat& A, const Mat& B, double min_rcond) {
    if (A.rows() != A.cols() || A.rows() != B.rows()) {
        throw DimensionError("solve: incompatible dimensions");
    }
    Eigen::PartialPivLU<Mat> lu(A);
    const double rc = lu.rcond();
    if (!(rc > min_rcond)) {
        std::ostringstream os;
        os << "solve: matrix is near-singular (rcond estimate " << rc << ")";
        throw SingularSystemError(os.str(), rc);
    }
    return lu.solve(B);
}

}  // namespace

EigenPairs sym_generalized_eig(const Matrix& K, const Matrix& M, Index q) {
    require_square(K, "K");
    require_square(M, "M");
    const Index n = K.rows();
    if (M.rows() != n) throw DimensionError("sym_generalized_eig: K and M differ in size");
    if (q < 1 || q > n) {
        std::ostringstream os;
        os << "sym_generalized_eig: requested " << q << " modes of a size-" << n << " problem";
        throw DimensionError(os.str());
    }

    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) {
        throw DecompositionError("sym_generalized_eig: mass matrix is not positive definite");
    }
    const auto L = llt.matrixL();
    // C = L^-1 K L^-T
    Matrix C = L.solve(K);
    C = L.solve(C.transpose()).transpose();
    C = 0.5 * (C + C.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> es(C);
    if (es.info() != Eigen::Success) {
        throw DecompositionError("sym_generalized_eig: symmetric eigensolver did not converge");
    }

    EigenPairs out;
    out.values = es.eigenvalues().head(q);
    out.vectors = llt.matrixU().solve(es.eigenvectors().leftCols(q));
    for (Index l = 0; l < q; ++l) {
        Index imax = 0;
        out.vectors.col(l).cwiseAbs().maxCoeff(&imax);
        if (out.vectors(imax, l) < 0.0) out.vectors.col(l) *= -1.0;
    }
    return out;
}

SvdResult svd(const Matrix& A) {
    Eigen::BDCSVD<Matrix> dec(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {dec.matrixU(), dec.matrixV(), dec.singularValues()};
}

Vector singular_values(const Matrix& A) {
    if (A.size() == 0) return Vector();
    Eigen::BDCSVD<Matrix> dec(A);
    return dec.singularValues();
}

Index numerical_rank(const Matrix& A, double tau) {
    const Vector s = singular_values(A);
    if (s.size() == 0 || s(0) == 0.0) return 0;
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > tau * s(0)) ++r;
    }
    return r;
}

double rcond(const Matrix& A) {
    require_square(A, "rcond argument");
    const Vector s = singular_values(A);
    if (s(0) == 0.0) return 0.0;
    return s(s.size() - 1) / s(0);
}

LogDet log_determinant(const Matrix& A) {
    require_square(A, "log_determinant argument");
    Eigen::PartialPivLU<Matrix> lu(A);
    const Matrix& LU = lu.matrixLU();
    LogDet out;
    out.sign = static_cast<int>(lu.permutationP().determinant());
    for (Index i = 0; i < LU.rows(); ++i) {
        const double d = LU(i, i);
        if (d == 0.0) return {0, -std::numeric_limits<double>::infinity()};
        if (d < 0.0) out.sign = -out.sign;
        out.log_abs += std::log(std::abs(d));
    }
    return out;
}

Matrix solve(const Matrix& A, const Matrix& B, double min_rcond) {
    return lu_solve<Matrix>(A, B, min_rcond);
}

CMatrix solve(const CMatrix& A, const CMatrix& B, double min_rcond) {
    return lu_solve<CMatrix>(A, B, min_rcond);
}

bool is_symmetric(const Matrix& A, double rel_tol) {
    if (A.rows() != A.cols()) return false;
    const double scale = A.cwiseAbs().maxCoeff();
    return (A - A.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Matrix symmetrized(const Matrix& A) { return 0.5 * (A + A.transpose()); }

}  // namespace cbmorph
