#include "cbmorph/craig_bampton.hpp"

#include <sstream>

#include "cbmorph/errors.hpp"

namespace cbmorph {

Matrix static_modes(const Matrix& Kjj, const Matrix& Kji) {
    if (Kjj.rows() != Kjj.cols() || Kji.rows() != Kjj.rows()) {
        throw DimensionError("static_modes: K_jj must be square with as many rows as K_ji");
    }
    Eigen::LLT<Matrix> llt(Kjj);
    if (llt.info() != Eigen::Success) {
        throw SingularSystemError("static_modes: K_jj is not positive definite", 0.0);
    }
    return -llt.solve(Kji);
}

EigenPairs fixed_interface_modes(const Matrix& Mjj, const Matrix& Kjj, Index q) {
    return sym_generalized_eig(Kjj, Mjj, q);
}

CBTransform cb_transform(const Matrix& Psi, const Matrix& Phi) {
    if (Psi.rows() != Phi.rows()) {
        std::ostringstream os;
        os << "cb_transform: Psi has " << Psi.rows() << " rows, Phi has " << Phi.rows();
        throw DimensionError(os.str());
    }
    const Index ni = Psi.cols();
    const Index nj = Psi.rows();
    const Index q = Phi.cols();
    CBTransform t;
    t.Psi = Psi;
    t.Phi = Phi;
    t.T = Matrix::Zero(ni + nj, ni + q);
    t.T.topLeftCorner(ni, ni).setIdentity();
    t.T.bottomLeftCorner(nj, ni) = Psi;
    t.T.bottomRightCorner(nj, q) = Phi;
    return t;
}

CBReduced cb_reduce(const Substructure& s, const CBTransform& t) {
    const Index ni = s.n_interface();
    const Index nj = s.n_internal();
    if (t.Psi.rows() != nj || t.Psi.cols() != ni || t.T.rows() != ni + nj) {
        throw DimensionError("cb_reduce: transform does not match the substructure partition");
    }
    std::vector<Index> order(s.interface_dofs);
    order.insert(order.end(), s.internal_dofs.begin(), s.internal_dofs.end());
    const Matrix M = s.M(order, order);
    const Matrix K = s.K(order, order);
    const Vector F = s.F(order);

    CBReduced out;
    out.n_interface = ni;
    out.q = t.Phi.cols();
    out.Mhat = symmetrized(t.T.transpose() * M * t.T);
    out.Khat = symmetrized(t.T.transpose() * K * t.T);
    out.Fhat = t.T.transpose() * F;
    out.provenance.kind = Provenance::Kind::Standard;
    out.provenance.theta_p = s.params.values;
    return out;
}

CBReduced cb_reduce(const Substructure& s, Index q) {
    const Partition p = partition(s);
    const Matrix Psi = static_modes(p.Kjj, p.Kji);
    const EigenPairs modes = fixed_interface_modes(p.Mjj, p.Kjj, q);
    CBTransform t = cb_transform(Psi, modes.vectors);
    t.omega2 = modes.values;
    return cb_reduce(s, t);
}

}  // namespace cbmorph
