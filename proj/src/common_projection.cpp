#include "cbmorph/common_projection.hpp"

#include <sstream>

#include "cbmorph/random.hpp"

namespace cbmorph {

CommonBasis common_basis(const Substructure& ref, Index q) {
    const Matrix Mjj = ref.M(ref.internal_dofs, ref.internal_dofs);
    const Matrix Kjj = ref.K(ref.internal_dofs, ref.internal_dofs);
    CommonBasis b;
    b.theta_o = ref.params.values;
    b.q = q;
    b.source_modes = fixed_interface_modes(Mjj, Kjj, q);
    b.R = Mjj * b.source_modes.vectors;
    return b;
}

ProjectionDiagnostics diagnostics(const CommonBasis& basis, const Matrix& Phi_p,
                                  const ProjectionSettings& settings) {
    if (Phi_p.cols() != basis.q || Phi_p.rows() != basis.R.rows()) {
        std::ostringstream os;
        os << "diagnostics: Phi_p is " << Phi_p.rows() << "x" << Phi_p.cols() << ", basis expects "
           << basis.R.rows() << "x" << basis.q;
        throw DimensionError(os.str());
    }
    const Matrix G = basis.R.transpose() * Phi_p;
    const Vector s = singular_values(G);
    ProjectionDiagnostics d;
    d.q = basis.q;
    d.rank = 0;
    if (s(0) > 0.0) {
        for (Index i = 0; i < s.size(); ++i) {
            if (s(i) > settings.rank_tau * s(0)) ++d.rank;
        }
        d.rcond = s(s.size() - 1) / s(0);
    }
    const LogDet ld = log_determinant(G);
    d.det_sign = ld.sign;
    d.logdet = ld.log_abs;
    d.well_conditioned = d.rank == d.q && d.rcond > settings.rcond_threshold;
    return d;
}

Matrix project_modes(const CommonBasis& basis, const Matrix& Phi_p,
                     const ProjectionSettings& settings) {
    const ProjectionDiagnostics d = diagnostics(basis, Phi_p, settings);
    if (!d.well_conditioned) {
        std::ostringstream os;
        os << "project_modes: ill-conditioned projection (rank " << d.rank << "/" << d.q
           << ", rcond " << d.rcond << ")";
        throw IllConditionedProjectionError(os.str(), d);
    }
    const Matrix G = basis.R.transpose() * Phi_p;
    // Phi_hat G = Phi_p  <=>  G^T Phi_hat^T = Phi_p^T
    Eigen::PartialPivLU<Matrix> lu(G.transpose());
    return lu.solve(Phi_p.transpose()).transpose();
}

CBReduced cb_reduce_common(const Substructure& sp, const Matrix& Phi_p, const CommonBasis& basis,
                           const ProjectionSettings& settings) {
    const Partition p = partition(sp);
    const Matrix Psi = static_modes(p.Kjj, p.Kji);
    const Matrix Phi_hat = project_modes(basis, Phi_p, settings);
    CBReduced out = cb_reduce(sp, cb_transform(Psi, Phi_hat));
    out.provenance.kind = Provenance::Kind::CommonBasis;
    out.provenance.theta_p = sp.params.values;
    out.provenance.theta_o = basis.theta_o;
    return out;
}

CBReduced cb_reduce_common(const Substructure& sp, const CommonBasis& basis,
                           const ProjectionSettings& settings) {
    const Matrix Mjj = sp.M(sp.internal_dofs, sp.internal_dofs);
    const Matrix Kjj = sp.K(sp.internal_dofs, sp.internal_dofs);
    const EigenPairs modes = fixed_interface_modes(Mjj, Kjj, basis.q);
    return cb_reduce_common(sp, modes.vectors, basis, settings);
}

std::vector<Index> indecomposable_block_permutation(Index n, Index lo, Index hi,
                                                    std::uint64_t seed) {
    if (!(0 <= lo && lo < hi && hi <= n) || hi - lo < 2) {
        throw DimensionError("indecomposable_block_permutation: need 0 <= lo < hi <= n, hi - lo >= 2");
    }
    Rng rng(seed);
    std::vector<Index> block(static_cast<std::size_t>(hi - lo));
    for (;;) {
        for (Index k = 0; k < hi - lo; ++k) block[static_cast<std::size_t>(k)] = lo + k;
        rng.shuffle(block);
        // A prefix of length len maps onto itself iff its maximum is lo + len - 1.
        bool decomposable = false;
        Index running_max = -1;
        for (Index len = 1; len < hi - lo; ++len) {
            running_max = std::max(running_max, block[static_cast<std::size_t>(len - 1)]);
            if (running_max == lo + len - 1) {
                decomposable = true;
                break;
            }
        }
        if (!decomposable) break;
    }
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (Index k = 0; k < hi - lo; ++k) perm[static_cast<std::size_t>(lo + k)] = block[static_cast<std::size_t>(k)];
    return perm;
}

std::vector<Index> permuted_rank_profile(const CommonBasis& basis, const std::vector<Index>& perm,
                                         Index q_max, double rank_tau) {
    const Matrix& Phi = basis.source_modes.vectors;
    if (q_max > basis.q || static_cast<Index>(perm.size()) < q_max) {
        throw DimensionError("permuted_rank_profile: q_max exceeds the available modes");
    }
    std::vector<Index> ranks;
    ranks.reserve(static_cast<std::size_t>(q_max));
    for (Index q = 1; q <= q_max; ++q) {
        std::vector<Index> cols(perm.begin(), perm.begin() + q);
        const Matrix G = basis.R.leftCols(q).transpose() * Phi(Eigen::all, cols);
        ranks.push_back(numerical_rank(G, rank_tau));
    }
    return ranks;
}

}  // namespace cbmorph
