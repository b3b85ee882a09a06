#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbmorph/craig_bampton.hpp"
#include "cbmorph/errors.hpp"

namespace cbmorph {

/// Reference basis R = M_jj^o Phi^o of a reference substructure.
struct CommonBasis {
    Vector theta_o;
    Matrix R;
    Index q = 0;
    EigenPairs source_modes;
};

struct ProjectionSettings {
    double rank_tau = 1e-8;
    double rcond_threshold = 1e-10;
};

/// Conditioning of G = R^T Phi^p.
struct ProjectionDiagnostics {
    Index rank = 0;
    Index q = 0;
    double rcond = 0.0;
    int det_sign = 0;
    double logdet = 0.0;
    bool well_conditioned = false;
};

class IllConditionedProjectionError : public NumericalError {
public:
    IllConditionedProjectionError(const std::string& what, ProjectionDiagnostics d)
        : NumericalError(what), diagnostics_(d) {}
    const ProjectionDiagnostics& diagnostics() const noexcept { return diagnostics_; }

private:
    ProjectionDiagnostics diagnostics_;
};

CommonBasis common_basis(const Substructure& ref, Index q);

ProjectionDiagnostics diagnostics(const CommonBasis& basis, const Matrix& Phi_p,
                                  const ProjectionSettings& settings = {});

/// Phi_hat = Phi_p G^{-1}, computed as a solve with G^T.
Matrix project_modes(const CommonBasis& basis, const Matrix& Phi_p,
                     const ProjectionSettings& settings = {});

/// Reduction of `sp` with T = [[I, 0], [Psi^p, Phi_hat]] in the reference basis.
CBReduced cb_reduce_common(const Substructure& sp, const CommonBasis& basis,
                           const ProjectionSettings& settings = {});

/// Same, reusing fixed-interface modes of `sp` already computed (q columns).
CBReduced cb_reduce_common(const Substructure& sp, const Matrix& Phi_p, const CommonBasis& basis,
                           const ProjectionSettings& settings = {});

// ---------------------------------------------------------------------------
// Mode-swap harness

/// Permutation of 0..n-1 that shuffles the block [lo, hi) (0-based) and fixes
/// everything else. Shuffles are redrawn until no proper prefix [lo, k) of the
/// block maps onto itself, so every cut inside the block moves a mode across.
std::vector<Index> indecomposable_block_permutation(Index n, Index lo, Index hi,
                                                    std::uint64_t seed);

/// Ranks of G(q) = R(:, 1:q)^T Phi(:, perm(1:q)) for q = 1..q_max, using the
/// reference modes themselves as the perturbed set.
std::vector<Index> permuted_rank_profile(const CommonBasis& basis, const std::vector<Index>& perm,
                                         Index q_max, double rank_tau = 1e-8);

}  // namespace cbmorph
