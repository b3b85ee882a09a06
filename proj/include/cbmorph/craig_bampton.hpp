#pragma once

#include "cbmorph/linalg.hpp"
#include "cbmorph/model.hpp"

namespace cbmorph {

struct CBTransform {
    Matrix Psi;    // n_j x n_i static constraint modes
    Matrix Phi;    // n_j x q fixed-interface modes (or their projection)
    Matrix T;      // (n_i + n_j) x (n_i + q), rows in [interface; internal] order
    Vector omega2; // eigenvalues of the fixed-interface modes, empty for projected bases
};

struct Provenance {
    enum class Kind { Standard, CommonBasis };
    Kind kind = Kind::Standard;
    Vector theta_p;
    Vector theta_o;
    int region_id = 0;  // 0 when unassigned
};

/// Reduced matrices in [interface; modal] coordinates.
struct CBReduced {
    Matrix Mhat;
    Matrix Khat;
    Vector Fhat;
    Index n_interface = 0;
    Index q = 0;
    Provenance provenance;

    Index r() const { return n_interface + q; }
};

/// Psi = -K_jj^{-1} K_ji from one Cholesky factorization of K_jj.
Matrix static_modes(const Matrix& Kjj, const Matrix& Kji);

EigenPairs fixed_interface_modes(const Matrix& Mjj, const Matrix& Kjj, Index q);

/// T = [[I, 0], [Psi, Phi]].
CBTransform cb_transform(const Matrix& Psi, const Matrix& Phi);

/// T^T M T, T^T K T, T^T F with T expressed in the partition order of `s`.
CBReduced cb_reduce(const Substructure& s, const CBTransform& t);

/// Standard reduction keeping the q lowest fixed-interface modes.
CBReduced cb_reduce(const Substructure& s, Index q);

}  // namespace cbmorph
