#pragma once

#include <utility>
#include <vector>

#include "cbmorph/craig_bampton.hpp"
#include "cbmorph/linalg.hpp"
#include "cbmorph/model.hpp"

namespace cbmorph {

/// Cells joined by summation over shared interface DoF.
///
/// connectivity[c][l] is the global index of local interface DoF l of cell c.
/// Interface globals occupy 0..G-1; each cell's modal DoF are appended after
/// them in cell order. Fixed DoF and load entries use this global numbering.
struct AssemblyPlan {
    std::vector<CBReduced> cells;
    std::vector<std::vector<Index>> connectivity;
    std::vector<Index> fixed_dofs;
    std::vector<std::pair<Index, Complex>> load;
};

/// Connectivity of a chain: the first half of each cell's interface DoF is
/// its left face, the second half its right face, and the right face of
/// cell c coincides with the left face of cell c + 1.
std::vector<std::vector<Index>> chain_connectivity(const std::vector<CBReduced>& cells);

/// Full-order substructure written as a cell: interface DoF first, then all
/// internal DoF playing the role of modal coordinates.
CBReduced full_order_cell(const Substructure& s);

struct AssembledSystem {
    Matrix M;
    Matrix K;
    CVector F;
    Index n_global = 0;            // before elimination of fixed DoF
    Index n_interface_global = 0;
    std::vector<Index> cell_offsets;  // global index of each cell's first modal DoF
    std::vector<Index> free_of_global;  // -1 for fixed DoF
    std::vector<Index> global_of_free;

    Index free_index(Index global) const;
};

AssembledSystem assemble(const AssemblyPlan& plan);

struct RayleighSpec {
    double alpha = 0.0;  // 1/s
    double beta = 0.0;   // s
};

/// Damping ratios at two modes (0-based indices into the ascending spectrum).
struct ModalRatioSpec {
    double zeta_i = 0.0;
    double zeta_j = 0.0;
    Index mode_i = 0;
    Index mode_j = 1;
};

/// Solves zeta = (alpha / omega + beta * omega) / 2 at both modes.
RayleighSpec rayleigh_from_ratios(const Matrix& M, const Matrix& K, const ModalRatioSpec& spec);

Matrix proportional_damping(const Matrix& M, const Matrix& K, const RayleighSpec& spec);
Matrix proportional_damping(const Matrix& M, const Matrix& K, const ModalRatioSpec& spec);

enum class FrfMetric { QuadraticVelocity, Deflection, Transmissibility };

const char* metric_name(FrfMetric m);

struct FrfOutput {
    FrfMetric metric = FrfMetric::QuadraticVelocity;
    std::vector<Index> dofs;  // averaged for quadratic velocity, first entry for deflection
};

struct FrfResult {
    std::vector<double> frequencies_hz;
    std::vector<Complex> response;
    FrfMetric metric = FrfMetric::QuadraticVelocity;

    std::vector<double> magnitude() const;
};

/// n points from f0 to f1 inclusive.
std::vector<double> linear_grid(double f0, double f1, Index n);

/// Harmonic response of (K + i w C - w^2 M) x = F at each grid frequency.
FrfResult frf_sweep(const Matrix& M, const Matrix& K, const Matrix& C, const CVector& F,
                    const std::vector<double>& grid_hz, const FrfOutput& output, int threads = 1);

/// Unit harmonic displacement prescribed at base_dofs; returns x at tip_dof.
FrfResult transmissibility_sweep(const Matrix& M, const Matrix& K, const Matrix& C,
                                 const std::vector<Index>& base_dofs, Index tip_dof,
                                 const std::vector<double>& grid_hz, int threads = 1);

}  // namespace cbmorph
