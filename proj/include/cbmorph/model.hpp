#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cbmorph/linalg.hpp"

namespace cbmorph {

/// Named parameter vector theta with units.
struct ModelParams {
    std::vector<std::string> names;
    std::vector<std::string> units;
    Vector values;

    Index dim() const { return values.size(); }
};

/// Axis-aligned box of admissible parameters with a min-max map to [0,1]^d.
class ParameterSpace {
public:
    ParameterSpace() = default;
    ParameterSpace(std::vector<std::string> names, Vector lo, Vector hi);

    Index dim() const { return lo_.size(); }
    const Vector& lo() const { return lo_; }
    const Vector& hi() const { return hi_; }
    const std::vector<std::string>& names() const { return names_; }

    Vector normalize(const Vector& theta) const;
    Vector denormalize(const Vector& unit) const;
    Matrix normalize_rows(const Matrix& thetas) const;
    bool contains(const Vector& theta, double rel_tol = 0.0) const;

private:
    std::vector<std::string> names_;
    Vector lo_;
    Vector hi_;
};

/// Full-order substructure with an interface/internal DoF split.
struct Substructure {
    Matrix M;
    Matrix K;
    Vector F;
    std::vector<Index> interface_dofs;
    std::vector<Index> internal_dofs;
    ModelParams params;

    Index n_dofs() const { return M.rows(); }
    Index n_interface() const { return static_cast<Index>(interface_dofs.size()); }
    Index n_internal() const { return static_cast<Index>(internal_dofs.size()); }
};

struct Partition {
    Matrix Mii, Mij, Mji, Mjj;
    Matrix Kii, Kij, Kji, Kjj;
    Vector Fi, Fj;
};

Partition partition(const Substructure& s);

/// Inverse of partition: scatters the blocks back into the DoF order of `s`.
void reassemble(const Partition& p, const Substructure& layout, Matrix& M, Matrix& K, Vector& F);

/// Checks the structural invariants (index sets, symmetry, dimensions).
void validate(const Substructure& s);

// ---------------------------------------------------------------------------
// Spring-mass lattice

/// Lattice of rows x cols point masses with in-plane DoF (x, y).
///
/// Horizontal neighbours share axial springs k1 on x, vertical neighbours
/// axial springs k2 on y. A transverse pretension `pretension * k1` couples x
/// of vertical neighbours and y of horizontal neighbours, every y DoF rests
/// on a foundation spring `foundation * k1`, and the y DoF of the top and
/// bottom rows are held by wall springs k2. Interface DoF are all DoF of the
/// first and last columns, ordered column by column, row by row, x before y.
struct LatticeConfig {
    int rows = 11;
    int cols = 11;
    double pretension = 0.25;
    double foundation = 2.08;
};

/// m in kg, k1 and k2 in N/m.
Substructure build_lattice(double m, double k1, double k2, const LatticeConfig& cfg = {});

/// DoF index of node (row, col), direction 0 = x, 1 = y.
inline Index lattice_dof(const LatticeConfig& cfg, int row, int col, int dir) {
    return 2 * (static_cast<Index>(row) * cfg.cols + col) + dir;
}

// ---------------------------------------------------------------------------
// Resonator cell

/// Axial base chain with two identical 2-DoF appendages on one base mass.
///
/// Appendage mass m_r = mass_coeff * W * L is split evenly between a root and
/// a tip mass; both appendage springs are k_r = stiffness_coeff * W / L^3.
/// DoF order: base masses 0..n_base-1, then root/tip of appendage A, then
/// root/tip of appendage B. Interface = first and last base mass.
struct ResonatorCellConfig {
    int n_base = 6;
    int attach_index = 2;
    double base_mass = 0.1;          // kg
    double base_stiffness = 1.0e5;   // N/m
    double mass_coeff = 2.5e-4;      // kg per (L*W)
    double stiffness_coeff = 1.1781e6;  // N/m per (W/L^3)
    double L0 = 10.0;
    double W0 = 40.0;
    double rel_range = 0.5;
};

Substructure build_resonator_cell(double L, double W, const ResonatorCellConfig& cfg = {});

/// [L0, W0] scaled by (1 -/+ rel) per component.
ParameterSpace resonator_space(const ResonatorCellConfig& cfg, double rel);

// ---------------------------------------------------------------------------
// Parameterized generators

using SubstructureGenerator = std::function<Substructure(const Vector& theta)>;

/// theta = [k2] in N/m, mass and k1 fixed.
SubstructureGenerator lattice_k2_generator(double m, double k1, const LatticeConfig& cfg = {});

/// theta = [L, W].
SubstructureGenerator resonator_generator(const ResonatorCellConfig& cfg = {});

}  // namespace cbmorph
