#include "cbmorph/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cbmorph/errors.hpp"

namespace cbmorph {

ParameterSpace::ParameterSpace(std::vector<std::string> names, Vector lo, Vector hi)
    : names_(std::move(names)), lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() < 1 || lo_.size() != hi_.size()) {
        throw ParameterError("ParameterSpace: bounds must be non-empty and of equal length");
    }
    if (names_.empty()) {
        for (Index k = 0; k < lo_.size(); ++k) names_.push_back("theta" + std::to_string(k + 1));
    }
    if (static_cast<Index>(names_.size()) != lo_.size()) {
        throw ParameterError("ParameterSpace: one name per dimension required");
    }
    for (Index k = 0; k < lo_.size(); ++k) {
        if (!std::isfinite(lo_(k)) || !std::isfinite(hi_(k)) || !(lo_(k) < hi_(k))) {
            std::ostringstream os;
            os << "ParameterSpace: invalid bounds for '" << names_[k] << "' [" << lo_(k) << ", "
               << hi_(k) << "]";
            throw ParameterError(os.str());
        }
    }
}

Vector ParameterSpace::normalize(const Vector& theta) const {
    if (theta.size() != dim()) throw DimensionError("ParameterSpace::normalize: wrong dimension");
    return ((theta - lo_).array() / (hi_ - lo_).array()).matrix();
}

Vector ParameterSpace::denormalize(const Vector& unit) const {
    if (unit.size() != dim()) throw DimensionError("ParameterSpace::denormalize: wrong dimension");
    return lo_ + (unit.array() * (hi_ - lo_).array()).matrix();
}

Matrix ParameterSpace::normalize_rows(const Matrix& thetas) const {
    Matrix out(thetas.rows(), thetas.cols());
    for (Index i = 0; i < thetas.rows(); ++i) out.row(i) = normalize(thetas.row(i).transpose());
    return out;
}

bool ParameterSpace::contains(const Vector& theta, double rel_tol) const {
    if (theta.size() != dim()) return false;
    for (Index k = 0; k < dim(); ++k) {
        const double slack = rel_tol * (hi_(k) - lo_(k));
        if (theta(k) < lo_(k) - slack || theta(k) > hi_(k) + slack) return false;
    }
    return true;
}

Partition partition(const Substructure& s) {
    const auto& I = s.interface_dofs;
    const auto& J = s.internal_dofs;
    Partition p;
    p.Mii = s.M(I, I);
    p.Mij = s.M(I, J);
    p.Mji = s.M(J, I);
    p.Mjj = s.M(J, J);
    p.Kii = s.K(I, I);
    p.Kij = s.K(I, J);
    p.Kji = s.K(J, I);
    p.Kjj = s.K(J, J);
    p.Fi = s.F(I);
    p.Fj = s.F(J);
    return p;
}

void reassemble(const Partition& p, const Substructure& layout, Matrix& M, Matrix& K, Vector& F) {
    const auto& I = layout.interface_dofs;
    const auto& J = layout.internal_dofs;
    const Index n = static_cast<Index>(I.size() + J.size());
    M.setZero(n, n);
    K.setZero(n, n);
    F.setZero(n);
    M(I, I) = p.Mii;
    M(I, J) = p.Mij;
    M(J, I) = p.Mji;
    M(J, J) = p.Mjj;
    K(I, I) = p.Kii;
    K(I, J) = p.Kij;
    K(J, I) = p.Kji;
    K(J, J) = p.Kjj;
    F(I) = p.Fi;
    F(J) = p.Fj;
}

void validate(const Substructure& s) {
    const Index n = s.M.rows();
    if (n < 1 || s.M.cols() != n || s.K.rows() != n || s.K.cols() != n || s.F.size() != n) {
        throw DimensionError("Substructure: M, K, F sizes disagree");
    }
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    for (Index d : s.interface_dofs) {
        if (d < 0 || d >= n) throw DimensionError("Substructure: interface index out of range");
        ++seen[static_cast<std::size_t>(d)];
    }
    for (Index d : s.internal_dofs) {
        if (d < 0 || d >= n) throw DimensionError("Substructure: internal index out of range");
        ++seen[static_cast<std::size_t>(d)];
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
        throw DimensionError("Substructure: interface and internal DoF must partition all DoF");
    }
    if (!is_symmetric(s.M) || !is_symmetric(s.K)) {
        throw DimensionError("Substructure: M and K must be symmetric");
    }
}

namespace {

void add_spring(Matrix& K, Index a, Index b, double k) {
    K(a, a) += k;
    K(b, b) += k;
    K(a, b) -= k;
    K(b, a) -= k;
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << name << " must be positive and finite, got " << v;
        throw ParameterError(os.str());
    }
}

}  // namespace

Substructure build_lattice(double m, double k1, double k2, const LatticeConfig& cfg) {
    require_positive(m, "lattice mass m");
    require_positive(k1, "lattice stiffness k1");
    require_positive(k2, "lattice stiffness k2");
    if (cfg.rows < 2 || cfg.cols < 3) throw ParameterError("lattice needs >= 2 rows and >= 3 columns");
    if (cfg.pretension < 0.0 || cfg.foundation < 0.0) {
        throw ParameterError("lattice pretension and foundation factors must be non-negative");
    }

    const Index n = 2 * static_cast<Index>(cfg.rows) * cfg.cols;
    Substructure s;
    s.M = m * Matrix::Identity(n, n);
    s.K = Matrix::Zero(n, n);
    s.F = Vector::Zero(n);

    const double kt = cfg.pretension * k1;
    for (int r = 0; r < cfg.rows; ++r) {
        for (int c = 0; c < cfg.cols; ++c) {
            if (c + 1 < cfg.cols) {
                add_spring(s.K, lattice_dof(cfg, r, c, 0), lattice_dof(cfg, r, c + 1, 0), k1);
                add_spring(s.K, lattice_dof(cfg, r, c, 1), lattice_dof(cfg, r, c + 1, 1), kt);
            }
            if (r + 1 < cfg.rows) {
                add_spring(s.K, lattice_dof(cfg, r, c, 1), lattice_dof(cfg, r + 1, c, 1), k2);
                add_spring(s.K, lattice_dof(cfg, r, c, 0), lattice_dof(cfg, r + 1, c, 0), kt);
            }
            s.K(lattice_dof(cfg, r, c, 1), lattice_dof(cfg, r, c, 1)) += cfg.foundation * k1;
        }
    }
    for (int c = 0; c < cfg.cols; ++c) {
        s.K(lattice_dof(cfg, 0, c, 1), lattice_dof(cfg, 0, c, 1)) += k2;
        s.K(lattice_dof(cfg, cfg.rows - 1, c, 1), lattice_dof(cfg, cfg.rows - 1, c, 1)) += k2;
    }

    std::vector<char> is_interface(static_cast<std::size_t>(n), 0);
    for (int c : {0, cfg.cols - 1}) {
        for (int r = 0; r < cfg.rows; ++r) {
            for (int d = 0; d < 2; ++d) {
                const Index dof = lattice_dof(cfg, r, c, d);
                s.interface_dofs.push_back(dof);
                is_interface[static_cast<std::size_t>(dof)] = 1;
            }
        }
    }
    for (Index d = 0; d < n; ++d) {
        if (!is_interface[static_cast<std::size_t>(d)]) s.internal_dofs.push_back(d);
    }

    s.params.names = {"m", "k1", "k2"};
    s.params.units = {"kg", "N/m", "N/m"};
    s.params.values = Vector(3);
    s.params.values << m, k1, k2;
    return s;
}

Substructure build_resonator_cell(double L, double W, const ResonatorCellConfig& cfg) {
    require_positive(L, "resonator length L");
    require_positive(W, "resonator width W");
    const double rel = cfg.rel_range;
    const double tol = 1e-12;
    if (L < cfg.L0 * (1.0 - rel) * (1.0 - tol) || L > cfg.L0 * (1.0 + rel) * (1.0 + tol) ||
        W < cfg.W0 * (1.0 - rel) * (1.0 - tol) || W > cfg.W0 * (1.0 + rel) * (1.0 + tol)) {
        std::ostringstream os;
        os << "resonator cell parameters (L=" << L << ", W=" << W << ") outside the configured bounds";
        throw ParameterError(os.str());
    }
    if (cfg.n_base < 3 || cfg.attach_index <= 0 || cfg.attach_index >= cfg.n_base - 1) {
        throw ParameterError("resonator cell needs >= 3 base masses and an interior attachment");
    }

    const Index nb = cfg.n_base;
    const Index n = nb + 4;
    const double mr = cfg.mass_coeff * W * L;
    const double kr = cfg.stiffness_coeff * W / (L * L * L);

    Substructure s;
    s.M = Matrix::Zero(n, n);
    s.K = Matrix::Zero(n, n);
    s.F = Vector::Zero(n);
    for (Index i = 0; i < nb; ++i) s.M(i, i) = cfg.base_mass;
    for (Index i = 0; i + 1 < nb; ++i) add_spring(s.K, i, i + 1, cfg.base_stiffness);
    for (Index a = 0; a < 2; ++a) {
        const Index root = nb + 2 * a;
        const Index tip = root + 1;
        s.M(root, root) = 0.5 * mr;
        s.M(tip, tip) = 0.5 * mr;
        add_spring(s.K, cfg.attach_index, root, kr);
        add_spring(s.K, root, tip, kr);
    }

    s.interface_dofs = {0, nb - 1};
    for (Index d = 1; d < n; ++d) {
        if (d != nb - 1) s.internal_dofs.push_back(d);
    }
    s.params.names = {"L", "W"};
    s.params.units = {"-", "-"};
    s.params.values = Vector(2);
    s.params.values << L, W;
    return s;
}

ParameterSpace resonator_space(const ResonatorCellConfig& cfg, double rel) {
    if (!(rel > 0.0) || rel > cfg.rel_range + 1e-12) {
        throw ParameterError("resonator space: relative range must lie in (0, configured range]");
    }
    Vector lo(2), hi(2);
    lo << cfg.L0 * (1.0 - rel), cfg.W0 * (1.0 - rel);
    hi << cfg.L0 * (1.0 + rel), cfg.W0 * (1.0 + rel);
    return ParameterSpace({"L", "W"}, lo, hi);
}

SubstructureGenerator lattice_k2_generator(double m, double k1, const LatticeConfig& cfg) {
    return [m, k1, cfg](const Vector& theta) {
        if (theta.size() != 1) throw DimensionError("lattice k2 generator expects theta = [k2]");
        return build_lattice(m, k1, theta(0), cfg);
    };
}

SubstructureGenerator resonator_generator(const ResonatorCellConfig& cfg) {
    return [cfg](const Vector& theta) {
        if (theta.size() != 2) throw DimensionError("resonator generator expects theta = [L, W]");
        return build_resonator_cell(theta(0), theta(1), cfg);
    };
}

}  // namespace cbmorph
