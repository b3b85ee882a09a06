#include "cbmorph/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cbmorph/errors.hpp"
#include "cbmorph/parallel.hpp"

namespace cbmorph {

namespace {
constexpr double kTwoPi = 6.283185307179586;
}

std::vector<std::vector<Index>> chain_connectivity(const std::vector<CBReduced>& cells) {
    std::vector<std::vector<Index>> conn;
    if (cells.empty()) return conn;
    const Index ni = cells.front().n_interface;
    if (ni % 2 != 0) throw ConnectivityError("chain_connectivity: interface size must be even");
    const Index face = ni / 2;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c].n_interface != ni) {
            throw ConnectivityError("chain_connectivity: cells have different interface sizes");
        }
        std::vector<Index> map(static_cast<std::size_t>(ni));
        for (Index l = 0; l < ni; ++l) map[static_cast<std::size_t>(l)] = static_cast<Index>(c) * face + l;
        conn.push_back(std::move(map));
    }
    return conn;
}

CBReduced full_order_cell(const Substructure& s) {
    std::vector<Index> order(s.interface_dofs);
    order.insert(order.end(), s.internal_dofs.begin(), s.internal_dofs.end());
    CBReduced c;
    c.Mhat = s.M(order, order);
    c.Khat = s.K(order, order);
    c.Fhat = s.F(order);
    c.n_interface = s.n_interface();
    c.q = s.n_internal();
    c.provenance.theta_p = s.params.values;
    return c;
}

Index AssembledSystem::free_index(Index global) const {
    if (global < 0 || global >= n_global) throw ConnectivityError("global DoF index out of range");
    return free_of_global[static_cast<std::size_t>(global)];
}

AssembledSystem assemble(const AssemblyPlan& plan) {
    if (plan.cells.empty()) throw ConnectivityError("assemble: no cells");
    if (plan.connectivity.size() != plan.cells.size()) {
        throw ConnectivityError("assemble: one connectivity map per cell required");
    }
    AssembledSystem sys;
    Index n_iface = 0;
    for (std::size_t c = 0; c < plan.cells.size(); ++c) {
        const CBReduced& cell = plan.cells[c];
        const auto& map = plan.connectivity[c];
        if (static_cast<Index>(map.size()) != cell.n_interface) {
            std::ostringstream os;
            os << "assemble: cell " << c << " has " << cell.n_interface << " interface DoF but "
               << map.size() << " connectivity entries";
            throw ConnectivityError(os.str());
        }
        if (cell.Mhat.rows() != cell.r() || cell.Khat.rows() != cell.r() || cell.Fhat.size() != cell.r()) {
            throw ConnectivityError("assemble: cell matrices do not match their declared sizes");
        }
        for (Index g : map) {
            if (g < 0) throw ConnectivityError("assemble: negative global index");
            n_iface = std::max(n_iface, g + 1);
        }
    }
    sys.n_interface_global = n_iface;
    Index next = n_iface;
    for (const CBReduced& cell : plan.cells) {
        sys.cell_offsets.push_back(next);
        next += cell.q;
    }
    sys.n_global = next;

    Matrix Mg = Matrix::Zero(next, next);
    Matrix Kg = Matrix::Zero(next, next);
    CVector Fg = CVector::Zero(next);
    for (std::size_t c = 0; c < plan.cells.size(); ++c) {
        const CBReduced& cell = plan.cells[c];
        std::vector<Index> g(plan.connectivity[c]);
        for (Index k = 0; k < cell.q; ++k) g.push_back(sys.cell_offsets[c] + k);
        Mg(g, g) += cell.Mhat;
        Kg(g, g) += cell.Khat;
        for (std::size_t a = 0; a < g.size(); ++a) Fg(g[a]) += cell.Fhat(static_cast<Index>(a));
    }

    std::set<Index> fixed(plan.fixed_dofs.begin(), plan.fixed_dofs.end());
    for (Index f : fixed) {
        if (f < 0 || f >= next) throw ConnectivityError("assemble: fixed DoF out of range");
    }
    for (const auto& [dof, value] : plan.load) {
        if (dof < 0 || dof >= next) throw ConnectivityError("assemble: loaded DoF out of range");
        if (fixed.count(dof)) throw ConnectivityError("assemble: a DoF is both fixed and loaded");
        Fg(dof) += value;
    }

    sys.free_of_global.assign(static_cast<std::size_t>(next), -1);
    for (Index i = 0; i < next; ++i) {
        if (!fixed.count(i)) {
            sys.free_of_global[static_cast<std::size_t>(i)] = static_cast<Index>(sys.global_of_free.size());
            sys.global_of_free.push_back(i);
        }
    }
    const auto& keep = sys.global_of_free;
    sys.M = Mg(keep, keep);
    sys.K = Kg(keep, keep);
    sys.F = Fg(keep);
    return sys;
}

RayleighSpec rayleigh_from_ratios(const Matrix& M, const Matrix& K, const ModalRatioSpec& spec) {
    const Index need = std::max(spec.mode_i, spec.mode_j) + 1;
    if (spec.mode_i < 0 || spec.mode_j < 0 || need > M.rows()) {
        throw DegenerateSpecError("damping ratio spec: mode index out of range");
    }
    const EigenPairs ep = sym_generalized_eig(K, M, need);
    const double wi = std::sqrt(std::max(ep.values(spec.mode_i), 0.0));
    const double wj = std::sqrt(std::max(ep.values(spec.mode_j), 0.0));
    if (!(wi > 0.0 && wj > 0.0) || std::abs(wi - wj) <= 1e-12 * std::max(wi, wj)) {
        throw DegenerateSpecError("damping ratio spec: the two modes need distinct non-zero frequencies");
    }
    // [1/(2 wi), wi/2; 1/(2 wj), wj/2] [alpha; beta] = [zeta_i; zeta_j]
    const double det = 0.25 * (wj / wi - wi / wj);
    RayleighSpec out;
    out.alpha = (spec.zeta_i * wj / 2.0 - spec.zeta_j * wi / 2.0) / det;
    out.beta = (spec.zeta_j / (2.0 * wi) - spec.zeta_i / (2.0 * wj)) / det;
    return out;
}

Matrix proportional_damping(const Matrix& M, const Matrix& K, const RayleighSpec& spec) {
    return spec.alpha * M + spec.beta * K;
}

Matrix proportional_damping(const Matrix& M, const Matrix& K, const ModalRatioSpec& spec) {
    return proportional_damping(M, K, rayleigh_from_ratios(M, K, spec));
}

const char* metric_name(FrfMetric m) {
    switch (m) {
        case FrfMetric::QuadraticVelocity: return "quadratic_velocity";
        case FrfMetric::Deflection: return "deflection";
        case FrfMetric::Transmissibility: return "transmissibility";
    }
    return "unknown";
}

std::vector<double> FrfResult::magnitude() const {
    std::vector<double> out;
    out.reserve(response.size());
    for (const Complex& z : response) out.push_back(std::abs(z));
    return out;
}

std::vector<double> linear_grid(double f0, double f1, Index n) {
    if (n < 2 || !(f1 > f0)) throw ParameterError("linear_grid: need n >= 2 and f1 > f0");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        g[static_cast<std::size_t>(i)] = f0 + (f1 - f0) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return g;
}

namespace {

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw ParameterError("frequency grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
            throw ParameterError("frequency grid must be non-negative and strictly increasing");
        }
    }
}

CMatrix dynamic_stiffness(const Matrix& M, const Matrix& K, const Matrix& C, double w) {
    CMatrix A(K.rows(), K.cols());
    A.real() = K - w * w * M;
    A.imag() = w * C;
    return A;
}

CVector solve_at(const CMatrix& A, const CVector& b, double f_hz) {
    try {
        return solve(A, CMatrix(b)).col(0);
    } catch (const SingularSystemError& e) {
        std::ostringstream os;
        os << "harmonic solve singular at " << f_hz << " Hz (rcond estimate " << e.rcond() << ")";
        throw SingularSystemError(os.str(), e.rcond());
    }
}

}  // namespace

FrfResult frf_sweep(const Matrix& M, const Matrix& K, const Matrix& C, const CVector& F,
                    const std::vector<double>& grid_hz, const FrfOutput& output, int threads) {
    check_grid(grid_hz);
    const Index n = K.rows();
    if (M.rows() != n || C.rows() != n || F.size() != n) throw DimensionError("frf_sweep: size mismatch");
    if (output.dofs.empty()) throw ParameterError("frf_sweep: no output DoF selected");
    for (Index d : output.dofs) {
        if (d < 0 || d >= n) throw ParameterError("frf_sweep: output DoF out of range");
    }
    FrfResult out;
    out.frequencies_hz = grid_hz;
    out.metric = output.metric;
    out.response.resize(grid_hz.size());
    parallel_for(grid_hz.size(), threads, [&](std::size_t k) {
        const double w = kTwoPi * grid_hz[k];
        const CVector x = solve_at(dynamic_stiffness(M, K, C, w), F, grid_hz[k]);
        if (output.metric == FrfMetric::QuadraticVelocity) {
            double acc = 0.0;
            for (Index d : output.dofs) acc += std::norm(Complex(0.0, w) * x(d));
            out.response[k] = Complex(acc / static_cast<double>(output.dofs.size()), 0.0);
        } else {
            out.response[k] = x(output.dofs.front());
        }
    });
    return out;
}

FrfResult transmissibility_sweep(const Matrix& M, const Matrix& K, const Matrix& C,
                                 const std::vector<Index>& base_dofs, Index tip_dof,
                                 const std::vector<double>& grid_hz, int threads) {
    check_grid(grid_hz);
    const Index n = K.rows();
    if (base_dofs.empty()) throw ParameterError("transmissibility_sweep: no base DoF");
    std::vector<char> is_base(static_cast<std::size_t>(n), 0);
    for (Index b : base_dofs) {
        if (b < 0 || b >= n) throw ParameterError("transmissibility_sweep: base DoF out of range");
        is_base[static_cast<std::size_t>(b)] = 1;
    }
    if (tip_dof < 0 || tip_dof >= n) throw ParameterError("transmissibility_sweep: tip DoF out of range");
    std::vector<Index> free;
    for (Index i = 0; i < n; ++i) {
        if (!is_base[static_cast<std::size_t>(i)]) free.push_back(i);
    }
    const bool tip_is_base = is_base[static_cast<std::size_t>(tip_dof)] != 0;
    Index tip_free = -1;
    for (std::size_t k = 0; k < free.size(); ++k) {
        if (free[k] == tip_dof) tip_free = static_cast<Index>(k);
    }

    const Matrix Mff = M(free, free), Kff = K(free, free), Cff = C(free, free);
    const Vector Mfp = M(free, base_dofs).rowwise().sum();
    const Vector Kfp = K(free, base_dofs).rowwise().sum();
    const Vector Cfp = C(free, base_dofs).rowwise().sum();

    FrfResult out;
    out.frequencies_hz = grid_hz;
    out.metric = FrfMetric::Transmissibility;
    out.response.resize(grid_hz.size());
    parallel_for(grid_hz.size(), threads, [&](std::size_t k) {
        if (tip_is_base) {
            out.response[k] = Complex(1.0, 0.0);
            return;
        }
        const double w = kTwoPi * grid_hz[k];
        CVector rhs(static_cast<Index>(free.size()));
        rhs.real() = -(Kfp - w * w * Mfp);
        rhs.imag() = -w * Cfp;
        const CVector x = solve_at(dynamic_stiffness(Mff, Kff, Cff, w), rhs, grid_hz[k]);
        out.response[k] = x(tip_free);
    });
    return out;
}

}  // namespace cbmorph
