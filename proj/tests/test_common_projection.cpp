#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "cbmorph/common_projection.hpp"
#include "cbmorph/random.hpp"

namespace {

using namespace cbmorph;

constexpr double kMass = 5e-3;
constexpr double kK1 = 1e6;

const CommonBasis& lattice_basis_q80() {
    static const CommonBasis b = common_basis(build_lattice(kMass, kK1, 0.9e6), 80);
    return b;
}

Matrix internal_modes(const Substructure& s, Index q) {
    const Partition p = partition(s);
    return fixed_interface_modes(p.Mjj, p.Kjj, q).vectors;
}

CommonBasis truncated(const CommonBasis& b, Index q) {
    CommonBasis t = b;
    t.q = q;
    t.R = b.R.leftCols(q);
    t.source_modes.values = b.source_modes.values.head(q);
    t.source_modes.vectors = b.source_modes.vectors.leftCols(q);
    return t;
}

TEST(CommonBasis, IdentityMassGivesOrthonormalR) {
    const CommonBasis b = common_basis(build_lattice(1.0, 1.0, 0.9), 12);
    EXPECT_TRUE(b.R.isApprox(b.source_modes.vectors));
    EXPECT_LE((b.R.transpose() * b.R - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(CommonBasis, LatticeBiorthogonality) {
    const CommonBasis b = common_basis(build_lattice(kMass, kK1, 0.9e6), 45);
    EXPECT_EQ(b.R.cols(), 45);
    EXPECT_LE((b.R.transpose() * b.source_modes.vectors - Matrix::Identity(45, 45)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_DOUBLE_EQ(b.theta_o(2), 0.9e6);
}

TEST(CommonBasis, SingleColumn) {
    const CommonBasis b = common_basis(build_resonator_cell(10.0, 40.0), 1);
    ASSERT_EQ(b.R.cols(), 1);
    EXPECT_NEAR(b.R.col(0).dot(b.source_modes.vectors.col(0)), 1.0, 1e-12);
}

TEST(Diagnostics, ZeroPerturbationIsPerfectlyConditioned) {
    const CommonBasis b = truncated(lattice_basis_q80(), 45);
    const ProjectionDiagnostics d = diagnostics(b, b.source_modes.vectors);
    EXPECT_EQ(d.rank, 45);
    EXPECT_NEAR(d.rcond, 1.0, 1e-8);
    EXPECT_EQ(d.det_sign, 1);
    EXPECT_NEAR(d.logdet, 0.0, 1e-8);
    EXPECT_TRUE(d.well_conditioned);
    EXPECT_THROW(diagnostics(b, b.source_modes.vectors.leftCols(44)), DimensionError);
}

TEST(Diagnostics, WellConditionedFlagMatchesRankAndRcond) {
    const CommonBasis b = truncated(lattice_basis_q80(), 45);
    for (double k2 : {0.6e6, 0.85e6, 1.05e6, 1.3e6}) {
        const ProjectionDiagnostics d = diagnostics(b, internal_modes(build_lattice(kMass, kK1, k2), 45));
        EXPECT_EQ(d.well_conditioned, d.rank == d.q && d.rcond > 1e-10) << k2;
    }
}

TEST(ModeSwapHarness, BlockSwapsAmongModes21To80) {
    const CommonBasis& b = lattice_basis_q80();
    const auto perm = indecomposable_block_permutation(b.q, 20, 80, 1);
    const auto ranks = permuted_rank_profile(b, perm, 80);
    EXPECT_EQ(ranks[19], 20);   // q = 20
    EXPECT_LT(ranks[44], 45);   // q = 45
    EXPECT_EQ(ranks[79], 80);   // q = 80
}

TEST(ModeSwapHarness, RankEqualsRetainedOverlapForManySeeds) {
    const CommonBasis& b = lattice_basis_q80();
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const auto perm = indecomposable_block_permutation(b.q, 20, 80, seed);
        const auto ranks = permuted_rank_profile(b, perm, 80);
        for (Index q = 1; q <= 80; ++q) {
            Index overlap = 0;
            for (Index k = 0; k < q; ++k) overlap += perm[static_cast<std::size_t>(k)] < q ? 1 : 0;
            EXPECT_EQ(ranks[static_cast<std::size_t>(q - 1)], overlap) << "seed " << seed << " q " << q;
            if (q > 20 && q < 80) {
                EXPECT_LT(ranks[static_cast<std::size_t>(q - 1)], q);
            }
        }
    }
}

TEST(ModeSwapHarness, SwapsInsideRetainedSetKeepFullRank) {
    const CommonBasis& b = lattice_basis_q80();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto perm = indecomposable_block_permutation(b.q, 0, 45, seed);
        EXPECT_EQ(permuted_rank_profile(b, perm, 45).back(), 45);
    }
}

TEST(ModeSwapHarness, PermutationIsIndecomposableAndFixesOutside) {
    const auto perm = indecomposable_block_permutation(100, 20, 80, 7);
    std::set<Index> block;
    for (Index i = 0; i < 100; ++i) {
        const Index v = perm[static_cast<std::size_t>(i)];
        if (i < 20 || i >= 80) {
            EXPECT_EQ(v, i);
        } else {
            EXPECT_GE(v, 20);
            EXPECT_LT(v, 80);
            block.insert(v);
        }
    }
    EXPECT_EQ(block.size(), 60u);
    Index running_max = -1;
    for (Index len = 1; len < 60; ++len) {
        running_max = std::max(running_max, perm[static_cast<std::size_t>(19 + len)]);
        EXPECT_NE(running_max, 19 + len);
    }
    EXPECT_EQ(perm, indecomposable_block_permutation(100, 20, 80, 7));
    EXPECT_THROW(indecomposable_block_permutation(10, 5, 6, 1), DimensionError);
    EXPECT_THROW(permuted_rank_profile(lattice_basis_q80(), perm, 81), DimensionError);
}

TEST(ProjectModes, IdentityAndScaledGram) {
    const CommonBasis b = truncated(lattice_basis_q80(), 45);
    const Matrix Phi_hat = project_modes(b, b.source_modes.vectors);
    EXPECT_LE((Phi_hat - b.source_modes.vectors).cwiseAbs().maxCoeff(), 1e-10);

    CommonBasis unit;
    unit.q = 3;
    unit.R = Matrix::Identity(3, 3);
    const Matrix Phi_p = 2.0 * Matrix::Identity(3, 3);
    EXPECT_TRUE(project_modes(unit, Phi_p).isApprox(Phi_p / 2.0));
}

TEST(ProjectModes, SmallPerturbationIsFiniteAndBiorthogonal) {
    const CommonBasis b = truncated(lattice_basis_q80(), 45);
    const Matrix Phi_p = internal_modes(build_lattice(kMass, kK1, 0.85e6), 45);
    EXPECT_TRUE(diagnostics(b, Phi_p).well_conditioned);
    const Matrix Phi_hat = project_modes(b, Phi_p);
    EXPECT_TRUE(Phi_hat.allFinite());
    EXPECT_LE((b.R.transpose() * Phi_hat - Matrix::Identity(45, 45)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ProjectModes, CrossingThrowsWithDiagnostics) {
    const CommonBasis b = truncated(lattice_basis_q80(), 45);
    const Matrix Phi_p = internal_modes(build_lattice(kMass, kK1, 1.2e6), 45);
    try {
        project_modes(b, Phi_p);
        FAIL() << "expected IllConditionedProjectionError";
    } catch (const IllConditionedProjectionError& e) {
        EXPECT_FALSE(e.diagnostics().well_conditioned);
        EXPECT_EQ(e.diagnostics().q, 45);
    }
}

TEST(ProjectModes, DeficientSideFlipsWithReference) {
    // The 45/46 crossing sits near k2 = 1.0 kN/mm.
    const CommonBasis below = common_basis(build_lattice(kMass, kK1, 0.9e6), 45);
    const CommonBasis above = common_basis(build_lattice(kMass, kK1, 1.1e6), 45);
    const Matrix lo = internal_modes(build_lattice(kMass, kK1, 0.95e6), 45);
    const Matrix hi = internal_modes(build_lattice(kMass, kK1, 1.05e6), 45);
    EXPECT_TRUE(diagnostics(below, lo).well_conditioned);
    EXPECT_FALSE(diagnostics(below, hi).well_conditioned);
    EXPECT_FALSE(diagnostics(above, lo).well_conditioned);
    EXPECT_TRUE(diagnostics(above, hi).well_conditioned);
}

TEST(CbReduceCommon, ZeroPerturbationMatchesStandardReduction) {
    const Substructure s = build_lattice(kMass, kK1, 0.9e6);
    const CommonBasis b = truncated(lattice_basis_q80(), 45);
    const CBReduced std_cb = cb_reduce(s, 45);
    const CBReduced com_cb = cb_reduce_common(s, b);
    const double mscale = std_cb.Mhat.cwiseAbs().maxCoeff();
    const double kscale = std_cb.Khat.cwiseAbs().maxCoeff();
    EXPECT_LE((com_cb.Mhat - std_cb.Mhat).cwiseAbs().maxCoeff(), 1e-10 * mscale);
    EXPECT_LE((com_cb.Khat - std_cb.Khat).cwiseAbs().maxCoeff(), 1e-10 * kscale);
    EXPECT_EQ(com_cb.provenance.kind, Provenance::Kind::CommonBasis);
    EXPECT_TRUE(com_cb.provenance.theta_o.isApprox(b.theta_o));
}

TEST(CbReduceCommon, ReducedMatricesVaryContinuously) {
    // Central differences at two step sizes agree: the entries are smooth in k2.
    const CommonBasis b = truncated(lattice_basis_q80(), 45);
    auto mhat = [&](double k2) { return cb_reduce_common(build_lattice(kMass, kK1, k2), b).Khat; };
    const double x = 0.85e6, h = 1e3;
    const Matrix d1 = (mhat(x + h) - mhat(x - h)) / (2.0 * h);
    const Matrix d2 = (mhat(x + 2.0 * h) - mhat(x - 2.0 * h)) / (4.0 * h);
    const double slope = d1.cwiseAbs().maxCoeff();
    EXPECT_TRUE(std::isfinite(slope));
    EXPECT_LE((d1 - d2).cwiseAbs().maxCoeff(), 1e-2 * slope);
}

TEST(CbReduceCommon, IllConditionedReductionThrows) {
    const CommonBasis b = truncated(lattice_basis_q80(), 45);
    EXPECT_THROW(cb_reduce_common(build_lattice(kMass, kK1, 1.25e6), b), IllConditionedProjectionError);
}

}  // namespace
