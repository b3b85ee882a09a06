#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cbmorph/region.hpp"

namespace {

using namespace cbmorph;

constexpr double kMass = 5e-3;
constexpr double kK1 = 1e6;
constexpr double kCrossing = 0.9993e6;  // 45/46 crossing of the default lattice, N/m

ParameterSpace k2_space(double lo = 0.45e6, double hi = 1.35e6) {
    return ParameterSpace({"k2"}, Vector::Constant(1, lo), Vector::Constant(1, hi));
}

Matrix internal_modes(const Substructure& s, Index q) {
    const Partition p = partition(s);
    return fixed_interface_modes(p.Mjj, p.Kjj, q).vectors;
}

std::vector<Vector> k2_grid(double lo, double hi, int n) {
    std::vector<Vector> out;
    for (int i = 0; i < n; ++i) out.push_back(Vector::Constant(1, lo + (hi - lo) * (i + 0.5) / n));
    return out;
}

TEST(LatinHypercube, OnePointPerQuartile) {
    const ParameterSpace sp({"x"}, Vector::Constant(1, 0.0), Vector::Constant(1, 1.0));
    const auto pts = latin_hypercube(4, sp, 3);
    std::vector<int> bins(4, 0);
    for (const auto& p : pts) ++bins[static_cast<std::size_t>(std::floor(p(0) * 4.0))];
    EXPECT_EQ(bins, std::vector<int>(4, 1));
}

TEST(LatinHypercube, MarginalStratificationAndDeterminism) {
    const ParameterSpace sp({"a", "b"}, Eigen::Vector2d(-1.0, 10.0), Eigen::Vector2d(1.0, 30.0));
    const auto pts = latin_hypercube(10, sp, 42);
    for (Index k = 0; k < 2; ++k) {
        std::vector<int> bins(10, 0);
        for (const auto& p : pts) ++bins[static_cast<std::size_t>(std::floor(sp.normalize(p)(k) * 10.0))];
        EXPECT_EQ(bins, std::vector<int>(10, 1)) << "axis " << k;
    }
    const auto again = latin_hypercube(10, sp, 42);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_TRUE((pts[i].array() == again[i].array()).all());
    EXPECT_THROW(latin_hypercube(0, sp, 1), ParameterError);
}

TEST(DivideSpace, SingleShellCoversEverything) {
    const ParameterSpace sp({"a", "b"}, Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 1.0));
    const ShellPartition sh = divide_space(sp, Eigen::Vector2d(0.3, 0.6), 1);
    for (const auto& p : latin_hypercube(50, sp, 1)) EXPECT_EQ(sh.shell_of(p), 1);
    EXPECT_DOUBLE_EQ(sh.volume_fraction(1), 1.0);
}

TEST(DivideSpace, CenteredShellsPartitionTheArea) {
    const ParameterSpace sp({"a", "b"}, Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(2.0, 4.0));
    const ShellPartition sh = divide_space(sp, Eigen::Vector2d(1.0, 2.0), 3);
    EXPECT_NEAR(sh.volume_fraction(1), 1.0 / 9.0, 1e-14);
    EXPECT_NEAR(sh.volume_fraction(2), 3.0 / 9.0, 1e-14);
    EXPECT_NEAR(sh.volume_fraction(3), 5.0 / 9.0, 1e-14);
    EXPECT_NEAR(sh.volume_fraction(1) + sh.volume_fraction(2) + sh.volume_fraction(3), 1.0, 1e-14);
    // Every sample lands in exactly one shell, and shell index follows the radius.
    for (const auto& p : latin_hypercube(200, sp, 5)) {
        int hits = 0;
        for (Index s = 1; s <= 3; ++s) hits += sh.contains(s, p) ? 1 : 0;
        EXPECT_EQ(hits, 1);
        const double r = sh.radius(p);
        EXPECT_EQ(sh.shell_of(p), std::min<Index>(3, static_cast<Index>(std::floor(r * 3.0)) + 1));
    }
}

TEST(DivideSpace, OffCenterReferenceFractionsSumToOne) {
    const ParameterSpace sp({"a", "b"}, Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 1.0));
    const ShellPartition sh = divide_space(sp, Eigen::Vector2d(0.2, 0.7), 4);
    double total = 0.0;
    for (Index s = 1; s <= 4; ++s) total += sh.volume_fraction(s);
    EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(DivideSpace, ReferenceOnBoundaryIsRejected) {
    const ParameterSpace sp = k2_space();
    EXPECT_THROW(divide_space(sp, Vector::Constant(1, 0.45e6), 3), GeometryError);
    EXPECT_THROW(divide_space(sp, Vector::Constant(1, 0.9e6), 0), GeometryError);
}

TEST(NormalizedDistance, BasicProperties) {
    const ParameterSpace unit({"a", "b"}, Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 1.0));
    const ParameterSpace wide({"a", "b"}, Eigen::Vector2d(-5.0, 100.0), Eigen::Vector2d(15.0, 300.0));
    EXPECT_EQ(normalized_distance(Eigen::Vector2d(0.3, 0.3), Eigen::Vector2d(0.3, 0.3), unit), 0.0);
    EXPECT_NEAR(normalized_distance(Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 1.0), unit), std::sqrt(2.0), 1e-15);
    const Eigen::Vector2d a(0.25, 0.5), b(0.75, 0.1);
    EXPECT_NEAR(normalized_distance(wide.denormalize(a), wide.denormalize(b), wide),
                normalized_distance(a, b, unit), 1e-14);
}

TEST(LabelSamples, LatticeAcceptsBelowCrossingRejectsAbove) {
    LabelingOptions opts;
    opts.q = 45;
    opts.n_sub = 3;
    opts.n_samples = 30;
    opts.seed = 7;
    const LabelingResult r =
        label_samples(k2_space(), Vector::Constant(1, 0.9e6), lattice_k2_generator(kMass, kK1), opts);
    ASSERT_EQ(r.samples.size(), 30u);
    Index accepted = 0, rejected = 0;
    for (const auto& s : r.samples) {
        if (s.label == Label::Accepted) {
            EXPECT_LT(s.theta(0), kCrossing);
            ++accepted;
        }
        if (s.label == Label::Rejected) {
            EXPECT_GT(s.theta(0), kCrossing);
            ++rejected;
        }
        EXPECT_EQ(s.diagnostics.has_value(), s.label != Label::Skipped);
    }
    EXPECT_GT(accepted, 0);
    EXPECT_GT(rejected, 0);
    EXPECT_FALSE(r.terminated_early);
}

TEST(LabelSamples, ReferenceAboveCrossingFlipsLabels) {
    LabelingOptions opts;
    opts.q = 45;
    opts.n_sub = 3;
    opts.n_samples = 30;
    opts.seed = 7;
    const LabelingResult r =
        label_samples(k2_space(), Vector::Constant(1, 1.1e6), lattice_k2_generator(kMass, kK1), opts);
    Index accepted = 0, rejected = 0;
    for (const auto& s : r.samples) {
        if (s.label == Label::Accepted) {
            EXPECT_GT(s.theta(0), kCrossing);
            ++accepted;
        }
        if (s.label == Label::Rejected) {
            EXPECT_LT(s.theta(0), kCrossing);
            ++rejected;
        }
    }
    EXPECT_GT(accepted, 0);
    EXPECT_GT(rejected, 0);
}

TEST(LabelSamples, NoCrossingAmongRetainedModesAcceptsAll) {
    LabelingOptions opts;
    opts.q = 10;
    opts.n_sub = 3;
    opts.n_samples = 25;
    opts.seed = 2;
    const auto gen = lattice_k2_generator(kMass, kK1);
    const ParameterSpace sp = k2_space();
    const LabelingResult r = label_samples(sp, Vector::Constant(1, 0.9e6), gen, opts);
    const CommonBasis basis = common_basis(gen(Vector::Constant(1, 0.9e6)), 10);
    for (const auto& s : r.samples) {
        EXPECT_EQ(s.label, Label::Accepted);
        // Oracle: the same diagnostics computed directly.
        EXPECT_TRUE(diagnostics(basis, internal_modes(gen(s.theta), 10)).well_conditioned);
    }
    EXPECT_EQ(r.evaluations, 25);
}

TEST(LabelSamples, SkippingIsConservative) {
    struct Case {
        ParameterSpace space;
        Vector theta_o;
        SubstructureGenerator gen;
        Index q;
    };
    const std::vector<Case> cases = {
        {k2_space(), Vector::Constant(1, 0.9e6), lattice_k2_generator(kMass, kK1), 45},
        {resonator_space(ResonatorCellConfig{}, 0.5), Eigen::Vector2d(10.0, 40.0), resonator_generator(), 4},
    };
    for (const auto& c : cases) {
        LabelingOptions opts;
        opts.q = c.q;
        opts.n_sub = 3;
        opts.n_samples = 40;
        opts.seed = 11;
        const LabelingResult with = label_samples(c.space, c.theta_o, c.gen, opts);
        opts.enable_skipping = false;
        const LabelingResult without = label_samples(c.space, c.theta_o, c.gen, opts);
        ASSERT_EQ(with.samples.size(), without.samples.size());
        Index skipped = 0;
        for (std::size_t i = 0; i < with.samples.size(); ++i) {
            if (with.samples[i].label == Label::Skipped) {
                ++skipped;
                if (!with.terminated_early) EXPECT_NE(without.samples[i].label, Label::Skipped);
            } else {
                EXPECT_EQ(with.samples[i].label, without.samples[i].label) << i;
            }
        }
        EXPECT_LE(with.evaluations + skipped, static_cast<Index>(with.samples.size()));
    }
}

TEST(LabelSamples, AcceptedLabelsAreReproducible) {
    LabelingOptions opts;
    opts.q = 4;
    opts.n_sub = 2;
    opts.n_samples = 30;
    opts.seed = 3;
    const ParameterSpace sp = resonator_space(ResonatorCellConfig{}, 0.5);
    const auto gen = resonator_generator();
    const LabelingResult r = label_samples(sp, Eigen::Vector2d(10.0, 40.0), gen, opts);
    const CommonBasis basis = common_basis(gen(Eigen::Vector2d(10.0, 40.0)), 4);
    for (const auto& s : r.samples) {
        if (s.label == Label::Accepted) {
            EXPECT_TRUE(diagnostics(basis, internal_modes(gen(s.theta), 4)).well_conditioned);
        }
    }
}

TEST(LabelSamples, ShellWithoutAcceptedSamplesTerminates) {
    // Reference near the lower edge: the outer shells lie past the crossing.
    LabelingOptions opts;
    opts.q = 45;
    opts.n_sub = 3;
    const ParameterSpace sp = k2_space(0.8e6, 1.6e6);
    const std::vector<Vector> samples = k2_grid(0.8e6, 1.6e6, 24);
    const LabelingResult r =
        label_samples(sp, Vector::Constant(1, 0.9e6), samples, lattice_k2_generator(kMass, kK1), opts);
    EXPECT_TRUE(r.terminated_early);
    EXPECT_EQ(r.terminated_at_shell, 2);
    for (const auto& s : r.samples) {
        if (s.subspace_index == 3) {
            EXPECT_EQ(s.label, Label::Skipped);
            EXPECT_FALSE(s.diagnostics.has_value());
        }
    }
}

TEST(LabelSamples, GeneratorFailureCarriesSampleContext) {
    LabelingOptions opts;
    opts.q = 2;
    const ParameterSpace sp({"L", "W"}, Eigen::Vector2d(4.0, 40.0), Eigen::Vector2d(16.0, 41.0));
    const std::vector<Vector> samples = {Eigen::Vector2d(4.5, 40.5)};
    try {
        label_samples(sp, Eigen::Vector2d(10.0, 40.5), samples, resonator_generator(), opts);
        FAIL() << "expected ParameterError";
    } catch (const ParameterError& e) {
        EXPECT_NE(std::string(e.what()).find("theta"), std::string::npos);
    }
}

TEST(TagRegions, ClusteredSamplesFormOneRegion) {
    std::vector<Vector> samples;
    for (int i = 0; i < 8; ++i) samples.push_back(Eigen::Vector2d(10.0 + 0.01 * i, 40.0 - 0.02 * i));
    const RegionTagging t = tag_regions(samples, resonator_generator(), 4);
    EXPECT_EQ(t.m(), 1);
    EXPECT_EQ(t.references[0].sample_index, 0);
    EXPECT_THROW(tag_regions({}, resonator_generator(), 4), InsufficientDataError);
}

TEST(TagRegions, SortedScanAcrossOneCrossingFindsTwoRegions) {
    const auto samples = k2_grid(0.8e6, 1.2e6, 20);
    const auto gen = lattice_k2_generator(kMass, kK1);
    const RegionTagging t = tag_regions(samples, gen, 45);
    ASSERT_EQ(t.m(), 2);
    // Oracle: first sample whose projection on the first sample's basis fails.
    const CommonBasis first = common_basis(gen(samples[0]), 45);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!diagnostics(first, internal_modes(gen(samples[i]), 45)).well_conditioned) {
            expected = i;
            break;
        }
    }
    EXPECT_EQ(static_cast<std::size_t>(t.references[1].sample_index), expected);
    EXPECT_GT(samples[expected](0), kCrossing);
    EXPECT_LT(samples[expected - 1](0), kCrossing);
}

TEST(TagRegions, ResonatorSpaceHasSeveralRegionsConsistentWithBruteForce) {
    const ParameterSpace sp = resonator_space(ResonatorCellConfig{}, 0.5);
    const auto samples = latin_hypercube(500, sp, 11);
    const auto gen = resonator_generator();
    const RegionTagging t = tag_regions(samples, gen, 4);
    EXPECT_GE(t.m(), 2);
    for (const auto& ref : t.references) {
        EXPECT_EQ(t.region_of[static_cast<std::size_t>(ref.sample_index)], ref.region_id);
        EXPECT_TRUE(diagnostics(ref.basis, ref.basis.source_modes.vectors).well_conditioned);
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Matrix Phi = internal_modes(gen(samples[i]), 4);
        const int own = t.region_of[i];
        ASSERT_GE(own, 1);
        EXPECT_TRUE(diagnostics(t.references[static_cast<std::size_t>(own - 1)].basis, Phi).well_conditioned);
        for (int k = 1; k < own; ++k) {
            const auto& ref = t.references[static_cast<std::size_t>(k - 1)];
            if (static_cast<std::size_t>(ref.sample_index) < i) {
                EXPECT_FALSE(diagnostics(ref.basis, Phi).well_conditioned) << "sample " << i;
            }
        }
    }
    const RegionTagging again = tag_regions(samples, gen, 4, {}, 2);
    EXPECT_EQ(again.region_of, t.region_of);
}

}  // namespace
