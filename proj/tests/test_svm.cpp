#include <gtest/gtest.h>

#include <cmath>

#include "cbmorph/errors.hpp"
#include "cbmorph/random.hpp"
#include "cbmorph/svm.hpp"

namespace {

using namespace cbmorph;

void expect_dual_feasible(const SvmModel& m) {
    EXPECT_NEAR(m.alphas.sum(), 0.0, 1e-6);
    EXPECT_LE(m.alphas.cwiseAbs().maxCoeff(), m.C * (1.0 + 1e-12));
}

TEST(TrainBinary, TwoSeparablePoints) {
    Matrix X(2, 1);
    X << 0.2, 0.8;
    const SvmModel m = train_binary(X, {1, -1});
    expect_dual_feasible(m);
    EXPECT_EQ(predict(m, X.row(0).transpose()).label, 1);
    EXPECT_EQ(predict(m, X.row(1).transpose()).label, -1);
    // Midpoint: the boundary by symmetry.
    const double f_mid = predict(m, Vector::Constant(1, 0.5)).decision;
    EXPECT_LE(std::abs(f_mid), 1e-6);
    EXPECT_EQ(predict(m, Vector::Constant(1, 0.5 - 1e-3)).label, 1);
    EXPECT_EQ(predict(m, Vector::Constant(1, 0.5 + 1e-3)).label, -1);
}

TEST(TrainBinary, XorNeedsTheKernel) {
    Matrix X(4, 2);
    X << 0.1, 0.1, 0.9, 0.9, 0.1, 0.9, 0.9, 0.1;
    SvmParams p;
    p.C = 100.0;
    p.gamma = 4.0;
    const SvmModel m = train_binary(X, {1, 1, -1, -1}, p);
    expect_dual_feasible(m);
    const std::vector<int> y = {1, 1, -1, -1};
    for (Index i = 0; i < 4; ++i) EXPECT_EQ(predict(m, X.row(i).transpose()).label, y[static_cast<std::size_t>(i)]);
    // Decision grid oracle: quadrant signs follow the XOR pattern.
    for (double a : {0.2, 0.8})
        for (double b : {0.2, 0.8}) {
            const int expected = (a < 0.5) == (b < 0.5) ? 1 : -1;
            EXPECT_EQ(predict(m, Eigen::Vector2d(a, b)).label, expected);
        }
}

TEST(TrainBinary, OneDimensionalBoundaryNearThreshold) {
    const int n = 40;
    const double c = 0.6;
    Matrix X(n, 1);
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
        X(i, 0) = (i + 0.5) / n;
        y.push_back(X(i, 0) < c ? 1 : -1);
    }
    const SvmModel m = train_binary(X, y);
    expect_dual_feasible(m);
    // Fine scan: exactly one label change, within one sample spacing of c.
    int flips = 0;
    double where = -1.0;
    int prev = predict(m, Vector::Constant(1, 0.0)).label;
    for (int k = 1; k <= 2000; ++k) {
        const double x = k / 2000.0;
        const int l = predict(m, Vector::Constant(1, x)).label;
        if (l != prev) {
            ++flips;
            where = x;
        }
        prev = l;
    }
    EXPECT_EQ(flips, 1);
    EXPECT_NEAR(where, c, 1.0 / n);
}

TEST(TrainBinary, ErrorsAndDeterminism) {
    Matrix X(3, 1);
    X << 0.1, 0.5, 0.9;
    EXPECT_THROW(train_binary(X, {1, 1, 1}), DegenerateLabelsError);
    EXPECT_THROW(train_binary(X, {1, 0, -1}), DegenerateLabelsError);
    EXPECT_THROW(train_binary(X, {1, -1}), DimensionError);
    SvmParams bad;
    bad.C = 0.0;
    EXPECT_THROW(train_binary(X, {1, -1, -1}, bad), ParameterError);

    Rng rng(5);
    Matrix Z(30, 2);
    std::vector<int> y;
    for (Index i = 0; i < 30; ++i) {
        Z(i, 0) = rng.uniform();
        Z(i, 1) = rng.uniform();
        y.push_back(Z(i, 0) + 0.3 * std::sin(6.0 * Z(i, 1)) > 0.5 ? 1 : -1);
    }
    const SvmModel a = train_binary(Z, y);
    const SvmModel b = train_binary(Z, y);
    EXPECT_TRUE((a.alphas.array() == b.alphas.array()).all());
    EXPECT_TRUE((a.support_vectors.array() == b.support_vectors.array()).all());
    EXPECT_EQ(a.bias, b.bias);
    EXPECT_DOUBLE_EQ(a.gamma, 0.5);  // default 1/d
}

struct Blobs {
    std::vector<Vector> thetas;
    std::vector<int> tags;
};

Blobs three_blobs(const ParameterSpace& sp, std::uint64_t seed) {
    const std::vector<Eigen::Vector2d> centers = {{0.2, 0.2}, {0.8, 0.3}, {0.5, 0.8}};
    Rng rng(seed);
    Blobs b;
    for (int k = 0; k < 3; ++k) {
        for (int i = 0; i < 30; ++i) {
            Eigen::Vector2d u = centers[static_cast<std::size_t>(k)] + 0.07 * Eigen::Vector2d(rng.normal(), rng.normal());
            u = u.cwiseMax(0.0).cwiseMin(1.0);
            b.thetas.push_back(sp.denormalize(u));
            b.tags.push_back(k + 1);
        }
    }
    return b;
}

TEST(Multiclass, SingleRegionRouterIsConstant) {
    const ParameterSpace sp({"a", "b"}, Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 1.0));
    const MulticlassSvm r = train_multiclass({Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.2, 0.1)}, {4, 4}, sp);
    EXPECT_TRUE(r.pairs.empty());
    EXPECT_EQ(predict_region(r, Eigen::Vector2d(0.9, 0.9)).region_id, 4);
    EXPECT_FALSE(predict_region(r, Eigen::Vector2d(0.9, 0.9)).low_confidence);
    EXPECT_TRUE(predict_region(r, Eigen::Vector2d(1.5, 0.9)).low_confidence);
    EXPECT_THROW(train_multiclass({}, {}, sp), DegenerateLabelsError);
}

TEST(Multiclass, TwoRegionsMatchBinaryModel) {
    const ParameterSpace sp({"x"}, Vector::Constant(1, 0.0), Vector::Constant(1, 10.0));
    std::vector<Vector> th;
    std::vector<int> tags;
    Matrix X(20, 1);
    std::vector<int> y;
    for (int i = 0; i < 20; ++i) {
        th.push_back(Vector::Constant(1, 0.25 + 0.5 * i));
        tags.push_back(i < 12 ? 1 : 2);
        X(i, 0) = sp.normalize(th.back())(0);
        y.push_back(i < 12 ? 1 : -1);
    }
    const MulticlassSvm r = train_multiclass(th, tags, sp);
    ASSERT_EQ(r.pairs.size(), 1u);
    const SvmModel bin = train_binary(X, y);
    for (double x = 0.0; x <= 10.0; x += 0.1) {
        const int expected = predict(bin, sp.normalize(Vector::Constant(1, x))).label == 1 ? 1 : 2;
        EXPECT_EQ(predict_region(r, Vector::Constant(1, x)).region_id, expected);
    }
}

TEST(Multiclass, ThreeBlobsResubstitutionBeatsFloor) {
    const ParameterSpace sp({"L", "W"}, Eigen::Vector2d(5.0, 20.0), Eigen::Vector2d(15.0, 60.0));
    const Blobs b = three_blobs(sp, 8);
    const MulticlassSvm r = train_multiclass(b.thetas, b.tags, sp);
    EXPECT_EQ(r.pairs.size(), 3u);
    int agree = 0;
    for (std::size_t i = 0; i < b.thetas.size(); ++i) {
        const RegionPrediction p = predict_region(r, b.thetas[i]);
        agree += p.region_id == b.tags[i] ? 1 : 0;
        EXPECT_EQ(p.votes.size(), 3u);
    }
    EXPECT_GE(agree, static_cast<int>(0.95 * b.thetas.size()));
    // Blob centres route to their own region.
    EXPECT_EQ(predict_region(r, sp.denormalize(Eigen::Vector2d(0.2, 0.2))).region_id, 1);
    EXPECT_EQ(predict_region(r, sp.denormalize(Eigen::Vector2d(0.8, 0.3))).region_id, 2);
    EXPECT_EQ(predict_region(r, sp.denormalize(Eigen::Vector2d(0.5, 0.8))).region_id, 3);
    // Outside the box: still a region, flagged.
    const RegionPrediction far = predict_region(r, Eigen::Vector2d(40.0, 200.0));
    EXPECT_GE(far.region_id, 1);
    EXPECT_LE(far.region_id, 3);
    EXPECT_TRUE(far.low_confidence);
}

TEST(Multiclass, PredictionsInvariantUnderBoundRescaling) {
    const ParameterSpace a({"L", "W"}, Eigen::Vector2d(5.0, 20.0), Eigen::Vector2d(15.0, 60.0));
    const ParameterSpace b({"L", "W"}, Eigen::Vector2d(-1.0, 0.0), Eigen::Vector2d(1.0, 1000.0));
    const Blobs ba = three_blobs(a, 9);
    Blobs bb = ba;
    for (auto& t : bb.thetas) t = b.denormalize(a.normalize(t));
    const MulticlassSvm ra = train_multiclass(ba.thetas, ba.tags, a);
    const MulticlassSvm rb = train_multiclass(bb.thetas, bb.tags, b);
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector2d u(rng.uniform(), rng.uniform());
        EXPECT_EQ(predict_region(ra, a.denormalize(u)).region_id, predict_region(rb, b.denormalize(u)).region_id);
    }
}

TEST(Multiclass, DecisionIsContinuousAlongScan) {
    const ParameterSpace sp({"L", "W"}, Eigen::Vector2d(5.0, 20.0), Eigen::Vector2d(15.0, 60.0));
    const Blobs b = three_blobs(sp, 10);
    const MulticlassSvm r = train_multiclass(b.thetas, b.tags, sp);
    const SvmModel& m = r.pairs[0].model;
    double prev = m.decision(Eigen::Vector2d(0.0, 0.25));
    for (int k = 1; k <= 1000; ++k) {
        const double f = m.decision(Eigen::Vector2d(k / 1000.0, 0.25));
        EXPECT_LE(std::abs(f - prev), 0.5);
        prev = f;
    }
}

}  // namespace
