#pragma once

#include <vector>

#include "cbmorph/linalg.hpp"
#include "cbmorph/model.hpp"

namespace cbmorph {

struct SvmParams {
    double C = 10.0;
    double gamma = 0.0;  // <= 0 selects 1/d
    double tol = 1e-3;
    long max_iterations = 10'000'000;
};

/// Binary RBF classifier f(x) = sum_i alpha_i k(x_i, x) + bias with signed
/// alpha_i = y_i * a_i, 0 <= a_i <= C.
struct SvmModel {
    Matrix support_vectors;  // n_sv x d, normalized coordinates
    Vector alphas;           // signed dual weights
    double bias = 0.0;
    double gamma = 1.0;
    double C = 10.0;
    long iterations = 0;

    double decision(const Vector& x) const;
};

struct BinaryPrediction {
    int label = 1;
    double decision = 0.0;
};

/// SMO with second-order working-set selection on inputs in the unit cube.
/// Labels must be +1 / -1 with both classes present.
SvmModel train_binary(const Matrix& X, const std::vector<int>& y, const SvmParams& params = {});

BinaryPrediction predict(const SvmModel& model, const Vector& x);

/// One-vs-one router over region ids. Inputs are physical parameters; the
/// stored space maps them to the unit cube.
struct MulticlassSvm {
    struct Pair {
        int positive = 0;  // region id voted for when f >= 0
        int negative = 0;
        SvmModel model;
    };
    ParameterSpace space;
    std::vector<int> region_ids;  // ascending
    std::vector<Pair> pairs;
};

struct RegionPrediction {
    int region_id = 0;
    bool low_confidence = false;
    std::vector<int> votes;       // aligned with region_ids
    std::vector<double> margins;  // summed signed decision values per region
};

MulticlassSvm train_multiclass(const std::vector<Vector>& thetas, const std::vector<int>& tags,
                               const ParameterSpace& space, const SvmParams& params = {});

/// Majority vote, ties broken by the larger summed margin, then by the
/// smaller id. Low confidence when the winner's summed margin is negative
/// or the point lies outside the training box.
RegionPrediction predict_region(const MulticlassSvm& router, const Vector& theta);

}  // namespace cbmorph
