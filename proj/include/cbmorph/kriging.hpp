#pragma once

#include <vector>

#include "cbmorph/linalg.hpp"

namespace cbmorph {

struct KrigingOptions {
    double nugget = 1e-10;
    double log10_lo = -3.0;
    double log10_hi = 3.0;
    std::vector<double> starts = {-1.0, 0.5, 2.0};  // log10 theta, same value on every axis
    double initial_step = 1.0;
    double min_step = 1.0 / 64.0;
    bool shared_lengths = false;
    int threads = 1;
};

/// Ordinary Kriging of one output coordinate.
struct KrigingOutput {
    double beta = 0.0;
    Vector gamma;        // R^{-1} (y - 1 beta)
    Vector log10_theta;  // correlation parameters per input dimension
    double sigma2 = 0.0;
    double neg_log_likelihood = 0.0;  // n ln sigma2 + ln det R
    bool constant = false;
};

/// Gaussian correlation exp(-sum_k theta_k dx_k^2) with a constant trend;
/// one independent output model per column of Y.
struct KrigingModel {
    Matrix X;  // n x d training inputs (normalized)
    double nugget = 1e-10;
    std::vector<KrigingOutput> outputs;

    Index n_outputs() const { return static_cast<Index>(outputs.size()); }
};

KrigingModel kriging_fit(const Matrix& X, const Matrix& Y, const KrigingOptions& opts = {});

Vector kriging_predict(const KrigingModel& model, const Vector& x);

/// Mean squared prediction error of output `k` at x.
double kriging_variance(const KrigingModel& model, Index k, const Vector& x);

/// Leave-one-out predictions (n x outputs) with each model's correlation
/// parameters held at the full-data fit; trend and weights are refitted in
/// closed form for every held-out point.
Matrix kriging_loo_predictions(const KrigingModel& model, const Matrix& Y);

/// Correlation matrix with the nugget on the diagonal.
Matrix kriging_correlation(const Matrix& X, const Vector& log10_theta, double nugget);

}  // namespace cbmorph
