#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cbmorph/common_projection.hpp"
#include "cbmorph/kriging.hpp"
#include "cbmorph/region.hpp"
#include "cbmorph/svm.hpp"

namespace cbmorph {

// ---------------------------------------------------------------------------
// Feature vectors: rows of Mhat, rows of Khat, Fhat, then optionally rows of
// a damping matrix.

Index feature_length(Index r, bool with_damping = false);

Vector features_from_cb(const CBReduced& cb, const Matrix* damping = nullptr);

/// Inverse of features_from_cb. No symmetrization is applied.
CBReduced cb_from_features(const Vector& X, Index n_interface, Index q, Matrix* damping = nullptr);

// ---------------------------------------------------------------------------
// PCA

struct PcaModel {
    Vector mean;
    Matrix Q;  // feature_length x u, orthonormal columns
    Vector singular_values;  // all singular values of the centered data
    Index u = 0;
};

/// Keeps the u leading right singular directions of the centered rows of X.
PcaModel pca_fit(const Matrix& X, Index u);

/// Smallest u whose worst held-in reconstruction error, measured on the
/// free-free frequencies of the rebuilt reduced matrices, is below
/// `threshold_percent`. Falls back to the largest admissible u.
PcaModel pca_fit_threshold(const Matrix& X, double threshold_percent, Index n_interface, Index q,
                           double* achieved_percent = nullptr);

Vector pca_project(const PcaModel& model, const Vector& x);
Vector pca_reconstruct(const PcaModel& model, const Vector& y);
Matrix pca_project_rows(const PcaModel& model, const Matrix& X);

// ---------------------------------------------------------------------------
// Reconstruction error

/// Free-free natural frequencies (Hz, ascending) of a reduced pair.
/// Throws ReconstructionDefectError when M is not positive definite.
Vector free_free_frequencies(const Matrix& M, const Matrix& K);

/// max |f - f_hat| / f * 100 over the `n_highest` highest free-free
/// frequencies of `original` (f) and `reconstructed` (f_hat).
double reconstruction_error(const CBReduced& original, const CBReduced& reconstructed,
                            Index n_highest = 5);

// ---------------------------------------------------------------------------
// Leave-one-out validation

struct LooResult {
    double median_percent = 0.0;         // reconstruction-error metric
    double latent_median_percent = 0.0;  // |y_loo - y| / |y| * 100
    std::vector<double> per_sample_percent;
    std::vector<double> per_sample_latent_percent;
};

/// Uses the closed-form held-out predictions of a fitted Kriging model on the
/// latent coordinates, rebuilds each held-out sample through the PCA model
/// and scores it against its true reduced matrices.
LooResult loo_validate(const KrigingModel& kriging, const Matrix& latent, const Matrix& features,
                       const PcaModel& pca, Index n_interface, Index q);

// ---------------------------------------------------------------------------
// Lagrange tensor-product baseline

/// Nodes h(1 - sqrt(5/3) P), h, h(1 + sqrt(5/3) P).
std::array<double, 3> gauss_nodes(double h, double P);

/// Full 3^d grid, last dimension varying fastest.
std::vector<Vector> lagrange_grid_points(const Vector& h, double P);

struct LagrangeSupport {
    std::vector<std::array<double, 3>> nodes;  // per dimension
    std::vector<CBReduced> cells;              // aligned with lagrange_grid_points
};

struct LagrangeResult {
    CBReduced cb;
    bool extrapolated = false;
};

LagrangeResult lagrange_interpolate(const LagrangeSupport& support, const Vector& theta);

/// Reduces every grid point in the basis of `basis` (normally built at h).
LagrangeSupport build_lagrange_support(const SubstructureGenerator& generator, const Vector& h,
                                       double P, const CommonBasis& basis,
                                       const ProjectionSettings& settings = {});

// ---------------------------------------------------------------------------
// Multi-region surrogate

struct PcaSelection {
    bool threshold_mode = true;
    double threshold_percent = 0.1;
    Index u = 10;
};

struct SurrogateTrainOptions {
    PcaSelection pca;
    KrigingOptions kriging;
    SvmParams svm;
    ProjectionSettings projection;
    Index min_region_samples = 0;  // 0 selects max(d + 2, 3)
    bool include_damping = false;
    double damping_alpha = 0.0;
    double damping_beta = 0.0;
    bool compute_loo = true;
    int threads = 1;
};

struct RegionModel {
    int region_id = 0;
    CommonBasis basis;
    PcaModel pca;
    KrigingModel kriging;
    Index n_train = 0;
    double max_reconstruction_percent = 0.0;
    double loo_median_percent = 0.0;
    double loo_latent_median_percent = 0.0;
    std::string data_hash;
};

struct MultiRegionSurrogate {
    ParameterSpace space;
    Index n_interface = 0;
    Index q = 0;
    bool include_damping = false;
    std::vector<RegionModel> regions;
    MulticlassSvm router;

    const RegionModel& region(int id) const;
};

struct RegionTrainReport {
    int region_id = 0;
    Index n_samples = 0;
    bool excluded = false;
    std::string reason;
    Index u = 0;
    double max_reconstruction_percent = 0.0;
    double loo_median_percent = 0.0;
    double loo_latent_median_percent = 0.0;
};

MultiRegionSurrogate train_surrogate(const RegionTagging& tagging,
                                     const SubstructureGenerator& generator,
                                     const ParameterSpace& space, const SurrogateTrainOptions& opts,
                                     std::vector<RegionTrainReport>* report = nullptr);

struct SurrogatePrediction {
    CBReduced cb;
    int region_id = 0;
    bool low_confidence = false;
    double symmetrization_delta = 0.0;  // largest relative entry change, Mhat or Khat
};

SurrogatePrediction predict_cb(const MultiRegionSurrogate& model, const Vector& theta);

/// Stable 64-bit FNV-1a digest of a matrix's dimensions and entries, hex.
std::string matrix_digest(const Matrix& A);

}  // namespace cbmorph
