#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cbmorph/assembly.hpp"
#include "cbmorph/config.hpp"
#include "cbmorph/region.hpp"
#include "cbmorph/surrogate.hpp"

namespace cbmorph {

// ---------------------------------------------------------------------------
// Mode-swap rank scan

struct RankScanResult {
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<Index>> permutations;
    std::vector<std::vector<Index>> ranks;  // [permutation][q - 1]
};

RankScanResult run_rank_scan(const RankScanConfig& cfg);
void write_rank_scan(const RankScanResult& r, const std::string& out_dir);

// ---------------------------------------------------------------------------
// Perturbation scan with branch tracking

struct ReferenceScan {
    double reference = 0.0;
    std::vector<Index> rank;
    std::vector<double> rcond;
    /// Sweep interval [lo, hi] where the rank-deficiency label changes, if it
    /// changes exactly once.
    std::optional<std::pair<double, double>> flip_interval;
    int deficient_side = 0;  // -1 below the flip, +1 above, 0 undetermined
};

struct PerturbationScanResult {
    Index q = 0;
    std::vector<double> k2;
    std::vector<double> f_q;        // Hz, sorted index q
    std::vector<double> f_q1;       // Hz, sorted index q + 1
    std::vector<double> branch_a;   // Hz, tracked from index q at the first sweep point
    std::vector<double> branch_b;   // Hz, tracked from index q + 1
    std::optional<double> crossing; // interpolated zero of lambda_a - lambda_b
    Index crossings = 0;            // sign changes of lambda_a - lambda_b
    std::vector<ReferenceScan> references;
};

PerturbationScanResult run_perturbation_scan(const PerturbationScanConfig& cfg, int threads = 1);
void write_perturbation_scan(const PerturbationScanResult& r, const std::string& out_dir);
json summary_json(const PerturbationScanResult& r);

/// Follows the eigen-branches starting at sorted indices `start_a`,
/// `start_b` (0-based) across a sequence of mode sets, matching each branch
/// to the candidate with the largest mass-weighted MAC inside
/// [start - window, start + window]. Returns the tracked eigenvalues.
std::pair<std::vector<double>, std::vector<double>> track_branches(
    const std::vector<EigenPairs>& modes, const std::vector<Matrix>& mass, Index start_a, Index start_b,
    Index window);

// ---------------------------------------------------------------------------
// Region detection

struct DetectResult {
    DetectConfig config;
    std::optional<LabelingResult> labeling;  // single mode
    std::optional<SvmModel> boundary;        // single mode, accepted vs rejected
    std::optional<RegionTagging> tagging;    // multi mode
    std::optional<MulticlassSvm> router;     // multi mode with >= 1 region
};

/// Samples in multi mode: the LHC, or for Order::Sorted the same LHC sorted
/// by the first parameter.
std::vector<Vector> detection_samples(const DetectConfig& cfg);

DetectResult run_detect_regions(const DetectConfig& cfg, int threads = 1);
void write_detect_regions(const DetectResult& r, const std::string& out_dir);

/// Tagging artifact read back from a detect-regions output directory.
struct RegionsArtifact {
    ModelSpec model;
    ParameterSpace space;
    ProjectionSettings projection;
    Index q = 0;
    RegionTagging tagging;  // references rebuilt from their parameters
};

RegionsArtifact load_regions(const std::string& path, int threads = 1);

// ---------------------------------------------------------------------------
// Training

struct SurrogateBundle {
    ModelSpec model;
    ProjectionSettings projection;
    MultiRegionSurrogate surrogate;
};

json to_json(const SurrogateBundle& b);
SurrogateBundle surrogate_bundle_from_json(const json& j);

struct TrainResult {
    SurrogateBundle bundle;
    std::vector<RegionTrainReport> report;
};

TrainResult run_train(const TrainConfig& cfg, int threads = 1);
void write_train(const TrainResult& r, const std::string& out_dir);

// ---------------------------------------------------------------------------
// FRF prediction of an aperiodic chain

/// Per-cell parameters nominal * (1 + perturbation * U(-1, 1)) per component.
std::vector<Vector> perturbed_thetas(const Vector& nominal, double perturbation, Index cells,
                                     std::uint64_t seed);

/// Common-basis reduction of one cell against the first well-conditioned
/// bundle reference in region order.
CBReduced direct_common_cb(const SurrogateBundle& bundle, const Substructure& s, const Vector& theta);

struct CellReport {
    Vector theta;
    int region_id = 0;
    bool low_confidence = false;
    double symmetrization_delta = 0.0;
    bool lagrange_extrapolated = false;
    int direct_region_id = 0;
};

struct PredictResult {
    std::vector<CellReport> cells;
    RayleighSpec damping;
    FrfResult surrogate, direct_cb, full, lagrange;
};

PredictResult run_predict_frf(const PredictConfig& cfg, const SurrogateBundle& bundle, int threads = 1);
void write_predict_frf(const PredictResult& r, const std::string& out_dir);

/// Median over the grid of |log10|a| - log10|b||.
double median_log10_error(const FrfResult& a, const FrfResult& b);

/// Same for several candidates against one reference FRF file.
json run_compare(const CompareConfig& cfg);

}  // namespace cbmorph
