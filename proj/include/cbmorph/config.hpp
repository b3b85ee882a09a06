#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbmorph/common_projection.hpp"
#include "cbmorph/kriging.hpp"
#include "cbmorph/model.hpp"
#include "cbmorph/surrogate.hpp"
#include "cbmorph/svm.hpp"

namespace cbmorph {

using json = nlohmann::json;

/// Model preset with parameters in experiment units: the lattice takes
/// theta = [k2] in kN/mm (mass in g, k1 in kN/mm), the resonator cell
/// theta = [L, W].
struct ModelSpec {
    enum class Preset { Lattice, Resonator };
    Preset preset = Preset::Lattice;
    double m_g = 5.0;
    double k1_kN_per_mm = 1.0;
    double k2_kN_per_mm = 0.9;
    LatticeConfig lattice;
    ResonatorCellConfig resonator;

    SubstructureGenerator generator() const;
    Vector nominal() const;
    ParameterSpace space(double rel_range) const;
    std::vector<std::string> parameter_names() const;
};

ModelSpec model_spec_from_json(const json& j);
json to_json(const ModelSpec& m);

struct RankScanConfig {
    ModelSpec model;
    Index q_max = 100;
    Index swap_first = 21;  // 1-based, inclusive
    Index swap_last = 80;
    Index permutations = 20;
    std::uint64_t seed = 1;
    double rank_tau = 1e-8;
};

struct PerturbationScanConfig {
    ModelSpec model;
    Index q = 45;
    double sweep_min = 0.45;
    double sweep_max = 1.35;
    Index points = 48;
    std::vector<double> references = {0.9, 1.1};
    ProjectionSettings projection;
    Index track_window = 6;
};

struct DetectConfig {
    enum class Mode { Single, Multi };
    enum class Order { Lhs, Sorted };
    ModelSpec model;
    Mode mode = Mode::Multi;
    ParameterSpace space;
    Vector reference;  // single mode; defaults to the model's nominal point
    Index q = 4;
    Index samples = 500;
    std::uint64_t seed = 1;
    Index n_sub = 3;
    Order order = Order::Lhs;
    bool skipping = true;
    ProjectionSettings projection;
    SvmParams svm;
};

struct TrainConfig {
    std::string regions_path;
    PcaSelection pca;
    KrigingOptions kriging;
    SvmParams svm;
    Index min_region_samples = 0;
    bool loo = true;
    bool damping_block = false;
    double damping_alpha = 0.0;
    double damping_beta = 0.0;
};

struct DampingSpec {
    bool ratio = true;
    double zeta_i = 1e-4, zeta_j = 1e-4;
    Index mode_i = 0, mode_j = 1;
    double alpha = 0.0, beta = 0.0;
};

struct PredictConfig {
    enum class Output { Transmissibility, QuadraticVelocity };
    std::string bundle_path;
    Index cells = 10;
    double perturbation = 0.1;
    std::uint64_t seed = 1;
    std::vector<Vector> thetas;  // explicit per-cell parameters, overrides sampling
    double f_min = 1.0;
    double f_max = 400.0;
    Index points = 800;
    DampingSpec damping;
    Output output = Output::Transmissibility;
    double lagrange_P = 0.125;
    Vector lagrange_h;  // defaults to the nominal point
    std::vector<Index> load_face_indices;      // quadratic velocity: loaded DoF of the last face
    std::vector<Index> response_face_indices;  // quadratic velocity: averaged DoF of every face
};

struct CompareConfig {
    std::string reference;
    std::vector<std::string> candidates;
};

/// Each parser rejects unknown keys and wrong types with ConfigError.
/// Relative paths inside a config resolve against `base_dir`.
RankScanConfig parse_rank_scan(const json& j);
PerturbationScanConfig parse_perturbation_scan(const json& j);
DetectConfig parse_detect(const json& j);
TrainConfig parse_train(const json& j, const std::string& base_dir);
PredictConfig parse_predict(const json& j, const std::string& base_dir);
CompareConfig parse_compare(const json& j, const std::string& base_dir);

}  // namespace cbmorph
