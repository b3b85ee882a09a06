#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cbmorph/common_projection.hpp"
#include "cbmorph/model.hpp"

namespace cbmorph {

/// Latin hypercube of n points in `space`, one per stratum per axis.
std::vector<Vector> latin_hypercube(Index n, const ParameterSpace& space, std::uint64_t seed);

/// L2 distance in min-max normalized coordinates.
double normalized_distance(const Vector& a, const Vector& b, const ParameterSpace& space);

/// Concentric hyper-rectangular shells around theta_o.
///
/// A point's shell radius is max_k |u_k - u_ok| / reach_k in normalized
/// coordinates u, where reach_k is the distance from u_ok to the farther face
/// along axis k. Radius [0, 1] is split into n_sub equal bands; shells are
/// numbered 1..n_sub outward.
class ShellPartition {
public:
    ShellPartition(ParameterSpace space, const Vector& theta_o, Index n_sub);

    Index n_sub() const { return n_sub_; }
    const ParameterSpace& space() const { return space_; }
    const Vector& theta_o() const { return theta_o_; }

    double radius(const Vector& theta) const;
    Index shell_of(const Vector& theta) const;
    bool contains(Index shell, const Vector& theta) const { return shell_of(theta) == shell; }

    /// Fraction of the space's volume inside shell i.
    double volume_fraction(Index shell) const;

private:
    double box_fraction(double t) const;

    ParameterSpace space_;
    Vector theta_o_;
    Vector unit_o_;
    Vector reach_;
    Index n_sub_;
};

ShellPartition divide_space(const ParameterSpace& space, const Vector& theta_o, Index n_sub);

enum class Label { Accepted, Rejected, Skipped };

const char* label_name(Label l);

struct LabeledSample {
    Vector theta;
    Label label = Label::Skipped;
    Index subspace_index = 0;
    std::optional<ProjectionDiagnostics> diagnostics;
};

struct LabelingOptions {
    Index q = 1;
    Index n_sub = 1;
    Index n_samples = 50;
    std::uint64_t seed = 0;
    ProjectionSettings projection;
    bool enable_skipping = true;
    int threads = 1;
};

struct LabelingResult {
    std::vector<LabeledSample> samples;  // shell order, LHC order within a shell
    bool terminated_early = false;
    Index terminated_at_shell = 0;       // shell that triggered termination, 0 if none
    Index evaluations = 0;
};

/// Shell-by-shell labeling with the nearest-rejected skip rule.
LabelingResult label_samples(const ParameterSpace& space, const Vector& theta_o,
                             const SubstructureGenerator& generator, const LabelingOptions& opts);

/// Same procedure on caller-supplied samples instead of an LHC.
LabelingResult label_samples(const ParameterSpace& space, const Vector& theta_o,
                             const std::vector<Vector>& samples,
                             const SubstructureGenerator& generator, const LabelingOptions& opts);

struct RegionReference {
    int region_id = 0;
    Vector theta;
    Index sample_index = 0;
    CommonBasis basis;
};

struct RegionTagging {
    std::vector<Vector> thetas;
    std::vector<int> region_of;                       // 1-based ids
    std::vector<ProjectionDiagnostics> diagnostics;   // against the assigned reference
    std::vector<RegionReference> references;

    int m() const { return static_cast<int>(references.size()); }
};

/// Sequential tagging: each sample joins the first reference (in creation
/// order) whose projection is well-conditioned, otherwise founds a region.
/// All fixed-interface modes are computed once before tagging.
RegionTagging tag_regions(const std::vector<Vector>& samples, const SubstructureGenerator& generator,
                          Index q, const ProjectionSettings& settings = {}, int threads = 1);

}  // namespace cbmorph
