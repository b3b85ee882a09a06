#include "cbmorph/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cbmorph/parallel.hpp"
#include "cbmorph/random.hpp"

namespace cbmorph {

std::vector<Vector> latin_hypercube(Index n, const ParameterSpace& space, std::uint64_t seed) {
    if (n < 1) throw ParameterError("latin_hypercube: n must be >= 1");
    const Index d = space.dim();
    Rng rng(seed);
    std::vector<std::vector<Index>> strata(static_cast<std::size_t>(d));
    for (auto& perm : strata) {
        perm.resize(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
        rng.shuffle(perm);
    }
    std::vector<Vector> out(static_cast<std::size_t>(n), Vector(d));
    for (Index i = 0; i < n; ++i) {
        Vector u(d);
        for (Index k = 0; k < d; ++k) {
            const double stratum = static_cast<double>(strata[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]);
            u(k) = (stratum + rng.uniform()) / static_cast<double>(n);
        }
        out[static_cast<std::size_t>(i)] = space.denormalize(u);
    }
    return out;
}

double normalized_distance(const Vector& a, const Vector& b, const ParameterSpace& space) {
    return (space.normalize(a) - space.normalize(b)).norm();
}

ShellPartition::ShellPartition(ParameterSpace space, const Vector& theta_o, Index n_sub)
    : space_(std::move(space)), theta_o_(theta_o), n_sub_(n_sub) {
    if (n_sub < 1) throw GeometryError("divide_space: n_sub must be >= 1");
    if (theta_o.size() != space_.dim()) throw DimensionError("divide_space: theta_o has wrong dimension");
    unit_o_ = space_.normalize(theta_o);
    reach_ = Vector(unit_o_.size());
    for (Index k = 0; k < unit_o_.size(); ++k) {
        if (!(unit_o_(k) > 0.0 && unit_o_(k) < 1.0)) {
            std::ostringstream os;
            os << "divide_space: reference lies on or outside the boundary along '"
               << space_.names()[static_cast<std::size_t>(k)] << "'";
            throw GeometryError(os.str());
        }
        reach_(k) = std::max(unit_o_(k), 1.0 - unit_o_(k));
    }
}

double ShellPartition::radius(const Vector& theta) const {
    const Vector u = space_.normalize(theta);
    double r = 0.0;
    for (Index k = 0; k < u.size(); ++k) r = std::max(r, std::abs(u(k) - unit_o_(k)) / reach_(k));
    return r;
}

Index ShellPartition::shell_of(const Vector& theta) const {
    const double r = radius(theta);
    const auto band = static_cast<Index>(std::floor(r * static_cast<double>(n_sub_)));
    return std::clamp<Index>(band, 0, n_sub_ - 1) + 1;
}

double ShellPartition::box_fraction(double t) const {
    double v = 1.0;
    for (Index k = 0; k < unit_o_.size(); ++k) {
        v *= std::min(unit_o_(k), t * reach_(k)) + std::min(1.0 - unit_o_(k), t * reach_(k));
    }
    return v;
}

double ShellPartition::volume_fraction(Index shell) const {
    if (shell < 1 || shell > n_sub_) return 0.0;
    const double n = static_cast<double>(n_sub_);
    const double inner = shell == 1 ? 0.0 : box_fraction(static_cast<double>(shell - 1) / n);
    const double outer = shell == n_sub_ ? 1.0 : box_fraction(static_cast<double>(shell) / n);
    return outer - inner;
}

ShellPartition divide_space(const ParameterSpace& space, const Vector& theta_o, Index n_sub) {
    return ShellPartition(space, theta_o, n_sub);
}

const char* label_name(Label l) {
    switch (l) {
        case Label::Accepted: return "accepted";
        case Label::Rejected: return "rejected";
        case Label::Skipped: return "skipped";
    }
    return "unknown";
}

namespace {

Matrix internal_modes(const Substructure& s, Index q) {
    const Matrix Mjj = s.M(s.internal_dofs, s.internal_dofs);
    const Matrix Kjj = s.K(s.internal_dofs, s.internal_dofs);
    return fixed_interface_modes(Mjj, Kjj, q).vectors;
}

Substructure generate(const SubstructureGenerator& gen, const Vector& theta) {
    try {
        return gen(theta);
    } catch (const Error& e) {
        std::ostringstream os;
        os << "substructure generator failed at theta = [" << theta.transpose() << "]: " << e.what();
        throw ParameterError(os.str());
    }
}

}  // namespace

LabelingResult label_samples(const ParameterSpace& space, const Vector& theta_o,
                             const std::vector<Vector>& samples,
                             const SubstructureGenerator& generator, const LabelingOptions& opts) {
    const ShellPartition shells = divide_space(space, theta_o, opts.n_sub);
    const CommonBasis basis = common_basis(generate(generator, theta_o), opts.q);

    std::vector<std::vector<std::size_t>> by_shell(static_cast<std::size_t>(opts.n_sub));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        by_shell[static_cast<std::size_t>(shells.shell_of(samples[i]) - 1)].push_back(i);
    }

    LabelingResult result;
    std::vector<Vector> accepted_u;
    std::vector<Vector> rejected_u;
    bool rejection_seen = false;

    for (Index s = 1; s <= opts.n_sub; ++s) {
        const auto& members = by_shell[static_cast<std::size_t>(s - 1)];
        Index accepted_here = 0;
        for (std::size_t idx : members) {
            LabeledSample ls;
            ls.theta = samples[idx];
            ls.subspace_index = s;
            if (result.terminated_early) {
                result.samples.push_back(std::move(ls));
                continue;
            }
            const Vector u = space.normalize(ls.theta);
            bool evaluate = true;
            if (opts.enable_skipping && rejection_seen) {
                double d_acc = std::numeric_limits<double>::infinity();
                double d_rej = std::numeric_limits<double>::infinity();
                for (const auto& a : accepted_u) d_acc = std::min(d_acc, (a - u).norm());
                for (const auto& r : rejected_u) d_rej = std::min(d_rej, (r - u).norm());
                evaluate = !(d_rej < d_acc);
            }
            if (evaluate) {
                const Substructure sp = generate(generator, ls.theta);
                const ProjectionDiagnostics d = diagnostics(basis, internal_modes(sp, opts.q), opts.projection);
                ++result.evaluations;
                ls.diagnostics = d;
                if (d.well_conditioned) {
                    ls.label = Label::Accepted;
                    accepted_u.push_back(u);
                    ++accepted_here;
                } else {
                    ls.label = Label::Rejected;
                    rejected_u.push_back(u);
                    rejection_seen = true;
                }
            }
            result.samples.push_back(std::move(ls));
        }
        if (!result.terminated_early && !members.empty() && accepted_here == 0) {
            result.terminated_early = true;
            result.terminated_at_shell = s;
        }
    }
    return result;
}

LabelingResult label_samples(const ParameterSpace& space, const Vector& theta_o,
                             const SubstructureGenerator& generator, const LabelingOptions& opts) {
    return label_samples(space, theta_o, latin_hypercube(opts.n_samples, space, opts.seed), generator,
                         opts);
}

RegionTagging tag_regions(const std::vector<Vector>& samples, const SubstructureGenerator& generator,
                          Index q, const ProjectionSettings& settings, int threads) {
    if (samples.empty()) throw InsufficientDataError("tag_regions: no samples");

    struct Precomputed {
        EigenPairs modes;
        Matrix R;
    };
    std::vector<Precomputed> pre(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) {
        const Substructure s = generate(generator, samples[i]);
        const Matrix Mjj = s.M(s.internal_dofs, s.internal_dofs);
        const Matrix Kjj = s.K(s.internal_dofs, s.internal_dofs);
        pre[i].modes = fixed_interface_modes(Mjj, Kjj, q);
        pre[i].R = Mjj * pre[i].modes.vectors;
    });

    RegionTagging out;
    out.thetas = samples;
    out.region_of.assign(samples.size(), 0);
    out.diagnostics.resize(samples.size());

    auto found_region = [&](std::size_t i) {
        RegionReference ref;
        ref.region_id = out.m() + 1;
        ref.theta = samples[i];
        ref.sample_index = static_cast<Index>(i);
        ref.basis.theta_o = samples[i];
        ref.basis.q = q;
        ref.basis.source_modes = pre[i].modes;
        ref.basis.R = pre[i].R;
        out.region_of[i] = ref.region_id;
        out.diagnostics[i] = diagnostics(ref.basis, pre[i].modes.vectors, settings);
        out.references.push_back(std::move(ref));
    };

    found_region(0);
    for (std::size_t i = 1; i < samples.size(); ++i) {
        for (const auto& ref : out.references) {
            const ProjectionDiagnostics d = diagnostics(ref.basis, pre[i].modes.vectors, settings);
            if (d.well_conditioned) {
                out.region_of[i] = ref.region_id;
                out.diagnostics[i] = d;
                break;
            }
        }
        if (out.region_of[i] == 0) found_region(i);
    }
    return out;
}

}  // namespace cbmorph
