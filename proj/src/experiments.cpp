#include "cbmorph/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "cbmorph/errors.hpp"
#include "cbmorph/io.hpp"
#include "cbmorph/log.hpp"
#include "cbmorph/parallel.hpp"
#include "cbmorph/random.hpp"

namespace cbmorph {

namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 6.283185307179586;

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

double hz(double lambda) { return std::sqrt(std::max(lambda, 0.0)) / kTwoPi; }

json projection_json(const ProjectionSettings& p) {
    return {{"rank_tau", p.rank_tau}, {"rcond_threshold", p.rcond_threshold}};
}

ProjectionSettings projection_from_json(const json& j) {
    ProjectionSettings p;
    p.rank_tau = j.at("rank_tau").get<double>();
    p.rcond_threshold = j.at("rcond_threshold").get<double>();
    return p;
}

json thetas_json(const std::vector<Vector>& thetas) {
    json out = json::array();
    for (const Vector& t : thetas) out.push_back(vector_to_json(t));
    return out;
}

std::vector<std::string> theta_cells(const Vector& t) {
    std::vector<std::string> out;
    for (Index k = 0; k < t.size(); ++k) out.push_back(format_double(t(k)));
    return out;
}

Matrix internal_block(const Matrix& A, const Substructure& s) { return A(s.internal_dofs, s.internal_dofs); }

}  // namespace

// ---------------------------------------------------------------------------
// Rank scan

RankScanResult run_rank_scan(const RankScanConfig& cfg) {
    const SubstructureGenerator gen = cfg.model.generator();
    const Substructure ref = gen(cfg.model.nominal());
    if (cfg.q_max > ref.n_internal()) throw ParameterError("rank-scan: q_max exceeds the internal DoF count");
    const CommonBasis basis = common_basis(ref, cfg.q_max);

    RankScanResult out;
    for (Index p = 0; p < cfg.permutations; ++p) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(p);
        auto perm = indecomposable_block_permutation(cfg.q_max, cfg.swap_first - 1, cfg.swap_last, seed);
        out.ranks.push_back(permuted_rank_profile(basis, perm, cfg.q_max, cfg.rank_tau));
        out.seeds.push_back(seed);
        out.permutations.push_back(std::move(perm));
    }
    log::info("rank_scan_done", {{"permutations", cfg.permutations}, {"q_max", cfg.q_max}});
    return out;
}

void write_rank_scan(const RankScanResult& r, const std::string& out_dir) {
    ensure_dir(out_dir);
    CsvTable t({"permutation", "seed", "q", "rank", "full_rank"});
    for (std::size_t p = 0; p < r.ranks.size(); ++p) {
        for (std::size_t k = 0; k < r.ranks[p].size(); ++k) {
            const Index q = static_cast<Index>(k) + 1;
            t.add_row({std::to_string(p), std::to_string(r.seeds[p]), std::to_string(q),
                       std::to_string(r.ranks[p][k]), r.ranks[p][k] == q ? "1" : "0"});
        }
    }
    t.write(join(out_dir, "rank_scan.csv"));
}

// ---------------------------------------------------------------------------
// Perturbation scan

std::pair<std::vector<double>, std::vector<double>> track_branches(const std::vector<EigenPairs>& modes,
                                                                   const std::vector<Matrix>& mass,
                                                                   Index start_a, Index start_b, Index window) {
    if (modes.empty() || modes.size() != mass.size()) throw DimensionError("track_branches: size mismatch");
    const Index n_modes = modes.front().values.size();
    if (start_a < 0 || start_b < 0 || start_a >= n_modes || start_b >= n_modes || start_a == start_b) {
        throw ParameterError("track_branches: invalid start indices");
    }
    std::vector<double> la, lb;
    Index ia = start_a, ib = start_b;
    Vector va = modes[0].vectors.col(ia), vb = modes[0].vectors.col(ib);
    la.push_back(modes[0].values(ia));
    lb.push_back(modes[0].values(ib));

    const Index lo = std::max<Index>(0, std::min(start_a, start_b) - window);
    const Index hi = std::min<Index>(n_modes - 1, std::max(start_a, start_b) + window);
    for (std::size_t s = 1; s < modes.size(); ++s) {
        const Matrix& V = modes[s].vectors;
        const Vector ma = V.transpose() * (mass[s] * va);
        const Vector mb = V.transpose() * (mass[s] * vb);
        auto best = [&](const Vector& mac, Index skip) {
            Index arg = -1;
            double val = -1.0;
            for (Index c = lo; c <= hi; ++c) {
                if (c == skip) continue;
                if (mac(c) * mac(c) > val) {
                    val = mac(c) * mac(c);
                    arg = c;
                }
            }
            return arg;
        };
        // Assign the more confident branch first.
        const Index ca = best(ma, -1), cb = best(mb, -1);
        if (ca != cb) {
            ia = ca;
            ib = cb;
        } else if (ma(ca) * ma(ca) >= mb(cb) * mb(cb)) {
            ia = ca;
            ib = best(mb, ia);
        } else {
            ib = cb;
            ia = best(ma, ib);
        }
        va = V.col(ia);
        vb = V.col(ib);
        la.push_back(modes[s].values(ia));
        lb.push_back(modes[s].values(ib));
    }
    return {la, lb};
}

PerturbationScanResult run_perturbation_scan(const PerturbationScanConfig& cfg, int threads) {
    const SubstructureGenerator gen = cfg.model.generator();
    PerturbationScanResult out;
    out.q = cfg.q;
    out.k2 = linear_grid(cfg.sweep_min, cfg.sweep_max, cfg.points);
    const std::size_t n = out.k2.size();
    const Index n_modes = cfg.q + cfg.track_window + 1;

    std::vector<EigenPairs> modes(n);
    std::vector<Matrix> mass(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const Substructure s = gen(Vector::Constant(1, out.k2[i]));
        mass[i] = internal_block(s.M, s);
        modes[i] = fixed_interface_modes(mass[i], internal_block(s.K, s), n_modes);
    });
    for (std::size_t i = 0; i < n; ++i) {
        out.f_q.push_back(hz(modes[i].values(cfg.q - 1)));
        out.f_q1.push_back(hz(modes[i].values(cfg.q)));
    }

    const auto [la, lb] = track_branches(modes, mass, cfg.q - 1, cfg.q, cfg.track_window);
    for (std::size_t i = 0; i < n; ++i) {
        out.branch_a.push_back(hz(la[i]));
        out.branch_b.push_back(hz(lb[i]));
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d0 = la[i] - lb[i], d1 = la[i + 1] - lb[i + 1];
        if ((d0 < 0.0) != (d1 < 0.0)) {
            ++out.crossings;
            if (!out.crossing) out.crossing = out.k2[i] + (out.k2[i + 1] - out.k2[i]) * d0 / (d0 - d1);
        }
    }

    for (double ref : cfg.references) {
        ReferenceScan rs;
        rs.reference = ref;
        const CommonBasis basis = common_basis(gen(Vector::Constant(1, ref)), cfg.q);
        rs.rank.resize(n);
        rs.rcond.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const ProjectionDiagnostics d =
                diagnostics(basis, modes[i].vectors.leftCols(cfg.q), cfg.projection);
            rs.rank[i] = d.rank;
            rs.rcond[i] = d.rcond;
        }
        Index changes = 0;
        std::size_t at = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if ((rs.rank[i] < cfg.q) != (rs.rank[i + 1] < cfg.q)) {
                ++changes;
                at = i;
            }
        }
        if (changes == 1) {
            rs.flip_interval = std::make_pair(out.k2[at], out.k2[at + 1]);
            rs.deficient_side = rs.rank[n - 1] < cfg.q ? 1 : -1;
        }
        out.references.push_back(std::move(rs));
    }
    log::info("perturbation_scan_done",
              {{"points", n}, {"crossings", out.crossings}, {"crossing", out.crossing ? json(*out.crossing) : json()}});
    return out;
}

json summary_json(const PerturbationScanResult& r) {
    json refs = json::array();
    for (const ReferenceScan& rs : r.references) {
        json e = {{"reference_kN_per_mm", rs.reference},
                  {"deficient_samples", std::count_if(rs.rank.begin(), rs.rank.end(),
                                                      [&](Index k) { return k < r.q; })},
                  {"deficient_side", rs.deficient_side == 1    ? "above"
                                     : rs.deficient_side == -1 ? "below"
                                                               : "undetermined"}};
        e["flip_interval_kN_per_mm"] =
            rs.flip_interval ? json::array({rs.flip_interval->first, rs.flip_interval->second}) : json();
        refs.push_back(e);
    }
    const double step = r.k2.size() > 1 ? r.k2[1] - r.k2[0] : 0.0;
    return {{"q", r.q},
            {"points", r.k2.size()},
            {"sweep_step_kN_per_mm", step},
            {"tracked_crossings", r.crossings},
            {"crossing_kN_per_mm", r.crossing ? json(*r.crossing) : json()},
            {"references", refs}};
}

void write_perturbation_scan(const PerturbationScanResult& r, const std::string& out_dir) {
    ensure_dir(out_dir);
    std::vector<std::string> header = {"k2_kN_per_mm", "f" + std::to_string(r.q) + "_hz",
                                       "f" + std::to_string(r.q + 1) + "_hz", "branch_a_hz", "branch_b_hz"};
    for (std::size_t k = 0; k < r.references.size(); ++k) {
        header.push_back("rank_ref" + std::to_string(k));
        header.push_back("rcond_ref" + std::to_string(k));
    }
    CsvTable t(header);
    for (std::size_t i = 0; i < r.k2.size(); ++i) {
        std::vector<std::string> row = {format_double(r.k2[i]), format_double(r.f_q[i]), format_double(r.f_q1[i]),
                                        format_double(r.branch_a[i]), format_double(r.branch_b[i])};
        for (const ReferenceScan& rs : r.references) {
            row.push_back(std::to_string(rs.rank[i]));
            row.push_back(format_double(rs.rcond[i]));
        }
        t.add_row(std::move(row));
    }
    t.write(join(out_dir, "perturbation_scan.csv"));
    write_json_file(join(out_dir, "summary.json"), summary_json(r));
}

// ---------------------------------------------------------------------------
// Region detection

std::vector<Vector> detection_samples(const DetectConfig& cfg) {
    std::vector<Vector> s = latin_hypercube(cfg.samples, cfg.space, cfg.seed);
    if (cfg.order == DetectConfig::Order::Sorted) {
        std::stable_sort(s.begin(), s.end(), [](const Vector& a, const Vector& b) { return a(0) < b(0); });
    }
    return s;
}

namespace {

// Drops samples whose substructure cannot be generated, logging each one.
std::vector<Vector> generable(const std::vector<Vector>& samples, const SubstructureGenerator& gen, int threads) {
    std::vector<char> ok(samples.size(), 1);
    std::vector<std::string> why(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) {
        try {
            (void)gen(samples[i]);
        } catch (const Error& e) {
            ok[i] = 0;
            why[i] = e.what();
        }
    });
    std::vector<Vector> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (ok[i]) {
            out.push_back(samples[i]);
        } else {
            log::warn("sample_failed", {{"index", i}, {"theta", vector_to_json(samples[i])}, {"error", why[i]}});
        }
    }
    return out;
}

}  // namespace

DetectResult run_detect_regions(const DetectConfig& cfg, int threads) {
    DetectResult out;
    out.config = cfg;
    const SubstructureGenerator gen = cfg.model.generator();

    if (cfg.mode == DetectConfig::Mode::Single) {
        LabelingOptions opts;
        opts.q = cfg.q;
        opts.n_sub = cfg.n_sub;
        opts.n_samples = cfg.samples;
        opts.seed = cfg.seed;
        opts.projection = cfg.projection;
        opts.enable_skipping = cfg.skipping;
        opts.threads = threads;
        const std::vector<Vector> samples = generable(detection_samples(cfg), gen, threads);
        out.labeling = label_samples(cfg.space, cfg.reference, samples, gen, opts);

        std::vector<Vector> pts;
        std::vector<int> y;
        for (const LabeledSample& s : out.labeling->samples) {
            if (s.label == Label::Skipped) continue;
            pts.push_back(s.theta);
            y.push_back(s.label == Label::Accepted ? 1 : -1);
        }
        const bool both = std::find(y.begin(), y.end(), 1) != y.end() && std::find(y.begin(), y.end(), -1) != y.end();
        if (both) {
            Matrix X(static_cast<Index>(pts.size()), cfg.space.dim());
            for (std::size_t i = 0; i < pts.size(); ++i) X.row(static_cast<Index>(i)) = cfg.space.normalize(pts[i]).transpose();
            out.boundary = train_binary(X, y, cfg.svm);
        }
        Index acc = 0, rej = 0, skip = 0;
        for (const auto& s : out.labeling->samples) {
            acc += s.label == Label::Accepted;
            rej += s.label == Label::Rejected;
            skip += s.label == Label::Skipped;
        }
        log::info("labeling_done", {{"accepted", acc}, {"rejected", rej}, {"skipped", skip},
                                    {"terminated_early", out.labeling->terminated_early}});
        return out;
    }

    const std::vector<Vector> samples = generable(detection_samples(cfg), gen, threads);
    out.tagging = tag_regions(samples, gen, cfg.q, cfg.projection, threads);
    if (out.tagging->m() >= 1) {
        out.router = train_multiclass(out.tagging->thetas, out.tagging->region_of, cfg.space, cfg.svm);
    }
    log::info("tagging_done", {{"samples", samples.size()}, {"regions", out.tagging->m()}});
    return out;
}

void write_detect_regions(const DetectResult& r, const std::string& out_dir) {
    ensure_dir(out_dir);
    const DetectConfig& cfg = r.config;
    const auto names = cfg.model.parameter_names();
    json summary = {{"mode", cfg.mode == DetectConfig::Mode::Single ? "single" : "multi"},
                    {"q", cfg.q},
                    {"seed", cfg.seed},
                    {"space", to_json(cfg.space)}};

    if (r.labeling) {
        std::vector<std::string> header = {"index"};
        header.insert(header.end(), names.begin(), names.end());
        for (const char* h : {"shell", "label", "rank", "rcond"}) header.emplace_back(h);
        CsvTable t(header);
        Index acc = 0, rej = 0, skip = 0;
        for (std::size_t i = 0; i < r.labeling->samples.size(); ++i) {
            const LabeledSample& s = r.labeling->samples[i];
            std::vector<std::string> row = {std::to_string(i)};
            for (auto& c : theta_cells(s.theta)) row.push_back(c);
            row.push_back(std::to_string(s.subspace_index));
            row.push_back(label_name(s.label));
            row.push_back(s.diagnostics ? std::to_string(s.diagnostics->rank) : "");
            row.push_back(s.diagnostics ? format_double(s.diagnostics->rcond) : "");
            t.add_row(std::move(row));
            acc += s.label == Label::Accepted;
            rej += s.label == Label::Rejected;
            skip += s.label == Label::Skipped;
        }
        t.write(join(out_dir, "samples.csv"));
        summary["reference"] = vector_to_json(cfg.reference);
        summary["n_sub"] = cfg.n_sub;
        summary["accepted"] = acc;
        summary["rejected"] = rej;
        summary["skipped"] = skip;
        summary["evaluations"] = r.labeling->evaluations;
        summary["terminated_early"] = r.labeling->terminated_early;
        summary["terminated_at_shell"] = r.labeling->terminated_at_shell;
        const Index total = acc + rej + skip;
        summary["accepted_fraction"] = total > 0 ? static_cast<double>(acc) / static_cast<double>(total) : 0.0;
        write_json_file(join(out_dir, "router.json"), r.boundary ? to_json(*r.boundary) : json());
    }

    if (r.tagging) {
        const RegionTagging& tg = *r.tagging;
        std::vector<std::string> header = {"index"};
        header.insert(header.end(), names.begin(), names.end());
        for (const char* h : {"region", "rank", "rcond", "well_conditioned"}) header.emplace_back(h);
        CsvTable t(header);
        for (std::size_t i = 0; i < tg.thetas.size(); ++i) {
            std::vector<std::string> row = {std::to_string(i)};
            for (auto& c : theta_cells(tg.thetas[i])) row.push_back(c);
            row.push_back(std::to_string(tg.region_of[i]));
            row.push_back(std::to_string(tg.diagnostics[i].rank));
            row.push_back(format_double(tg.diagnostics[i].rcond));
            row.push_back(tg.diagnostics[i].well_conditioned ? "1" : "0");
            t.add_row(std::move(row));
        }
        t.write(join(out_dir, "samples.csv"));

        json refs = json::array();
        std::vector<Index> sizes(static_cast<std::size_t>(tg.m()), 0);
        for (int id : tg.region_of) ++sizes[static_cast<std::size_t>(id - 1)];
        for (const RegionReference& ref : tg.references) {
            refs.push_back({{"region_id", ref.region_id},
                            {"sample_index", ref.sample_index},
                            {"theta", vector_to_json(ref.theta)},
                            {"samples", sizes[static_cast<std::size_t>(ref.region_id - 1)]}});
        }
        const json tagging = {{"model", to_json(cfg.model)},
                              {"space", to_json(cfg.space)},
                              {"q", cfg.q},
                              {"projection", projection_json(cfg.projection)},
                              {"thetas", thetas_json(tg.thetas)},
                              {"region_of", tg.region_of},
                              {"references", refs}};
        write_json_file(join(out_dir, "tagging.json"), tagging);
        write_json_file(join(out_dir, "router.json"), r.router ? to_json(*r.router) : json());
        summary["samples"] = tg.thetas.size();
        summary["regions"] = tg.m();
        summary["references"] = refs;
    }
    write_json_file(join(out_dir, "summary.json"), summary);
}

RegionsArtifact load_regions(const std::string& path, int threads) {
    const std::string file = fs::is_directory(path) ? join(path, "tagging.json") : path;
    const json j = read_json_file(file);
    RegionsArtifact a;
    try {
        a.model = model_spec_from_json(j.at("model"));
        a.space = parameter_space_from_json(j.at("space"));
        a.q = j.at("q").get<Index>();
        a.projection = projection_from_json(j.at("projection"));
        for (const auto& t : j.at("thetas")) a.tagging.thetas.push_back(vector_from_json(t));
        a.tagging.region_of = j.at("region_of").get<std::vector<int>>();
        for (const auto& r : j.at("references")) {
            RegionReference ref;
            ref.region_id = r.at("region_id").get<int>();
            ref.sample_index = r.at("sample_index").get<Index>();
            ref.theta = vector_from_json(r.at("theta"));
            a.tagging.references.push_back(std::move(ref));
        }
    } catch (const json::exception& e) {
        throw ConfigError("regions artifact " + file + " is malformed: " + e.what());
    }
    if (a.tagging.region_of.size() != a.tagging.thetas.size()) {
        throw ConfigError("regions artifact " + file + ": region_of and thetas differ in length");
    }
    const SubstructureGenerator gen = a.model.generator();
    auto& refs = a.tagging.references;
    parallel_for(refs.size(), threads, [&](std::size_t k) {
        refs[k].basis = common_basis(gen(refs[k].theta), a.q);
        refs[k].basis.theta_o = refs[k].theta;
    });
    a.tagging.diagnostics.resize(a.tagging.thetas.size());
    return a;
}

// ---------------------------------------------------------------------------
// Training

json to_json(const SurrogateBundle& b) {
    return {{"model", to_json(b.model)},
            {"projection", projection_json(b.projection)},
            {"surrogate", to_json(b.surrogate)}};
}

SurrogateBundle surrogate_bundle_from_json(const json& j) {
    SurrogateBundle b;
    try {
        b.model = model_spec_from_json(j.at("model"));
        b.projection = projection_from_json(j.at("projection"));
        b.surrogate = surrogate_from_json(j.at("surrogate"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("surrogate bundle is malformed: ") + e.what());
    }
    return b;
}

TrainResult run_train(const TrainConfig& cfg, int threads) {
    const RegionsArtifact a = load_regions(cfg.regions_path, threads);
    SurrogateTrainOptions opts;
    opts.pca = cfg.pca;
    opts.kriging = cfg.kriging;
    opts.svm = cfg.svm;
    opts.projection = a.projection;
    opts.min_region_samples = cfg.min_region_samples;
    opts.include_damping = cfg.damping_block;
    opts.damping_alpha = cfg.damping_alpha;
    opts.damping_beta = cfg.damping_beta;
    opts.compute_loo = cfg.loo;
    opts.threads = threads;

    TrainResult out;
    out.bundle.model = a.model;
    out.bundle.projection = a.projection;
    out.bundle.surrogate = train_surrogate(a.tagging, a.model.generator(), a.space, opts, &out.report);
    for (const RegionTrainReport& r : out.report) {
        if (r.excluded) {
            log::warn("region_excluded", {{"region", r.region_id}, {"samples", r.n_samples}, {"reason", r.reason}});
        } else {
            log::info("region_trained", {{"region", r.region_id},
                                         {"samples", r.n_samples},
                                         {"u", r.u},
                                         {"max_reconstruction_percent", r.max_reconstruction_percent},
                                         {"loo_median_percent", r.loo_median_percent}});
        }
    }
    return out;
}

void write_train(const TrainResult& r, const std::string& out_dir) {
    ensure_dir(out_dir);
    write_json_file(join(out_dir, "surrogate.json"), to_json(r.bundle));
    json regions = json::array();
    for (const RegionTrainReport& rep : r.report) {
        json e = {{"region_id", rep.region_id}, {"samples", rep.n_samples}, {"excluded", rep.excluded}};
        if (rep.excluded) {
            e["reason"] = rep.reason;
        } else {
            e["u"] = rep.u;
            e["max_reconstruction_percent"] = rep.max_reconstruction_percent;
            e["loo_median_percent"] = rep.loo_median_percent;
            e["loo_latent_median_percent"] = rep.loo_latent_median_percent;
        }
        regions.push_back(e);
    }
    write_json_file(join(out_dir, "train_report.json"), {{"regions", regions}});
}

// ---------------------------------------------------------------------------
// FRF prediction

std::vector<Vector> perturbed_thetas(const Vector& nominal, double perturbation, Index cells, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vector> out;
    for (Index c = 0; c < cells; ++c) {
        Vector t = nominal;
        for (Index k = 0; k < t.size(); ++k) t(k) *= 1.0 + perturbation * (2.0 * rng.uniform() - 1.0);
        out.push_back(std::move(t));
    }
    return out;
}

CBReduced direct_common_cb(const SurrogateBundle& bundle, const Substructure& s, const Vector& theta) {
    const Index q = bundle.surrogate.q;
    const Matrix Mjj = internal_block(s.M, s);
    const Matrix Phi = fixed_interface_modes(Mjj, internal_block(s.K, s), q).vectors;
    for (const RegionModel& rm : bundle.surrogate.regions) {
        if (diagnostics(rm.basis, Phi, bundle.projection).well_conditioned) {
            CBReduced cb = cb_reduce_common(s, Phi, rm.basis, bundle.projection);
            cb.provenance.region_id = rm.region_id;
            cb.provenance.theta_p = theta;
            return cb;
        }
    }
    std::ostringstream os;
    os << "no bundle reference gives a well-conditioned projection at theta = [" << theta.transpose() << "]";
    throw IllConditionedProjectionError(os.str(), {});
}

namespace {

struct ChainLayout {
    Index face = 0;       // DoF per face
    Index cells = 0;
    Index global(Index f, Index l) const { return f * face + l; }
};

FrfResult chain_frf(const std::vector<CBReduced>& cells, const PredictConfig& cfg, const RayleighSpec& damping,
                    const std::vector<double>& grid, int threads) {
    AssemblyPlan plan;
    plan.cells = cells;
    plan.connectivity = chain_connectivity(cells);
    ChainLayout lay{cells.front().n_interface / 2, static_cast<Index>(cells.size())};

    if (cfg.output == PredictConfig::Output::Transmissibility) {
        const AssembledSystem sys = assemble(plan);
        const Matrix C = proportional_damping(sys.M, sys.K, damping);
        std::vector<Index> base;
        for (Index l = 0; l < lay.face; ++l) base.push_back(sys.free_index(lay.global(0, l)));
        return transmissibility_sweep(sys.M, sys.K, C, base, sys.free_index(lay.global(lay.cells, 0)), grid, threads);
    }

    for (Index l = 0; l < lay.face; ++l) plan.fixed_dofs.push_back(lay.global(0, l));
    std::vector<Index> load = cfg.load_face_indices;
    if (load.empty()) load.push_back(0);
    for (Index l : load) {
        if (l >= lay.face) throw ParameterError("load_face_indices: index exceeds the face size");
        plan.load.emplace_back(lay.global(lay.cells, l), Complex(1.0, 0.0));
    }
    const AssembledSystem sys = assemble(plan);
    const Matrix C = proportional_damping(sys.M, sys.K, damping);
    FrfOutput out;
    out.metric = FrfMetric::QuadraticVelocity;
    std::vector<Index> resp = cfg.response_face_indices;
    if (resp.empty()) {
        resp.resize(static_cast<std::size_t>(lay.face));
        std::iota(resp.begin(), resp.end(), Index{0});
    }
    for (Index f = 1; f <= lay.cells; ++f) {
        for (Index l : resp) {
            if (l >= lay.face) throw ParameterError("response_face_indices: index exceeds the face size");
            out.dofs.push_back(sys.free_index(lay.global(f, l)));
        }
    }
    return frf_sweep(sys.M, sys.K, C, sys.F, grid, out, threads);
}

RayleighSpec resolve_damping(const std::vector<CBReduced>& cells, const DampingSpec& d) {
    if (!d.ratio) return {d.alpha, d.beta};
    AssemblyPlan plan;
    plan.cells = cells;
    plan.connectivity = chain_connectivity(cells);
    const Index face = cells.front().n_interface / 2;
    for (Index l = 0; l < face; ++l) plan.fixed_dofs.push_back(l);
    const AssembledSystem sys = assemble(plan);
    return rayleigh_from_ratios(sys.M, sys.K, {d.zeta_i, d.zeta_j, d.mode_i, d.mode_j});
}

}  // namespace

PredictResult run_predict_frf(const PredictConfig& cfg, const SurrogateBundle& bundle, int threads) {
    const ParameterSpace& space = bundle.surrogate.space;
    const Vector nominal = bundle.model.nominal();
    const std::vector<Vector> thetas =
        cfg.thetas.empty() ? perturbed_thetas(nominal, cfg.perturbation, cfg.cells, cfg.seed) : cfg.thetas;
    for (std::size_t c = 0; c < thetas.size(); ++c) {
        if (thetas[c].size() != space.dim()) throw DimensionError("predict-frf: theta has the wrong dimension");
        if (!space.contains(thetas[c], 1e-12)) {
            std::ostringstream os;
            os << "predict-frf: cell " << c << " theta = [" << thetas[c].transpose()
               << "] lies outside the parameter space";
            throw ParameterError(os.str());
        }
    }

    const SubstructureGenerator gen = bundle.model.generator();
    const Vector h = cfg.lagrange_h.size() > 0 ? cfg.lagrange_h : nominal;
    if (h.size() != space.dim()) throw DimensionError("predict-frf: lagrange centre has the wrong dimension");
    const CommonBasis centre = common_basis(gen(h), bundle.surrogate.q);
    const LagrangeSupport support = build_lagrange_support(gen, h, cfg.lagrange_P, centre, bundle.projection);

    const std::size_t n = thetas.size();
    std::vector<CBReduced> sur(n), direct(n), full(n), lag(n);
    PredictResult out;
    out.cells.resize(n);
    parallel_for(n, threads, [&](std::size_t c) {
        const Substructure s = gen(thetas[c]);
        full[c] = full_order_cell(s);
        direct[c] = direct_common_cb(bundle, s, thetas[c]);
        const SurrogatePrediction p = predict_cb(bundle.surrogate, thetas[c]);
        sur[c] = p.cb;
        const LagrangeResult lr = lagrange_interpolate(support, thetas[c]);
        lag[c] = lr.cb;
        CellReport& rep = out.cells[c];
        rep.theta = thetas[c];
        rep.region_id = p.region_id;
        rep.low_confidence = p.low_confidence;
        rep.symmetrization_delta = p.symmetrization_delta;
        rep.lagrange_extrapolated = lr.extrapolated;
        rep.direct_region_id = direct[c].provenance.region_id;
    });
    for (std::size_t c = 0; c < n; ++c) {
        if (out.cells[c].low_confidence) {
            log::warn("router_low_confidence", {{"cell", c}, {"theta", vector_to_json(thetas[c])},
                                                {"region", out.cells[c].region_id}});
        }
    }

    out.damping = resolve_damping(direct, cfg.damping);
    const std::vector<double> grid = linear_grid(cfg.f_min, cfg.f_max, cfg.points);
    out.surrogate = chain_frf(sur, cfg, out.damping, grid, threads);
    out.direct_cb = chain_frf(direct, cfg, out.damping, grid, threads);
    out.full = chain_frf(full, cfg, out.damping, grid, threads);
    out.lagrange = chain_frf(lag, cfg, out.damping, grid, threads);
    return out;
}

double median_log10_error(const FrfResult& a, const FrfResult& b) {
    if (a.response.size() != b.response.size() || a.response.empty()) {
        throw DimensionError("median_log10_error: FRFs differ in length");
    }
    std::vector<double> e;
    e.reserve(a.response.size());
    for (std::size_t k = 0; k < a.response.size(); ++k) {
        const double ma = std::max(std::abs(a.response[k]), 1e-300);
        const double mb = std::max(std::abs(b.response[k]), 1e-300);
        e.push_back(std::abs(std::log10(ma) - std::log10(mb)));
    }
    const std::size_t mid = e.size() / 2;
    std::nth_element(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(mid), e.end());
    if (e.size() % 2 == 1) return e[mid];
    const double upper = e[mid];
    const double lower = *std::max_element(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

void write_predict_frf(const PredictResult& r, const std::string& out_dir) {
    ensure_dir(out_dir);
    write_frf_csv(join(out_dir, "frf_surrogate.csv"), r.surrogate);
    write_frf_csv(join(out_dir, "frf_direct_cb.csv"), r.direct_cb);
    write_frf_csv(join(out_dir, "frf_full.csv"), r.full);
    write_frf_csv(join(out_dir, "frf_lagrange.csv"), r.lagrange);

    const Index d = r.cells.empty() ? 0 : r.cells.front().theta.size();
    std::vector<std::string> header = {"cell"};
    for (Index k = 0; k < d; ++k) header.push_back("theta" + std::to_string(k));
    for (const char* h : {"region", "low_confidence", "symmetrization_delta", "lagrange_extrapolated", "direct_region"}) {
        header.emplace_back(h);
    }
    CsvTable t(header);
    Index low = 0;
    for (std::size_t c = 0; c < r.cells.size(); ++c) {
        const CellReport& cr = r.cells[c];
        std::vector<std::string> row = {std::to_string(c)};
        for (auto& s : theta_cells(cr.theta)) row.push_back(s);
        row.push_back(std::to_string(cr.region_id));
        row.push_back(cr.low_confidence ? "1" : "0");
        row.push_back(format_double(cr.symmetrization_delta));
        row.push_back(cr.lagrange_extrapolated ? "1" : "0");
        row.push_back(std::to_string(cr.direct_region_id));
        t.add_row(std::move(row));
        low += cr.low_confidence;
    }
    t.write(join(out_dir, "cells.csv"));

    const json summary = {
        {"damping", {{"alpha", r.damping.alpha}, {"beta", r.damping.beta}}},
        {"low_confidence_cells", low},
        {"median_log10_error_vs_full",
         {{"surrogate", median_log10_error(r.surrogate, r.full)},
          {"direct_cb", median_log10_error(r.direct_cb, r.full)},
          {"lagrange", median_log10_error(r.lagrange, r.full)}}},
        {"median_log10_error_vs_direct_cb",
         {{"surrogate", median_log10_error(r.surrogate, r.direct_cb)},
          {"lagrange", median_log10_error(r.lagrange, r.direct_cb)}}}};
    write_json_file(join(out_dir, "summary.json"), summary);
}

json run_compare(const CompareConfig& cfg) {
    const FrfResult ref = read_frf_csv(cfg.reference);
    json cands = json::array();
    for (const std::string& path : cfg.candidates) {
        const FrfResult c = read_frf_csv(path);
        if (c.frequencies_hz != ref.frequencies_hz) {
            throw DimensionError("compare: " + path + " uses a different frequency grid");
        }
        double worst = 0.0;
        for (std::size_t k = 0; k < c.response.size(); ++k) {
            worst = std::max(worst, std::abs(std::log10(std::max(std::abs(c.response[k]), 1e-300)) -
                                             std::log10(std::max(std::abs(ref.response[k]), 1e-300))));
        }
        cands.push_back({{"path", path},
                         {"median_log10_error", median_log10_error(c, ref)},
                         {"max_log10_error", worst}});
    }
    return {{"reference", cfg.reference}, {"candidates", cands}};
}

}  // namespace cbmorph
