#include "cbmorph/config.hpp"

#include <filesystem>
#include <set>
#include <sstream>

#include "cbmorph/errors.hpp"

namespace cbmorph {

namespace {

constexpr double kKnPerMm = 1.0e6;  // N/m

// Strict view of a JSON object: unknown keys and type mismatches raise
// ConfigError naming the offending path.
class Fields {
public:
    Fields(const json& j, std::string path, std::set<std::string> allowed)
        : j_(j), path_(std::move(path)) {
        if (!j.is_object()) fail("", "expected an object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!allowed.count(it.key())) fail(it.key(), "unknown key");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) const {
        if (!has(key)) fail(key, "required key missing");
        return j_.at(key);
    }

    double num(const std::string& key, std::optional<double> def = std::nullopt) const {
        if (!has(key)) {
            if (def) return *def;
            fail(key, "required key missing");
        }
        const json& v = j_.at(key);
        if (!v.is_number()) fail(key, "expected a number");
        return v.get<double>();
    }

    Index count(const std::string& key, std::optional<Index> def = std::nullopt, Index min = 0) const {
        if (!has(key)) {
            if (def) return *def;
            fail(key, "required key missing");
        }
        const json& v = j_.at(key);
        if (!v.is_number_integer()) fail(key, "expected an integer");
        const auto x = v.get<long long>();
        if (x < min) fail(key, "must be >= " + std::to_string(min));
        return static_cast<Index>(x);
    }

    std::uint64_t seed(const std::string& key, std::uint64_t def) const {
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            fail(key, "expected a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    bool flag(const std::string& key, bool def) const {
        if (!has(key)) return def;
        if (!j_.at(key).is_boolean()) fail(key, "expected true or false");
        return j_.at(key).get<bool>();
    }

    std::string str(const std::string& key, std::optional<std::string> def = std::nullopt) const {
        if (!has(key)) {
            if (def) return *def;
            fail(key, "required key missing");
        }
        if (!j_.at(key).is_string()) fail(key, "expected a string");
        return j_.at(key).get<std::string>();
    }

    std::string choice(const std::string& key, const std::set<std::string>& options, std::string def) const {
        const std::string v = str(key, def);
        if (!options.count(v)) fail(key, "unsupported value '" + v + "'");
        return v;
    }

    std::vector<double> numbers(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_array()) fail(key, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) fail(key, "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<Index> indices(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_array()) fail(key, "expected an array of integers");
        std::vector<Index> out;
        for (const auto& e : v) {
            if (!e.is_number_integer() || e.get<long long>() < 0) fail(key, "expected non-negative integers");
            out.push_back(e.get<Index>());
        }
        return out;
    }

    Fields sub(const std::string& key, std::set<std::string> allowed) const {
        return Fields(raw(key), child(key), std::move(allowed));
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const std::string where = key.empty() ? (path_.empty() ? "<root>" : path_) : child(key);
        throw ConfigError("config: " + where + ": " + msg);
    }

private:
    const json& j_;
    std::string path_;
};

Vector to_vector(const std::vector<double>& v) {
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = v[i];
    return out;
}

std::string resolve(const std::string& base_dir, const std::string& p) {
    const std::filesystem::path path(p);
    if (path.is_absolute() || base_dir.empty()) return p;
    return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

ProjectionSettings parse_projection(const Fields& f) {
    ProjectionSettings s;
    s.rank_tau = f.num("rank_tau", s.rank_tau);
    s.rcond_threshold = f.num("rcond_threshold", s.rcond_threshold);
    if (!(s.rank_tau > 0.0 && s.rank_tau < 1.0)) f.fail("rank_tau", "must lie in (0, 1)");
    if (!(s.rcond_threshold >= 0.0 && s.rcond_threshold < 1.0)) f.fail("rcond_threshold", "must lie in [0, 1)");
    return s;
}

SvmParams parse_svm(const Fields& parent, const std::string& key) {
    SvmParams p;
    if (!parent.has(key)) return p;
    const Fields f = parent.sub(key, {"C", "gamma", "tol"});
    p.C = f.num("C", p.C);
    p.gamma = f.num("gamma", p.gamma);
    p.tol = f.num("tol", p.tol);
    if (!(p.C > 0.0)) f.fail("C", "must be positive");
    if (!(p.tol > 0.0)) f.fail("tol", "must be positive");
    return p;
}

ParameterSpace parse_space(const Fields& f, const ModelSpec& model) {
    if (f.has("bounds") && f.has("relative_range")) f.fail("bounds", "give either bounds or relative_range");
    if (f.has("bounds")) {
        const Fields b = f.sub("bounds", {"lo", "hi"});
        const Vector lo = to_vector(b.numbers("lo"));
        const Vector hi = to_vector(b.numbers("hi"));
        if (lo.size() != model.nominal().size() || hi.size() != lo.size()) {
            b.fail("", "bounds must have one entry per model parameter");
        }
        try {
            return ParameterSpace(model.parameter_names(), lo, hi);
        } catch (const ParameterError& e) {
            b.fail("", e.what());
        }
    }
    const double rel = f.num("relative_range", 0.5);
    if (!(rel > 0.0 && rel < 1.0)) f.fail("relative_range", "must lie in (0, 1)");
    return model.space(rel);
}

}  // namespace

// ---------------------------------------------------------------------------

SubstructureGenerator ModelSpec::generator() const {
    if (preset == Preset::Lattice) {
        const double m = m_g * 1e-3;
        const double k1 = k1_kN_per_mm * kKnPerMm;
        const LatticeConfig cfg = lattice;
        return [m, k1, cfg](const Vector& theta) {
            if (theta.size() != 1) throw DimensionError("lattice preset expects theta = [k2]");
            Substructure s = build_lattice(m, k1, theta(0) * kKnPerMm, cfg);
            s.params.names = {"k2"};
            s.params.units = {"kN/mm"};
            s.params.values = theta;
            return s;
        };
    }
    return resonator_generator(resonator);
}

Vector ModelSpec::nominal() const {
    if (preset == Preset::Lattice) return Vector::Constant(1, k2_kN_per_mm);
    Vector v(2);
    v << resonator.L0, resonator.W0;
    return v;
}

ParameterSpace ModelSpec::space(double rel) const {
    if (preset == Preset::Resonator) return resonator_space(resonator, rel);
    return ParameterSpace({"k2"}, Vector::Constant(1, k2_kN_per_mm * (1.0 - rel)),
                          Vector::Constant(1, k2_kN_per_mm * (1.0 + rel)));
}

std::vector<std::string> ModelSpec::parameter_names() const {
    if (preset == Preset::Lattice) return {"k2"};
    return {"L", "W"};
}

ModelSpec model_spec_from_json(const json& j) {
    ModelSpec m;
    const Fields f(j, "model",
                   {"preset", "m_g", "k1_kN_per_mm", "k2_kN_per_mm", "rows", "cols", "pretension", "foundation",
                    "n_base", "attach_index", "base_mass_kg", "base_stiffness_N_per_m", "mass_coeff",
                    "stiffness_coeff", "L0", "W0", "rel_range"});
    const std::string preset = f.choice("preset", {"lattice", "resonator"}, "lattice");
    const std::set<std::string> lattice_keys = {"m_g", "k1_kN_per_mm", "k2_kN_per_mm", "rows", "cols",
                                                "pretension", "foundation"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool is_lattice_key = lattice_keys.count(it.key()) > 0;
        if (it.key() == "preset") continue;
        if ((preset == "lattice") != is_lattice_key) f.fail(it.key(), "not a parameter of the " + preset + " preset");
    }
    if (preset == "lattice") {
        m.preset = ModelSpec::Preset::Lattice;
        m.m_g = f.num("m_g", m.m_g);
        m.k1_kN_per_mm = f.num("k1_kN_per_mm", m.k1_kN_per_mm);
        m.k2_kN_per_mm = f.num("k2_kN_per_mm", m.k2_kN_per_mm);
        m.lattice.rows = static_cast<int>(f.count("rows", m.lattice.rows, 2));
        m.lattice.cols = static_cast<int>(f.count("cols", m.lattice.cols, 3));
        m.lattice.pretension = f.num("pretension", m.lattice.pretension);
        m.lattice.foundation = f.num("foundation", m.lattice.foundation);
        if (!(m.m_g > 0 && m.k1_kN_per_mm > 0 && m.k2_kN_per_mm > 0)) f.fail("", "lattice parameters must be positive");
    } else {
        m.preset = ModelSpec::Preset::Resonator;
        ResonatorCellConfig& r = m.resonator;
        r.n_base = static_cast<int>(f.count("n_base", r.n_base, 3));
        r.attach_index = static_cast<int>(f.count("attach_index", r.attach_index, 1));
        r.base_mass = f.num("base_mass_kg", r.base_mass);
        r.base_stiffness = f.num("base_stiffness_N_per_m", r.base_stiffness);
        r.mass_coeff = f.num("mass_coeff", r.mass_coeff);
        r.stiffness_coeff = f.num("stiffness_coeff", r.stiffness_coeff);
        r.L0 = f.num("L0", r.L0);
        r.W0 = f.num("W0", r.W0);
        r.rel_range = f.num("rel_range", r.rel_range);
        if (!(r.base_mass > 0 && r.base_stiffness > 0 && r.mass_coeff > 0 && r.stiffness_coeff > 0 && r.L0 > 0 &&
              r.W0 > 0 && r.rel_range > 0 && r.rel_range < 1)) {
            f.fail("", "resonator parameters must be positive, rel_range in (0, 1)");
        }
    }
    return m;
}

json to_json(const ModelSpec& m) {
    if (m.preset == ModelSpec::Preset::Lattice) {
        return {{"preset", "lattice"},      {"m_g", m.m_g},
                {"k1_kN_per_mm", m.k1_kN_per_mm}, {"k2_kN_per_mm", m.k2_kN_per_mm},
                {"rows", m.lattice.rows},   {"cols", m.lattice.cols},
                {"pretension", m.lattice.pretension}, {"foundation", m.lattice.foundation}};
    }
    const ResonatorCellConfig& r = m.resonator;
    return {{"preset", "resonator"},
            {"n_base", r.n_base},
            {"attach_index", r.attach_index},
            {"base_mass_kg", r.base_mass},
            {"base_stiffness_N_per_m", r.base_stiffness},
            {"mass_coeff", r.mass_coeff},
            {"stiffness_coeff", r.stiffness_coeff},
            {"L0", r.L0},
            {"W0", r.W0},
            {"rel_range", r.rel_range}};
}

RankScanConfig parse_rank_scan(const json& j) {
    const Fields f(j, "", {"model", "q_max", "swap_first", "swap_last", "permutations", "seed", "rank_tau"});
    RankScanConfig c;
    if (f.has("model")) c.model = model_spec_from_json(f.raw("model"));
    if (c.model.preset != ModelSpec::Preset::Lattice) f.fail("model", "rank-scan requires the lattice preset");
    c.q_max = f.count("q_max", c.q_max, 1);
    c.swap_first = f.count("swap_first", c.swap_first, 1);
    c.swap_last = f.count("swap_last", c.swap_last, 1);
    c.permutations = f.count("permutations", c.permutations, 1);
    c.seed = f.seed("seed", c.seed);
    c.rank_tau = f.num("rank_tau", c.rank_tau);
    if (c.swap_last <= c.swap_first) f.fail("swap_last", "must exceed swap_first");
    if (c.q_max < c.swap_last) f.fail("q_max", "must be >= swap_last");
    return c;
}

PerturbationScanConfig parse_perturbation_scan(const json& j) {
    const Fields f(j, "", {"model", "q", "sweep_min_kN_per_mm", "sweep_max_kN_per_mm", "points",
                           "references_kN_per_mm", "rank_tau", "rcond_threshold", "track_window"});
    PerturbationScanConfig c;
    if (f.has("model")) c.model = model_spec_from_json(f.raw("model"));
    if (c.model.preset != ModelSpec::Preset::Lattice) {
        f.fail("model", "perturbation-scan requires the lattice preset");
    }
    c.q = f.count("q", c.q, 1);
    c.sweep_min = f.num("sweep_min_kN_per_mm", c.sweep_min);
    c.sweep_max = f.num("sweep_max_kN_per_mm", c.sweep_max);
    c.points = f.count("points", c.points, 2);
    if (f.has("references_kN_per_mm")) c.references = f.numbers("references_kN_per_mm");
    c.projection = parse_projection(f);
    c.track_window = f.count("track_window", c.track_window, 1);
    if (!(c.sweep_min > 0.0 && c.sweep_max > c.sweep_min)) f.fail("sweep_max_kN_per_mm", "need 0 < min < max");
    if (c.references.empty()) f.fail("references_kN_per_mm", "at least one reference required");
    return c;
}

DetectConfig parse_detect(const json& j) {
    const Fields f(j, "", {"model", "mode", "bounds", "relative_range", "reference", "q", "samples", "seed",
                           "n_sub", "order", "skipping", "rank_tau", "rcond_threshold", "svm"});
    DetectConfig c;
    if (f.has("model")) c.model = model_spec_from_json(f.raw("model"));
    c.mode = f.choice("mode", {"single", "multi"}, "multi") == "single" ? DetectConfig::Mode::Single
                                                                          : DetectConfig::Mode::Multi;
    c.space = parse_space(f, c.model);
    c.reference = f.has("reference") ? to_vector(f.numbers("reference")) : c.model.nominal();
    if (c.reference.size() != c.space.dim()) f.fail("reference", "wrong dimension");
    c.q = f.count("q", c.q, 1);
    c.samples = f.count("samples", c.samples, 1);
    c.seed = f.seed("seed", c.seed);
    c.n_sub = f.count("n_sub", c.n_sub, 1);
    c.order = f.choice("order", {"lhs", "sorted"}, "lhs") == "sorted" ? DetectConfig::Order::Sorted
                                                                       : DetectConfig::Order::Lhs;
    c.skipping = f.flag("skipping", c.skipping);
    c.projection = parse_projection(f);
    c.svm = parse_svm(f, "svm");
    return c;
}

TrainConfig parse_train(const json& j, const std::string& base_dir) {
    const Fields f(j, "", {"regions", "pca", "kriging", "svm", "min_region_samples", "loo", "damping_block"});
    TrainConfig c;
    c.regions_path = resolve(base_dir, f.str("regions"));
    if (f.has("pca")) {
        const Fields p = f.sub("pca", {"mode", "threshold_percent", "u"});
        c.pca.threshold_mode = p.choice("mode", {"threshold", "fixed"}, "threshold") == "threshold";
        c.pca.threshold_percent = p.num("threshold_percent", c.pca.threshold_percent);
        c.pca.u = p.count("u", c.pca.u, 1);
        if (!(c.pca.threshold_percent > 0.0)) p.fail("threshold_percent", "must be positive");
    }
    if (f.has("kriging")) {
        const Fields k = f.sub("kriging", {"nugget", "log10_lo", "log10_hi", "starts", "min_step", "shared_lengths"});
        c.kriging.nugget = k.num("nugget", c.kriging.nugget);
        c.kriging.log10_lo = k.num("log10_lo", c.kriging.log10_lo);
        c.kriging.log10_hi = k.num("log10_hi", c.kriging.log10_hi);
        if (k.has("starts")) c.kriging.starts = k.numbers("starts");
        c.kriging.min_step = k.num("min_step", c.kriging.min_step);
        c.kriging.shared_lengths = k.flag("shared_lengths", c.kriging.shared_lengths);
        if (!(c.kriging.nugget >= 0.0)) k.fail("nugget", "must be non-negative");
        if (!(c.kriging.log10_hi > c.kriging.log10_lo)) k.fail("log10_hi", "must exceed log10_lo");
        if (c.kriging.starts.empty()) k.fail("starts", "at least one start required");
        if (!(c.kriging.min_step > 0.0)) k.fail("min_step", "must be positive");
    }
    c.svm = parse_svm(f, "svm");
    c.min_region_samples = f.count("min_region_samples", c.min_region_samples, 0);
    c.loo = f.flag("loo", c.loo);
    if (f.has("damping_block")) {
        const Fields d = f.sub("damping_block", {"enabled", "alpha", "beta"});
        c.damping_block = d.flag("enabled", false);
        c.damping_alpha = d.num("alpha", 0.0);
        c.damping_beta = d.num("beta", 0.0);
    }
    return c;
}

PredictConfig parse_predict(const json& j, const std::string& base_dir) {
    const Fields f(j, "", {"bundle", "cells", "perturbation", "seed", "thetas", "grid", "damping", "output",
                           "lagrange", "load_face_indices", "response_face_indices"});
    PredictConfig c;
    c.bundle_path = resolve(base_dir, f.str("bundle"));
    c.cells = f.count("cells", c.cells, 1);
    c.perturbation = f.num("perturbation", c.perturbation);
    if (!(c.perturbation >= 0.0 && c.perturbation < 1.0)) f.fail("perturbation", "must lie in [0, 1)");
    c.seed = f.seed("seed", c.seed);
    if (f.has("thetas")) {
        const json& t = f.raw("thetas");
        if (!t.is_array() || t.empty()) f.fail("thetas", "expected a non-empty array of parameter vectors");
        for (const auto& row : t) {
            if (!row.is_array()) f.fail("thetas", "each entry must be an array of numbers");
            std::vector<double> v;
            for (const auto& e : row) {
                if (!e.is_number()) f.fail("thetas", "each entry must be an array of numbers");
                v.push_back(e.get<double>());
            }
            c.thetas.push_back(to_vector(v));
        }
        c.cells = static_cast<Index>(c.thetas.size());
    }
    if (f.has("grid")) {
        const Fields g = f.sub("grid", {"f_min_hz", "f_max_hz", "points"});
        c.f_min = g.num("f_min_hz", c.f_min);
        c.f_max = g.num("f_max_hz", c.f_max);
        c.points = g.count("points", c.points, 2);
        if (!(c.f_min >= 0.0 && c.f_max > c.f_min)) g.fail("f_max_hz", "need 0 <= f_min < f_max");
    }
    if (f.has("damping")) {
        const Fields d = f.sub("damping", {"type", "zeta", "modes", "alpha", "beta"});
        c.damping.ratio = d.choice("type", {"ratio", "rayleigh"}, "ratio") == "ratio";
        if (c.damping.ratio) {
            if (d.has("zeta")) {
                const auto z = d.numbers("zeta");
                if (z.size() != 2) d.fail("zeta", "expected two damping ratios");
                c.damping.zeta_i = z[0];
                c.damping.zeta_j = z[1];
            }
            if (d.has("modes")) {
                const auto m = d.indices("modes");
                if (m.size() != 2) d.fail("modes", "expected two mode indices");
                c.damping.mode_i = m[0];
                c.damping.mode_j = m[1];
            }
        } else {
            c.damping.alpha = d.num("alpha");
            c.damping.beta = d.num("beta");
        }
    }
    c.output = f.choice("output", {"transmissibility", "quadratic_velocity"}, "transmissibility") == "transmissibility"
                   ? PredictConfig::Output::Transmissibility
                   : PredictConfig::Output::QuadraticVelocity;
    if (f.has("lagrange")) {
        const Fields l = f.sub("lagrange", {"P", "h"});
        c.lagrange_P = l.num("P", c.lagrange_P);
        if (l.has("h")) c.lagrange_h = to_vector(l.numbers("h"));
        if (!(c.lagrange_P > 0.0)) l.fail("P", "must be positive");
    }
    if (f.has("load_face_indices")) c.load_face_indices = f.indices("load_face_indices");
    if (f.has("response_face_indices")) c.response_face_indices = f.indices("response_face_indices");
    return c;
}

CompareConfig parse_compare(const json& j, const std::string& base_dir) {
    const Fields f(j, "", {"reference", "candidates"});
    CompareConfig c;
    c.reference = resolve(base_dir, f.str("reference"));
    const json& cand = f.raw("candidates");
    if (!cand.is_array() || cand.empty()) f.fail("candidates", "expected a non-empty array of paths");
    for (const auto& e : cand) {
        if (!e.is_string()) f.fail("candidates", "expected strings");
        c.candidates.push_back(resolve(base_dir, e.get<std::string>()));
    }
    return c;
}

}  // namespace cbmorph
