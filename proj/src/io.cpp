#include "cbmorph/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "cbmorph/errors.hpp"

namespace cbmorph {

namespace {

// JSON has no infinities; they travel as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

json index_list(const std::vector<Index>& v) {
    json a = json::array();
    for (Index i : v) a.push_back(i);
    return a;
}

std::vector<Index> index_list_from(const json& j) {
    std::vector<Index> v;
    for (const auto& e : j) v.push_back(e.get<Index>());
    return v;
}

const char* kind_name(Provenance::Kind k) {
    return k == Provenance::Kind::Standard ? "standard" : "common-basis";
}

}  // namespace

json matrix_to_json(const Matrix& A) {
    json data = json::array();
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j) data.push_back(A(i, j));
    return {{"rows", A.rows()}, {"cols", A.cols()}, {"data", data}};
}

Matrix matrix_from_json(const json& j) {
    const Index r = j.at("rows").get<Index>();
    const Index c = j.at("cols").get<Index>();
    const json& data = j.at("data");
    if (static_cast<Index>(data.size()) != r * c) throw ConfigError("matrix payload has wrong entry count");
    Matrix A(r, c);
    Index k = 0;
    for (Index i = 0; i < r; ++i)
        for (Index jj = 0; jj < c; ++jj) A(i, jj) = data[static_cast<std::size_t>(k++)].get<double>();
    return A;
}

json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vector vector_from_json(const json& j) {
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
    return v;
}

json to_json(const ModelParams& p) {
    return {{"names", p.names}, {"units", p.units}, {"values", vector_to_json(p.values)}};
}

ModelParams model_params_from_json(const json& j) {
    ModelParams p;
    p.names = j.at("names").get<std::vector<std::string>>();
    p.units = j.at("units").get<std::vector<std::string>>();
    p.values = vector_from_json(j.at("values"));
    return p;
}

json to_json(const ParameterSpace& s) {
    return {{"names", s.names()}, {"lo", vector_to_json(s.lo())}, {"hi", vector_to_json(s.hi())}};
}

ParameterSpace parameter_space_from_json(const json& j) {
    return ParameterSpace(j.at("names").get<std::vector<std::string>>(), vector_from_json(j.at("lo")),
                          vector_from_json(j.at("hi")));
}

json to_json(const Substructure& s) {
    return {{"n_dofs", s.n_dofs()},
            {"interface_dofs", index_list(s.interface_dofs)},
            {"internal_dofs", index_list(s.internal_dofs)},
            {"M", matrix_to_json(s.M)},
            {"K", matrix_to_json(s.K)},
            {"F", vector_to_json(s.F)},
            {"params", to_json(s.params)}};
}

Substructure substructure_from_json(const json& j) {
    Substructure s;
    s.M = matrix_from_json(j.at("M"));
    s.K = matrix_from_json(j.at("K"));
    s.F = vector_from_json(j.at("F"));
    s.interface_dofs = index_list_from(j.at("interface_dofs"));
    s.internal_dofs = index_list_from(j.at("internal_dofs"));
    s.params = model_params_from_json(j.at("params"));
    validate(s);
    return s;
}

json to_json(const CBReduced& cb) {
    return {{"r", cb.r()},
            {"n_interface", cb.n_interface},
            {"q", cb.q},
            {"Mhat", matrix_to_json(cb.Mhat)},
            {"Khat", matrix_to_json(cb.Khat)},
            {"Fhat", vector_to_json(cb.Fhat)},
            {"provenance",
             {{"kind", kind_name(cb.provenance.kind)},
              {"theta_p", vector_to_json(cb.provenance.theta_p)},
              {"theta_o", vector_to_json(cb.provenance.theta_o)},
              {"region_id", cb.provenance.region_id}}}};
}

CBReduced cb_reduced_from_json(const json& j) {
    CBReduced cb;
    cb.n_interface = j.at("n_interface").get<Index>();
    cb.q = j.at("q").get<Index>();
    cb.Mhat = matrix_from_json(j.at("Mhat"));
    cb.Khat = matrix_from_json(j.at("Khat"));
    cb.Fhat = vector_from_json(j.at("Fhat"));
    const json& p = j.at("provenance");
    cb.provenance.kind = p.at("kind").get<std::string>() == "standard" ? Provenance::Kind::Standard
                                                                       : Provenance::Kind::CommonBasis;
    cb.provenance.theta_p = vector_from_json(p.at("theta_p"));
    cb.provenance.theta_o = vector_from_json(p.at("theta_o"));
    cb.provenance.region_id = p.at("region_id").get<int>();
    return cb;
}

json to_json(const CommonBasis& b) {
    return {{"theta_o", vector_to_json(b.theta_o)},
            {"q", b.q},
            {"R", matrix_to_json(b.R)},
            {"eigenvalues", vector_to_json(b.source_modes.values)},
            {"modes", matrix_to_json(b.source_modes.vectors)}};
}

CommonBasis common_basis_from_json(const json& j) {
    CommonBasis b;
    b.theta_o = vector_from_json(j.at("theta_o"));
    b.q = j.at("q").get<Index>();
    b.R = matrix_from_json(j.at("R"));
    b.source_modes.values = vector_from_json(j.at("eigenvalues"));
    b.source_modes.vectors = matrix_from_json(j.at("modes"));
    return b;
}

json to_json(const ProjectionDiagnostics& d) {
    return {{"rank", d.rank},        {"q", d.q},
            {"rcond", d.rcond},      {"det_sign", d.det_sign},
            {"logdet", number(d.logdet)}, {"well_conditioned", d.well_conditioned}};
}

json to_json(const SvmModel& m) {
    return {{"kernel", "rbf"},
            {"gamma", m.gamma},
            {"C", m.C},
            {"bias", m.bias},
            {"iterations", m.iterations},
            {"support_vectors", matrix_to_json(m.support_vectors)},
            {"alphas", vector_to_json(m.alphas)}};
}

SvmModel svm_model_from_json(const json& j) {
    SvmModel m;
    m.gamma = j.at("gamma").get<double>();
    m.C = j.at("C").get<double>();
    m.bias = j.at("bias").get<double>();
    m.iterations = j.value("iterations", 0L);
    m.support_vectors = matrix_from_json(j.at("support_vectors"));
    m.alphas = vector_from_json(j.at("alphas"));
    return m;
}

json to_json(const MulticlassSvm& m) {
    json pairs = json::array();
    for (const auto& p : m.pairs) {
        pairs.push_back({{"positive", p.positive}, {"negative", p.negative}, {"model", to_json(p.model)}});
    }
    return {{"space", to_json(m.space)}, {"region_ids", m.region_ids}, {"pairs", pairs}};
}

MulticlassSvm multiclass_svm_from_json(const json& j) {
    MulticlassSvm m;
    m.space = parameter_space_from_json(j.at("space"));
    m.region_ids = j.at("region_ids").get<std::vector<int>>();
    for (const auto& p : j.at("pairs")) {
        m.pairs.push_back({p.at("positive").get<int>(), p.at("negative").get<int>(),
                           svm_model_from_json(p.at("model"))});
    }
    return m;
}

json to_json(const PcaModel& m) {
    return {{"u", m.u},
            {"mean", vector_to_json(m.mean)},
            {"Q", matrix_to_json(m.Q)},
            {"singular_values", vector_to_json(m.singular_values)}};
}

PcaModel pca_model_from_json(const json& j) {
    PcaModel m;
    m.u = j.at("u").get<Index>();
    m.mean = vector_from_json(j.at("mean"));
    m.Q = matrix_from_json(j.at("Q"));
    m.singular_values = vector_from_json(j.at("singular_values"));
    return m;
}

json to_json(const KrigingModel& m) {
    json outs = json::array();
    for (const auto& o : m.outputs) {
        outs.push_back({{"constant", o.constant},
                        {"beta", o.beta},
                        {"sigma2", o.sigma2},
                        {"neg_log_likelihood", number(o.neg_log_likelihood)},
                        {"log10_theta", vector_to_json(o.log10_theta)},
                        {"gamma", vector_to_json(o.gamma)}});
    }
    return {{"trend", "constant"},
            {"correlation", "gaussian"},
            {"nugget", m.nugget},
            {"X", matrix_to_json(m.X)},
            {"outputs", outs}};
}

KrigingModel kriging_model_from_json(const json& j) {
    KrigingModel m;
    m.nugget = j.at("nugget").get<double>();
    m.X = matrix_from_json(j.at("X"));
    for (const auto& o : j.at("outputs")) {
        KrigingOutput k;
        k.constant = o.at("constant").get<bool>();
        k.beta = o.at("beta").get<double>();
        k.sigma2 = o.at("sigma2").get<double>();
        k.neg_log_likelihood = number_from(o.at("neg_log_likelihood"));
        k.log10_theta = vector_from_json(o.at("log10_theta"));
        k.gamma = vector_from_json(o.at("gamma"));
        m.outputs.push_back(std::move(k));
    }
    return m;
}

json to_json(const MultiRegionSurrogate& m) {
    json regions = json::array();
    for (const auto& r : m.regions) {
        regions.push_back({{"region_id", r.region_id},
                           {"n_train", r.n_train},
                           {"data_hash", r.data_hash},
                           {"max_reconstruction_percent", number(r.max_reconstruction_percent)},
                           {"loo_median_percent", number(r.loo_median_percent)},
                           {"loo_latent_median_percent", number(r.loo_latent_median_percent)},
                           {"basis", to_json(r.basis)},
                           {"pca", to_json(r.pca)},
                           {"kriging", to_json(r.kriging)}});
    }
    return {{"space", to_json(m.space)},
            {"n_interface", m.n_interface},
            {"q", m.q},
            {"include_damping", m.include_damping},
            {"regions", regions},
            {"router", to_json(m.router)}};
}

MultiRegionSurrogate surrogate_from_json(const json& j) {
    MultiRegionSurrogate m;
    m.space = parameter_space_from_json(j.at("space"));
    m.n_interface = j.at("n_interface").get<Index>();
    m.q = j.at("q").get<Index>();
    m.include_damping = j.at("include_damping").get<bool>();
    for (const auto& r : j.at("regions")) {
        RegionModel rm;
        rm.region_id = r.at("region_id").get<int>();
        rm.n_train = r.at("n_train").get<Index>();
        rm.data_hash = r.at("data_hash").get<std::string>();
        rm.max_reconstruction_percent = number_from(r.at("max_reconstruction_percent"));
        rm.loo_median_percent = number_from(r.at("loo_median_percent"));
        rm.loo_latent_median_percent = number_from(r.at("loo_latent_median_percent"));
        rm.basis = common_basis_from_json(r.at("basis"));
        rm.pca = pca_model_from_json(r.at("pca"));
        rm.kriging = kriging_model_from_json(r.at("kriging"));
        m.regions.push_back(std::move(rm));
    }
    m.router = multiclass_svm_from_json(j.at("router"));
    return m;
}

json to_json(const AssemblyPlan& p) {
    json cells = json::array();
    for (const auto& c : p.cells) cells.push_back(to_json(c));
    json conn = json::array();
    for (const auto& m : p.connectivity) conn.push_back(index_list(m));
    json load = json::array();
    for (const auto& [dof, v] : p.load) load.push_back({{"dof", dof}, {"re", v.real()}, {"im", v.imag()}});
    return {{"cells", cells}, {"connectivity", conn}, {"fixed_dofs", index_list(p.fixed_dofs)}, {"load", load}};
}

AssemblyPlan assembly_plan_from_json(const json& j) {
    AssemblyPlan p;
    for (const auto& c : j.at("cells")) p.cells.push_back(cb_reduced_from_json(c));
    for (const auto& m : j.at("connectivity")) p.connectivity.push_back(index_list_from(m));
    p.fixed_dofs = index_list_from(j.at("fixed_dofs"));
    for (const auto& l : j.at("load")) {
        p.load.emplace_back(l.at("dof").get<Index>(), Complex(l.at("re").get<double>(), l.at("im").get<double>()));
    }
    return p;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw DimensionError("CsvTable: row width differs from header");
    rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
    std::ostringstream os;
    auto line = [&os](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return os.str();
}

void CsvTable::write(const std::string& path) const { write_text_file(path, str()); }

std::vector<std::vector<std::string>> read_csv(const std::string& path, std::vector<std::string>* header) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV file '" + path + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            if (header) *header = cells;
            first = false;
        } else {
            rows.push_back(std::move(cells));
        }
    }
    return rows;
}

void write_frf_csv(const std::string& path, const FrfResult& frf) {
    CsvTable t({"frequency_hz", "real", "imag", "magnitude", "metric"});
    for (std::size_t k = 0; k < frf.frequencies_hz.size(); ++k) {
        const Complex z = frf.response[k];
        t.add_row({format_double(frf.frequencies_hz[k]), format_double(z.real()), format_double(z.imag()),
                   format_double(std::abs(z)), metric_name(frf.metric)});
    }
    t.write(path);
}

FrfResult read_frf_csv(const std::string& path) {
    std::vector<std::string> header;
    const auto rows = read_csv(path, &header);
    const std::vector<std::string> expected = {"frequency_hz", "real", "imag", "magnitude", "metric"};
    if (header != expected) throw ConfigError("'" + path + "' is not an FRF CSV");
    FrfResult frf;
    for (const auto& r : rows) {
        if (r.size() != expected.size()) throw ConfigError("'" + path + "': malformed FRF row");
        frf.frequencies_hz.push_back(std::stod(r[0]));
        frf.response.emplace_back(std::stod(r[1]), std::stod(r[2]));
        const std::string& m = r[4];
        frf.metric = m == "transmissibility" ? FrfMetric::Transmissibility
                     : m == "deflection"     ? FrfMetric::Deflection
                                             : FrfMetric::QuadraticVelocity;
    }
    return frf;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open JSON file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(1) + "\n"); }

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

}  // namespace cbmorph
