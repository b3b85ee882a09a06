#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "cbmorph/config.hpp"
#include "cbmorph/errors.hpp"
#include "cbmorph/io.hpp"

namespace {

using namespace cbmorph;
namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "cbmorph_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

TEST(FormatDouble, SeventeenDigitsRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::nextafter(1.0, 2.0)}) {
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(JsonRoundTrip, MatrixIsRowMajorAndExact) {
    Matrix A(2, 3);
    A << 1.0, 2.0, 3.0, 4.0, 5.0, 1.0 / 7.0;
    const json j = matrix_to_json(A);
    EXPECT_EQ(j.at("rows"), 2);
    EXPECT_EQ(j.at("data")[1].get<double>(), 2.0);
    EXPECT_TRUE(bit_equal(matrix_from_json(json::parse(j.dump())), A));
    EXPECT_TRUE(bit_equal(matrix_from_json(matrix_to_json(Matrix(0, 4))), Matrix(0, 4)));
    json bad = j;
    bad["cols"] = 4;
    EXPECT_ANY_THROW(matrix_from_json(bad));
}

TEST(JsonRoundTrip, SubstructureAndReducedCell) {
    const Substructure s = build_resonator_cell(9.5, 42.0);
    const Substructure s2 = substructure_from_json(json::parse(to_json(s).dump()));
    EXPECT_TRUE(bit_equal(s2.K, s.K));
    EXPECT_TRUE(bit_equal(s2.M, s.M));
    EXPECT_EQ(s2.interface_dofs, s.interface_dofs);
    EXPECT_EQ(s2.params.names, s.params.names);

    const CommonBasis basis = common_basis(build_resonator_cell(10.0, 40.0), 4);
    const CBReduced cb = cb_reduce_common(s, basis);
    const CBReduced cb2 = cb_reduced_from_json(json::parse(to_json(cb).dump()));
    EXPECT_TRUE(bit_equal(cb2.Khat, cb.Khat));
    EXPECT_TRUE(bit_equal(cb2.Mhat, cb.Mhat));
    EXPECT_EQ(cb2.provenance.kind, Provenance::Kind::CommonBasis);
    EXPECT_TRUE(bit_equal(cb2.provenance.theta_o, cb.provenance.theta_o));

    const CommonBasis b2 = common_basis_from_json(json::parse(to_json(basis).dump()));
    EXPECT_TRUE(bit_equal(b2.R, basis.R));
}

TEST(JsonRoundTrip, SurrogatePredictsIdentically) {
    const ParameterSpace sp = resonator_space(ResonatorCellConfig{}, 0.5);
    const RegionTagging t = tag_regions(latin_hypercube(40, sp, 2), resonator_generator(), 4);
    const MultiRegionSurrogate m = train_surrogate(t, resonator_generator(), sp, SurrogateTrainOptions{});
    const fs::path path = scratch("surrogate.json");
    write_json_file(path.string(), to_json(m));
    const MultiRegionSurrogate m2 = surrogate_from_json(read_json_file(path.string()));
    ASSERT_EQ(m2.regions.size(), m.regions.size());
    for (const Vector& theta : latin_hypercube(10, sp, 99)) {
        const SurrogatePrediction a = predict_cb(m, theta), b = predict_cb(m2, theta);
        EXPECT_EQ(a.region_id, b.region_id);
        EXPECT_TRUE(bit_equal(a.cb.Khat, b.cb.Khat));
        EXPECT_TRUE(bit_equal(a.cb.Mhat, b.cb.Mhat));
    }
    EXPECT_EQ(to_json(m2).dump(), to_json(m).dump());
}

TEST(JsonRoundTrip, RouterVotesSurvive) {
    const ParameterSpace sp({"x"}, Vector::Constant(1, 0.0), Vector::Constant(1, 1.0));
    std::vector<Vector> th;
    std::vector<int> tags;
    for (int i = 0; i < 12; ++i) {
        th.push_back(Vector::Constant(1, (i + 0.5) / 12.0));
        tags.push_back(1 + i / 4);
    }
    const MulticlassSvm r = train_multiclass(th, tags, sp);
    const MulticlassSvm r2 = multiclass_svm_from_json(json::parse(to_json(r).dump()));
    EXPECT_EQ(r2.region_ids, r.region_ids);
    for (int k = 0; k <= 50; ++k) {
        const Vector x = Vector::Constant(1, k / 50.0);
        EXPECT_EQ(predict_region(r2, x).region_id, predict_region(r, x).region_id);
    }
}

TEST(Csv, TableLayoutAndWidthCheck) {
    CsvTable t({"a", "b"});
    t.add_row({"1", "x"});
    EXPECT_EQ(t.str(), "a,b\n1,x\n");
    EXPECT_THROW(t.add_row({"1"}), DimensionError);
    const fs::path path = scratch("table.csv");
    t.write(path.string());
    std::vector<std::string> header;
    const auto rows = read_csv(path.string(), &header);
    EXPECT_EQ(header, (std::vector<std::string>{"a", "b"}));
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0][1], "x");
}

TEST(Csv, FrfRoundTripIsExact) {
    FrfResult f;
    f.metric = FrfMetric::Transmissibility;
    f.frequencies_hz = {1.0, 2.5, 1.0 / 3.0};
    f.response = {{0.1, -0.2}, {1e-12, 3.0}, {-7.0, 0.0}};
    const fs::path path = scratch("frf.csv");
    write_frf_csv(path.string(), f);
    const FrfResult g = read_frf_csv(path.string());
    EXPECT_EQ(g.frequencies_hz, f.frequencies_hz);
    EXPECT_EQ(g.response, f.response);
    EXPECT_EQ(g.metric, f.metric);
    CsvTable other({"x"});
    other.write(path.string());
    EXPECT_THROW(read_frf_csv(path.string()), ConfigError);
}

TEST(Config, UnknownKeysAreRejected) {
    EXPECT_THROW(parse_rank_scan(json{{"q_max", 10}, {"qmax", 10}}), ConfigError);
    EXPECT_THROW(parse_detect(json{{"model", {{"preset", "resonator"}, {"k2_kN_per_mm", 1.0}}}}), ConfigError);
    EXPECT_THROW(parse_detect(json{{"svm", {{"C", 1.0}, {"kernel", "rbf"}}}}), ConfigError);
    EXPECT_THROW(parse_perturbation_scan(json{{"points", "many"}}), ConfigError);
    EXPECT_THROW(parse_compare(json{{"reference", "a.csv"}, {"candidates", json::array()}, {"x", 1}}, "."),
                 ConfigError);
    try {
        parse_rank_scan(json{{"model", {{"preset", "lattice"}, {"m", 5}}}});
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("model.m"), std::string::npos);
    }
}

TEST(Config, ShippedConfigsParse) {
    const fs::path dir = fs::path(CBMORPH_SOURCE_DIR) / "configs";
    EXPECT_NO_THROW(parse_rank_scan(read_json_file((dir / "rank_scan.json").string())));
    EXPECT_NO_THROW(parse_perturbation_scan(read_json_file((dir / "perturbation_scan.json").string())));
    const DetectConfig d = parse_detect(read_json_file((dir / "detect_regions_resonator.json").string()));
    EXPECT_EQ(d.samples, 1000);
    EXPECT_EQ(d.mode, DetectConfig::Mode::Multi);
    EXPECT_NO_THROW(parse_train(read_json_file((dir / "train_resonator.json").string()), dir.string()));
    EXPECT_NO_THROW(parse_predict(read_json_file((dir / "predict_frf_resonator_10.json").string()), dir.string()));
}

TEST(Config, ModelSpecRoundTrip) {
    ModelSpec m;
    m.preset = ModelSpec::Preset::Resonator;
    m.resonator.rel_range = 0.3;
    const ModelSpec m2 = model_spec_from_json(json::parse(to_json(m).dump()));
    EXPECT_EQ(m2.preset, m.preset);
    EXPECT_EQ(m2.resonator.rel_range, 0.3);
    EXPECT_EQ(to_json(m2).dump(), to_json(m).dump());
}

}  // namespace
