#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cbmorph/assembly.hpp"
#include "cbmorph/common_projection.hpp"
#include "cbmorph/craig_bampton.hpp"
#include "cbmorph/kriging.hpp"
#include "cbmorph/model.hpp"
#include "cbmorph/region.hpp"
#include "cbmorph/surrogate.hpp"
#include "cbmorph/svm.hpp"

namespace cbmorph {

using json = nlohmann::json;

// Dense payloads are {"rows", "cols", "data"} with data in row-major order.
json matrix_to_json(const Matrix& A);
Matrix matrix_from_json(const json& j);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);

json to_json(const ModelParams& p);
ModelParams model_params_from_json(const json& j);
json to_json(const ParameterSpace& s);
ParameterSpace parameter_space_from_json(const json& j);
json to_json(const Substructure& s);
Substructure substructure_from_json(const json& j);
json to_json(const CBReduced& cb);
CBReduced cb_reduced_from_json(const json& j);
json to_json(const CommonBasis& b);
CommonBasis common_basis_from_json(const json& j);
json to_json(const ProjectionDiagnostics& d);
json to_json(const SvmModel& m);
SvmModel svm_model_from_json(const json& j);
json to_json(const MulticlassSvm& m);
MulticlassSvm multiclass_svm_from_json(const json& j);
json to_json(const PcaModel& m);
PcaModel pca_model_from_json(const json& j);
json to_json(const KrigingModel& m);
KrigingModel kriging_model_from_json(const json& j);
json to_json(const MultiRegionSurrogate& m);
MultiRegionSurrogate surrogate_from_json(const json& j);
json to_json(const AssemblyPlan& p);
AssemblyPlan assembly_plan_from_json(const json& j);

/// Doubles with 17 significant digits.
std::string format_double(double v);

/// Comma-separated table written in one go.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    void add_row(std::vector<std::string> cells);
    std::string str() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::vector<std::vector<std::string>> read_csv(const std::string& path, std::vector<std::string>* header);

void write_frf_csv(const std::string& path, const FrfResult& frf);
FrfResult read_frf_csv(const std::string& path);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace cbmorph
