// Python view of the core: models, reductions, region tagging, surrogates
// and FRF sweeps. Matrices cross as NumPy arrays; trained models travel as
// JSON strings in the same layout the CLI writes.
#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cbmorph/assembly.hpp"
#include "cbmorph/common_projection.hpp"
#include "cbmorph/craig_bampton.hpp"
#include "cbmorph/errors.hpp"
#include "cbmorph/io.hpp"
#include "cbmorph/kriging.hpp"
#include "cbmorph/model.hpp"
#include "cbmorph/region.hpp"
#include "cbmorph/surrogate.hpp"
#include "cbmorph/svm.hpp"

namespace py = pybind11;
using namespace cbmorph;

namespace {

ProjectionSettings settings(double rank_tau, double rcond_threshold) {
    return ProjectionSettings{rank_tau, rcond_threshold};
}

std::vector<Vector> rows_of(const Matrix& X) {
    std::vector<Vector> out;
    for (Index i = 0; i < X.rows(); ++i) out.push_back(X.row(i).transpose());
    return out;
}

Matrix stack(const std::vector<Vector>& v) {
    Matrix X(static_cast<Index>(v.size()), v.empty() ? 0 : v.front().size());
    for (std::size_t i = 0; i < v.size(); ++i) X.row(static_cast<Index>(i)) = v[i].transpose();
    return X;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Parametric Craig-Bampton reduction with multi-region surrogates";

    // Errors map onto one base class plus the two families the CLI separates.
    static py::exception<Error> base(m, "CbmorphError");
    static py::exception<InputError> input(m, "InputError", base.ptr());
    static py::exception<NumericalError> numerical(m, "NumericalError", base.ptr());
    static py::exception<IllConditionedProjectionError> ill(m, "IllConditionedProjectionError", numerical.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const IllConditionedProjectionError& e) {
            py::set_error(ill, e.what());
        } catch (const InputError& e) {
            py::set_error(input, e.what());
        } catch (const NumericalError& e) {
            py::set_error(numerical, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    py::class_<ParameterSpace>(m, "ParameterSpace")
        .def(py::init<std::vector<std::string>, Vector, Vector>(), py::arg("names"), py::arg("lo"), py::arg("hi"))
        .def_property_readonly("names", &ParameterSpace::names)
        .def_property_readonly("lo", &ParameterSpace::lo)
        .def_property_readonly("hi", &ParameterSpace::hi)
        .def("normalize", &ParameterSpace::normalize)
        .def("denormalize", &ParameterSpace::denormalize);

    py::class_<Substructure>(m, "Substructure")
        .def_readonly("M", &Substructure::M)
        .def_readonly("K", &Substructure::K)
        .def_readonly("F", &Substructure::F)
        .def_readonly("interface_dofs", &Substructure::interface_dofs)
        .def_readonly("internal_dofs", &Substructure::internal_dofs)
        .def_property_readonly("parameters", [](const Substructure& s) { return s.params.values; });

    py::class_<SubstructureGenerator>(m, "Generator")
        .def("__call__", [](const SubstructureGenerator& g, const Vector& theta) { return g(theta); });

    m.def("build_lattice", [](double m_kg, double k1, double k2) { return build_lattice(m_kg, k1, k2); },
          py::arg("m"), py::arg("k1"), py::arg("k2"), "Lattice cell; mass in kg, stiffnesses in N/m.");
    m.def("build_resonator_cell", [](double L, double W) { return build_resonator_cell(L, W); }, py::arg("L"),
          py::arg("W"));
    m.def("resonator_generator", []() { return resonator_generator(); });
    m.def("lattice_k2_generator", [](double m_kg, double k1) { return lattice_k2_generator(m_kg, k1); },
          py::arg("m"), py::arg("k1"));
    m.def("resonator_space", [](double rel) { return resonator_space(ResonatorCellConfig{}, rel); },
          py::arg("relative_range") = 0.5);

    m.def(
        "sym_generalized_eig",
        [](const Matrix& K, const Matrix& M, Index q) {
            const EigenPairs e = sym_generalized_eig(K, M, q);
            return py::make_tuple(e.values, e.vectors);
        },
        py::arg("K"), py::arg("M"), py::arg("q"), "Lowest q eigenpairs of K x = lambda M x, M-orthonormal.");
    m.def("numerical_rank", &numerical_rank, py::arg("A"), py::arg("tau") = 1e-8);

    py::class_<CBReduced>(m, "CBReduced")
        .def_readonly("Mhat", &CBReduced::Mhat)
        .def_readonly("Khat", &CBReduced::Khat)
        .def_readonly("Fhat", &CBReduced::Fhat)
        .def_readonly("n_interface", &CBReduced::n_interface)
        .def_readonly("q", &CBReduced::q)
        .def_property_readonly("region_id", [](const CBReduced& c) { return c.provenance.region_id; });

    py::class_<CommonBasis>(m, "CommonBasis")
        .def_readonly("theta_o", &CommonBasis::theta_o)
        .def_readonly("R", &CommonBasis::R)
        .def_readonly("q", &CommonBasis::q);

    py::class_<ProjectionDiagnostics>(m, "ProjectionDiagnostics")
        .def_readonly("rank", &ProjectionDiagnostics::rank)
        .def_readonly("q", &ProjectionDiagnostics::q)
        .def_readonly("rcond", &ProjectionDiagnostics::rcond)
        .def_readonly("logdet", &ProjectionDiagnostics::logdet)
        .def_readonly("det_sign", &ProjectionDiagnostics::det_sign)
        .def_readonly("well_conditioned", &ProjectionDiagnostics::well_conditioned);

    m.def("cb_reduce", py::overload_cast<const Substructure&, Index>(&cb_reduce), py::arg("sub"), py::arg("q"));
    m.def("common_basis", &common_basis, py::arg("reference"), py::arg("q"));
    m.def(
        "cb_reduce_common",
        [](const Substructure& s, const CommonBasis& b, double tau, double rc) {
            return cb_reduce_common(s, b, settings(tau, rc));
        },
        py::arg("sub"), py::arg("basis"), py::arg("rank_tau") = 1e-8, py::arg("rcond_threshold") = 1e-10);
    m.def(
        "projection_diagnostics",
        [](const Substructure& s, const CommonBasis& b, double tau, double rc) {
            const Partition p = partition(s);
            const EigenPairs e = fixed_interface_modes(p.Mjj, p.Kjj, b.q);
            return diagnostics(b, e.vectors, settings(tau, rc));
        },
        py::arg("sub"), py::arg("basis"), py::arg("rank_tau") = 1e-8, py::arg("rcond_threshold") = 1e-10);

    m.def(
        "latin_hypercube",
        [](Index n, const ParameterSpace& sp, std::uint64_t seed) { return stack(latin_hypercube(n, sp, seed)); },
        py::arg("n"), py::arg("space"), py::arg("seed"));

    py::class_<RegionTagging>(m, "RegionTagging")
        .def_property_readonly("thetas", [](const RegionTagging& t) { return stack(t.thetas); })
        .def_readonly("region_of", &RegionTagging::region_of)
        .def_property_readonly("m", &RegionTagging::m)
        .def_property_readonly("reference_thetas", [](const RegionTagging& t) {
            std::vector<Vector> v;
            for (const auto& r : t.references) v.push_back(r.theta);
            return stack(v);
        });

    m.def(
        "tag_regions",
        [](const Matrix& samples, const SubstructureGenerator& g, Index q, int threads) {
            py::gil_scoped_release release;
            return tag_regions(rows_of(samples), g, q, ProjectionSettings{}, threads);
        },
        py::arg("samples"), py::arg("generator"), py::arg("q"), py::arg("threads") = 1);

    py::class_<SvmParams>(m, "SvmParams")
        .def(py::init<>())
        .def_readwrite("C", &SvmParams::C)
        .def_readwrite("gamma", &SvmParams::gamma)
        .def_readwrite("tol", &SvmParams::tol);

    py::class_<RegionPrediction>(m, "RegionPrediction")
        .def_readonly("region_id", &RegionPrediction::region_id)
        .def_readonly("low_confidence", &RegionPrediction::low_confidence)
        .def_readonly("votes", &RegionPrediction::votes);

    py::class_<MulticlassSvm>(m, "Router")
        .def("predict", [](const MulticlassSvm& r, const Vector& theta) { return predict_region(r, theta); })
        .def_readonly("region_ids", &MulticlassSvm::region_ids)
        .def("to_json", [](const MulticlassSvm& r) { return to_json(r).dump(); })
        .def_static("from_json", [](const std::string& s) { return multiclass_svm_from_json(json::parse(s)); });

    m.def(
        "train_router",
        [](const Matrix& thetas, const std::vector<int>& tags, const ParameterSpace& sp, const SvmParams& p) {
            return train_multiclass(rows_of(thetas), tags, sp, p);
        },
        py::arg("thetas"), py::arg("tags"), py::arg("space"), py::arg("params") = SvmParams{});

    py::class_<KrigingModel>(m, "KrigingModel")
        .def("predict", [](const KrigingModel& k, const Vector& x) { return kriging_predict(k, x); })
        .def("variance", [](const KrigingModel& k, Index c, const Vector& x) { return kriging_variance(k, c, x); })
        .def("loo_predictions", [](const KrigingModel& k, const Matrix& Y) { return kriging_loo_predictions(k, Y); })
        .def_readonly("nugget", &KrigingModel::nugget);

    m.def(
        "kriging_fit",
        [](const Matrix& X, const Matrix& Y, double nugget, bool shared) {
            KrigingOptions o;
            o.nugget = nugget;
            o.shared_lengths = shared;
            return kriging_fit(X, Y, o);
        },
        py::arg("X"), py::arg("Y"), py::arg("nugget") = 1e-10, py::arg("shared_lengths") = false);

    py::class_<SurrogatePrediction>(m, "SurrogatePrediction")
        .def_readonly("cb", &SurrogatePrediction::cb)
        .def_readonly("region_id", &SurrogatePrediction::region_id)
        .def_readonly("low_confidence", &SurrogatePrediction::low_confidence);

    py::class_<MultiRegionSurrogate>(m, "Surrogate")
        .def("predict", [](const MultiRegionSurrogate& s, const Vector& theta) { return predict_cb(s, theta); })
        .def_property_readonly("region_ids",
                               [](const MultiRegionSurrogate& s) {
                                   std::vector<int> ids;
                                   for (const auto& r : s.regions) ids.push_back(r.region_id);
                                   return ids;
                               })
        .def_property_readonly("components",
                               [](const MultiRegionSurrogate& s) {
                                   std::vector<Index> u;
                                   for (const auto& r : s.regions) u.push_back(r.pca.u);
                                   return u;
                               })
        .def("to_json", [](const MultiRegionSurrogate& s) { return to_json(s).dump(); })
        .def_static("from_json", [](const std::string& s) { return surrogate_from_json(json::parse(s)); });

    m.def(
        "train_surrogate",
        [](const RegionTagging& t, const SubstructureGenerator& g, const ParameterSpace& sp,
           std::optional<Index> u, double threshold_percent, bool loo, int threads) {
            SurrogateTrainOptions o;
            o.pca.threshold_mode = !u.has_value();
            o.pca.threshold_percent = threshold_percent;
            if (u) o.pca.u = *u;
            o.compute_loo = loo;
            o.threads = threads;
            py::gil_scoped_release release;
            return train_surrogate(t, g, sp, o);
        },
        py::arg("tagging"), py::arg("generator"), py::arg("space"), py::arg("u") = py::none(),
        py::arg("threshold_percent") = 0.1, py::arg("loo") = true, py::arg("threads") = 1,
        "Per-region PCA + Kriging; u=None selects components by the reconstruction threshold.");

    m.def("reconstruction_error", &reconstruction_error, py::arg("original"), py::arg("reconstructed"),
          py::arg("n_highest") = 5);

    m.def(
        "chain_frf",
        [](const std::vector<CBReduced>& cells, const std::vector<double>& grid_hz, double alpha, double beta,
           const std::string& output) {
            AssemblyPlan p;
            p.cells = cells;
            p.connectivity = chain_connectivity(cells);
            const AssembledSystem sys = assemble(p);
            const Matrix C = proportional_damping(sys.M, sys.K, RayleighSpec{alpha, beta});
            if (output != "transmissibility") throw ParameterError("chain_frf: unsupported output '" + output + "'");
            const Index face = cells.front().n_interface / 2;
            std::vector<Index> base;
            for (Index l = 0; l < face; ++l) base.push_back(l);
            const Index tip = sys.n_interface_global - face;
            const FrfResult r = transmissibility_sweep(sys.M, sys.K, C, base, tip, grid_hz);
            return py::make_tuple(r.frequencies_hz, r.response);
        },
        py::arg("cells"), py::arg("grid_hz"), py::arg("alpha") = 0.0, py::arg("beta") = 0.0,
        py::arg("output") = "transmissibility",
        "Base-to-tip transmissibility of a chain of reduced cells; returns (frequencies, complex response).");

    m.def("linear_grid", &linear_grid, py::arg("f0"), py::arg("f1"), py::arg("n"));
}
