#include "cbmorph/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <sstream>

#include "cbmorph/errors.hpp"
#include "cbmorph/parallel.hpp"

namespace cbmorph {

Index feature_length(Index r, bool with_damping) {
    return (2 * r + 1) * r + (with_damping ? r * r : 0);
}

Vector features_from_cb(const CBReduced& cb, const Matrix* damping) {
    const Index r = cb.r();
    if (cb.Mhat.rows() != r || cb.Khat.rows() != r || cb.Fhat.size() != r) {
        throw DimensionError("features_from_cb: reduced matrices do not match r");
    }
    Vector X(feature_length(r, damping != nullptr));
    Index k = 0;
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < r; ++j) X(k++) = cb.Mhat(i, j);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < r; ++j) X(k++) = cb.Khat(i, j);
    for (Index i = 0; i < r; ++i) X(k++) = cb.Fhat(i);
    if (damping != nullptr) {
        if (damping->rows() != r || damping->cols() != r) throw DimensionError("features_from_cb: damping block size");
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < r; ++j) X(k++) = (*damping)(i, j);
    }
    return X;
}

CBReduced cb_from_features(const Vector& X, Index n_interface, Index q, Matrix* damping) {
    const Index r = n_interface + q;
    const bool has_damping = X.size() == feature_length(r, true);
    if (!has_damping && X.size() != feature_length(r, false)) {
        std::ostringstream os;
        os << "cb_from_features: length " << X.size() << " does not match r = " << r;
        throw DimensionError(os.str());
    }
    CBReduced cb;
    cb.n_interface = n_interface;
    cb.q = q;
    cb.Mhat.resize(r, r);
    cb.Khat.resize(r, r);
    cb.Fhat.resize(r);
    Index k = 0;
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < r; ++j) cb.Mhat(i, j) = X(k++);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < r; ++j) cb.Khat(i, j) = X(k++);
    for (Index i = 0; i < r; ++i) cb.Fhat(i) = X(k++);
    if (has_damping && damping != nullptr) {
        damping->resize(r, r);
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < r; ++j) (*damping)(i, j) = X(k++);
    }
    return cb;
}

// ---------------------------------------------------------------------------

PcaModel pca_fit(const Matrix& X, Index u) {
    const Index k = X.rows();
    if (k < 2) throw InsufficientDataError("pca_fit: need at least 2 samples");
    PcaModel model;
    model.mean = X.colwise().mean().transpose();
    const Matrix centered = X.rowwise() - model.mean.transpose();
    const SvdResult s = svd(centered);
    const Index max_u = s.singular_values.size();
    if (u < 1 || u > max_u) {
        std::ostringstream os;
        os << "pca_fit: latent dimension " << u << " outside [1, " << max_u << "]";
        throw DimensionError(os.str());
    }
    model.singular_values = s.singular_values;
    model.Q = s.V.leftCols(u);
    model.u = u;
    return model;
}

Vector pca_project(const PcaModel& model, const Vector& x) {
    if (x.size() != model.mean.size()) throw DimensionError("pca_project: feature length mismatch");
    return model.Q.transpose() * (x - model.mean);
}

Vector pca_reconstruct(const PcaModel& model, const Vector& y) {
    if (y.size() != model.u) throw DimensionError("pca_reconstruct: latent length mismatch");
    return model.mean + model.Q * y;
}

Matrix pca_project_rows(const PcaModel& model, const Matrix& X) {
    return (X.rowwise() - model.mean.transpose()) * model.Q;
}

// ---------------------------------------------------------------------------

Vector free_free_frequencies(const Matrix& M, const Matrix& K) {
    const Matrix Ms = symmetrized(M);
    Eigen::LLT<Matrix> llt(Ms);
    if (llt.info() != Eigen::Success) {
        throw ReconstructionDefectError("reduced mass matrix is not positive definite");
    }
    const EigenPairs ep = sym_generalized_eig(symmetrized(K), Ms, Ms.rows());
    constexpr double two_pi = 6.283185307179586;
    return ep.values.unaryExpr([](double l) { return std::sqrt(std::max(l, 0.0)) / two_pi; });
}

double reconstruction_error(const CBReduced& original, const CBReduced& reconstructed,
                            Index n_highest) {
    const Vector f = free_free_frequencies(original.Mhat, original.Khat);
    const Vector fh = free_free_frequencies(reconstructed.Mhat, reconstructed.Khat);
    if (f.size() != fh.size()) throw DimensionError("reconstruction_error: size mismatch");
    const Index m = std::min(n_highest, f.size());
    double worst = 0.0;
    for (Index i = f.size() - m; i < f.size(); ++i) {
        if (f(i) <= 0.0) continue;
        worst = std::max(worst, std::abs(f(i) - fh(i)) / f(i) * 100.0);
    }
    return worst;
}

namespace {

double row_error_or_inf(const Vector& truth, const Vector& approx, Index ni, Index q) {
    try {
        return reconstruction_error(cb_from_features(truth, ni, q), cb_from_features(approx, ni, q));
    } catch (const ReconstructionDefectError&) {
        return std::numeric_limits<double>::infinity();
    }
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

PcaModel pca_fit_threshold(const Matrix& X, double threshold_percent, Index n_interface, Index q,
                           double* achieved_percent) {
    PcaModel full = pca_fit(X, 1);
    const Index max_u = std::min<Index>(X.rows() - 1, X.cols());
    const Matrix centered = X.rowwise() - full.mean.transpose();
    const SvdResult s = svd(centered);
    double err = std::numeric_limits<double>::infinity();
    Index u = 1;
    for (; u <= max_u; ++u) {
        const Matrix Q = s.V.leftCols(u);
        const Matrix recon = (centered * Q * Q.transpose()).rowwise() + full.mean.transpose();
        err = 0.0;
        for (Index i = 0; i < X.rows() && err < threshold_percent; ++i) {
            err = std::max(err, row_error_or_inf(X.row(i).transpose(), recon.row(i).transpose(),
                                                 n_interface, q));
        }
        if (err < threshold_percent) break;
    }
    u = std::min(u, max_u);
    PcaModel model;
    model.mean = full.mean;
    model.singular_values = s.singular_values;
    model.Q = s.V.leftCols(u);
    model.u = u;
    if (achieved_percent != nullptr) *achieved_percent = err;
    return model;
}

LooResult loo_validate(const KrigingModel& kriging, const Matrix& latent, const Matrix& features,
                       const PcaModel& pca, Index n_interface, Index q) {
    const Index n = latent.rows();
    if (n < 3) throw InsufficientDataError("loo_validate: need at least 3 samples");
    const Matrix loo = kriging_loo_predictions(kriging, latent);
    LooResult out;
    for (Index i = 0; i < n; ++i) {
        const Vector y = latent.row(i).transpose();
        const Vector yl = loo.row(i).transpose();
        const double ny = y.norm();
        out.per_sample_latent_percent.push_back(ny > 0.0 ? (yl - y).norm() / ny * 100.0 : 0.0);
        out.per_sample_percent.push_back(row_error_or_inf(features.row(i).transpose(),
                                                          pca_reconstruct(pca, yl), n_interface, q));
    }
    out.median_percent = median(out.per_sample_percent);
    out.latent_median_percent = median(out.per_sample_latent_percent);
    return out;
}

// ---------------------------------------------------------------------------

std::array<double, 3> gauss_nodes(double h, double P) {
    const double s = std::sqrt(5.0 / 3.0) * P;
    return {h * (1.0 - s), h, h * (1.0 + s)};
}

std::vector<Vector> lagrange_grid_points(const Vector& h, double P) {
    const Index d = h.size();
    std::vector<std::array<double, 3>> nodes;
    for (Index k = 0; k < d; ++k) nodes.push_back(gauss_nodes(h(k), P));
    Index total = 1;
    for (Index k = 0; k < d; ++k) total *= 3;
    std::vector<Vector> pts;
    for (Index flat = 0; flat < total; ++flat) {
        Vector p(d);
        Index rem = flat;
        for (Index k = d - 1; k >= 0; --k) {
            p(k) = nodes[static_cast<std::size_t>(k)][static_cast<std::size_t>(rem % 3)];
            rem /= 3;
        }
        pts.push_back(p);
    }
    return pts;
}

LagrangeResult lagrange_interpolate(const LagrangeSupport& support, const Vector& theta) {
    const Index d = static_cast<Index>(support.nodes.size());
    if (theta.size() != d) throw DimensionError("lagrange_interpolate: theta dimension mismatch");
    Index total = 1;
    for (Index k = 0; k < d; ++k) total *= 3;
    if (static_cast<Index>(support.cells.size()) != total) {
        throw DimensionError("lagrange_interpolate: support is not a full 3^d grid");
    }
    LagrangeResult out;
    std::vector<std::array<double, 3>> w(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k) {
        const auto& x = support.nodes[static_cast<std::size_t>(k)];
        const double t = theta(k);
        if (t < x[0] || t > x[2]) out.extrapolated = true;
        for (int a = 0; a < 3; ++a) {
            double l = 1.0;
            for (int b = 0; b < 3; ++b) {
                if (b != a) l *= (t - x[static_cast<std::size_t>(b)]) / (x[static_cast<std::size_t>(a)] - x[static_cast<std::size_t>(b)]);
            }
            w[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] = l;
        }
    }
    const CBReduced& first = support.cells.front();
    CBReduced& cb = out.cb;
    cb.n_interface = first.n_interface;
    cb.q = first.q;
    cb.Mhat = Matrix::Zero(first.r(), first.r());
    cb.Khat = Matrix::Zero(first.r(), first.r());
    cb.Fhat = Vector::Zero(first.r());
    for (Index flat = 0; flat < total; ++flat) {
        double weight = 1.0;
        Index rem = flat;
        for (Index k = d - 1; k >= 0; --k) {
            weight *= w[static_cast<std::size_t>(k)][static_cast<std::size_t>(rem % 3)];
            rem /= 3;
        }
        const CBReduced& c = support.cells[static_cast<std::size_t>(flat)];
        cb.Mhat += weight * c.Mhat;
        cb.Khat += weight * c.Khat;
        cb.Fhat += weight * c.Fhat;
    }
    cb.provenance = first.provenance;
    cb.provenance.theta_p = theta;
    return out;
}

LagrangeSupport build_lagrange_support(const SubstructureGenerator& generator, const Vector& h,
                                       double P, const CommonBasis& basis,
                                       const ProjectionSettings& settings) {
    LagrangeSupport support;
    for (Index k = 0; k < h.size(); ++k) support.nodes.push_back(gauss_nodes(h(k), P));
    for (const Vector& p : lagrange_grid_points(h, P)) {
        support.cells.push_back(cb_reduce_common(generator(p), basis, settings));
    }
    return support;
}

// ---------------------------------------------------------------------------

const RegionModel& MultiRegionSurrogate::region(int id) const {
    for (const auto& r : regions) {
        if (r.region_id == id) return r;
    }
    std::ostringstream os;
    os << "surrogate has no region " << id;
    throw DimensionError(os.str());
}

std::string matrix_digest(const Matrix& A) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    const std::int64_t dims[2] = {static_cast<std::int64_t>(A.rows()), static_cast<std::int64_t>(A.cols())};
    mix(dims, sizeof dims);
    for (Index i = 0; i < A.rows(); ++i) {
        for (Index j = 0; j < A.cols(); ++j) {
            const double v = A(i, j);
            mix(&v, sizeof v);
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

MultiRegionSurrogate train_surrogate(const RegionTagging& tagging,
                                     const SubstructureGenerator& generator,
                                     const ParameterSpace& space, const SurrogateTrainOptions& opts,
                                     std::vector<RegionTrainReport>* report) {
    const Index d = space.dim();
    const Index min_samples =
        opts.min_region_samples > 0 ? opts.min_region_samples : std::max<Index>(d + 2, 3);

    MultiRegionSurrogate model;
    model.space = space;
    model.include_damping = opts.include_damping;
    if (!tagging.references.empty()) model.q = tagging.references.front().basis.q;

    std::vector<Vector> router_thetas;
    std::vector<int> router_tags;

    for (const RegionReference& ref : tagging.references) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < tagging.region_of.size(); ++i) {
            if (tagging.region_of[i] == ref.region_id) members.push_back(i);
        }
        RegionTrainReport rep;
        rep.region_id = ref.region_id;
        rep.n_samples = static_cast<Index>(members.size());
        if (rep.n_samples < min_samples) {
            rep.excluded = true;
            rep.reason = "too few samples";
            if (report) report->push_back(rep);
            continue;
        }

        std::vector<CBReduced> cbs(members.size());
        parallel_for(members.size(), opts.threads, [&](std::size_t k) {
            cbs[k] = cb_reduce_common(generator(tagging.thetas[members[k]]), ref.basis, opts.projection);
        });
        model.n_interface = cbs.front().n_interface;

        const Index k = static_cast<Index>(members.size());
        Matrix X(k, feature_length(cbs.front().r(), opts.include_damping));
        Matrix inputs(k, d);
        for (Index i = 0; i < k; ++i) {
            const CBReduced& cb = cbs[static_cast<std::size_t>(i)];
            if (opts.include_damping) {
                const Matrix C = opts.damping_alpha * cb.Mhat + opts.damping_beta * cb.Khat;
                X.row(i) = features_from_cb(cb, &C).transpose();
            } else {
                X.row(i) = features_from_cb(cb).transpose();
            }
            inputs.row(i) = space.normalize(tagging.thetas[members[static_cast<std::size_t>(i)]]).transpose();
        }

        RegionModel rm;
        rm.region_id = ref.region_id;
        rm.basis = ref.basis;
        rm.n_train = k;
        rm.data_hash = matrix_digest(X);
        double achieved = 0.0;
        if (opts.pca.threshold_mode) {
            rm.pca = pca_fit_threshold(X, opts.pca.threshold_percent, model.n_interface, model.q, &achieved);
        } else {
            const Index u = std::min<Index>(opts.pca.u, std::min<Index>(k - 1, X.cols()));
            rm.pca = pca_fit(X, u);
        }
        const Matrix latent = pca_project_rows(rm.pca, X);
        KrigingOptions kopts = opts.kriging;
        kopts.threads = opts.threads;
        rm.kriging = kriging_fit(inputs, latent, kopts);

        double worst = 0.0;
        for (Index i = 0; i < k; ++i) {
            worst = std::max(worst, row_error_or_inf(X.row(i).transpose(),
                                                     pca_reconstruct(rm.pca, latent.row(i).transpose()),
                                                     model.n_interface, model.q));
        }
        rm.max_reconstruction_percent = worst;
        if (opts.compute_loo) {
            const LooResult loo = loo_validate(rm.kriging, latent, X, rm.pca, model.n_interface, model.q);
            rm.loo_median_percent = loo.median_percent;
            rm.loo_latent_median_percent = loo.latent_median_percent;
        }

        rep.u = rm.pca.u;
        rep.max_reconstruction_percent = rm.max_reconstruction_percent;
        rep.loo_median_percent = rm.loo_median_percent;
        rep.loo_latent_median_percent = rm.loo_latent_median_percent;
        if (report) report->push_back(rep);

        for (std::size_t i : members) {
            router_thetas.push_back(tagging.thetas[i]);
            router_tags.push_back(ref.region_id);
        }
        model.regions.push_back(std::move(rm));
    }
    if (model.regions.empty()) throw InsufficientDataError("train_surrogate: no region has enough samples");
    model.router = train_multiclass(router_thetas, router_tags, space, opts.svm);
    return model;
}

SurrogatePrediction predict_cb(const MultiRegionSurrogate& model, const Vector& theta) {
    const RegionPrediction route = predict_region(model.router, theta);
    const RegionModel& rm = model.region(route.region_id);
    const Vector y = kriging_predict(rm.kriging, model.space.normalize(theta));
    const Vector x = pca_reconstruct(rm.pca, y);

    SurrogatePrediction out;
    out.region_id = route.region_id;
    out.low_confidence = route.low_confidence;
    CBReduced cb = cb_from_features(x, model.n_interface, model.q);
    const Matrix Ms = symmetrized(cb.Mhat);
    const Matrix Ks = symmetrized(cb.Khat);
    auto rel_change = [](const Matrix& A, const Matrix& S) {
        const double scale = A.cwiseAbs().maxCoeff();
        return scale > 0.0 ? (A - S).cwiseAbs().maxCoeff() / scale : 0.0;
    };
    out.symmetrization_delta = std::max(rel_change(cb.Mhat, Ms), rel_change(cb.Khat, Ks));
    cb.Mhat = Ms;
    cb.Khat = Ks;
    cb.provenance.kind = Provenance::Kind::CommonBasis;
    cb.provenance.theta_p = theta;
    cb.provenance.theta_o = rm.basis.theta_o;
    cb.provenance.region_id = rm.region_id;
    out.cb = std::move(cb);
    return out;
}

}  // namespace cbmorph
