#include "cbmorph/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cbmorph/errors.hpp"
#include "cbmorph/parallel.hpp"

namespace cbmorph {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Squared coordinate differences per input dimension, reused by every
// likelihood evaluation.
struct PairwiseDiffs {
    std::vector<Matrix> sq;

    explicit PairwiseDiffs(const Matrix& X) {
        const Index n = X.rows();
        sq.resize(static_cast<std::size_t>(X.cols()));
        for (Index k = 0; k < X.cols(); ++k) {
            Matrix& D = sq[static_cast<std::size_t>(k)];
            D.resize(n, n);
            for (Index j = 0; j < n; ++j) {
                for (Index i = 0; i < n; ++i) {
                    const double dx = X(i, k) - X(j, k);
                    D(i, j) = dx * dx;
                }
            }
        }
    }

    Matrix correlation(const Vector& log10_theta, double nugget) const {
        const Index n = sq.front().rows();
        Matrix E = Matrix::Zero(n, n);
        for (std::size_t k = 0; k < sq.size(); ++k) {
            E.noalias() -= std::pow(10.0, log10_theta(static_cast<Index>(k))) * sq[k];
        }
        Matrix R = E.array().exp().matrix();
        R.diagonal().array() += nugget;
        return R;
    }
};

struct Fitted {
    double beta = 0.0;
    Vector gamma;
    double sigma2 = 0.0;
    double nll = kInf;
};

// Concentrated likelihood pieces for each column of Y given one factorization.
bool fit_columns(const Eigen::LLT<Matrix>& llt, const Matrix& Y, std::vector<Fitted>& out) {
    const Index n = Y.rows();
    const Vector ones = Vector::Ones(n);
    const Vector Rinv1 = llt.solve(ones);
    const double denom = ones.dot(Rinv1);
    if (!(denom > 0.0)) return false;
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    out.resize(static_cast<std::size_t>(Y.cols()));
    for (Index c = 0; c < Y.cols(); ++c) {
        const Vector RinvY = llt.solve(Y.col(c));
        Fitted& f = out[static_cast<std::size_t>(c)];
        f.beta = ones.dot(RinvY) / denom;
        f.gamma = RinvY - f.beta * Rinv1;
        f.sigma2 = (Y.col(c) - f.beta * ones).dot(f.gamma) / static_cast<double>(n);
        f.nll = f.sigma2 > 0.0 ? static_cast<double>(n) * std::log(f.sigma2) + logdet : -kInf;
        if (!std::isfinite(f.beta)) return false;
    }
    return true;
}

double objective(const PairwiseDiffs& diffs, const Matrix& Y, const Vector& lt, double nugget) {
    Eigen::LLT<Matrix> llt(diffs.correlation(lt, nugget));
    if (llt.info() != Eigen::Success) return kInf;
    std::vector<Fitted> f;
    if (!fit_columns(llt, Y, f)) return kInf;
    double total = 0.0;
    for (const auto& c : f) total += c.nll;
    return std::isnan(total) ? kInf : total;
}

// Multi-start coordinate search over log10 theta in a box.
Vector coordinate_search(const PairwiseDiffs& diffs, const Matrix& Y, Index d,
                         const KrigingOptions& opts) {
    Vector best_x = Vector::Constant(d, opts.starts.empty() ? 0.0 : opts.starts.front());
    double best_f = kInf;
    for (double s0 : opts.starts) {
        Vector x = Vector::Constant(d, std::clamp(s0, opts.log10_lo, opts.log10_hi));
        double fx = objective(diffs, Y, x, opts.nugget);
        double step = opts.initial_step;
        while (step >= opts.min_step) {
            bool improved = false;
            for (Index k = 0; k < d; ++k) {
                for (double dir : {-1.0, 1.0}) {
                    Vector trial = x;
                    trial(k) = std::clamp(x(k) + dir * step, opts.log10_lo, opts.log10_hi);
                    if (trial(k) == x(k)) continue;
                    const double ft = objective(diffs, Y, trial, opts.nugget);
                    if (ft < fx) {
                        x = trial;
                        fx = ft;
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) step *= 0.5;
        }
        if (fx < best_f) {
            best_f = fx;
            best_x = x;
        }
    }
    if (!std::isfinite(best_f)) {
        throw FitError("kriging_fit: correlation matrix not positive definite for any correlation length");
    }
    return best_x;
}

bool is_constant(const Eigen::Ref<const Vector>& y) {
    const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
    return y.maxCoeff() - y.minCoeff() <= 1e-14 * scale;
}

}  // namespace

Matrix kriging_correlation(const Matrix& X, const Vector& log10_theta, double nugget) {
    return PairwiseDiffs(X).correlation(log10_theta, nugget);
}

KrigingModel kriging_fit(const Matrix& X, const Matrix& Y, const KrigingOptions& opts) {
    const Index n = X.rows();
    const Index d = X.cols();
    if (Y.rows() != n) throw DimensionError("kriging_fit: X and Y row counts differ");
    if (n < d + 2) {
        std::ostringstream os;
        os << "kriging_fit: need at least d+2 = " << d + 2 << " samples, got " << n;
        throw InsufficientDataError(os.str());
    }
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < i; ++j) {
            if ((X.row(i) - X.row(j)).norm() < 1e-12) {
                std::ostringstream os;
                os << "kriging_fit: inputs " << j << " and " << i << " coincide";
                throw DuplicateInputError(os.str());
            }
        }
    }

    const PairwiseDiffs diffs(X);
    KrigingModel model;
    model.X = X;
    model.nugget = opts.nugget;
    model.outputs.resize(static_cast<std::size_t>(Y.cols()));

    std::vector<Index> active;
    for (Index c = 0; c < Y.cols(); ++c) {
        KrigingOutput& o = model.outputs[static_cast<std::size_t>(c)];
        if (is_constant(Y.col(c))) {
            o.constant = true;
            o.beta = Y(0, c);
            o.gamma = Vector::Zero(n);
            o.log10_theta = Vector::Zero(d);
        } else {
            active.push_back(c);
        }
    }

    auto finalize = [&](Index c, const Vector& lt) {
        Eigen::LLT<Matrix> llt(diffs.correlation(lt, opts.nugget));
        if (llt.info() != Eigen::Success) throw FitError("kriging_fit: final correlation matrix not positive definite");
        std::vector<Fitted> f;
        fit_columns(llt, Y.col(c), f);
        KrigingOutput& o = model.outputs[static_cast<std::size_t>(c)];
        o.beta = f[0].beta;
        o.gamma = f[0].gamma;
        o.sigma2 = f[0].sigma2;
        o.neg_log_likelihood = f[0].nll;
        o.log10_theta = lt;
    };

    if (opts.shared_lengths && !active.empty()) {
        const Matrix Ya = Y(Eigen::all, active);
        const Vector lt = coordinate_search(diffs, Ya, d, opts);
        for (Index c : active) finalize(c, lt);
    } else {
        parallel_for(active.size(), opts.threads, [&](std::size_t k) {
            const Index c = active[k];
            const Vector lt = coordinate_search(diffs, Y.col(c), d, opts);
            finalize(c, lt);
        });
    }
    return model;
}

Vector kriging_predict(const KrigingModel& model, const Vector& x) {
    const Index n = model.X.rows();
    Vector out(model.n_outputs());
    // Correlation vectors are shared between outputs with equal parameters.
    const Vector* cached_theta = nullptr;
    Vector r(n);
    for (Index c = 0; c < model.n_outputs(); ++c) {
        const KrigingOutput& o = model.outputs[static_cast<std::size_t>(c)];
        if (o.constant) {
            out(c) = o.beta;
            continue;
        }
        if (cached_theta == nullptr || !(o.log10_theta.array() == cached_theta->array()).all()) {
            const Vector theta = o.log10_theta.unaryExpr([](double v) { return std::pow(10.0, v); });
            for (Index i = 0; i < n; ++i) {
                const Vector dx = model.X.row(i).transpose() - x;
                r(i) = std::exp(-(theta.array() * dx.array().square()).sum());
            }
            cached_theta = &o.log10_theta;
        }
        out(c) = o.beta + r.dot(o.gamma);
    }
    return out;
}

double kriging_variance(const KrigingModel& model, Index k, const Vector& x) {
    const KrigingOutput& o = model.outputs.at(static_cast<std::size_t>(k));
    if (o.constant) return 0.0;
    const Index n = model.X.rows();
    Eigen::LLT<Matrix> llt(kriging_correlation(model.X, o.log10_theta, model.nugget));
    const Vector theta = o.log10_theta.unaryExpr([](double v) { return std::pow(10.0, v); });
    Vector r(n);
    for (Index i = 0; i < n; ++i) {
        const Vector dx = model.X.row(i).transpose() - x;
        r(i) = std::exp(-(theta.array() * dx.array().square()).sum());
    }
    const Vector ones = Vector::Ones(n);
    const Vector Rinv1 = llt.solve(ones);
    const Vector Rinvr = llt.solve(r);
    const double u = 1.0 - ones.dot(Rinvr);
    const double mse = o.sigma2 * (1.0 - r.dot(Rinvr) + u * u / ones.dot(Rinv1));
    return std::max(0.0, mse);
}

Matrix kriging_loo_predictions(const KrigingModel& model, const Matrix& Y) {
    const Index n = model.X.rows();
    if (Y.rows() != n || Y.cols() != model.n_outputs()) {
        throw DimensionError("kriging_loo_predictions: Y does not match the model");
    }
    const PairwiseDiffs diffs(model.X);
    Matrix out(n, Y.cols());
    const Vector ones = Vector::Ones(n);
    const Vector* cached = nullptr;
    Vector bdiag;
    for (Index c = 0; c < Y.cols(); ++c) {
        const KrigingOutput& o = model.outputs[static_cast<std::size_t>(c)];
        if (o.constant) {
            out.col(c).setConstant(o.beta);
            continue;
        }
        if (cached == nullptr || !(o.log10_theta.array() == cached->array()).all()) {
            Eigen::LLT<Matrix> llt(diffs.correlation(o.log10_theta, model.nugget));
            const Matrix Rinv = llt.solve(Matrix::Identity(n, n));
            const Vector Rinv1 = Rinv * ones;
            // Diagonal of the inverse of the trend-bordered correlation matrix.
            bdiag = Rinv.diagonal().array() - Rinv1.array().square() / ones.dot(Rinv1);
            cached = &o.log10_theta;
        }
        out.col(c) = Y.col(c).array() - o.gamma.array() / bdiag.array();
    }
    return out;
}

}  // namespace cbmorph
