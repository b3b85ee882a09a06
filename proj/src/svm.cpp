#include "cbmorph/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "cbmorph/errors.hpp"

namespace cbmorph {

namespace {

double rbf(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b, double gamma) {
    return std::exp(-gamma * (a - b).squaredNorm());
}

constexpr double kTau = 1e-12;

}  // namespace

double SvmModel::decision(const Vector& x) const {
    double f = bias;
    for (Index i = 0; i < support_vectors.rows(); ++i) {
        f += alphas(i) * rbf(support_vectors.row(i).transpose(), x, gamma);
    }
    return f;
}

SvmModel train_binary(const Matrix& X, const std::vector<int>& y, const SvmParams& params) {
    const Index n = X.rows();
    const Index d = X.cols();
    if (static_cast<Index>(y.size()) != n) throw DimensionError("train_binary: label count mismatch");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw DegenerateLabelsError("train_binary: labels must be +1 or -1");
    }
    if (!has_pos || !has_neg) throw DegenerateLabelsError("train_binary: both classes are required");
    if (!(params.C > 0.0)) throw ParameterError("train_binary: C must be positive");

    const double gamma = params.gamma > 0.0 ? params.gamma : 1.0 / static_cast<double>(d);
    const double C = params.C;

    Matrix Kmat(n, n);
    for (Index i = 0; i < n; ++i) {
        Kmat(i, i) = 1.0;
        for (Index j = 0; j < i; ++j) {
            const double k = rbf(X.row(i).transpose(), X.row(j).transpose(), gamma);
            Kmat(i, j) = k;
            Kmat(j, i) = k;
        }
    }
    Vector yv(n);
    for (Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];

    // Dual: min 0.5 a^T Q a - e^T a, Q_ij = y_i y_j K_ij, 0 <= a <= C, y^T a = 0.
    Vector a = Vector::Zero(n);
    Vector G = -Vector::Ones(n);

    auto in_up = [&](Index t) { return (yv(t) > 0 && a(t) < C) || (yv(t) < 0 && a(t) > 0); };
    auto in_low = [&](Index t) { return (yv(t) > 0 && a(t) > 0) || (yv(t) < 0 && a(t) < C); };

    long iter = 0;
    for (; iter < params.max_iterations; ++iter) {
        Index i = -1;
        double gmax = -std::numeric_limits<double>::infinity();
        for (Index t = 0; t < n; ++t) {
            if (in_up(t) && -yv(t) * G(t) > gmax) {
                gmax = -yv(t) * G(t);
                i = t;
            }
        }
        double gmin = std::numeric_limits<double>::infinity();
        Index j = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Index t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            const double v = -yv(t) * G(t);
            gmin = std::min(gmin, v);
            if (i >= 0 && v < gmax) {
                const double b = gmax - v;
                double quad = Kmat(i, i) + Kmat(t, t) - 2.0 * Kmat(i, t);
                if (quad <= 0.0) quad = kTau;
                const double score = -(b * b) / quad;
                if (score < best) {
                    best = score;
                    j = t;
                }
            }
        }
        if (i < 0 || j < 0 || gmax - gmin < params.tol) break;

        const double Qii = Kmat(i, i), Qjj = Kmat(j, j);
        const double Qij = yv(i) * yv(j) * Kmat(i, j);
        const double ai_old = a(i), aj_old = a(j);
        if (yv(i) != yv(j)) {
            double quad = Qii + Qjj + 2.0 * Qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-G(i) - G(j)) / quad;
            const double diff = a(i) - a(j);
            a(i) += delta;
            a(j) += delta;
            if (diff > 0 && a(j) < 0) {
                a(j) = 0;
                a(i) = diff;
            } else if (diff <= 0 && a(i) < 0) {
                a(i) = 0;
                a(j) = -diff;
            }
            if (diff > 0 && a(i) > C) {
                a(i) = C;
                a(j) = C - diff;
            } else if (diff <= 0 && a(j) > C) {
                a(j) = C;
                a(i) = C + diff;
            }
        } else {
            double quad = Qii + Qjj - 2.0 * Qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (G(i) - G(j)) / quad;
            const double sum = a(i) + a(j);
            a(i) -= delta;
            a(j) += delta;
            if (sum > C && a(i) > C) {
                a(i) = C;
                a(j) = sum - C;
            } else if (sum <= C && a(j) < 0) {
                a(j) = 0;
                a(i) = sum;
            }
            if (sum > C && a(j) > C) {
                a(j) = C;
                a(i) = sum - C;
            } else if (sum <= C && a(i) < 0) {
                a(i) = 0;
                a(j) = sum;
            }
        }
        const double dai = a(i) - ai_old;
        const double daj = a(j) - aj_old;
        for (Index t = 0; t < n; ++t) {
            G(t) += yv(t) * (yv(i) * Kmat(t, i) * dai + yv(j) * Kmat(t, j) * daj);
        }
    }

    // Bias from free vectors, else the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    Index n_free = 0;
    for (Index t = 0; t < n; ++t) {
        const double yG = yv(t) * G(t);
        if (a(t) >= C) {
            if (yv(t) < 0) ub = std::min(ub, yG);
            else lb = std::max(lb, yG);
        } else if (a(t) <= 0) {
            if (yv(t) > 0) ub = std::min(ub, yG);
            else lb = std::max(lb, yG);
        } else {
            ++n_free;
            sum_free += yG;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);

    SvmModel model;
    model.gamma = gamma;
    model.C = C;
    model.bias = -rho;
    model.iterations = iter;
    Index n_sv = 0;
    for (Index t = 0; t < n; ++t) n_sv += a(t) > 0 ? 1 : 0;
    model.support_vectors.resize(n_sv, d);
    model.alphas.resize(n_sv);
    Index k = 0;
    for (Index t = 0; t < n; ++t) {
        if (a(t) > 0) {
            model.support_vectors.row(k) = X.row(t);
            model.alphas(k) = yv(t) * a(t);
            ++k;
        }
    }
    return model;
}

BinaryPrediction predict(const SvmModel& model, const Vector& x) {
    const double f = model.decision(x);
    return {f >= 0.0 ? 1 : -1, f};
}

MulticlassSvm train_multiclass(const std::vector<Vector>& thetas, const std::vector<int>& tags,
                               const ParameterSpace& space, const SvmParams& params) {
    if (thetas.size() != tags.size()) throw DimensionError("train_multiclass: tag count mismatch");
    if (thetas.empty()) throw DegenerateLabelsError("train_multiclass: no samples");
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < tags.size(); ++i) members[tags[i]].push_back(i);

    MulticlassSvm router;
    router.space = space;
    for (const auto& [id, idx] : members) router.region_ids.push_back(id);

    for (std::size_t a = 0; a < router.region_ids.size(); ++a) {
        for (std::size_t b = a + 1; b < router.region_ids.size(); ++b) {
            const int ia = router.region_ids[a], ib = router.region_ids[b];
            const auto& ma = members[ia];
            const auto& mb = members[ib];
            Matrix X(static_cast<Index>(ma.size() + mb.size()), space.dim());
            std::vector<int> y;
            y.reserve(ma.size() + mb.size());
            Index row = 0;
            // Merge in original sample order so the pair problem is order-stable.
            std::vector<std::size_t> merged(ma);
            merged.insert(merged.end(), mb.begin(), mb.end());
            std::sort(merged.begin(), merged.end());
            for (std::size_t i : merged) {
                X.row(row++) = space.normalize(thetas[i]).transpose();
                y.push_back(tags[i] == ia ? 1 : -1);
            }
            router.pairs.push_back({ia, ib, train_binary(X, y, params)});
        }
    }
    return router;
}

RegionPrediction predict_region(const MulticlassSvm& router, const Vector& theta) {
    RegionPrediction out;
    const std::size_t m = router.region_ids.size();
    if (m == 0) throw DegenerateLabelsError("predict_region: router has no regions");
    out.votes.assign(m, 0);
    out.margins.assign(m, 0.0);
    if (m == 1) {
        out.region_id = router.region_ids[0];
        out.votes[0] = 0;
        out.low_confidence = !router.space.contains(theta);
        return out;
    }
    auto slot = [&](int id) {
        return static_cast<std::size_t>(
            std::lower_bound(router.region_ids.begin(), router.region_ids.end(), id) -
            router.region_ids.begin());
    };
    const Vector x = router.space.normalize(theta);
    for (const auto& p : router.pairs) {
        const double f = p.model.decision(x);
        const std::size_t sp = slot(p.positive), sn = slot(p.negative);
        if (f >= 0.0) ++out.votes[sp];
        else ++out.votes[sn];
        out.margins[sp] += f;
        out.margins[sn] -= f;
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < m; ++k) {
        if (out.votes[k] > out.votes[best] ||
            (out.votes[k] == out.votes[best] && out.margins[k] > out.margins[best])) {
            best = k;
        }
    }
    out.region_id = router.region_ids[best];
    out.low_confidence = out.margins[best] < 0.0 || !router.space.contains(theta);
    return out;
}

}  // namespace cbmorph
