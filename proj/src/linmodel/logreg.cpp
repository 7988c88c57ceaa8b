#include "cogscreen/linmodel/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cogscreen/error.hpp"
#include "cogscreen/kernels/kernels.hpp"

namespace cogscreen::linmodel {

using io::Json;

std::string to_string(Penalty p) {
    switch (p) {
        case Penalty::l1: return "l1";
        case Penalty::l2: return "l2";
        case Penalty::none: return "none";
    }
    return "l1";
}

Penalty parse_penalty(const std::string& s) {
    if (s == "l1" || s == "L1") return Penalty::l1;
    if (s == "l2" || s == "L2") return Penalty::l2;
    if (s == "none") return Penalty::none;
    throw UsageError("unknown penalty '" + s + "'");
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
    if (row.size() != mean.size()) throw DataError("standardizer: dimension mismatch");
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
        out[j] = sd[j] > 0.0 ? (row[j] - mean[j]) / sd[j] : 0.0;
    }
    return out;
}

Standardizer fit_standardizer(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw DataError("standardizer needs at least one row");
    const std::size_t d = rows.front().size();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.sd.assign(d, 0.0);
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        if (r.size() != d) throw DataError("standardizer: ragged rows");
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
    }
    for (auto& m : s.mean) m /= n;
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < d; ++j) s.sd[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
    }
    for (std::size_t j = 0; j < d; ++j) {
        s.sd[j] = std::sqrt(s.sd[j] / n);
        // Constant columns: any residual from rounding the mean is noise.
        bool constant = true;
        for (const auto& r : rows) constant = constant && r[j] == rows.front()[j];
        if (constant) s.sd[j] = 0.0;
    }
    return s;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Parameters are laid out as [w_0 .. w_{n-1}, intercept]. The penalty on w_j
// is weighted by scale[j], which lets the solver work in rescaled coordinates
// w_j = scale[j] * v_j on a matrix whose columns were multiplied by scale.
class Problem {
public:
    Problem(const CsrMatrix& X, std::span<const double> y, Penalty penalty, double lambda,
            std::vector<double> scale = {})
        : X_(X), y_(y), penalty_(penalty), lambda_(lambda), m_(X.rows()), n_(X.cols()),
          scale_(std::move(scale)) {
        if (scale_.empty()) scale_.assign(n_, 1.0);
        l2_weight_.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) l2_weight_[j] = scale_[j] * scale_[j];
    }

    std::size_t m() const { return m_; }

    void margins(std::span<const double> theta, std::span<double> z) const {
        const double b = theta[n_];
        for (std::size_t i = 0; i < m_; ++i) {
            z[i] = kernels::sparse_dot(X_.row_indices(i), X_.row_values(i), theta) + b;
        }
    }

    double smooth(std::span<const double> theta, std::span<const double> z) const {
        double s = 0.0;
        for (std::size_t i = 0; i < m_; ++i) s += softplus(z[i]) - y_[i] * z[i];
        s /= static_cast<double>(m_);
        if (penalty_ == Penalty::l2) s += l2_term(theta);
        return s;
    }

    double smooth_grad(std::span<const double> theta, std::span<const double> z,
                       std::span<double> grad) const {
        std::fill(grad.begin(), grad.end(), 0.0);
        double s = 0.0;
        const double inv_m = 1.0 / static_cast<double>(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            s += softplus(z[i]) - y_[i] * z[i];
            const double r = (sigmoid(z[i]) - y_[i]) * inv_m;
            const auto idx = X_.row_indices(i);
            const auto val = X_.row_values(i);
            for (std::size_t k = 0; k < idx.size(); ++k) grad[idx[k]] += r * val[k];
            grad[n_] += r;
        }
        s *= inv_m;
        if (penalty_ == Penalty::l2) {
            s += l2_term(theta);
            const double c = lambda_ * inv_m;
            for (std::size_t j = 0; j < n_; ++j) grad[j] += c * l2_weight_[j] * theta[j];
        }
        return s;
    }

    double nonsmooth(std::span<const double> theta) const {
        if (penalty_ != Penalty::l1) return 0.0;
        double a = 0.0;
        for (std::size_t j = 0; j < n_; ++j) a += scale_[j] * std::abs(theta[j]);
        return lambda_ / static_cast<double>(m_) * a;
    }

    // prox of step * nonsmooth, applied in place.
    void prox(std::span<double> theta, double step) const {
        if (penalty_ != Penalty::l1 || lambda_ == 0.0) return;
        const double t = step * lambda_ / static_cast<double>(m_);
        for (std::size_t j = 0; j < n_; ++j) {
            const double tj = t * scale_[j];
            const double v = theta[j];
            theta[j] = v > tj ? v - tj : (v < -tj ? v + tj : 0.0);
        }
    }

private:
    double l2_term(std::span<const double> theta) const {
        double w2 = 0.0;
        for (std::size_t j = 0; j < n_; ++j) w2 += l2_weight_[j] * theta[j] * theta[j];
        return lambda_ / (2.0 * static_cast<double>(m_)) * w2;
    }

    const CsrMatrix& X_;
    std::span<const double> y_;
    Penalty penalty_;
    double lambda_;
    std::size_t m_;
    std::size_t n_;
    std::vector<double> scale_;
    std::vector<double> l2_weight_;
};

void check_inputs(const CsrMatrix& X, std::size_t labels, double lambda) {
    if (X.rows() != labels) throw DataError("logreg: feature rows and labels differ in count");
    if (X.rows() == 0) throw DataError("logreg: no training rows");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DataError("logreg: lambda must be >= 0");
    if (!X.all_finite()) throw DataError("logreg: non-finite feature value");
}

}  // namespace

double logistic_objective(const CsrMatrix& X, std::span<const double> y,
                          std::span<const double> weights, double intercept, Penalty penalty,
                          double lambda) {
    check_inputs(X, y.size(), lambda);
    std::vector<double> theta(weights.begin(), weights.end());
    theta.push_back(intercept);
    Problem p(X, y, penalty, lambda);
    std::vector<double> z(X.rows());
    p.margins(theta, z);
    return p.smooth(theta, z) + p.nonsmooth(theta);
}

std::vector<double> logistic_gradient(const CsrMatrix& X, std::span<const double> y,
                                      std::span<const double> weights, double intercept,
                                      Penalty penalty, double lambda) {
    check_inputs(X, y.size(), lambda);
    std::vector<double> theta(weights.begin(), weights.end());
    theta.push_back(intercept);
    std::vector<double> grad(theta.size());
    Problem p(X, y, penalty, lambda);
    std::vector<double> z(X.rows());
    p.margins(theta, z);
    p.smooth_grad(theta, z, grad);
    return grad;
}

BinaryFit fit_binary(const CsrMatrix& X, std::span<const double> y, Penalty penalty,
                     double lambda, const FitOptions& opts) {
    check_inputs(X, y.size(), lambda);
    for (double v : y) {
        if (v != 0.0 && v != 1.0) throw DataError("logreg: binary targets must be 0 or 1");
    }
    const std::size_t m = X.rows();
    const std::size_t n = X.cols();
    const std::size_t dim = n + 1;

    // Jacobi scaling: column j is divided by the root of its curvature bound so
    // rare and common terms converge at similar rates.
    const double ridge = penalty == Penalty::l2 ? 4.0 * lambda / static_cast<double>(m) : 0.0;
    std::vector<double> scale = X.column_mean_squares();
    for (auto& s : scale) s = s + ridge > 0.0 ? 1.0 / std::sqrt(s + ridge) : 1.0;
    const CsrMatrix Xs = X.scale_columns(scale);
    Problem prob(Xs, y, penalty, lambda, scale);

    double mean_sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto v = Xs.row_values(i);
        mean_sq += 1.0 + kernels::dot(v, v);
    }
    mean_sq /= static_cast<double>(m);
    // A fraction of the trace bound; backtracking grows it when too small.
    double L = 0.25 * mean_sq * 0.25;
    if (penalty == Penalty::l2) L += lambda / static_cast<double>(m);
    L = std::max(L, 1e-12);

    std::vector<double> x(dim, 0.0), x_new(dim), y_pt(dim, 0.0), grad(dim);
    std::vector<double> z_x(m, 0.0), z_new(m), z_y(m, 0.0);
    double t = 1.0;
    double F_x = prob.smooth(x, z_x) + prob.nonsmooth(x);

    BinaryFit fit;
    for (std::size_t iter = 1; iter <= opts.max_iter; ++iter) {
        // Extrapolated margins drift from rounding; refresh them now and then.
        bool exact = iter % 64 == 0;
        if (exact) prob.margins(y_pt, z_y);
        double f_y = prob.smooth_grad(y_pt, z_y, grad);
        double f_new = 0.0;
        for (int bt = 0; bt < 60; ++bt) {
            std::copy(y_pt.begin(), y_pt.end(), x_new.begin());
            kernels::axpy(-1.0 / L, grad, x_new);
            prob.prox(x_new, 1.0 / L);
            prob.margins(x_new, z_new);
            f_new = prob.smooth(x_new, z_new);
            double lin = 0.0, quad = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double d = x_new[j] - y_pt[j];
                lin += grad[j] * d;
                quad += d * d;
            }
            if (f_new <= f_y + lin + 0.5 * L * quad + 1e-15 * std::abs(f_y)) break;
            if (!exact) {
                // Near the optimum the drift alone can fail the test.
                exact = true;
                prob.margins(y_pt, z_y);
                f_y = prob.smooth_grad(y_pt, z_y, grad);
                continue;
            }
            L *= 2.0;
        }

        double change = std::abs(x_new[n] - x[n]);
        for (std::size_t j = 0; j < n; ++j) {
            change = std::max(change, scale[j] * std::abs(x_new[j] - x[j]));
        }
        const double F_new = f_new + prob.nonsmooth(x_new);
        fit.iterations = iter;

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (F_new > F_x) {
            // Momentum overshot: restart from the new point.
            t = 1.0;
            std::copy(x_new.begin(), x_new.end(), y_pt.begin());
            std::copy(z_new.begin(), z_new.end(), z_y.begin());
        } else {
            const double beta = (t - 1.0) / t_next;
            kernels::extrapolate(x_new, x, beta, y_pt);
            kernels::extrapolate(z_new, z_x, beta, z_y);
            t = t_next;
        }
        x.swap(x_new);
        z_x.swap(z_new);
        F_x = F_new;
        if (change < opts.tol) {
            fit.converged = true;
            break;
        }
        L *= 0.9;
    }

    fit.weights.resize(n);
    for (std::size_t j = 0; j < n; ++j) fit.weights[j] = scale[j] * x[j];
    fit.intercept = x[n];
    return fit;
}

LogRegModel fit_logreg(const CsrMatrix& X, std::span<const int> y, Penalty penalty, double lambda,
                       const FitOptions& opts, std::vector<int> classes) {
    check_inputs(X, y.size(), lambda);
    if (classes.empty()) {
        std::set<int> distinct(y.begin(), y.end());
        classes.assign(distinct.begin(), distinct.end());
    } else {
        std::sort(classes.begin(), classes.end());
    }
    if (classes.size() < 2) throw DataError("logreg: need at least two classes");
    for (int c : classes) {
        if (std::find(y.begin(), y.end(), c) == y.end()) {
            throw DataError("logreg: class " + std::to_string(c) + " has no samples");
        }
    }
    for (int v : y) {
        if (!std::binary_search(classes.begin(), classes.end(), v)) {
            throw DataError("logreg: label " + std::to_string(v) + " not among classes");
        }
    }

    LogRegModel m;
    m.classes = classes;
    m.penalty = penalty;
    m.lambda = lambda;
    const std::vector<int> targets =
        classes.size() == 2 ? std::vector<int>{classes[1]} : classes;
    for (int c : targets) {
        std::vector<double> yc(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) yc[i] = y[i] == c ? 1.0 : 0.0;
        BinaryFit f = fit_binary(X, yc, penalty, lambda, opts);
        m.weights.push_back(std::move(f.weights));
        m.intercepts.push_back(f.intercept);
        m.iterations.push_back(f.iterations);
        m.converged.push_back(f.converged);
    }
    return m;
}

namespace {

std::vector<double> finish(const LogRegModel& m, const std::vector<double>& logits) {
    if (m.binary()) {
        const double p = sigmoid(logits[0]);
        // 1 - p loses precision near 1; use the mirrored sigmoid instead.
        return {sigmoid(-logits[0]), p};
    }
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = sigmoid(logits[k]);
        total += p[k];
    }
    if (total <= 0.0) {
        // Every class logit underflowed; fall back to a softmax of the logits.
        const double mx = *std::max_element(logits.begin(), logits.end());
        total = 0.0;
        for (std::size_t k = 0; k < logits.size(); ++k) {
            p[k] = std::exp(logits[k] - mx);
            total += p[k];
        }
    }
    for (auto& v : p) v /= total;
    return p;
}

}  // namespace

std::vector<double> predict_proba(const LogRegModel& m, std::span<const double> dense_x) {
    if (dense_x.size() != m.dimension()) throw DataError("predict: dimension mismatch");
    std::vector<double> row(dense_x.begin(), dense_x.end());
    if (m.standardizer) row = m.standardizer->apply(row);
    std::vector<double> logits;
    for (std::size_t k = 0; k < m.weights.size(); ++k) {
        logits.push_back(kernels::dot(m.weights[k], row) + m.intercepts[k]);
    }
    return finish(m, logits);
}

std::vector<double> predict_proba(const LogRegModel& m, const SparseVector& x) {
    if (x.dimension != m.dimension()) throw DataError("predict: dimension mismatch");
    if (m.standardizer) {
        std::vector<double> dense(x.dimension, 0.0);
        for (std::size_t k = 0; k < x.nnz(); ++k) dense[x.indices[k]] = x.values[k];
        return predict_proba(m, dense);
    }
    std::vector<double> logits;
    for (std::size_t k = 0; k < m.weights.size(); ++k) {
        logits.push_back(kernels::sparse_dot(x.indices, x.values, m.weights[k]) + m.intercepts[k]);
    }
    return finish(m, logits);
}

int predict_class(const LogRegModel& m, const SparseVector& x) {
    const auto p = predict_proba(m, x);
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.size(); ++k) {
        if (p[k] >= p[best]) best = k;
    }
    return m.classes[best];
}

Json to_json(const LogRegModel& m) {
    Json j{{"classes", m.classes},
           {"weights", m.weights},
           {"intercepts", m.intercepts},
           {"penalty", to_string(m.penalty)},
           {"lambda", m.lambda},
           {"iterations", m.iterations},
           {"converged", m.converged}};
    j["standardizer"] = m.standardizer
                            ? Json{{"mean", m.standardizer->mean}, {"sd", m.standardizer->sd}}
                            : Json();
    return j;
}

LogRegModel logreg_from_json(const Json& j) {
    LogRegModel m;
    m.classes = io::require<std::vector<int>>(j, "classes");
    m.weights = io::require<std::vector<std::vector<double>>>(j, "weights");
    m.intercepts = io::require<std::vector<double>>(j, "intercepts");
    m.penalty = parse_penalty(io::require<std::string>(j, "penalty"));
    m.lambda = io::require<double>(j, "lambda");
    m.iterations = j.value("iterations", std::vector<std::size_t>{});
    m.converged = j.value("converged", std::vector<bool>{});
    if (j.contains("standardizer") && !j["standardizer"].is_null()) {
        m.standardizer = Standardizer{io::require<std::vector<double>>(j["standardizer"], "mean"),
                                      io::require<std::vector<double>>(j["standardizer"], "sd")};
    }
    const std::size_t expected = m.classes.size() == 2 ? 1 : m.classes.size();
    if (m.classes.size() < 2 || m.weights.size() != expected || m.intercepts.size() != expected) {
        throw DataError("logreg model: inconsistent class/weight counts");
    }
    for (const auto& w : m.weights) {
        if (w.size() != m.weights.front().size()) throw DataError("logreg model: ragged weights");
        for (double v : w) {
            if (!std::isfinite(v)) throw DataError("logreg model: non-finite weight");
        }
    }
    if (m.standardizer && m.standardizer->mean.size() != m.dimension()) {
        throw DataError("logreg model: standardizer dimension mismatch");
    }
    return m;
}

}  // namespace cogscreen::linmodel
