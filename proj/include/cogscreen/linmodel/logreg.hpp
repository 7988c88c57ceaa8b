#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cogscreen/linmodel/sparse.hpp"
#include "cogscreen/util/json_io.hpp"

namespace cogscreen::linmodel {

enum class Penalty { l1, l2, none };

std::string to_string(Penalty p);
Penalty parse_penalty(const std::string& s);

struct FitOptions {
    std::size_t max_iter = 5000;
    double tol = 1e-8;  // on the largest parameter change between iterates
};

/// Per-feature affine map x' = (x - mean) / sd, with sd == 0 columns mapped to 0.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> sd;  // population

    std::vector<double> apply(std::span<const double> row) const;
};

/// Fits a standardizer on dense rows. Throws DataError if rows is empty.
Standardizer fit_standardizer(const std::vector<std::vector<double>>& rows);

struct BinaryFit {
    std::vector<double> weights;
    double intercept = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Mean negative log-likelihood plus penalty; weights exclude the intercept.
///   L1: (lambda/m) sum |w_j|      L2: (lambda/2m) sum w_j^2
double logistic_objective(const CsrMatrix& X, std::span<const double> y,
                          std::span<const double> weights, double intercept, Penalty penalty,
                          double lambda);
/// Gradient of the smooth part (NLL, plus the L2 term when penalty is L2).
/// Returns weights gradient followed by the intercept gradient.
std::vector<double> logistic_gradient(const CsrMatrix& X, std::span<const double> y,
                                      std::span<const double> weights, double intercept,
                                      Penalty penalty, double lambda);

/// Accelerated proximal gradient (L1) / gradient descent (L2, none) with
/// backtracking, from zero initialization. y entries must be 0 or 1.
BinaryFit fit_binary(const CsrMatrix& X, std::span<const double> y, Penalty penalty,
                     double lambda, const FitOptions& opts = {});

struct LogRegModel {
    std::vector<int> classes;                  // sorted class values
    std::vector<std::vector<double>> weights;  // one row if binary (for classes[1]), else per class
    std::vector<double> intercepts;
    Penalty penalty = Penalty::l1;
    double lambda = 0.0;
    std::optional<Standardizer> standardizer;
    std::vector<std::size_t> iterations;
    std::vector<bool> converged;

    std::size_t dimension() const { return weights.empty() ? 0 : weights.front().size(); }
    bool binary() const { return classes.size() == 2; }
};

/// Binary when labels take two values, else one-vs-rest over the distinct labels.
/// Throws DataError for non-finite features, row/label mismatch, negative lambda,
/// fewer than two classes, or a requested class with no samples.
LogRegModel fit_logreg(const CsrMatrix& X, std::span<const int> y, Penalty penalty, double lambda,
                       const FitOptions& opts = {}, std::vector<int> classes = {});

/// Numerically stable logistic function.
double sigmoid(double z);

/// Probabilities aligned with model.classes; sums to 1.
std::vector<double> predict_proba(const LogRegModel& m, const SparseVector& x);
std::vector<double> predict_proba(const LogRegModel& m, std::span<const double> dense_x);
/// Most probable class; ties go to the larger class value.
int predict_class(const LogRegModel& m, const SparseVector& x);

io::Json to_json(const LogRegModel& m);
LogRegModel logreg_from_json(const io::Json& j);

}  // namespace cogscreen::linmodel
