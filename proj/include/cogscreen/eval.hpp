#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cogscreen/types.hpp"
#include "cogscreen/util/json_io.hpp"

namespace cogscreen::eval {

/// counts[true][predicted]; class order is the label encoding
/// (neither, negative, positive) or (no CI, CI).
struct ConfusionMatrix {
    std::vector<std::vector<std::size_t>> counts;

    std::size_t classes() const { return counts.size(); }
    std::size_t total() const;
    bool operator==(const ConfusionMatrix&) const = default;
};

/// Labels must lie in [0, k); throws DataError otherwise or on length mismatch.
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::size_t k = 2);

struct RocPoint {
    double threshold;  // predict positive when score >= threshold; +inf for the origin
    double fpr;
    double tpr;
};

struct RocCurve {
    std::vector<RocPoint> points;  // threshold descending, (0,0) first, (1,1) last
    double auc = 0.0;
};

/// y_true entries are 0/1. Throws DataError unless both classes are present.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> y_true);

struct ThresholdChoice {
    double threshold = 0.0;
    double accuracy = 0.0;
};

/// Candidates: -inf, midpoints between consecutive unique scores, +inf.
/// Returns the smallest candidate with maximal accuracy.
ThresholdChoice best_accuracy_threshold(std::span<const double> scores,
                                        std::span<const int> y_true);

struct MetricsReport {
    std::size_t n = 0;
    double accuracy = 0.0;
    std::optional<double> auc;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double weighted_f1 = 0.0;
    std::optional<double> threshold;
    ConfusionMatrix confusion;
};

/// Support-weighted mean of per-class F1 (F1 is 0 when precision + recall is 0).
double weighted_f1(const ConfusionMatrix& cm);

/// Binary metrics from positive-class scores thresholded at `threshold` (>=).
MetricsReport binary_metrics(std::span<const int> y_true, std::span<const double> scores,
                             double threshold);
/// Binary metrics from hard predictions; no AUC.
MetricsReport binary_metrics_from_predictions(std::span<const int> y_true,
                                              std::span<const int> y_pred);
/// Three-class: accuracy and weighted F1 from argmax; AUC, sensitivity and
/// specificity are positive-vs-rest.
MetricsReport multiclass_metrics(std::span<const int> y_true, std::span<const ClassProbs> probs);

io::Json to_json(const MetricsReport& m);
std::string roc_csv(const RocCurve& curve);

}  // namespace cogscreen::eval
