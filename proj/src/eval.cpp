#include "cogscreen/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cogscreen/error.hpp"

namespace cogscreen::eval {

using io::Json;

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& row : counts) {
        for (auto c : row) t += c;
    }
    return t;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::size_t k) {
    if (y_true.size() != y_pred.size()) throw DataError("confusion: length mismatch");
    ConfusionMatrix cm;
    cm.counts.assign(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= k || static_cast<std::size_t>(p) >= k) {
            throw DataError("confusion: unknown label " + std::to_string(t < 0 || static_cast<std::size_t>(t) >= k ? t : p));
        }
        ++cm.counts[t][p];
    }
    return cm;
}

namespace {

void check_binary(std::span<const double> scores, std::span<const int> y) {
    if (scores.size() != y.size()) throw DataError("scores and labels differ in length");
    std::size_t pos = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0 && y[i] != 1) throw DataError("binary labels must be 0 or 1");
        if (!std::isfinite(scores[i])) throw DataError("non-finite score");
        pos += static_cast<std::size_t>(y[i]);
    }
    if (pos == 0 || pos == y.size()) throw DataError("both classes must be present");
}

std::vector<std::size_t> order_by_score_desc(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

}  // namespace

RocCurve roc_auc(std::span<const double> scores, std::span<const int> y_true) {
    check_binary(scores, y_true);
    const auto idx = order_by_score_desc(scores);
    double P = 0.0, N = 0.0;
    for (int v : y_true) (v == 1 ? P : N) += 1.0;

    RocCurve c;
    c.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    double tp = 0.0, fp = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double t = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == t) {
            (y_true[idx[i]] == 1 ? tp : fp) += 1.0;
            ++i;
        }
        c.points.push_back({t, fp / N, tp / P});
    }
    for (std::size_t k = 1; k < c.points.size(); ++k) {
        const auto& a = c.points[k - 1];
        const auto& b = c.points[k];
        c.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    return c;
}

ThresholdChoice best_accuracy_threshold(std::span<const double> scores,
                                        std::span<const int> y_true) {
    check_binary(scores, y_true);
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    const double n = static_cast<double>(scores.size());

    // Sweep ascending: at candidate c every score >= c is predicted positive.
    std::size_t positives = 0;
    for (int v : y_true) positives += static_cast<std::size_t>(v);
    // Threshold -inf: everything positive.
    std::size_t correct = positives;
    ThresholdChoice best{-std::numeric_limits<double>::infinity(), static_cast<double>(correct) / n};
    std::size_t i = 0;
    while (i < idx.size()) {
        const double s = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == s) {
            // This item flips from predicted positive to predicted negative.
            if (y_true[idx[i]] == 1) {
                --correct;
            } else {
                ++correct;
            }
            ++i;
        }
        const double cand = i < idx.size() ? (s + scores[idx[i]]) / 2.0
                                           : std::numeric_limits<double>::infinity();
        const double acc = static_cast<double>(correct) / n;
        if (acc > best.accuracy) best = {cand, acc};
    }
    return best;
}

double weighted_f1(const ConfusionMatrix& cm) {
    const std::size_t k = cm.classes();
    const double total = static_cast<double>(cm.total());
    if (total == 0.0) return 0.0;
    double out = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        double support = 0.0, predicted = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            support += static_cast<double>(cm.counts[c][j]);
            predicted += static_cast<double>(cm.counts[j][c]);
        }
        const double tp = static_cast<double>(cm.counts[c][c]);
        const double precision = predicted > 0.0 ? tp / predicted : 0.0;
        const double recall = support > 0.0 ? tp / support : 0.0;
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        out += support / total * f1;
    }
    return out;
}

namespace {

void fill_binary(MetricsReport& m, const ConfusionMatrix& binary) {
    const double tn = static_cast<double>(binary.counts[0][0]);
    const double fp = static_cast<double>(binary.counts[0][1]);
    const double fn = static_cast<double>(binary.counts[1][0]);
    const double tp = static_cast<double>(binary.counts[1][1]);
    m.sensitivity = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    m.specificity = tn + fp > 0.0 ? tn / (tn + fp) : 0.0;
}

double accuracy_of(const ConfusionMatrix& cm) {
    double diag = 0.0;
    for (std::size_t c = 0; c < cm.classes(); ++c) diag += static_cast<double>(cm.counts[c][c]);
    return diag / static_cast<double>(cm.total());
}

bool both_classes(std::span<const int> y) {
    bool zero = false, one = false;
    for (int v : y) (v == 1 ? one : zero) = true;
    return zero && one;
}

}  // namespace

MetricsReport binary_metrics_from_predictions(std::span<const int> y_true,
                                              std::span<const int> y_pred) {
    if (y_true.empty()) throw DataError("metrics of an empty set");
    MetricsReport m;
    m.n = y_true.size();
    m.confusion = confusion(y_true, y_pred, 2);
    m.accuracy = accuracy_of(m.confusion);
    m.weighted_f1 = weighted_f1(m.confusion);
    fill_binary(m, m.confusion);
    return m;
}

MetricsReport binary_metrics(std::span<const int> y_true, std::span<const double> scores,
                             double threshold) {
    if (y_true.size() != scores.size()) throw DataError("scores and labels differ in length");
    std::vector<int> pred(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= threshold ? 1 : 0;
    MetricsReport m = binary_metrics_from_predictions(y_true, pred);
    m.threshold = threshold;
    if (both_classes(y_true)) m.auc = roc_auc(scores, y_true).auc;
    return m;
}

MetricsReport multiclass_metrics(std::span<const int> y_true, std::span<const ClassProbs> probs) {
    if (y_true.empty()) throw DataError("metrics of an empty set");
    if (y_true.size() != probs.size()) throw DataError("labels and predictions differ in length");
    std::vector<int> pred(probs.size());
    std::vector<int> bin_true(probs.size()), bin_pred(probs.size());
    std::vector<double> pos(probs.size());
    const int positive = static_cast<int>(Label::positive);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        pred[i] = static_cast<int>(probs[i].argmax());
        bin_true[i] = y_true[i] == positive;
        bin_pred[i] = pred[i] == positive;
        pos[i] = probs[i].p_positive;
    }
    MetricsReport m;
    m.n = y_true.size();
    m.confusion = confusion(y_true, pred, kNumClasses);
    m.accuracy = accuracy_of(m.confusion);
    m.weighted_f1 = weighted_f1(m.confusion);
    fill_binary(m, confusion(bin_true, bin_pred, 2));
    if (both_classes(bin_true)) m.auc = roc_auc(pos, bin_true).auc;
    return m;
}

Json to_json(const MetricsReport& m) {
    Json j{{"schema_version", io::kSchemaVersion},
           {"n", m.n},
           {"accuracy", m.accuracy},
           {"sensitivity", m.sensitivity},
           {"specificity", m.specificity},
           {"weighted_f1", m.weighted_f1},
           {"confusion", m.confusion.counts}};
    j["auc"] = m.auc ? Json(*m.auc) : Json();
    j["threshold"] = m.threshold ? io::number_or_inf(*m.threshold) : Json();
    return j;
}

std::string roc_csv(const RocCurve& curve) {
    std::string out = "threshold,fpr,tpr\n";
    for (const auto& p : curve.points) {
        const std::string t = std::isinf(p.threshold) ? (p.threshold > 0 ? "inf" : "-inf")
                                                      : io::dump_line(p.threshold);
        out += t + "," + io::dump_line(p.fpr) + "," + io::dump_line(p.tpr) + "\n";
    }
    return out;
}

}  // namespace cogscreen::eval
