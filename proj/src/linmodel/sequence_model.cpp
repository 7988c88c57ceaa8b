#include "cogscreen/linmodel/sequence_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <map>
#include <tuple>

#include "cogscreen/error.hpp"
#include "cogscreen/extract.hpp"
#include "cogscreen/linmodel/stats.hpp"
#include "cogscreen/util/parallel.hpp"
#include "cogscreen/util/utf8.hpp"

namespace cogscreen::linmodel {

using io::Json;

std::vector<std::string> feature_tokens(std::string_view text) {
    auto tokens = extract::tokenize(text);
    for (auto& t : tokens) t = utf8::encode(utf8::to_lower(utf8::decode(t)));
    return tokens;
}

namespace {

CsrMatrix design(const TfidfModel& tfidf, std::span<const std::vector<std::string>> docs) {
    CsrMatrix X(tfidf.dimension());
    for (const auto& d : docs) X.append_row(transform(tfidf, d));
    return X;
}

std::vector<double> positive_indicator(std::span<const int> labels) {
    std::vector<double> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        y[i] = labels[i] == static_cast<int>(Label::positive) ? 1.0 : 0.0;
    }
    return y;
}

// Fits on the selected columns and scatters the weights back to full width.
LogRegModel fit_masked(const CsrMatrix& X, const std::vector<bool>& mask, std::span<const int> y,
                       double lambda, Penalty penalty, const FitOptions& opts,
                       const std::vector<int>& classes) {
    const CsrMatrix Xs = X.select_columns(mask);
    LogRegModel m = fit_logreg(Xs, y, penalty, lambda, opts, classes);
    for (auto& w : m.weights) {
        std::vector<double> full(mask.size(), 0.0);
        std::size_t k = 0;
        for (std::size_t j = 0; j < mask.size(); ++j) {
            if (mask[j]) full[j] = w[k++];
        }
        w = std::move(full);
    }
    return m;
}

ClassProbs to_class_probs(const LogRegModel& m, const std::vector<double>& p) {
    ClassProbs out;
    double* slots[3] = {&out.p_neither, &out.p_negative, &out.p_positive};
    for (std::size_t k = 0; k < m.classes.size(); ++k) {
        const int c = m.classes[k];
        if (c < 0 || c > 2) throw DataError("sequence model: class outside the label set");
        *slots[c] = p[k];
    }
    return out;
}

}  // namespace

ClassProbs predict_tokens(const SequenceModel& m, std::span<const std::string> tokens) {
    const SparseVector x = transform(m.tfidf, tokens);
    return to_class_probs(m.logreg, predict_proba(m.logreg, x));
}

ClassProbs predict(const SequenceModel& m, std::string_view text) {
    const auto tokens = feature_tokens(text);
    return predict_tokens(m, tokens);
}

SequenceModel fit_sequence_model(std::span<const std::vector<std::string>> docs,
                                 std::span<const int> labels, double lambda,
                                 double pcc_threshold, Penalty penalty, const FitOptions& opts,
                                 std::vector<int> classes) {
    if (docs.size() != labels.size()) throw DataError("sequence model: docs and labels differ");
    if (pcc_threshold < 0.0) throw UsageError("pcc threshold must be >= 0");
    SequenceModel m;
    m.tfidf = fit_tfidf(docs);
    m.pcc_threshold = pcc_threshold;
    const CsrMatrix X = design(m.tfidf, docs);
    const auto y = positive_indicator(labels);
    const auto mask = select_features(X, y, pcc_threshold);
    m.tfidf.selected = mask;
    m.logreg = fit_masked(X, mask, labels, lambda, penalty, opts, classes);
    return m;
}

std::size_t pick_best(const std::vector<CvCell>& cells) {
    std::size_t best = cells.size();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        if (!c.valid) continue;
        if (best == cells.size()) {
            best = i;
            continue;
        }
        const auto& b = cells[best];
        const auto key = [](const CvCell& x) {
            return std::tuple(x.mean_accuracy, x.lambda, x.pcc_threshold);
        };
        if (key(c) > key(b)) best = i;
    }
    if (best == cells.size()) throw DataError("cross-validation: every grid cell is invalid");
    return best;
}

namespace {

struct Corpus {
    std::vector<std::vector<std::string>> docs;
    std::vector<int> labels;
};

}  // namespace

CvResult cross_validate(const dataset::LabeledDataset& ds,
                        const std::vector<std::vector<std::string>>& folds, const CvGrid& grid,
                        const CvOptions& opts) {
    if (grid.lambdas.empty() || grid.pcc_thresholds.empty()) {
        throw UsageError("cross-validation grid must be non-empty");
    }
    if (folds.size() < 2) throw UsageError("cross-validation needs at least two folds");
    for (double l : grid.lambdas) {
        if (!(l >= 0.0)) throw UsageError("lambda grid values must be >= 0");
    }
    for (double t : grid.pcc_thresholds) {
        if (!(t >= 0.0)) throw UsageError("pcc grid values must be >= 0");
    }

    Corpus all;
    for (const auto& item : ds.items()) {
        all.docs.push_back(feature_tokens(item.sequence.text));
        all.labels.push_back(static_cast<int>(item.record.label));
    }
    const std::set<int> distinct(all.labels.begin(), all.labels.end());
    const std::vector<int> classes(distinct.begin(), distinct.end());

    std::map<std::string, std::size_t> fold_of;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        for (const auto& p : folds[f]) fold_of[p] = f;
    }
    std::vector<std::size_t> item_fold(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto it = fold_of.find(ds.items()[i].sequence.patient_id);
        if (it == fold_of.end()) {
            throw DataError("cross-validation: patient " + ds.items()[i].sequence.patient_id +
                            " is in no fold");
        }
        item_fold[i] = it->second;
    }

    const std::size_t nl = grid.lambdas.size();
    const std::size_t nt = grid.pcc_thresholds.size();
    const std::size_t k = folds.size();
    // acc[fold][cell]; NaN marks an invalid fit
    std::vector<std::vector<double>> acc(k, std::vector<double>(nl * nt, 0.0));
    std::vector<std::vector<std::string>> reason(k, std::vector<std::string>(nl * nt));

    const std::size_t cell_threads = opts.threads;
    util::parallel_for(k, cell_threads, [&](std::size_t f) {
        Corpus train, test;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            Corpus& dst = item_fold[i] == f ? test : train;
            dst.docs.push_back(all.docs[i]);
            dst.labels.push_back(all.labels[i]);
        }
        if (test.docs.empty() || train.docs.empty()) {
            for (std::size_t c = 0; c < nl * nt; ++c) {
                acc[f][c] = std::nan("");
                reason[f][c] = "fold " + std::to_string(f) + " has no items on one side";
            }
            return;
        }
        for (int c : classes) {
            if (std::find(train.labels.begin(), train.labels.end(), c) == train.labels.end()) {
                for (std::size_t cc = 0; cc < nl * nt; ++cc) {
                    acc[f][cc] = std::nan("");
                    reason[f][cc] = "training folds for fold " + std::to_string(f) +
                                    " lack class " + std::string(to_string(label_from_int(c)));
                }
                return;
            }
        }
        TfidfModel tfidf = fit_tfidf(train.docs);
        const CsrMatrix X = design(tfidf, train.docs);
        const auto pccs = column_pcc(X, positive_indicator(train.labels));
        std::vector<SparseVector> test_rows;
        for (const auto& d : test.docs) test_rows.push_back(transform(tfidf, d));

        for (std::size_t ti = 0; ti < nt; ++ti) {
            const auto mask = mask_from_pcc(pccs, grid.pcc_thresholds[ti]);
            for (std::size_t li = 0; li < nl; ++li) {
                const std::size_t cell = li * nt + ti;
                const LogRegModel m = fit_masked(X, mask, train.labels, grid.lambdas[li],
                                                 opts.penalty, opts.fit, classes);
                std::size_t correct = 0;
                for (std::size_t i = 0; i < test_rows.size(); ++i) {
                    if (predict_class(m, test_rows[i]) == test.labels[i]) ++correct;
                }
                acc[f][cell] = static_cast<double>(correct) / static_cast<double>(test_rows.size());
            }
        }
    });

    CvResult r;
    r.folds = k;
    for (std::size_t li = 0; li < nl; ++li) {
        for (std::size_t ti = 0; ti < nt; ++ti) {
            const std::size_t cell = li * nt + ti;
            CvCell c;
            c.lambda = grid.lambdas[li];
            c.pcc_threshold = grid.pcc_thresholds[ti];
            for (std::size_t f = 0; f < k; ++f) {
                if (std::isnan(acc[f][cell])) {
                    if (c.valid) c.invalid_reason = reason[f][cell];
                    c.valid = false;
                    continue;
                }
                c.fold_accuracy.push_back(acc[f][cell]);
            }
            if (c.valid) {
                double sum = 0.0;
                for (double a : c.fold_accuracy) sum += a;
                c.mean_accuracy = sum / static_cast<double>(k);
                double ss = 0.0;
                for (double a : c.fold_accuracy) ss += (a - c.mean_accuracy) * (a - c.mean_accuracy);
                c.sd_accuracy = std::sqrt(ss / static_cast<double>(k - 1));
            }
            r.cells.push_back(std::move(c));
        }
    }
    if (std::none_of(r.cells.begin(), r.cells.end(), [](const CvCell& c) { return c.valid; })) {
        throw DataError("cross-validation: every grid cell is invalid (" + r.cells.front().invalid_reason + ")");
    }
    r.best = pick_best(r.cells);
    return r;
}

TrainResult train_sequence_model(const dataset::LabeledDataset& ds,
                                 const std::vector<std::vector<std::string>>& folds,
                                 const CvGrid& grid, const CvOptions& opts) {
    TrainResult out;
    out.cv = cross_validate(ds, folds, grid, opts);
    std::vector<std::vector<std::string>> docs;
    std::vector<int> labels;
    for (const auto& item : ds.items()) {
        docs.push_back(feature_tokens(item.sequence.text));
        labels.push_back(static_cast<int>(item.record.label));
    }
    const auto& best = out.cv.best_cell();
    out.model = fit_sequence_model(docs, labels, best.lambda, best.pcc_threshold, opts.penalty,
                                   opts.fit);
    return out;
}

Json to_json(const SequenceModel& m) {
    return Json{{"schema_version", io::kSchemaVersion},
                {"kind", "sequence_model"},
                {"tfidf", to_json(m.tfidf)},
                {"logreg", to_json(m.logreg)},
                {"pcc_threshold", m.pcc_threshold}};
}

SequenceModel sequence_model_from_json(const Json& j) {
    const int version = io::require<int>(j, "schema_version");
    if (version != io::kSchemaVersion) {
        throw DataError("sequence model: unsupported schema_version " + std::to_string(version));
    }
    if (j.value("kind", "") != "sequence_model") throw DataError("not a sequence model bundle");
    SequenceModel m;
    m.tfidf = tfidf_from_json(io::require<Json>(j, "tfidf"));
    m.logreg = logreg_from_json(io::require<Json>(j, "logreg"));
    m.pcc_threshold = io::require<double>(j, "pcc_threshold");
    if (m.logreg.dimension() != m.tfidf.dimension()) {
        throw DataError("sequence model: weight length differs from vocabulary size");
    }
    return m;
}

SequenceModel load_sequence_model(const std::filesystem::path& path) {
    try {
        return sequence_model_from_json(io::parse_json_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

Json to_json(const CvResult& r) {
    Json cells = Json::array();
    for (const auto& c : r.cells) {
        Json cj{{"lambda", c.lambda},
                {"pcc_threshold", c.pcc_threshold},
                {"fold_accuracy", c.fold_accuracy},
                {"mean_accuracy", c.mean_accuracy},
                {"sd_accuracy", c.sd_accuracy},
                {"valid", c.valid}};
        if (!c.valid) cj["invalid_reason"] = c.invalid_reason;
        cells.push_back(std::move(cj));
    }
    const auto& b = r.best_cell();
    return Json{{"schema_version", io::kSchemaVersion},
                {"folds", r.folds},
                {"grid", std::move(cells)},
                {"best", {{"lambda", b.lambda},
                          {"pcc_threshold", b.pcc_threshold},
                          {"mean_accuracy", b.mean_accuracy},
                          {"sd_accuracy", b.sd_accuracy}}}};
}

}  // namespace cogscreen::linmodel
