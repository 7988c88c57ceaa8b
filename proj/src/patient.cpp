#include "cogscreen/patient.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "cogscreen/dataset.hpp"
#include "cogscreen/error.hpp"
#include "cogscreen/linmodel/sparse.hpp"

namespace cogscreen::patient {

using io::Json;
using linmodel::CsrMatrix;
using linmodel::LogRegModel;

std::vector<double> PatientFeatures::as_row() const {
    return {pct_positive, pct_negative, pct_neither, static_cast<double>(total_sequences)};
}

PatientFeatures aggregate_features(const std::string& patient_id,
                                   const std::vector<ClassProbs>& probs) {
    PatientFeatures f;
    f.patient_id = patient_id;
    f.total_sequences = probs.size();
    if (probs.empty()) return f;
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& p : probs) ++counts[static_cast<int>(p.argmax())];
    const double n = static_cast<double>(probs.size());
    f.pct_neither = static_cast<double>(counts[0]) / n;
    f.pct_negative = static_cast<double>(counts[1]) / n;
    f.pct_positive = static_cast<double>(counts[2]) / n;
    return f;
}

std::vector<PatientFeatures> filter_min_sequences(const std::vector<PatientFeatures>& features,
                                                  std::size_t min_count) {
    std::vector<PatientFeatures> out;
    for (const auto& f : features) {
        if (f.total_sequences > min_count) out.push_back(f);
    }
    return out;
}

Json to_json(const PatientLabel& l) {
    return Json{{"patient_id", l.patient_id}, {"has_ci", l.has_ci}, {"source", l.source}};
}

PatientLabel patient_label_from_json(const Json& j) {
    return PatientLabel{io::require<std::string>(j, "patient_id"), io::require<bool>(j, "has_ci"),
                        j.value("source", "")};
}

std::vector<PatientLabel> load_patient_labels(const std::filesystem::path& path) {
    std::vector<PatientLabel> out;
    std::set<std::string> seen;
    io::for_each_jsonl(path, [&](const Json& j, std::size_t) {
        PatientLabel l = patient_label_from_json(j);
        if (!seen.insert(l.patient_id).second) {
            throw DataError("duplicate label for patient " + l.patient_id);
        }
        out.push_back(std::move(l));
    });
    return out;
}

std::string patient_labels_jsonl(const std::vector<PatientLabel>& labels) {
    std::string out;
    for (const auto& l : labels) out += io::dump_line(to_json(l)) + "\n";
    return out;
}

std::string features_csv(const std::vector<PatientFeatures>& features) {
    std::string out = "patient_id,pct_positive,pct_negative,pct_neither,total_sequences\n";
    for (const auto& f : features) {
        if (f.patient_id.find_first_of(",\"\n") != std::string::npos) {
            throw DataError("patient id '" + f.patient_id + "' cannot be written to CSV");
        }
        out += f.patient_id + "," + io::dump_line(f.pct_positive) + "," +
               io::dump_line(f.pct_negative) + "," + io::dump_line(f.pct_neither) + "," +
               std::to_string(f.total_sequences) + "\n";
    }
    return out;
}

std::vector<PatientFeatures> parse_features_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<PatientFeatures> out;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 || line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5) {
            throw DataError("features csv line " + std::to_string(lineno) + ": expected 5 fields");
        }
        try {
            PatientFeatures f;
            f.patient_id = cells[0];
            f.pct_positive = std::stod(cells[1]);
            f.pct_negative = std::stod(cells[2]);
            f.pct_neither = std::stod(cells[3]);
            f.total_sequences = std::stoul(cells[4]);
            out.push_back(f);
        } catch (const std::logic_error&) {
            throw DataError("features csv line " + std::to_string(lineno) + ": bad number");
        }
    }
    return out;
}

namespace {

struct Rows {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
};

CsrMatrix standardized_matrix(const linmodel::Standardizer& s,
                              const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<double>> z;
    z.reserve(rows.size());
    for (const auto& r : rows) z.push_back(s.apply(r));
    return CsrMatrix::from_dense(z, s.mean.size());
}

LogRegModel fit_standardized(const Rows& rows, double lambda, const PatientTrainOptions& opts) {
    linmodel::Standardizer s = linmodel::fit_standardizer(rows.x);
    LogRegModel m = linmodel::fit_logreg(standardized_matrix(s, rows.x), rows.y, opts.penalty,
                                         lambda, opts.fit, {0, 1});
    m.standardizer = std::move(s);
    return m;
}

}  // namespace

double predict_patient(const LogRegModel& model, const PatientFeatures& features) {
    if (!model.binary()) throw DataError("patient model must be binary");
    const auto row = features.as_row();
    return linmodel::predict_proba(model, std::span<const double>(row))[1];
}

PatientTrainResult train_patient_model(const std::vector<PatientFeatures>& features,
                                       const std::vector<PatientLabel>& labels,
                                       const PatientTrainOptions& opts) {
    if (opts.lambdas.empty()) throw UsageError("patient lambda grid must be non-empty");
    std::map<std::string, bool> label_of;
    for (const auto& l : labels) label_of[l.patient_id] = l.has_ci;

    Rows all;
    std::vector<std::string> ids;
    for (const auto& f : features) {
        auto it = label_of.find(f.patient_id);
        if (it == label_of.end()) throw DataError("no label for patient " + f.patient_id);
        all.x.push_back(f.as_row());
        all.y.push_back(it->second ? 1 : 0);
        ids.push_back(f.patient_id);
    }
    if (std::set<int>(all.y.begin(), all.y.end()).size() < 2) {
        throw DataError("patient labels contain a single class");
    }

    const std::size_t k = std::min(opts.folds, ids.size());
    if (k < 2) throw UsageError("patient cross-validation needs at least two folds");
    const auto folds = dataset::kfold_patient_folds(ids, k, opts.seed);
    std::map<std::string, std::size_t> fold_of;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        for (const auto& p : folds[f]) fold_of[p] = f;
    }

    PatientTrainResult result;
    for (double lambda : opts.lambdas) {
        PatientCvCell cell;
        cell.lambda = lambda;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            Rows train, test;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                Rows& dst = fold_of[ids[i]] == f ? test : train;
                dst.x.push_back(all.x[i]);
                dst.y.push_back(all.y[i]);
            }
            if (std::set<int>(train.y.begin(), train.y.end()).size() < 2) {
                cell.valid = false;
                break;
            }
            const LogRegModel m = fit_standardized(train, lambda, opts);
            std::size_t correct = 0;
            for (std::size_t i = 0; i < test.x.size(); ++i) {
                const double p = linmodel::predict_proba(m, std::span<const double>(test.x[i]))[1];
                if ((p >= 0.5 ? 1 : 0) == test.y[i]) ++correct;
            }
            cell.fold_accuracy.push_back(static_cast<double>(correct) /
                                         static_cast<double>(test.x.size()));
        }
        if (cell.valid) {
            double sum = 0.0;
            for (double a : cell.fold_accuracy) sum += a;
            const double n = static_cast<double>(cell.fold_accuracy.size());
            cell.mean_accuracy = sum / n;
            double ss = 0.0;
            for (double a : cell.fold_accuracy) ss += (a - cell.mean_accuracy) * (a - cell.mean_accuracy);
            cell.sd_accuracy = std::sqrt(ss / (n - 1.0));
        }
        result.cv.push_back(std::move(cell));
    }

    std::size_t best = result.cv.size();
    for (std::size_t i = 0; i < result.cv.size(); ++i) {
        if (!result.cv[i].valid) continue;
        if (best == result.cv.size() ||
            std::tuple(result.cv[i].mean_accuracy, result.cv[i].lambda) >
                std::tuple(result.cv[best].mean_accuracy, result.cv[best].lambda)) {
            best = i;
        }
    }
    if (best == result.cv.size()) throw DataError("patient cross-validation: all cells invalid");
    result.best = best;
    result.model = fit_standardized(all, result.cv[best].lambda, opts);
    return result;
}

Json to_json(const PatientTrainResult& r) {
    Json cv = Json::array();
    for (const auto& c : r.cv) {
        cv.push_back({{"lambda", c.lambda},
                      {"fold_accuracy", c.fold_accuracy},
                      {"mean_accuracy", c.mean_accuracy},
                      {"sd_accuracy", c.sd_accuracy},
                      {"valid", c.valid}});
    }
    return Json{{"schema_version", io::kSchemaVersion},
                {"kind", "patient_model"},
                {"features", {"pct_positive", "pct_negative", "pct_neither", "total_sequences"}},
                {"model", linmodel::to_json(r.model)},
                {"cv", std::move(cv)},
                {"best_lambda", r.cv.at(r.best).lambda}};
}

LogRegModel patient_model_from_json(const Json& j) {
    if (j.value("schema_version", 0) != io::kSchemaVersion) {
        throw DataError("patient model: unsupported schema_version");
    }
    if (j.value("kind", "") != "patient_model") throw DataError("not a patient model file");
    LogRegModel m = linmodel::logreg_from_json(io::require<Json>(j, "model"));
    if (!m.binary() || m.dimension() != 4 || !m.standardizer) {
        throw DataError("patient model must be binary over 4 standardized features");
    }
    return m;
}

LogRegModel load_patient_model(const std::filesystem::path& path) {
    try {
        return patient_model_from_json(io::parse_json_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace cogscreen::patient
