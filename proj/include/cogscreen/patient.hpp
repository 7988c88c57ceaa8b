#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "cogscreen/linmodel/logreg.hpp"
#include "cogscreen/types.hpp"
#include "cogscreen/util/json_io.hpp"

namespace cogscreen::patient {

struct PatientFeatures {
    std::string patient_id;
    double pct_positive = 0.0;
    double pct_negative = 0.0;
    double pct_neither = 0.0;
    std::size_t total_sequences = 0;

    /// (pct_positive, pct_negative, pct_neither, total_sequences)
    std::vector<double> as_row() const;
    bool operator==(const PatientFeatures&) const = default;
};

/// Counts each sequence under its argmax class (ties toward positive).
PatientFeatures aggregate_features(const std::string& patient_id,
                                   const std::vector<ClassProbs>& probs);

/// Keeps patients with strictly more than min_count sequences.
std::vector<PatientFeatures> filter_min_sequences(const std::vector<PatientFeatures>& features,
                                                  std::size_t min_count = 10);

struct PatientLabel {
    std::string patient_id;
    bool has_ci = false;
    std::string source;
};

io::Json to_json(const PatientLabel& l);
PatientLabel patient_label_from_json(const io::Json& j);
std::vector<PatientLabel> load_patient_labels(const std::filesystem::path& path);
std::string patient_labels_jsonl(const std::vector<PatientLabel>& labels);

std::string features_csv(const std::vector<PatientFeatures>& features);
std::vector<PatientFeatures> parse_features_csv(std::string_view text);

struct PatientCvCell {
    double lambda = 0.0;
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
    double sd_accuracy = 0.0;
    bool valid = true;
};

struct PatientTrainResult {
    linmodel::LogRegModel model;  // binary, classes (0, 1), with standardizer
    std::vector<PatientCvCell> cv;
    std::size_t best = 0;
};

struct PatientTrainOptions {
    std::vector<double> lambdas{0.0, 0.1, 1.0, 10.0};
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    linmodel::Penalty penalty = linmodel::Penalty::l1;
    linmodel::FitOptions fit;
};

/// Cross-validates lambda (standardizer fitted inside each training fold),
/// then refits on all rows. Rows without a label throw DataError, as do
/// single-class labels.
PatientTrainResult train_patient_model(const std::vector<PatientFeatures>& features,
                                       const std::vector<PatientLabel>& labels,
                                       const PatientTrainOptions& opts = {});

/// CI probability with the model's own standardization applied.
double predict_patient(const linmodel::LogRegModel& model, const PatientFeatures& features);

io::Json to_json(const PatientTrainResult& r);
linmodel::LogRegModel patient_model_from_json(const io::Json& j);
linmodel::LogRegModel load_patient_model(const std::filesystem::path& path);

}  // namespace cogscreen::patient
