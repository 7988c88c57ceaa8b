#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cogscreen/dataset.hpp"
#include "cogscreen/linmodel/logreg.hpp"
#include "cogscreen/linmodel/tfidf.hpp"
#include "cogscreen/types.hpp"

namespace cogscreen::linmodel {

/// Lowercased extraction tokens; the TF-IDF document for a sequence.
std::vector<std::string> feature_tokens(std::string_view text);

/// TF-IDF + PCC mask + logistic regression over the full vocabulary
/// (unselected columns carry zero weight).
struct SequenceModel {
    TfidfModel tfidf;
    LogRegModel logreg;
    double pcc_threshold = 0.0;
};

ClassProbs predict(const SequenceModel& m, std::string_view text);
ClassProbs predict_tokens(const SequenceModel& m, std::span<const std::string> tokens);

/// Fits one model on the given documents at a fixed (lambda, threshold).
SequenceModel fit_sequence_model(std::span<const std::vector<std::string>> docs,
                                 std::span<const int> labels, double lambda,
                                 double pcc_threshold, Penalty penalty = Penalty::l1,
                                 const FitOptions& opts = {}, std::vector<int> classes = {});

struct CvGrid {
    std::vector<double> lambdas{0.1, 1.0, 10.0, 100.0};
    std::vector<double> pcc_thresholds{0.0, 0.01, 0.05, 0.1};
};

struct CvCell {
    double lambda = 0.0;
    double pcc_threshold = 0.0;
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
    double sd_accuracy = 0.0;  // sample sd across folds
    bool valid = true;
    std::string invalid_reason;
};

struct CvResult {
    std::vector<CvCell> cells;  // lambda-major, grid order
    std::size_t folds = 0;
    std::size_t best = 0;

    const CvCell& best_cell() const { return cells.at(best); }
};

struct CvOptions {
    Penalty penalty = Penalty::l1;
    FitOptions fit;
    std::size_t threads = 0;  // 0: hardware concurrency
};

/// Highest mean accuracy among valid cells; ties to larger lambda, then larger threshold.
std::size_t pick_best(const std::vector<CvCell>& cells);

/// folds are patient-id groups (see dataset::kfold_patient_folds).
CvResult cross_validate(const dataset::LabeledDataset& ds,
                        const std::vector<std::vector<std::string>>& folds, const CvGrid& grid,
                        const CvOptions& opts = {});

struct TrainResult {
    SequenceModel model;
    CvResult cv;
};

/// Cross-validates, then refits the best cell on the whole dataset.
TrainResult train_sequence_model(const dataset::LabeledDataset& ds,
                                 const std::vector<std::vector<std::string>>& folds,
                                 const CvGrid& grid, const CvOptions& opts = {});

io::Json to_json(const SequenceModel& m);
SequenceModel sequence_model_from_json(const io::Json& j);
SequenceModel load_sequence_model(const std::filesystem::path& path);
io::Json to_json(const CvResult& r);

}  // namespace cogscreen::linmodel
