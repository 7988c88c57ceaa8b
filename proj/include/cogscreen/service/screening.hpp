#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cogscreen/attention/scorer.hpp"
#include "cogscreen/corpus.hpp"
#include "cogscreen/extract.hpp"
#include "cogscreen/linmodel/logreg.hpp"
#include "cogscreen/patient.hpp"
#include "cogscreen/util/json_io.hpp"

namespace cogscreen::service {

struct ReportSequence {
    std::string sequence_id;
    std::string note_id;
    std::string text;
    std::vector<std::pair<std::size_t, std::size_t>> keyword_highlights;  // code points
    ClassProbs class_probs;
};

struct ScreeningReport {
    std::string report_id;
    std::string patient_id;
    std::size_t note_count = 0;
    double patient_ci_probability = 0.0;
    std::size_t high_ci_sequence_count = 0;  // p_positive > 0.5
    std::vector<ReportSequence> sequences;
    std::vector<std::pair<std::size_t, double>> scatter;  // (sequence index, p_positive)
    patient::PatientFeatures features;
    bool no_keyword_evidence = false;
    std::string recommendation;
    std::int64_t timing_ms = 0;
};

/// Notes as uploaded for screening: note_id and text are required;
/// patient_id and date are optional. Accepts {"notes":[...]}, a bare array,
/// or JSON lines. Throws DataError on anything else.
std::vector<corpus::ClinicalNote> parse_upload(std::string_view body);

struct ScreeningModels {
    extract::KeywordSet keywords;
    extract::ExtractConfig extract;
    attention::SequenceScorer* scorer = nullptr;
    const linmodel::LogRegModel* patient_model = nullptr;
};

/// Extract, score, aggregate, and predict. The report id is derived from the
/// notes' content. timing_ms is left at 0 for the caller to fill.
ScreeningReport screen_notes(const std::vector<corpus::ClinicalNote>& notes,
                             const ScreeningModels& models);

io::Json to_json(const ScreeningReport& r);
/// Canonical pretty-printed report; the bytes that are stored and served.
std::string report_text(const ScreeningReport& r);

}  // namespace cogscreen::service
