#include "cogscreen/service/screening.hpp"

#include <set>

#include "cogscreen/error.hpp"
#include "cogscreen/util/hash.hpp"

namespace cogscreen::service {

using io::Json;

namespace {

corpus::ClinicalNote upload_note(const Json& j, std::size_t index) {
    if (!j.is_object()) throw DataError("note " + std::to_string(index) + " is not an object");
    corpus::ClinicalNote n;
    n.note_id = j.contains("note_id") ? io::require<std::string>(j, "note_id")
                                      : "note-" + std::to_string(index + 1);
    n.patient_id = j.value("patient_id", std::string("upload"));
    n.date = j.contains("date") ? Date::parse(io::require<std::string>(j, "date")) : Date{1970, 1, 1};
    n.text = io::require<std::string>(j, "text");
    return n;
}

}  // namespace

std::vector<corpus::ClinicalNote> parse_upload(std::string_view body) {
    std::vector<Json> items;
    const auto first = body.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    try {
        if (body[first] == '[') {
            for (auto& j : Json::parse(body)) items.push_back(std::move(j));
        } else {
            Json whole;
            bool single_document = true;
            try {
                whole = Json::parse(body);
            } catch (const Json::exception&) {
                single_document = false;
            }
            if (single_document && whole.is_object() && whole.contains("notes")) {
                if (!whole["notes"].is_array()) throw DataError("'notes' must be an array");
                for (auto& j : whole["notes"]) items.push_back(std::move(j));
            } else {
                io::for_each_jsonl_text(body, "upload",
                                        [&](const Json& j, std::size_t) { items.push_back(j); });
            }
        }
    } catch (const Json::exception& e) {
        throw DataError(std::string("upload is not valid JSON: ") + e.what());
    }
    std::vector<corpus::ClinicalNote> notes;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto n = upload_note(items[i], i);
        if (!ids.insert(n.note_id).second) throw DataError("duplicate note_id '" + n.note_id + "'");
        notes.push_back(std::move(n));
    }
    return notes;
}

ScreeningReport screen_notes(const std::vector<corpus::ClinicalNote>& notes,
                             const ScreeningModels& models) {
    if (models.scorer == nullptr || models.patient_model == nullptr) {
        throw UsageError("screening needs a scorer and a patient model");
    }
    ScreeningReport r;
    r.note_count = notes.size();
    std::set<std::string> patients;
    for (const auto& n : notes) patients.insert(n.patient_id);
    if (patients.size() > 1) throw DataError("uploaded notes belong to more than one patient");
    r.patient_id = patients.empty() ? "upload" : *patients.begin();

    Json canonical = Json::array();
    std::vector<extract::Sequence> seqs;
    for (const auto& n : notes) {
        canonical.push_back(corpus::to_json(n));
        for (auto& s : extract::construct_sequences(n, models.keywords, models.extract)) {
            seqs.push_back(std::move(s));
        }
    }
    r.report_id = hex64(fnv1a64(io::dump_line(canonical)));

    const auto probs = seqs.empty() ? std::vector<ClassProbs>{} : models.scorer->score(seqs);
    if (probs.size() != seqs.size()) throw ScorerError("scorer returned the wrong number of results");
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        ReportSequence rs;
        rs.sequence_id = seqs[i].sequence_id;
        rs.note_id = seqs[i].note_id;
        rs.text = seqs[i].text;
        for (const auto& m : seqs[i].keyword_matches) rs.keyword_highlights.emplace_back(m.start, m.end);
        rs.class_probs = probs[i];
        if (probs[i].p_positive > 0.5) ++r.high_ci_sequence_count;
        r.scatter.emplace_back(i, probs[i].p_positive);
        r.sequences.push_back(std::move(rs));
    }
    r.features = patient::aggregate_features(r.patient_id, probs);
    r.patient_ci_probability = patient::predict_patient(*models.patient_model, r.features);
    r.no_keyword_evidence = seqs.empty();
    if (r.no_keyword_evidence) {
        r.recommendation =
            "No keyword evidence of cognitive impairment was found in the uploaded notes.";
    } else if (r.patient_ci_probability > 0.5) {
        r.recommendation =
            "Notes indicate probable cognitive impairment; refer for a clinical cognitive assessment.";
    } else {
        r.recommendation =
            "Low probability of cognitive impairment; continue routine monitoring.";
    }
    return r;
}

Json to_json(const ScreeningReport& r) {
    Json seqs = Json::array();
    for (const auto& s : r.sequences) {
        Json hl = Json::array();
        for (const auto& [a, b] : s.keyword_highlights) hl.push_back({a, b});
        seqs.push_back({{"sequence_id", s.sequence_id},
                        {"note_id", s.note_id},
                        {"text", s.text},
                        {"keyword_highlights", hl},
                        {"class_probs",
                         {{"p_neither", s.class_probs.p_neither},
                          {"p_negative", s.class_probs.p_negative},
                          {"p_positive", s.class_probs.p_positive}}}});
    }
    Json scatter = Json::array();
    for (const auto& [i, p] : r.scatter) scatter.push_back({i, p});
    return Json{{"schema_version", io::kSchemaVersion},
                {"report_id", r.report_id},
                {"patient_id", r.patient_id},
                {"note_count", r.note_count},
                {"patient_ci_probability", r.patient_ci_probability},
                {"high_ci_sequence_count", r.high_ci_sequence_count},
                {"sequences", seqs},
                {"scatter", scatter},
                {"features",
                 {{"pct_positive", r.features.pct_positive},
                  {"pct_negative", r.features.pct_negative},
                  {"pct_neither", r.features.pct_neither},
                  {"total_sequences", r.features.total_sequences}}},
                {"no_keyword_evidence", r.no_keyword_evidence},
                {"recommendation", r.recommendation},
                {"timing_ms", r.timing_ms}};
}

std::string report_text(const ScreeningReport& r) { return io::dump_pretty(to_json(r)); }

}  // namespace cogscreen::service
