#include "cogscreen/corpus.hpp"

#include <algorithm>
#include <unordered_set>

#include "cogscreen/error.hpp"
#include "cogscreen/extract.hpp"

namespace cogscreen::corpus {

using io::Json;

namespace {

Gender parse_gender(const std::string& s) {
    if (s == "male" || s == "M" || s == "m") return Gender::male;
    if (s == "female" || s == "F" || s == "f") return Gender::female;
    return Gender::other;
}

std::optional<ApoeGenotype> parse_genotype(const Json& j) {
    if (j.is_null()) return std::nullopt;
    const auto s = j.get<std::string>();
    if (s == "e2") return ApoeGenotype::e2;
    if (s == "e3") return ApoeGenotype::e3;
    if (s == "e4") return ApoeGenotype::e4;
    throw DataError("unknown apoe_genotype '" + s + "'");
}

}  // namespace

std::string_view to_string(Gender g) {
    switch (g) {
        case Gender::male: return "male";
        case Gender::female: return "female";
        case Gender::other: return "other";
    }
    return "other";
}

std::string_view to_string(ApoeGenotype g) {
    switch (g) {
        case ApoeGenotype::e2: return "e2";
        case ApoeGenotype::e3: return "e3";
        case ApoeGenotype::e4: return "e4";
    }
    return "e3";
}

Corpus::Corpus(std::vector<PatientRecord> patients, std::vector<ClinicalNote> notes)
    : patients_(std::move(patients)), notes_(std::move(notes)) {
    for (std::size_t i = 0; i < patients_.size(); ++i) {
        if (!patient_index_.emplace(patients_[i].patient_id, i).second) {
            throw DataError("duplicate patient_id '" + patients_[i].patient_id + "'");
        }
        patients_[i].note_ids.clear();
    }
    std::unordered_set<std::string> note_ids;
    for (const auto& n : notes_) {
        if (!note_ids.insert(n.note_id).second) {
            throw DataError("duplicate note_id '" + n.note_id + "'");
        }
        auto it = patient_index_.find(n.patient_id);
        if (it == patient_index_.end()) {
            throw DataError("note '" + n.note_id + "' references unknown patient '" +
                            n.patient_id + "'");
        }
        patients_[it->second].note_ids.push_back(n.note_id);
    }
}

const PatientRecord* Corpus::find_patient(const std::string& id) const {
    auto it = patient_index_.find(id);
    return it == patient_index_.end() ? nullptr : &patients_[it->second];
}

std::vector<const ClinicalNote*> Corpus::notes_for(const std::string& patient_id) const {
    std::vector<const ClinicalNote*> out;
    for (const auto& n : notes_) {
        if (n.patient_id == patient_id) out.push_back(&n);
    }
    return out;
}

Json to_json(const PatientRecord& p) {
    Json j;
    j["patient_id"] = p.patient_id;
    j["birth_date"] = p.birth_date.to_string();
    j["gender"] = std::string(to_string(p.gender));
    j["race"] = p.race;
    j["apoe_genotype"] = p.apoe_genotype ? Json(std::string(to_string(*p.apoe_genotype))) : Json();
    return j;
}

Json to_json(const ClinicalNote& n) {
    return Json{{"note_id", n.note_id},
                {"patient_id", n.patient_id},
                {"date", n.date.to_string()},
                {"text", n.text}};
}

PatientRecord patient_from_json(const Json& j) {
    PatientRecord p;
    p.patient_id = io::require<std::string>(j, "patient_id");
    if (p.patient_id.empty()) throw DataError("empty patient_id");
    p.birth_date = Date::parse(io::require<std::string>(j, "birth_date"));
    p.gender = parse_gender(j.value("gender", std::string("other")));
    p.race = j.value("race", std::string());
    p.apoe_genotype = parse_genotype(j.contains("apoe_genotype") ? j["apoe_genotype"] : Json());
    return p;
}

ClinicalNote note_from_json(const Json& j) {
    ClinicalNote n;
    n.note_id = io::require<std::string>(j, "note_id");
    if (n.note_id.empty()) throw DataError("empty note_id");
    n.patient_id = io::require<std::string>(j, "patient_id");
    n.date = Date::parse(io::require<std::string>(j, "date"));
    n.text = io::require<std::string>(j, "text");
    if (extract::normalize_text(n.text).empty()) {
        throw DataError("note '" + n.note_id + "' has empty text");
    }
    return n;
}

std::vector<ClinicalNote> parse_notes_jsonl(std::string_view text, std::string_view source) {
    std::vector<ClinicalNote> notes;
    io::for_each_jsonl_text(text, source, [&](const Json& j, std::size_t) {
        notes.push_back(note_from_json(j));
    });
    return notes;
}

Corpus load_corpus(const std::filesystem::path& patients_path,
                   const std::filesystem::path& notes_path) {
    std::vector<PatientRecord> patients;
    io::for_each_jsonl(patients_path, [&](const Json& j, std::size_t) {
        patients.push_back(patient_from_json(j));
    });
    std::vector<ClinicalNote> notes;
    io::for_each_jsonl(notes_path, [&](const Json& j, std::size_t) {
        notes.push_back(note_from_json(j));
    });
    return Corpus(std::move(patients), std::move(notes));
}

Corpus load_corpus(const std::filesystem::path& dir) {
    return load_corpus(dir / "patients.jsonl", dir / "notes.jsonl");
}

std::string patients_jsonl(const Corpus& c) {
    std::string out;
    for (const auto& p : c.patients()) out += io::dump_line(to_json(p)) + "\n";
    return out;
}

std::string notes_jsonl(const Corpus& c) {
    std::string out;
    for (const auto& n : c.notes()) out += io::dump_line(to_json(n)) + "\n";
    return out;
}

std::vector<std::string> filter_cohort(const Corpus& corpus, const CohortCriteria& criteria,
                                       std::span<const extract::KeywordSet> keyword_sets) {
    if (criteria.min_age_years < 0) throw UsageError("min_age_years must be >= 0");
    const extract::KeywordSet* ks = nullptr;
    for (const auto& k : keyword_sets) {
        if (k.id == criteria.keyword_set_id) ks = &k;
    }
    if (ks == nullptr) {
        throw UsageError("unknown keyword set '" + criteria.keyword_set_id + "'");
    }

    std::unordered_set<std::string> with_keyword;
    for (const auto& n : corpus.notes()) {
        if (with_keyword.contains(n.patient_id)) continue;
        const auto normalized = extract::normalize_text(n.text);
        if (!extract::find_keyword_matches(normalized, *ks).empty()) {
            with_keyword.insert(n.patient_id);
        }
    }

    std::vector<std::string> kept;
    for (const auto& p : corpus.patients()) {
        if (age_in_years(p.birth_date, criteria.reference_date) <= criteria.min_age_years) continue;
        if (criteria.require_genotype && !p.apoe_genotype) continue;
        if (!with_keyword.contains(p.patient_id)) continue;
        kept.push_back(p.patient_id);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

}  // namespace cogscreen::corpus
