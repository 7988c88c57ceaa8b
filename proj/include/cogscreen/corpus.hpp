#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cogscreen/util/date.hpp"
#include "cogscreen/util/json_io.hpp"

namespace cogscreen::extract {
struct KeywordSet;
}

namespace cogscreen::corpus {

enum class Gender { male, female, other };
enum class ApoeGenotype { e2, e3, e4 };

struct PatientRecord {
    std::string patient_id;
    Date birth_date;
    Gender gender = Gender::other;
    std::string race;
    std::optional<ApoeGenotype> apoe_genotype;
    std::vector<std::string> note_ids;

    bool operator==(const PatientRecord&) const = default;
};

struct ClinicalNote {
    std::string note_id;
    std::string patient_id;
    Date date;
    std::string text;

    bool operator==(const ClinicalNote&) const = default;
};

/// Immutable after construction; note_ids on each patient are filled from the notes.
class Corpus {
public:
    Corpus() = default;
    /// Validates identifier uniqueness and note -> patient references.
    Corpus(std::vector<PatientRecord> patients, std::vector<ClinicalNote> notes);

    const std::vector<PatientRecord>& patients() const { return patients_; }
    const std::vector<ClinicalNote>& notes() const { return notes_; }
    const PatientRecord* find_patient(const std::string& id) const;
    std::vector<const ClinicalNote*> notes_for(const std::string& patient_id) const;

private:
    std::vector<PatientRecord> patients_;
    std::vector<ClinicalNote> notes_;
    std::unordered_map<std::string, std::size_t> patient_index_;
};

struct CohortCriteria {
    int min_age_years = 60;
    Date reference_date{2021, 7, 13};
    bool require_genotype = false;
    std::string keyword_set_id = "ci-keywords";
};

std::string_view to_string(Gender g);
std::string_view to_string(ApoeGenotype g);

io::Json to_json(const PatientRecord& p);
io::Json to_json(const ClinicalNote& n);
PatientRecord patient_from_json(const io::Json& j);
ClinicalNote note_from_json(const io::Json& j);

/// Loads `patients.jsonl` and `notes.jsonl`. Any malformed line aborts the load.
Corpus load_corpus(const std::filesystem::path& patients_path,
                   const std::filesystem::path& notes_path);
/// Same, using `<dir>/patients.jsonl` and `<dir>/notes.jsonl`.
Corpus load_corpus(const std::filesystem::path& dir);
/// Reads only notes (patients not required); used by screening uploads.
std::vector<ClinicalNote> parse_notes_jsonl(std::string_view text, std::string_view source);

std::string patients_jsonl(const Corpus& c);
std::string notes_jsonl(const Corpus& c);

/// Patients older than min_age_years (strict, whole years), with a genotype if
/// required, and at least one note with a keyword match; sorted by patient_id.
std::vector<std::string> filter_cohort(const Corpus& corpus, const CohortCriteria& criteria,
                                       std::span<const extract::KeywordSet> keyword_sets);

}  // namespace cogscreen::corpus
