#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cogscreen/corpus.hpp"
#include "cogscreen/extract.hpp"
#include "cogscreen/patient.hpp"
#include "cogscreen/patterns.hpp"
#include "cogscreen/types.hpp"
#include "cogscreen/util/json_io.hpp"

namespace cogscreen::synth {

struct GenOptions {
    std::uint64_t seed = 7;
    std::size_t patients = 100;
    double ci_fraction = 0.5;
    double long_note_fraction = 0.1;
    double sparse_patient_fraction = 0.1;  // patients with fewer than 10 notes
    double too_young_fraction = 0.04;
};

/// Ground truth for one note.
struct PlantedNote {
    std::string note_id;
    std::string patient_id;
    Label label = Label::neither;
    std::size_t clusters = 0;  // keyword clusters, one sequence each
    std::vector<std::string> templates;
    bool in_cohort = true;
};

struct SyntheticCorpus {
    corpus::Corpus corpus;
    extract::KeywordSet keywords;
    std::vector<patterns::AlwaysPattern> patterns;
    std::vector<patient::PatientLabel> patient_labels;
    std::vector<PlantedNote> planted;
    std::size_t expected_sequences = 0;  // over in-cohort patients
    std::size_t cohort_patients = 0;
};

/// Deterministic per options. Throws Error if the generator's own audit fails
/// (a normalized text mismatch, or a pattern firing outside its class).
SyntheticCorpus generate(const GenOptions& opts);

io::Json manifest(const SyntheticCorpus& c, const GenOptions& opts);
io::Json to_json(const PlantedNote& p);

/// Writes patients.jsonl, notes.jsonl, keywords.json, patterns.jsonl,
/// patient_labels.jsonl, planted.jsonl and manifest.json under dir.
void write_corpus(const SyntheticCorpus& c, const GenOptions& opts,
                  const std::filesystem::path& dir);

}  // namespace cogscreen::synth
