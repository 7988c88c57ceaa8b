#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cogscreen/extract.hpp"
#include "cogscreen/regex.hpp"
#include "cogscreen/types.hpp"
#include "cogscreen/util/json_io.hpp"

namespace cogscreen::patterns {

/// A regex that labels every sequence it matches with a fixed class.
struct AlwaysPattern {
    std::string pattern_id;
    std::string regex_source;
    Label label = Label::neither;
    std::string author;
    std::string created_at;  // ISO-8601 timestamp

    bool operator==(const AlwaysPattern&) const = default;
};

enum class LabelSource { manual, pattern };

struct LabelRecord {
    std::string sequence_id;
    Label label = Label::neither;
    LabelSource source = LabelSource::manual;
    std::optional<std::string> pattern_id;
    std::optional<std::string> annotator;

    bool operator==(const LabelRecord&) const = default;
};

struct CompiledPattern {
    AlwaysPattern pattern;
    regex::Regex regex;
};

/// Sequence matched by patterns that disagree on the label.
struct ConflictReport {
    std::string sequence_id;
    std::vector<std::string> pattern_ids;
    std::vector<Label> labels;

    bool operator==(const ConflictReport&) const = default;
};

struct ApplyResult {
    std::vector<LabelRecord> new_labels;
    std::vector<ConflictReport> conflicts;
    /// Existing pattern-sourced records whose sequence now has disagreeing matches.
    std::vector<std::string> invalidated;
};

CompiledPattern compile_pattern(const AlwaysPattern& p);

/// Pattern labels are a function of (patterns, sequences, manual labels):
/// sequences with a manual record are never touched; every other sequence
/// whose matching patterns all agree gets a pattern record attributed to the
/// first matching pattern_id (by id order); disagreement yields a conflict
/// and no label. Records already present and unchanged are not repeated.
ApplyResult apply_patterns(const std::vector<AlwaysPattern>& patterns,
                           const std::vector<extract::Sequence>& sequences,
                           const std::vector<LabelRecord>& existing);
ApplyResult apply_compiled(const std::vector<CompiledPattern>& patterns,
                           const std::vector<extract::Sequence>& sequences,
                           const std::vector<LabelRecord>& existing);

struct PreviewResult {
    std::size_t would_label = 0;
    std::vector<std::string> sample_sequence_ids;
    std::size_t would_conflict = 0;
};

/// Dry run: what adding `candidate` to `patterns` would change.
PreviewResult preview_pattern(const AlwaysPattern& candidate,
                              const std::vector<AlwaysPattern>& patterns,
                              const std::vector<extract::Sequence>& sequences,
                              const std::vector<LabelRecord>& existing,
                              std::size_t max_samples = 10);

/// Merges apply results into a label set (sorted by sequence_id).
std::vector<LabelRecord> merge_labels(const std::vector<LabelRecord>& existing,
                                      const ApplyResult& result);

io::Json to_json(const AlwaysPattern& p);
AlwaysPattern pattern_from_json(const io::Json& j);
io::Json to_json(const LabelRecord& r);
LabelRecord label_from_json(const io::Json& j);
io::Json to_json(const ConflictReport& c);

std::vector<AlwaysPattern> load_patterns(const std::filesystem::path& path);
std::vector<LabelRecord> load_labels(const std::filesystem::path& path);
std::string patterns_jsonl(const std::vector<AlwaysPattern>& ps);
std::string labels_jsonl(const std::vector<LabelRecord>& rs);

}  // namespace cogscreen::patterns
