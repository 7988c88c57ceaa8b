#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cogscreen/error.hpp"
#include "cogscreen/extract.hpp"
#include "cogscreen/patterns.hpp"

namespace cogscreen::service {

/// The same (regex_source, label) pair is already registered.
class DuplicateError : public Error {
public:
    using Error::Error;
};

enum class SequenceStatus { unlabeled, manual, pattern, conflict };
std::string_view to_string(SequenceStatus s);
std::optional<SequenceStatus> parse_status(std::string_view s);

struct StatusCounts {
    std::size_t unlabeled = 0;
    std::size_t manual = 0;
    std::size_t pattern = 0;
    std::size_t conflict = 0;

    bool operator==(const StatusCounts&) const = default;
};

struct SequenceView {
    extract::Sequence sequence;
    SequenceStatus status = SequenceStatus::unlabeled;
    std::optional<patterns::LabelRecord> label;
};

struct Page {
    std::vector<SequenceView> items;
    std::size_t total = 0;  // matching the filter
    std::size_t page = 0;
    std::size_t page_size = 0;
};

struct AddPatternResult {
    patterns::AlwaysPattern pattern;
    std::size_t applied = 0;
    std::size_t conflicts = 0;
    std::size_t invalidated = 0;
};

struct LabelResult {
    patterns::LabelRecord record;
    bool changed = false;
};

/// Patterns and labels over a fixed sequence set. Every mutation is one
/// journal line (append + fsync) before it becomes visible; compaction
/// rewrites the snapshot files and empties the journal. Replay is idempotent
/// and ignores a torn final line.
class AnnotationStore {
public:
    AnnotationStore(std::filesystem::path dir, std::vector<extract::Sequence> sequences,
                    std::size_t compact_every = 64);

    StatusCounts counts() const;
    /// Sequences in sequence_id order; page is 0-based.
    Page page(std::optional<SequenceStatus> status, std::size_t page, std::size_t page_size) const;
    std::vector<patterns::AlwaysPattern> patterns() const;
    std::vector<patterns::LabelRecord> labels() const;
    patterns::PreviewResult preview(const patterns::AlwaysPattern& candidate,
                                    std::size_t max_samples = 10) const;

    /// Throws NotFoundError for an unknown sequence. Re-posting the current
    /// manual label is a no-op.
    LabelResult put_manual_label(const std::string& sequence_id, Label label,
                                 const std::string& annotator);
    /// Throws RegexError for an invalid regex and DuplicateError for a repeat.
    AddPatternResult add_pattern(const std::string& regex_source, Label label,
                                 const std::string& author);

    void compact();
    std::size_t journal_entries() const;

    static constexpr const char* kJournal = "journal.jsonl";
    static constexpr const char* kAudit = "audit.jsonl";
    static constexpr const char* kMeta = "store.json";
    static constexpr const char* kPatterns = "patterns.jsonl";
    static constexpr const char* kLabels = "labels.jsonl";

private:
    void load();
    void apply_ops(const io::Json& ops);
    void commit(io::Json ops);  // caller holds the write lock
    void compact_locked();
    void recompute_conflicts();
    SequenceStatus status_of(const std::string& id) const;

    std::filesystem::path dir_;
    std::vector<extract::Sequence> sequences_;  // sorted by id
    std::map<std::string, std::size_t> seq_index_;
    std::size_t compact_every_;

    mutable std::shared_mutex mu_;
    std::map<std::string, patterns::AlwaysPattern> patterns_;
    std::vector<patterns::CompiledPattern> compiled_;  // pattern_id order
    std::map<std::string, patterns::LabelRecord> labels_;
    std::set<std::string> conflicts_;
    std::uint64_t last_txn_ = 0;
    std::uint64_t snapshot_txn_ = 0;
    std::size_t journal_entries_ = 0;
};

}  // namespace cogscreen::service
