#include "cogscreen/service/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <mutex>

namespace cogscreen::service {

namespace fs = std::filesystem;
using io::Json;
using patterns::LabelRecord;
using patterns::LabelSource;

std::string_view to_string(SequenceStatus s) {
    switch (s) {
        case SequenceStatus::unlabeled: return "unlabeled";
        case SequenceStatus::manual: return "manual";
        case SequenceStatus::pattern: return "pattern";
        case SequenceStatus::conflict: return "conflict";
    }
    return "unlabeled";
}

std::optional<SequenceStatus> parse_status(std::string_view s) {
    for (auto st : {SequenceStatus::unlabeled, SequenceStatus::manual, SequenceStatus::pattern,
                    SequenceStatus::conflict}) {
        if (s == to_string(st)) return st;
    }
    return std::nullopt;
}

namespace {

void append_durable(const fs::path& path, const std::string& line) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw Error("cannot open " + path.string() + " for append");
    std::size_t done = 0;
    while (done < line.size()) {
        const ssize_t n = ::write(fd, line.data() + done, line.size() - done);
        if (n <= 0) {
            ::close(fd);
            throw Error("write to " + path.string() + " failed");
        }
        done += static_cast<std::size_t>(n);
    }
    const int rc = ::fsync(fd);
    ::close(fd);
    if (rc != 0) throw Error("fsync of " + path.string() + " failed");
}

std::string now_iso() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

AnnotationStore::AnnotationStore(fs::path dir, std::vector<extract::Sequence> sequences,
                                 std::size_t compact_every)
    : dir_(std::move(dir)), sequences_(std::move(sequences)),
      compact_every_(std::max<std::size_t>(1, compact_every)) {
    std::sort(sequences_.begin(), sequences_.end(),
              [](const auto& a, const auto& b) { return a.sequence_id < b.sequence_id; });
    for (std::size_t i = 0; i < sequences_.size(); ++i) {
        if (!seq_index_.emplace(sequences_[i].sequence_id, i).second) {
            throw DataError("duplicate sequence_id " + sequences_[i].sequence_id);
        }
    }
    fs::create_directories(dir_);
    load();
}

void AnnotationStore::load() {
    if (fs::exists(dir_ / kMeta)) {
        const Json meta = io::parse_json_file(dir_ / kMeta);
        if (meta.value("schema_version", 0) != io::kSchemaVersion) {
            throw DataError("store: unsupported schema_version");
        }
        snapshot_txn_ = last_txn_ = io::require<std::uint64_t>(meta, "last_txn");
    }
    if (fs::exists(dir_ / kPatterns)) {
        for (auto& p : patterns::load_patterns(dir_ / kPatterns)) patterns_[p.pattern_id] = p;
    }
    if (fs::exists(dir_ / kLabels)) {
        for (auto& r : patterns::load_labels(dir_ / kLabels)) labels_[r.sequence_id] = r;
    }
    const fs::path journal = dir_ / kJournal;
    if (fs::exists(journal)) {
        const std::string text = io::read_file(journal);
        std::size_t pos = 0, lineno = 0, good_end = 0;
        while (pos < text.size()) {
            ++lineno;
            const auto nl = text.find('\n', pos);
            const bool complete = nl != std::string::npos;
            const std::string line = text.substr(pos, complete ? nl - pos : std::string::npos);
            Json txn;
            try {
                txn = Json::parse(line);
            } catch (const Json::exception&) {
                if (!complete) break;  // torn final write
                throw DataError("store journal line " + std::to_string(lineno) + " is corrupt");
            }
            const auto id = io::require<std::uint64_t>(txn, "txn");
            if (id > last_txn_) {
                apply_ops(io::require<Json>(txn, "ops"));
                last_txn_ = id;
            }
            ++journal_entries_;
            pos = complete ? nl + 1 : text.size();
            good_end = pos;
        }
        if (good_end < text.size()) fs::resize_file(journal, good_end);
    }
    compiled_.clear();
    for (const auto& [id, p] : patterns_) compiled_.push_back(patterns::compile_pattern(p));
    recompute_conflicts();
}

void AnnotationStore::apply_ops(const Json& ops) {
    for (const auto& op : ops) {
        const auto kind = io::require<std::string>(op, "op");
        if (kind == "put_label") {
            auto r = patterns::label_from_json(io::require<Json>(op, "record"));
            labels_[r.sequence_id] = std::move(r);
        } else if (kind == "delete_label") {
            labels_.erase(io::require<std::string>(op, "sequence_id"));
        } else if (kind == "put_pattern") {
            auto p = patterns::pattern_from_json(io::require<Json>(op, "pattern"));
            patterns_[p.pattern_id] = std::move(p);
        } else {
            throw DataError("store journal: unknown op '" + kind + "'");
        }
    }
}

void AnnotationStore::commit(Json ops) {
    const Json txn{{"txn", last_txn_ + 1}, {"ops", ops}};
    append_durable(dir_ / kJournal, io::dump_line(txn) + "\n");
    ++last_txn_;
    ++journal_entries_;
    apply_ops(ops);
    if (journal_entries_ >= compact_every_) compact_locked();
}

void AnnotationStore::compact() {
    std::unique_lock lock(mu_);
    compact_locked();
}

void AnnotationStore::compact_locked() {
    std::vector<patterns::AlwaysPattern> ps;
    for (const auto& [id, p] : patterns_) ps.push_back(p);
    std::vector<LabelRecord> rs;
    for (const auto& [id, r] : labels_) rs.push_back(r);
    // Snapshot files first, then the watermark, then the journal: a crash at
    // any point leaves a state that replays to the same result.
    io::write_file_atomic(dir_ / kPatterns, patterns::patterns_jsonl(ps));
    io::write_file_atomic(dir_ / kLabels, patterns::labels_jsonl(rs));
    io::write_file_atomic(dir_ / kMeta, io::dump_pretty(Json{{"schema_version", io::kSchemaVersion},
                                                              {"last_txn", last_txn_}}));
    io::write_file_atomic(dir_ / kJournal, "");
    snapshot_txn_ = last_txn_;
    journal_entries_ = 0;
}

std::size_t AnnotationStore::journal_entries() const {
    std::shared_lock lock(mu_);
    return journal_entries_;
}

void AnnotationStore::recompute_conflicts() {
    std::vector<LabelRecord> existing;
    for (const auto& [id, r] : labels_) existing.push_back(r);
    const auto result = patterns::apply_compiled(compiled_, sequences_, existing);
    conflicts_.clear();
    for (const auto& c : result.conflicts) conflicts_.insert(c.sequence_id);
}

SequenceStatus AnnotationStore::status_of(const std::string& id) const {
    auto it = labels_.find(id);
    if (it != labels_.end()) {
        if (it->second.source == LabelSource::manual) return SequenceStatus::manual;
        if (!conflicts_.count(id)) return SequenceStatus::pattern;
    }
    if (conflicts_.count(id)) return SequenceStatus::conflict;
    return SequenceStatus::unlabeled;
}

StatusCounts AnnotationStore::counts() const {
    std::shared_lock lock(mu_);
    StatusCounts c;
    for (const auto& s : sequences_) {
        switch (status_of(s.sequence_id)) {
            case SequenceStatus::unlabeled: ++c.unlabeled; break;
            case SequenceStatus::manual: ++c.manual; break;
            case SequenceStatus::pattern: ++c.pattern; break;
            case SequenceStatus::conflict: ++c.conflict; break;
        }
    }
    return c;
}

Page AnnotationStore::page(std::optional<SequenceStatus> status, std::size_t page,
                           std::size_t page_size) const {
    if (page_size == 0) throw UsageError("page_size must be positive");
    std::shared_lock lock(mu_);
    Page out;
    out.page = page;
    out.page_size = page_size;
    const std::size_t first = page * page_size;
    for (const auto& s : sequences_) {
        const auto st = status_of(s.sequence_id);
        if (status && st != *status) continue;
        if (out.total >= first && out.items.size() < page_size) {
            SequenceView v{s, st, std::nullopt};
            auto it = labels_.find(s.sequence_id);
            if (it != labels_.end()) v.label = it->second;
            out.items.push_back(std::move(v));
        }
        ++out.total;
    }
    return out;
}

std::vector<patterns::AlwaysPattern> AnnotationStore::patterns() const {
    std::shared_lock lock(mu_);
    std::vector<patterns::AlwaysPattern> out;
    for (const auto& [id, p] : patterns_) out.push_back(p);
    return out;
}

std::vector<LabelRecord> AnnotationStore::labels() const {
    std::shared_lock lock(mu_);
    std::vector<LabelRecord> out;
    for (const auto& [id, r] : labels_) out.push_back(r);
    return out;
}

patterns::PreviewResult AnnotationStore::preview(const patterns::AlwaysPattern& candidate,
                                                 std::size_t max_samples) const {
    std::shared_lock lock(mu_);
    std::vector<patterns::AlwaysPattern> ps;
    for (const auto& [id, p] : patterns_) ps.push_back(p);
    std::vector<LabelRecord> rs;
    for (const auto& [id, r] : labels_) rs.push_back(r);
    return patterns::preview_pattern(candidate, ps, sequences_, rs, max_samples);
}

LabelResult AnnotationStore::put_manual_label(const std::string& sequence_id, Label label,
                                              const std::string& annotator) {
    std::unique_lock lock(mu_);
    if (!seq_index_.count(sequence_id)) throw NotFoundError("unknown sequence " + sequence_id);
    LabelRecord r;
    r.sequence_id = sequence_id;
    r.label = label;
    r.source = LabelSource::manual;
    r.annotator = annotator;
    auto it = labels_.find(sequence_id);
    if (it != labels_.end() && it->second == r) return {r, false};
    std::optional<LabelRecord> previous;
    if (it != labels_.end()) previous = it->second;

    commit(Json::array({Json{{"op", "put_label"}, {"record", patterns::to_json(r)}}}));
    conflicts_.erase(sequence_id);
    if (previous) {
        const Json audit{{"at", now_iso()},
                         {"sequence_id", sequence_id},
                         {"previous", patterns::to_json(*previous)},
                         {"record", patterns::to_json(r)}};
        append_durable(dir_ / kAudit, io::dump_line(audit) + "\n");
    }
    return {r, true};
}

AddPatternResult AnnotationStore::add_pattern(const std::string& regex_source, Label label,
                                              const std::string& author) {
    std::unique_lock lock(mu_);
    for (const auto& [id, p] : patterns_) {
        if (p.regex_source == regex_source && p.label == label) {
            throw DuplicateError("pattern " + id + " already has this regex and label");
        }
    }
    std::size_t next = patterns_.size() + 1;
    char id[32];
    do {
        std::snprintf(id, sizeof id, "pat-%04zu", next++);
    } while (patterns_.count(id));

    patterns::AlwaysPattern p;
    p.pattern_id = id;
    p.regex_source = regex_source;
    p.label = label;
    p.author = author;
    p.created_at = now_iso();
    auto compiled = patterns::compile_pattern(p);  // RegexError escapes untouched

    std::vector<patterns::CompiledPattern> all = compiled_;
    all.push_back(compiled);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.pattern.pattern_id < b.pattern.pattern_id;
    });
    std::vector<LabelRecord> existing;
    for (const auto& [sid, r] : labels_) existing.push_back(r);
    const auto result = patterns::apply_compiled(all, sequences_, existing);

    Json ops = Json::array({Json{{"op", "put_pattern"}, {"pattern", patterns::to_json(p)}}});
    for (const auto& sid : result.invalidated) ops.push_back({{"op", "delete_label"}, {"sequence_id", sid}});
    for (const auto& r : result.new_labels) ops.push_back({{"op", "put_label"}, {"record", patterns::to_json(r)}});
    commit(std::move(ops));
    compiled_ = std::move(all);
    conflicts_.clear();
    for (const auto& c : result.conflicts) conflicts_.insert(c.sequence_id);

    return {p, result.new_labels.size(), result.conflicts.size(), result.invalidated.size()};
}

}  // namespace cogscreen::service
