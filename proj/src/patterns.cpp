#include "cogscreen/patterns.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "cogscreen/error.hpp"
#include "cogscreen/util/utf8.hpp"

namespace cogscreen::patterns {

using io::Json;

CompiledPattern compile_pattern(const AlwaysPattern& p) {
    return CompiledPattern{p, regex::Regex::compile(p.regex_source)};
}

namespace {

std::vector<CompiledPattern> compile_all(const std::vector<AlwaysPattern>& patterns) {
    std::vector<CompiledPattern> out;
    out.reserve(patterns.size());
    std::set<std::string> ids;
    for (const auto& p : patterns) {
        if (!ids.insert(p.pattern_id).second) {
            throw DataError("duplicate pattern_id '" + p.pattern_id + "'");
        }
        out.push_back(compile_pattern(p));
    }
    std::sort(out.begin(), out.end(), [](const CompiledPattern& a, const CompiledPattern& b) {
        return a.pattern.pattern_id < b.pattern.pattern_id;
    });
    return out;
}

}  // namespace

ApplyResult apply_compiled(const std::vector<CompiledPattern>& patterns,
                           const std::vector<extract::Sequence>& sequences,
                           const std::vector<LabelRecord>& existing) {
    std::unordered_map<std::string, const LabelRecord*> by_id;
    for (const auto& r : existing) by_id[r.sequence_id] = &r;

    std::vector<const CompiledPattern*> ordered;
    for (const auto& p : patterns) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
        return a->pattern.pattern_id < b->pattern.pattern_id;
    });

    std::vector<const extract::Sequence*> seqs;
    for (const auto& s : sequences) seqs.push_back(&s);
    std::sort(seqs.begin(), seqs.end(),
              [](const auto* a, const auto* b) { return a->sequence_id < b->sequence_id; });

    ApplyResult result;
    for (const auto* seq : seqs) {
        auto it = by_id.find(seq->sequence_id);
        const LabelRecord* prior = it == by_id.end() ? nullptr : it->second;
        if (prior != nullptr && prior->source == LabelSource::manual) continue;

        const std::u32string text = utf8::decode(seq->text);
        std::vector<const CompiledPattern*> hits;
        for (const auto* p : ordered) {
            if (p->regex.search(std::u32string_view(text))) hits.push_back(p);
        }
        if (hits.empty()) continue;

        const Label first = hits.front()->pattern.label;
        const bool agree = std::all_of(hits.begin(), hits.end(),
                                       [&](const auto* h) { return h->pattern.label == first; });
        if (!agree) {
            ConflictReport c{seq->sequence_id, {}, {}};
            for (const auto* h : hits) {
                c.pattern_ids.push_back(h->pattern.pattern_id);
                c.labels.push_back(h->pattern.label);
            }
            result.conflicts.push_back(std::move(c));
            if (prior != nullptr) result.invalidated.push_back(seq->sequence_id);
            continue;
        }
        if (prior != nullptr) continue;  // pattern label already recorded
        result.new_labels.push_back(LabelRecord{seq->sequence_id, first, LabelSource::pattern,
                                                hits.front()->pattern.pattern_id, std::nullopt});
    }
    return result;
}

ApplyResult apply_patterns(const std::vector<AlwaysPattern>& patterns,
                           const std::vector<extract::Sequence>& sequences,
                           const std::vector<LabelRecord>& existing) {
    return apply_compiled(compile_all(patterns), sequences, existing);
}

PreviewResult preview_pattern(const AlwaysPattern& candidate,
                              const std::vector<AlwaysPattern>& patterns,
                              const std::vector<extract::Sequence>& sequences,
                              const std::vector<LabelRecord>& existing, std::size_t max_samples) {
    auto compiled = compile_all(patterns);
    const ApplyResult before = apply_compiled(compiled, sequences, existing);
    compiled.push_back(compile_pattern(candidate));
    const ApplyResult after = apply_compiled(compiled, sequences, existing);

    std::set<std::string> labeled_before;
    for (const auto& r : before.new_labels) labeled_before.insert(r.sequence_id);
    std::set<std::string> conflicted_before;
    for (const auto& c : before.conflicts) conflicted_before.insert(c.sequence_id);

    PreviewResult out;
    for (const auto& r : after.new_labels) {
        if (labeled_before.contains(r.sequence_id)) continue;
        ++out.would_label;
        if (out.sample_sequence_ids.size() < max_samples) {
            out.sample_sequence_ids.push_back(r.sequence_id);
        }
    }
    for (const auto& c : after.conflicts) {
        if (!conflicted_before.contains(c.sequence_id)) ++out.would_conflict;
    }
    return out;
}

std::vector<LabelRecord> merge_labels(const std::vector<LabelRecord>& existing,
                                      const ApplyResult& result) {
    std::map<std::string, LabelRecord> merged;
    for (const auto& r : existing) merged[r.sequence_id] = r;
    for (const auto& id : result.invalidated) {
        auto it = merged.find(id);
        if (it != merged.end() && it->second.source == LabelSource::pattern) merged.erase(it);
    }
    for (const auto& r : result.new_labels) merged[r.sequence_id] = r;
    std::vector<LabelRecord> out;
    out.reserve(merged.size());
    for (auto& [id, r] : merged) out.push_back(std::move(r));
    return out;
}

Json to_json(const AlwaysPattern& p) {
    return Json{{"pattern_id", p.pattern_id},
                {"regex_source", p.regex_source},
                {"label", std::string(to_string(p.label))},
                {"author", p.author},
                {"created_at", p.created_at}};
}

namespace {
Label label_field(const Json& j) {
    const Json& v = j.at("label");
    if (v.is_number_integer()) return label_from_int(v.get<int>());
    auto l = parse_label(v.get<std::string>());
    if (!l) throw DataError("invalid label '" + v.get<std::string>() + "'");
    return *l;
}
}  // namespace

AlwaysPattern pattern_from_json(const Json& j) {
    if (!j.contains("label")) throw DataError("missing field 'label'");
    AlwaysPattern p;
    p.pattern_id = io::require<std::string>(j, "pattern_id");
    p.regex_source = io::require<std::string>(j, "regex_source");
    p.label = label_field(j);
    p.author = j.value("author", std::string());
    p.created_at = j.value("created_at", std::string());
    return p;
}

Json to_json(const LabelRecord& r) {
    Json j{{"sequence_id", r.sequence_id},
           {"label", std::string(to_string(r.label))},
           {"source", r.source == LabelSource::manual ? "manual" : "pattern"}};
    j["pattern_id"] = r.pattern_id ? Json(*r.pattern_id) : Json();
    j["annotator"] = r.annotator ? Json(*r.annotator) : Json();
    return j;
}

LabelRecord label_from_json(const Json& j) {
    if (!j.contains("label")) throw DataError("missing field 'label'");
    LabelRecord r;
    r.sequence_id = io::require<std::string>(j, "sequence_id");
    r.label = label_field(j);
    const auto source = io::require<std::string>(j, "source");
    if (source == "manual") {
        r.source = LabelSource::manual;
    } else if (source == "pattern") {
        r.source = LabelSource::pattern;
    } else {
        throw DataError("invalid label source '" + source + "'");
    }
    if (j.contains("pattern_id") && !j["pattern_id"].is_null()) {
        r.pattern_id = j["pattern_id"].get<std::string>();
    }
    if (j.contains("annotator") && !j["annotator"].is_null()) {
        r.annotator = j["annotator"].get<std::string>();
    }
    if (r.source == LabelSource::pattern && !r.pattern_id) {
        throw DataError("pattern-sourced label without pattern_id");
    }
    if (r.source == LabelSource::manual && !r.annotator) {
        throw DataError("manual label without annotator");
    }
    return r;
}

Json to_json(const ConflictReport& c) {
    Json labels = Json::array();
    for (auto l : c.labels) labels.push_back(std::string(to_string(l)));
    return Json{{"sequence_id", c.sequence_id}, {"pattern_ids", c.pattern_ids}, {"labels", labels}};
}

std::vector<AlwaysPattern> load_patterns(const std::filesystem::path& path) {
    std::vector<AlwaysPattern> out;
    std::set<std::string> ids;
    io::for_each_jsonl(path, [&](const Json& j, std::size_t) {
        auto p = pattern_from_json(j);
        if (!ids.insert(p.pattern_id).second) {
            throw DataError("duplicate pattern_id '" + p.pattern_id + "'");
        }
        out.push_back(std::move(p));
    });
    return out;
}

std::vector<LabelRecord> load_labels(const std::filesystem::path& path) {
    std::vector<LabelRecord> out;
    std::set<std::string> ids;
    io::for_each_jsonl(path, [&](const Json& j, std::size_t) {
        auto r = label_from_json(j);
        if (!ids.insert(r.sequence_id).second) {
            throw DataError("more than one label for sequence '" + r.sequence_id + "'");
        }
        out.push_back(std::move(r));
    });
    return out;
}

std::string patterns_jsonl(const std::vector<AlwaysPattern>& ps) {
    std::string out;
    for (const auto& p : ps) out += io::dump_line(to_json(p)) + "\n";
    return out;
}

std::string labels_jsonl(const std::vector<LabelRecord>& rs) {
    std::string out;
    for (const auto& r : rs) out += io::dump_line(to_json(r)) + "\n";
    return out;
}

}  // namespace cogscreen::patterns
