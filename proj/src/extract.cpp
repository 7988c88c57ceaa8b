#include "cogscreen/extract.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cogscreen/error.hpp"
#include "cogscreen/util/utf8.hpp"

namespace cogscreen::extract {

using io::Json;

KeywordSet default_keywords() {
    KeywordSet ks;
    ks.id = "ci-keywords";
    for (const char* k : {"Memory", "Cognition", "Dementia", "Cerebral", "Cerebrovascular",
                          "Cerebellar", "Cognitive Impairment", "Alzheimer", "MOCA",
                          "Neurocognitive", "MCI", "Amnesia", "AD", "Lewy", "MMSE", "LBD",
                          "Corticobasal", "Picks"}) {
        ks.entries.push_back({k, std::string_view(k) == "AD"});
    }
    return ks;
}

KeywordSet keywords_from_json(const Json& j) {
    KeywordSet ks;
    ks.id = io::require<std::string>(j, "id");
    if (!j.contains("entries") || !j["entries"].is_array()) {
        throw DataError("keyword set needs an 'entries' array");
    }
    std::set<std::pair<std::string, bool>> seen;
    for (const auto& e : j["entries"]) {
        KeywordEntry entry{io::require<std::string>(e, "keyword"),
                           e.value("case_sensitive", false)};
        if (normalize_text(entry.keyword).empty()) throw DataError("empty keyword in set " + ks.id);
        if (!seen.emplace(entry.keyword, entry.case_sensitive).second) {
            throw DataError("duplicate keyword '" + entry.keyword + "'");
        }
        ks.entries.push_back(std::move(entry));
    }
    if (ks.entries.empty()) throw DataError("keyword set '" + ks.id + "' has no entries");
    return ks;
}

Json to_json(const KeywordSet& ks) {
    Json entries = Json::array();
    for (const auto& e : ks.entries) {
        entries.push_back({{"keyword", e.keyword}, {"case_sensitive", e.case_sensitive}});
    }
    return Json{{"id", ks.id}, {"entries", entries}};
}

KeywordSet load_keywords(const std::filesystem::path& path) {
    try {
        return keywords_from_json(io::parse_json_file(path));
    } catch (const DataError& e) {
        throw DataError("keywords file '" + path.string() + "': " + e.what());
    }
}

void ExtractConfig::validate() const {
    if (context_radius_chars == 0 || max_tokens == 0 || target_min_chars == 0 ||
        extension_step_chars == 0) {
        throw UsageError("extract config values must all be positive");
    }
}

std::u32string normalize_text(std::u32string_view raw) {
    std::u32string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char32_t c : raw) {
        if (utf8::is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(U' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::string normalize_text(std::string_view raw) {
    return utf8::encode(normalize_text(std::u32string_view(utf8::decode(raw))));
}

std::vector<KeywordMatch> find_keyword_matches(std::u32string_view text, const KeywordSet& ks) {
    std::vector<KeywordMatch> out;
    const std::u32string lowered = utf8::to_lower(text);
    const std::size_t n = text.size();
    for (const auto& entry : ks.entries) {
        std::u32string kw = normalize_text(std::u32string_view(utf8::decode(entry.keyword)));
        if (kw.empty()) continue;
        const std::u32string_view hay = entry.case_sensitive ? text : std::u32string_view(lowered);
        if (!entry.case_sensitive) kw = utf8::to_lower(kw);
        const std::size_t k = kw.size();
        std::size_t pos = hay.find(kw);
        while (pos != std::u32string_view::npos) {
            const bool left_ok = pos == 0 || !utf8::is_alnum(text[pos - 1]);
            const bool right_ok = pos + k == n || !utf8::is_alnum(text[pos + k]);
            if (left_ok && right_ok) out.push_back({entry.keyword, pos, pos + k});
            pos = hay.find(kw, pos + 1);
        }
    }
    std::sort(out.begin(), out.end(), [](const KeywordMatch& a, const KeywordMatch& b) {
        if (a.start != b.start) return a.start < b.start;
        if (a.end != b.end) return a.end < b.end;
        return a.keyword < b.keyword;
    });
    return out;
}

std::vector<KeywordMatch> find_keyword_matches(std::string_view text, const KeywordSet& ks) {
    return find_keyword_matches(std::u32string_view(utf8::decode(text)), ks);
}

std::vector<CharSpan> build_windows(const std::vector<KeywordMatch>& matches,
                                    std::size_t text_len, std::size_t radius) {
    std::vector<CharSpan> spans;
    spans.reserve(matches.size());
    for (std::size_t i = 0; i < matches.size(); ++i) {
        const auto& m = matches[i];
        spans.push_back({m.start > radius ? m.start - radius : 0,
                         std::min(text_len, m.end + radius), {i}});
    }
    return spans;
}

std::vector<CharSpan> merge_windows(const std::vector<CharSpan>& spans) {
    std::vector<CharSpan> out;
    for (const auto& s : spans) {
        if (!out.empty() && s.start <= out.back().end) {
            auto& last = out.back();
            last.end = std::max(last.end, s.end);
            last.source_matches.insert(last.source_matches.end(), s.source_matches.begin(),
                                       s.source_matches.end());
        } else {
            out.push_back(s);
        }
    }
    return out;
}

std::vector<TokenSpan> token_spans(std::u32string_view text) {
    std::vector<TokenSpan> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const char32_t c = text[i];
        if (utf8::is_space(c)) {
            ++i;
        } else if (utf8::is_alnum(c)) {
            std::size_t j = i + 1;
            while (j < n && utf8::is_alnum(text[j])) ++j;
            out.push_back({i, j});
            i = j;
        } else {
            out.push_back({i, i + 1});
            ++i;
        }
    }
    return out;
}

std::size_t count_tokens(std::u32string_view text) { return token_spans(text).size(); }

std::vector<std::u32string> tokenize(std::u32string_view text) {
    std::vector<std::u32string> out;
    for (const auto& t : token_spans(text)) out.emplace_back(text.substr(t.start, t.end - t.start));
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    const std::u32string decoded = utf8::decode(text);
    std::vector<std::string> out;
    for (const auto& t : token_spans(decoded)) {
        out.push_back(utf8::encode(std::u32string_view(decoded).substr(t.start, t.end - t.start)));
    }
    return out;
}

namespace {

struct Chunk {
    std::size_t window_start;
    std::size_t window_end;
    std::size_t kw_start;  // extent of the anchoring keyword matches
    std::size_t kw_end;
    std::vector<std::size_t> sources;
};

// Splits a merged window whose keyword extent alone exceeds max_tokens into
// consecutive groups of matches that each fit.
std::vector<Chunk> chunk_window(std::u32string_view text, const CharSpan& merged,
                                const std::vector<KeywordMatch>& matches, const ExtractConfig& cfg) {
    std::vector<Chunk> chunks;
    const std::size_t len = text.size();
    auto make = [&](std::vector<std::size_t> src) {
        std::size_t ks = matches[src.front()].start;
        std::size_t ke = 0;
        for (auto i : src) {
            ks = std::min(ks, matches[i].start);
            ke = std::max(ke, matches[i].end);
        }
        const std::size_t r = cfg.context_radius_chars;
        return Chunk{ks > r ? ks - r : 0, std::min(len, ke + r), ks, ke, std::move(src)};
    };

    const auto& src = merged.source_matches;
    const std::size_t first = matches[src.front()].start;
    std::size_t last_end = 0;
    for (auto i : src) last_end = std::max(last_end, matches[i].end);
    if (count_tokens(text.substr(first, last_end - first)) <= cfg.max_tokens) {
        Chunk c = make(src);
        c.window_start = merged.start;
        c.window_end = merged.end;
        chunks.push_back(std::move(c));
        return chunks;
    }

    std::vector<std::size_t> group;
    std::size_t group_start = 0;
    for (auto i : src) {
        if (group.empty()) {
            group.push_back(i);
            group_start = matches[i].start;
            continue;
        }
        const std::size_t end = std::max(matches[i].end, matches[group.back()].end);
        if (count_tokens(text.substr(group_start, end - group_start)) <= cfg.max_tokens) {
            group.push_back(i);
        } else {
            chunks.push_back(make(std::move(group)));
            group = {i};
            group_start = matches[i].start;
        }
    }
    if (!group.empty()) chunks.push_back(make(std::move(group)));
    return chunks;
}

}  // namespace

std::vector<Sequence> construct_sequences(const corpus::ClinicalNote& note, const KeywordSet& ks,
                                          const ExtractConfig& cfg) {
    cfg.validate();
    const std::u32string norm = normalize_text(std::u32string_view(utf8::decode(note.text)));
    const std::u32string_view text(norm);
    const auto matches = find_keyword_matches(text, ks);
    if (matches.empty()) return {};

    const std::size_t len = text.size();
    const auto merged = merge_windows(build_windows(matches, len, cfg.context_radius_chars));
    const std::size_t target = std::min(cfg.max_tokens, count_tokens(text));

    std::vector<Sequence> out;
    for (const auto& window : merged) {
        const auto chunks = chunk_window(text, window, matches, cfg);
        for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
            const Chunk& chunk = chunks[ci];
            std::size_t s = chunk.window_start;
            std::size_t e = chunk.window_end;

            // Grow symmetrically until enough tokens or the whole note is covered.
            while (count_tokens(text.substr(s, e - s)) < target && (s > 0 || e < len)) {
                s = s > cfg.extension_step_chars ? s - cfg.extension_step_chars : 0;
                e = std::min(len, e + cfg.extension_step_chars);
            }

            // Trim an overshoot back to max_tokens at token boundaries: trailing
            // tokens first, then leading ones; never into the keyword extent.
            auto spans = token_spans(text.substr(s, e - s));
            if (spans.size() > cfg.max_tokens) {
                std::size_t excess = spans.size() - cfg.max_tokens;
                std::size_t right = 0;
                while (right < excess && spans[spans.size() - 1 - right].start + s >= chunk.kw_end) {
                    ++right;
                }
                std::size_t left = 0;
                while (right + left < excess && spans[left].end + s <= chunk.kw_start) ++left;
                const std::size_t new_e = s + spans[spans.size() - 1 - right].end;
                const std::size_t new_s = s + spans[left].start;
                s = new_s;
                e = new_e;
            }
            while (s < e && utf8::is_space(text[s])) ++s;
            while (e > s && utf8::is_space(text[e - 1])) --e;

            Sequence seq;
            seq.sequence_id = note.note_id + ":" + std::to_string(chunk.window_start);
            if (chunks.size() > 1) seq.sequence_id += "-c" + std::to_string(ci);
            seq.patient_id = note.patient_id;
            seq.note_id = note.note_id;
            const std::u32string_view body = text.substr(s, e - s);
            seq.text = utf8::encode(body);
            seq.span = CharSpan{s, e, chunk.sources};
            for (const auto& m : matches) {
                if (m.start >= s && m.end <= e) {
                    seq.keyword_matches.push_back({m.keyword, m.start - s, m.end - s});
                }
            }
            seq.token_count = count_tokens(body);
            out.push_back(std::move(seq));
        }
    }
    return out;
}

Json to_json(const Sequence& s) {
    Json kms = Json::array();
    for (const auto& m : s.keyword_matches) {
        kms.push_back({{"keyword", m.keyword}, {"start", m.start}, {"end", m.end}});
    }
    return Json{{"sequence_id", s.sequence_id},
                {"patient_id", s.patient_id},
                {"note_id", s.note_id},
                {"text", s.text},
                {"span",
                 {{"start", s.span.start},
                  {"end", s.span.end},
                  {"source_matches", s.span.source_matches}}},
                {"keyword_matches", kms},
                {"token_count", s.token_count}};
}

Sequence sequence_from_json(const Json& j) {
    Sequence s;
    s.sequence_id = io::require<std::string>(j, "sequence_id");
    s.patient_id = io::require<std::string>(j, "patient_id");
    s.note_id = io::require<std::string>(j, "note_id");
    s.text = io::require<std::string>(j, "text");
    const auto& span = j.at("span");
    s.span.start = io::require<std::size_t>(span, "start");
    s.span.end = io::require<std::size_t>(span, "end");
    s.span.source_matches = span.value("source_matches", std::vector<std::size_t>{});
    for (const auto& m : j.value("keyword_matches", Json::array())) {
        s.keyword_matches.push_back({io::require<std::string>(m, "keyword"),
                                     io::require<std::size_t>(m, "start"),
                                     io::require<std::size_t>(m, "end")});
    }
    s.token_count = io::require<std::size_t>(j, "token_count");
    return s;
}

std::string sequences_jsonl(const std::vector<Sequence>& seqs) {
    std::string out;
    for (const auto& s : seqs) out += io::dump_line(to_json(s)) + "\n";
    return out;
}

std::vector<Sequence> load_sequences(const std::filesystem::path& path) {
    std::vector<Sequence> out;
    std::set<std::string> ids;
    io::for_each_jsonl(path, [&](const Json& j, std::size_t) {
        auto s = sequence_from_json(j);
        if (!ids.insert(s.sequence_id).second) {
            throw DataError("duplicate sequence_id '" + s.sequence_id + "'");
        }
        out.push_back(std::move(s));
    });
    return out;
}

SequenceStats summarize(const std::vector<Sequence>& seqs) {
    SequenceStats st;
    st.count = seqs.size();
    if (seqs.empty()) return st;
    double chars = 0, tokens = 0, kw = 0, kw2 = 0;
    for (const auto& s : seqs) {
        const double k = static_cast<double>(s.keyword_matches.size());
        chars += static_cast<double>(utf8::decode(s.text).size());
        tokens += static_cast<double>(s.token_count);
        kw += k;
        kw2 += k * k;
        const std::size_t bucket = std::min<std::size_t>(3, s.keyword_matches.empty()
                                                                ? 0
                                                                : s.keyword_matches.size() - 1);
        st.pct_keywords[bucket] += 1.0;
    }
    const double n = static_cast<double>(seqs.size());
    st.mean_chars = chars / n;
    st.mean_tokens = tokens / n;
    st.mean_keywords = kw / n;
    st.sd_keywords = std::sqrt(std::max(0.0, kw2 / n - st.mean_keywords * st.mean_keywords));
    for (double& p : st.pct_keywords) p = 100.0 * p / n;
    return st;
}

}  // namespace cogscreen::extract
