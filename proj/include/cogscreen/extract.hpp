#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cogscreen/corpus.hpp"
#include "cogscreen/util/json_io.hpp"

namespace cogscreen::extract {

struct KeywordEntry {
    std::string keyword;
    bool case_sensitive = false;
};

struct KeywordSet {
    std::string id;
    std::vector<KeywordEntry> entries;
};

/// The 18 dementia-related keywords; "AD" is the only case-sensitive entry.
KeywordSet default_keywords();
KeywordSet keywords_from_json(const io::Json& j);
io::Json to_json(const KeywordSet& ks);
KeywordSet load_keywords(const std::filesystem::path& path);

/// Offsets are code-point positions, [start, end).
struct KeywordMatch {
    std::string keyword;
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const KeywordMatch&) const = default;
};

struct CharSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::vector<std::size_t> source_matches;  // indices into the note's match list

    bool operator==(const CharSpan&) const = default;
};

struct ExtractConfig {
    std::size_t context_radius_chars = 100;
    std::size_t max_tokens = 512;
    std::size_t target_min_chars = 800;  // descriptive only; not enforced
    std::size_t extension_step_chars = 64;

    void validate() const;
};

struct Sequence {
    std::string sequence_id;
    std::string patient_id;
    std::string note_id;
    std::string text;  // UTF-8
    CharSpan span;     // into the normalized note text
    std::vector<KeywordMatch> keyword_matches;  // sequence-local offsets
    std::size_t token_count = 0;

    bool operator==(const Sequence&) const = default;
};

/// Collapses whitespace runs (including line breaks) to one space and trims.
std::u32string normalize_text(std::u32string_view raw);
std::string normalize_text(std::string_view raw);

/// Whole-word keyword matches, sorted by (start, end).
std::vector<KeywordMatch> find_keyword_matches(std::u32string_view text, const KeywordSet& ks);
std::vector<KeywordMatch> find_keyword_matches(std::string_view text, const KeywordSet& ks);

std::vector<CharSpan> build_windows(const std::vector<KeywordMatch>& matches,
                                    std::size_t text_len, std::size_t radius);
/// Unions overlapping or touching spans. Input must be sorted by start.
std::vector<CharSpan> merge_windows(const std::vector<CharSpan>& spans);

struct TokenSpan {
    std::size_t start;
    std::size_t end;
};
/// Whitespace split with every punctuation character detached as its own token.
std::vector<TokenSpan> token_spans(std::u32string_view text);
std::vector<std::string> tokenize(std::string_view text);
std::vector<std::u32string> tokenize(std::u32string_view text);
std::size_t count_tokens(std::u32string_view text);

std::vector<Sequence> construct_sequences(const corpus::ClinicalNote& note, const KeywordSet& ks,
                                          const ExtractConfig& cfg);

io::Json to_json(const Sequence& s);
Sequence sequence_from_json(const io::Json& j);
std::string sequences_jsonl(const std::vector<Sequence>& seqs);
std::vector<Sequence> load_sequences(const std::filesystem::path& path);

struct SequenceStats {
    std::size_t count = 0;
    double mean_chars = 0.0;
    double mean_tokens = 0.0;
    double mean_keywords = 0.0;
    double sd_keywords = 0.0;
    // percentage of sequences with 1, 2, 3 and 4+ keyword matches
    double pct_keywords[4] = {0, 0, 0, 0};
};
SequenceStats summarize(const std::vector<Sequence>& seqs);

}  // namespace cogscreen::extract
