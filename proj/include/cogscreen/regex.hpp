#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Linear-time regular expressions over Unicode code points.
//
// Dialect: literals, '.', character classes with ranges and negation,
// \d \w \s (and negations), \b \B, ^ $ \A \z, groups (capturing, (?:...),
// named), alternation, * + ? {n} {n,} {n,m} (greedy or lazy), inline flags
// (?i) (?m) (?s) (?-i) and scoped (?i:...). No backreferences or lookaround.
// Compilation errors throw RegexError with the code-point offset.

namespace cogscreen::regex {

struct Program;

class Regex {
public:
    static Regex compile(std::string_view source);

    /// True if the pattern matches anywhere in `text`.
    bool search(std::u32string_view text) const;
    bool search(std::string_view utf8_text) const;

    const std::string& source() const { return source_; }
    std::size_t program_size() const;

private:
    Regex() = default;
    std::string source_;
    std::shared_ptr<const Program> program_;
};

}  // namespace cogscreen::regex
