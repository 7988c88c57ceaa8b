#include <regex>
#include <string>

#include "doctest.h"

#include "cogscreen/error.hpp"
#include "cogscreen/regex.hpp"
#include "cogscreen/util/rng.hpp"

using cogscreen::Rng;
using cogscreen::RegexError;
using cogscreen::regex::Regex;

namespace {

bool search(const std::string& pattern, const std::string& text) {
    return Regex::compile(pattern).search(std::string_view(text));
}

std::size_t error_offset(const std::string& pattern) {
    try {
        Regex::compile(pattern);
    } catch (const RegexError& e) {
        return e.offset();
    }
    FAIL("pattern compiled: " << pattern);
    return 0;
}

// Random pattern over the syntax shared with ECMAScript regexes.
std::string random_atom(Rng& rng, int depth);

std::string random_seq(Rng& rng, int depth) {
    std::string s;
    const int n = rng.between(1, 4);
    for (int i = 0; i < n; ++i) {
        const std::string atom = random_atom(rng, depth);
        s += atom;
        // std::regex backtracks; nested unbounded repeats would stall the oracle.
        if (atom.front() == '(') {
            if (rng.chance(0.3)) s += "?";
            continue;
        }
        switch (rng.below(8)) {
            case 0: s += "*"; break;
            case 1: s += "+"; break;
            case 2: s += "?"; break;
            case 3: s += "{" + std::to_string(rng.between(0, 2)) + "," + std::to_string(rng.between(2, 3)) + "}"; break;
            case 4: s += "*?"; break;
            default: break;
        }
    }
    return s;
}

std::string random_atom(Rng& rng, int depth) {
    static const char* atoms[] = {"a", "b", "c", ".", "[ab]", "[^a]", "[a-c]", "\\d", "\\w", "\\s", "\\b", "A", " "};
    if (depth < 2 && rng.chance(0.25)) {
        std::string g = rng.chance(0.5) ? "(" : "(?:";
        g += random_seq(rng, depth + 1);
        if (rng.chance(0.5)) g += "|" + random_seq(rng, depth + 1);
        return g + ")";
    }
    return atoms[rng.below(std::size(atoms))];
}

}  // namespace

TEST_CASE("figure patterns compile and match") {
    CHECK(search("(?i)Memory.*intact", "Patient memory is intact."));
    CHECK_FALSE(search("(?i)Memory.*intact", "intact memory"));
    CHECK(search("(?i)No\\s*memory\\s*concerns", "Reports no memory concerns today"));
    CHECK(search("(?i)No\\s*memory\\s*concerns", "NOMEMORYCONCERNS"));
    CHECK(search("(?i)Father.*Alzheimer's\\s*disease", "History: Father has Alzheimer's Disease"));
    CHECK(search("(?i)\\bpast\\s*medical\\s*history\\s*[^\\.]*(dementia)", "Past medical history of HTN, dementia."));
    CHECK_FALSE(search("(?i)\\bpast\\s*medical\\s*history\\s*[^\\.]*(dementia)", "Past medical history of HTN. Dementia."));
}

TEST_CASE("basic syntax") {
    CHECK(search("abc", "xxabcxx"));
    CHECK_FALSE(search("abd", "xxabcxx"));
    CHECK(search("^abc$", "abc"));
    CHECK_FALSE(search("^abc$", "abcd"));
    CHECK(search("a{2,3}", "caab"));
    CHECK_FALSE(search("^a{2,3}$", "aaaa"));
    CHECK(search("^a{2}$", "aa"));
    CHECK(search("^a{2,}$", "aaaaa"));
    CHECK(search("colou?r", "color"));
    CHECK(search("(cat|dog)s", "hotdogs"));
    CHECK(search("\\bAD\\b", "dx: AD."));
    CHECK_FALSE(search("\\bAD\\b", "ADVICE"));
    CHECK(search("\\Bdvi\\B", "advice"));
    CHECK(search("[0-9]+/30", "MOCA 22/30"));
    CHECK(search("\\d\\d/\\d\\d", "22/30"));
    CHECK(search("[^\\s]+", " x "));
    CHECK(search("(?<score>\\d+)", "7"));
    CHECK(search("a.c", "abc"));
    CHECK_FALSE(search("a.c", "a\nc"));
    CHECK(search("(?s)a.c", "a\nc"));
    CHECK(search("(?m)^b", "a\nb"));
    CHECK_FALSE(search("^b", "a\nb"));
    CHECK(search("\\Aab\\z", "ab"));
    CHECK(search("(?i:AB)c", "abc"));
    CHECK_FALSE(search("(?i:AB)c", "abC"));
    CHECK(search("(?i)a(?-i)B", "AB"));
    CHECK_FALSE(search("(?i)a(?-i)B", "Ab"));
    CHECK(search("\\.", "a.b"));
    CHECK_FALSE(search("\\.", "ab"));
    CHECK(search("", "anything"));
    CHECK(search("x*", ""));
}

TEST_CASE("unicode and case folding") {
    CHECK(search("(?i)caf\xC3\x89", "CAF\xC3\xA9"));
    CHECK(search("^.$", "\xC3\xA9"));
    CHECK(search("\\w", "\xC3\xA9"));
    CHECK(search("[\xC3\xA0-\xC3\xBF]", "\xC3\xA9"));
}

TEST_CASE("compile errors carry the offset") {
    CHECK(error_offset("([unclosed") == 1);
    CHECK(error_offset("abc)") == 3);
    CHECK(error_offset("a**") == 2);
    CHECK(error_offset("a{3,1}") == 1);
    CHECK(error_offset("[z-a]") == 2);
    CHECK(error_offset("x\\") == 1);
    CHECK(error_offset("(?<n>a)(?=b)") >= 7);
    CHECK_THROWS_AS(Regex::compile("(a)\\1"), RegexError);
    CHECK_THROWS_AS(Regex::compile("(?i"), RegexError);
    try {
        Regex::compile("ab(");
    } catch (const RegexError& e) {
        CHECK(std::string(e.what()).find("offset 2") != std::string::npos);
    }
}

TEST_CASE("differential against std::regex") {
    Rng rng(2024);
    int compared = 0;
    for (int trial = 0; trial < 1500; ++trial) {
        const std::string pat = random_seq(rng, 0);
        const bool icase = rng.chance(0.3);
        std::regex ref;
        try {
            ref = std::regex(pat, icase ? std::regex::ECMAScript | std::regex::icase : std::regex::ECMAScript);
        } catch (const std::regex_error&) {
            continue;
        }
        const Regex ours = Regex::compile(icase ? "(?i)" + pat : pat);
        for (int k = 0; k < 5; ++k) {
            std::string text;
            const int len = rng.between(0, 10);
            for (int i = 0; i < len; ++i) text += "abcA1 _\n"[rng.below(8)];
            const bool expect = std::regex_search(text, ref);
            CHECK_MESSAGE(ours.search(std::string_view(text)) == expect, "pattern " << pat << " text '" << text << "'");
            ++compared;
        }
    }
    CHECK(compared > 5000);
}

TEST_CASE("linear time on adversarial input") {
    const Regex r = Regex::compile("(a*)*b");
    const std::string text(20000, 'a');
    CHECK_FALSE(r.search(std::string_view(text)));
    const Regex r2 = Regex::compile("(x+x+)+y");
    CHECK_FALSE(r2.search(std::string_view(std::string(5000, 'x'))));
}
