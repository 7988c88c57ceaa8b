#include "doctest.h"

#include "cogscreen/error.hpp"
#include "cogscreen/patterns.hpp"
#include "support.hpp"

using namespace cogscreen;
using namespace cogscreen::patterns;

namespace {

extract::Sequence seq(const std::string& id, const std::string& text) {
    extract::Sequence s;
    s.sequence_id = id;
    s.patient_id = "P1";
    s.note_id = "N1";
    s.text = text;
    return s;
}

AlwaysPattern pat(const std::string& id, const std::string& re, Label label) {
    return AlwaysPattern{id, re, label, "tester", "2021-07-13T00:00:00Z"};
}

// The figure's example sentences and always patterns.
const std::vector<std::pair<std::string, Label>> kFigureSentences = {
    {"Patient MOCA is 22/30.", Label::positive},
    {"Patient with past medical history of dementia.", Label::positive},
    {"Patient memory is intact.", Label::negative},
    {"No memory concerns.", Label::negative},
    {"History: Father has Alzheimer's Disease", Label::neither},
    {"Patient attends anticoagulation therapy daily.", Label::neither},
};

std::vector<AlwaysPattern> figure_patterns() {
    return {
        pat("fig-pos-1", R"((?i)\bMOCA\s*([0-9][12][0-5])\s*\s*30)", Label::positive),
        pat("fig-pos-2", R"((?i)\bpast\s*medical\s*history\s*[^\.]*(dementia))", Label::positive),
        pat("fig-neg-1", R"((?i)Memory.*intact)", Label::negative),
        pat("fig-neg-2", R"((?i)No\s*memory\s*concerns)", Label::negative),
        pat("fig-nei-1", R"((?i)Father.*Alzheimer's\s*disease)", Label::neither),
        pat("fig-nei-2", R"((?i)anticoagulation)", Label::neither),
    };
}

}  // namespace

TEST_CASE("figure patterns compile") {
    for (const auto& p : figure_patterns()) CHECK_NOTHROW(compile_pattern(p));
    CHECK_THROWS_AS(compile_pattern(pat("bad", "([unclosed", Label::positive)), RegexError);
}

TEST_CASE("figure sentences receive figure labels") {
    std::vector<extract::Sequence> seqs;
    for (std::size_t i = 0; i < kFigureSentences.size(); ++i) {
        seqs.push_back(seq("s" + std::to_string(i), kFigureSentences[i].first));
    }
    const auto r = apply_patterns(figure_patterns(), seqs, {});
    CHECK(r.conflicts.empty());
    std::map<std::string, LabelRecord> by;
    for (const auto& l : r.new_labels) by[l.sequence_id] = l;

    // The printed MOCA pattern cannot reach "22/30" past the word "is"; it is
    // compile-checked only.
    CHECK_FALSE(by.count("s0"));
    for (std::size_t i = 1; i < kFigureSentences.size(); ++i) {
        const auto id = "s" + std::to_string(i);
        REQUIRE_MESSAGE(by.count(id), kFigureSentences[i].first);
        CHECK(by[id].label == kFigureSentences[i].second);
        CHECK(by[id].source == LabelSource::pattern);
        CHECK(by[id].pattern_id.has_value());
    }
    CHECK(by["s2"].pattern_id == "fig-neg-1");

    // The repaired MOCA pattern labels the first sentence.
    const auto moca = apply_patterns(
        {pat("moca", R"((?i)\bMOCA\s*(score\s*)?(is\s*)?[0-9]{1,2}\s*/\s*30)", Label::positive)}, {seqs[0]}, {});
    REQUIRE(moca.new_labels.size() == 1);
    CHECK(moca.new_labels[0].label == Label::positive);
}

TEST_CASE("apply rules") {
    const std::vector<extract::Sequence> seqs = {seq("a", "memory is intact, MOCA 22/30"), seq("b", "no match here"),
                                                 seq("c", "memory intact")};
    const std::vector<AlwaysPattern> ps = {pat("p2", "(?i)moca", Label::positive),
                                           pat("p1", "(?i)memory.*intact", Label::negative)};

    SUBCASE("no match gives nothing") {
        const auto r = apply_patterns({pat("x", "zzz", Label::positive)}, seqs, {});
        CHECK(r.new_labels.empty());
        CHECK(r.conflicts.empty());
    }
    SUBCASE("disagreement is a conflict with no label") {
        const auto r = apply_patterns(ps, seqs, {});
        REQUIRE(r.conflicts.size() == 1);
        CHECK(r.conflicts[0].sequence_id == "a");
        CHECK(r.conflicts[0].pattern_ids == std::vector<std::string>{"p1", "p2"});
        REQUIRE(r.new_labels.size() == 1);
        CHECK(r.new_labels[0].sequence_id == "c");
    }
    SUBCASE("attribution goes to the first pattern id") {
        const auto r = apply_patterns({pat("z", "intact", Label::negative), pat("m", "memory", Label::negative)},
                                      {seqs[2]}, {});
        REQUIRE(r.new_labels.size() == 1);
        CHECK(r.new_labels[0].pattern_id == "m");
    }
    SUBCASE("manual records are never touched") {
        const LabelRecord manual{"a", Label::neither, LabelSource::manual, std::nullopt, "dr"};
        const auto r = apply_patterns(ps, seqs, {manual});
        CHECK(r.conflicts.empty());
        const auto merged = merge_labels({manual}, r);
        REQUIRE(merged.size() == 2);
        CHECK(merged[0] == manual);
    }
    SUBCASE("existing pattern labels become invalid on conflict") {
        const auto first = apply_patterns({ps[1]}, seqs, {});
        auto labels = merge_labels({}, first);
        CHECK(labels.size() == 2);
        const auto second = apply_patterns(ps, seqs, labels);
        CHECK(second.invalidated == std::vector<std::string>{"a"});
        CHECK(second.new_labels.empty());
        labels = merge_labels(labels, second);
        REQUIRE(labels.size() == 1);
        CHECK(labels[0].sequence_id == "c");
    }
    SUBCASE("apply is deterministic and input-order independent") {
        auto shuffled = seqs;
        std::reverse(shuffled.begin(), shuffled.end());
        auto ps2 = ps;
        std::reverse(ps2.begin(), ps2.end());
        const auto a = apply_patterns(ps, seqs, {});
        const auto b = apply_patterns(ps2, shuffled, {});
        CHECK(a.new_labels == b.new_labels);
        CHECK(a.conflicts == b.conflicts);
    }
    SUBCASE("duplicate ids rejected") {
        CHECK_THROWS_AS(apply_patterns({ps[0], ps[0]}, seqs, {}), DataError);
    }
}

TEST_CASE("preview") {
    const std::vector<extract::Sequence> seqs = {seq("a", "memory intact"), seq("b", "memory is intact"),
                                                 seq("c", "memory fully intact"), seq("d", "knee pain")};
    auto p = preview_pattern(pat("x", "zzz", Label::positive), {}, seqs, {});
    CHECK(p.would_label == 0);
    CHECK(p.sample_sequence_ids.empty());
    CHECK(p.would_conflict == 0);

    p = preview_pattern(pat("x", "(?i)memory.*intact", Label::negative), {}, seqs, {});
    CHECK(p.would_label == 3);
    CHECK(p.sample_sequence_ids == std::vector<std::string>{"a", "b", "c"});

    p = preview_pattern(pat("y", "fully", Label::positive), {pat("x", "(?i)memory.*intact", Label::negative)}, seqs,
                        {});
    CHECK(p.would_conflict == 1);
    CHECK(p.would_label == 0);

    p = preview_pattern(pat("x", "(?i)memory.*intact", Label::negative), {}, seqs, {}, 2);
    CHECK(p.sample_sequence_ids.size() == 2);
}

TEST_CASE("pattern and label files") {
    testing::TempDir dir("patterns");
    const auto ps = figure_patterns();
    io::write_file_atomic(dir / "p.jsonl", patterns_jsonl(ps));
    CHECK(load_patterns(dir / "p.jsonl") == ps);

    const std::vector<LabelRecord> ls = {
        {"a", Label::positive, LabelSource::pattern, "fig-pos-2", std::nullopt},
        {"b", Label::negative, LabelSource::manual, std::nullopt, "dr"},
    };
    io::write_file_atomic(dir / "l.jsonl", labels_jsonl(ls));
    CHECK(load_labels(dir / "l.jsonl") == ls);

    io::write_file_atomic(dir / "l.jsonl", labels_jsonl({ls[0], ls[0]}));
    CHECK_THROWS_AS(load_labels(dir / "l.jsonl"), DataError);
    CHECK_THROWS_AS(label_from_json(io::Json::parse(R"({"sequence_id":"a","label":"maybe","source":"manual","annotator":"x"})")),
                    DataError);
    CHECK_THROWS_AS(label_from_json(io::Json::parse(R"({"sequence_id":"a","label":"positive","source":"pattern"})")),
                    DataError);
}
