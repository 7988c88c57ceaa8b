#include <set>

#include "doctest.h"

#include "cogscreen/corpus.hpp"
#include "cogscreen/synth.hpp"
#include "cogscreen/util/json_io.hpp"
#include "extract_audit.hpp"
#include "support.hpp"

using namespace cogscreen;

TEST_CASE("generation is deterministic per seed") {
    synth::GenOptions o;
    o.patients = 60;
    o.seed = 3;
    const auto a = synth::generate(o);
    const auto b = synth::generate(o);
    CHECK(io::dump_line(synth::manifest(a, o)) == io::dump_line(synth::manifest(b, o)));
    REQUIRE(a.corpus.notes().size() == b.corpus.notes().size());
    for (std::size_t i = 0; i < a.corpus.notes().size(); ++i) CHECK(a.corpus.notes()[i].text == b.corpus.notes()[i].text);

    o.seed = 4;
    const auto c = synth::generate(o);
    bool differs = c.corpus.notes().size() != a.corpus.notes().size();
    for (std::size_t i = 0; !differs && i < a.corpus.notes().size(); ++i) differs = a.corpus.notes()[i].text != c.corpus.notes()[i].text;
    CHECK(differs);
}

TEST_CASE("a 100-patient corpus matches its planted truth") {
    synth::GenOptions o;
    o.patients = 100;
    o.seed = 7;
    const auto s = synth::generate(o);
    CHECK(s.corpus.patients().size() == 100);
    CHECK(s.patient_labels.size() == 100);
    CHECK(s.keywords.id == "ci-keywords");

    // The cohort filter keeps exactly the planted in-cohort patients.
    corpus::CohortCriteria crit;
    crit.keyword_set_id = s.keywords.id;
    const std::vector<extract::KeywordSet> sets{s.keywords};
    const auto kept = corpus::filter_cohort(s.corpus, crit, sets);
    std::set<std::string> planted_in;
    for (const auto& p : s.planted) {
        if (p.in_cohort) planted_in.insert(p.patient_id);
    }
    CHECK(std::set<std::string>(kept.begin(), kept.end()) == planted_in);
    CHECK(kept.size() == s.cohort_patients);

    // Extraction yields the documented sequence count and one sequence per cluster.
    std::map<std::string, std::size_t> clusters;
    for (const auto& p : s.planted) clusters[p.note_id] = p.clusters;
    std::size_t total = 0;
    bool long_seen = false;
    for (const auto& pid : kept) {
        for (const auto* n : s.corpus.notes_for(pid)) {
            const auto seqs = extract::construct_sequences(*n, s.keywords, {});
            CHECK(seqs.size() == clusters.at(n->note_id));
            CHECK(audit::check_note(*n, s.keywords, {}) == "");
            long_seen = long_seen || clusters.at(n->note_id) > 1;
            total += seqs.size();
        }
    }
    CHECK(total == s.expected_sequences);
    CHECK(long_seen);

    std::size_t ci = 0;
    for (const auto& l : s.patient_labels) ci += l.has_ci;
    CHECK(ci > 30);
    CHECK(ci < 70);
}

TEST_CASE("written corpus reloads") {
    synth::GenOptions o;
    o.patients = 20;
    o.seed = 9;
    const auto s = synth::generate(o);
    testing::TempDir dir("synth");
    synth::write_corpus(s, o, dir.path());
    for (const char* f : {"patients.jsonl", "notes.jsonl", "keywords.json", "patterns.jsonl", "patient_labels.jsonl",
                          "planted.jsonl", "manifest.json"}) {
        CHECK(std::filesystem::exists(dir / f));
    }
    const auto back = corpus::load_corpus(dir / "patients.jsonl", dir / "notes.jsonl");
    REQUIRE(back.notes().size() == s.corpus.notes().size());
    CHECK(back.notes().front().text == s.corpus.notes().front().text);
}
