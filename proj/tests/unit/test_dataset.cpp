#include <chrono>
#include <set>

#include "doctest.h"

#include "cogscreen/dataset.hpp"
#include "cogscreen/error.hpp"
#include "fixtures.hpp"
#include "support.hpp"

using namespace cogscreen;
using namespace cogscreen::dataset;

namespace {

LabeledItem item(const std::string& pid, const std::string& sid, Label label,
                 patterns::LabelSource source = patterns::LabelSource::pattern) {
    LabeledItem it;
    it.sequence.sequence_id = sid;
    it.sequence.patient_id = pid;
    it.sequence.note_id = sid + "-note";
    it.sequence.text = "memory " + sid;
    it.record.sequence_id = sid;
    it.record.label = label;
    it.record.source = source;
    if (source == patterns::LabelSource::pattern) it.record.pattern_id = "p1";
    else it.record.annotator = "dr";
    return it;
}

std::string stratum(const patterns::LabelRecord& r) {
    return std::string(to_string(r.label)) + "/" + (r.source == patterns::LabelSource::manual ? "m" : "p");
}

// Largest deviation, in percentage points, between a stratum's share of the
// test items and its share of all items. Brute-force recount.
double max_stratum_deviation(const LabeledDataset& ds, const Split& s) {
    std::map<std::string, double> all, test;
    for (const auto& it : ds.items()) all[stratum(it.record)] += 1;
    for (const auto& id : s.test) test[stratum(ds.items()[ds.index_of(id)].record)] += 1;
    double worst = 0;
    for (const auto& [k, v] : all) {
        const double a = 100.0 * v / static_cast<double>(ds.size());
        const double t = 100.0 * test[k] / static_cast<double>(s.test.size());
        worst = std::max(worst, std::abs(a - t));
    }
    return worst;
}

void check_partition(const LabeledDataset& ds, const Split& s) {
    std::set<std::string> train(s.train.begin(), s.train.end()), test(s.test.begin(), s.test.end());
    CHECK(train.size() == s.train.size());
    CHECK(test.size() == s.test.size());
    CHECK(train.size() + test.size() == ds.size());
    std::set<std::string> train_p, test_p;
    for (const auto& id : s.train) {
        CHECK_FALSE(test.count(id));
        train_p.insert(ds.items()[ds.index_of(id)].sequence.patient_id);
    }
    for (const auto& id : s.test) test_p.insert(ds.items()[ds.index_of(id)].sequence.patient_id);
    for (const auto& p : test_p) CHECK_FALSE(train_p.count(p));
}

}  // namespace

TEST_CASE("assemble pairs labels with sequences") {
    std::vector<extract::Sequence> seqs;
    for (const char* id : {"b", "a", "c"}) {
        extract::Sequence s;
        s.sequence_id = id;
        s.patient_id = "P";
        seqs.push_back(s);
    }
    const std::vector<patterns::LabelRecord> labels = {{"a", Label::positive, patterns::LabelSource::manual, {}, "x"},
                                                       {"c", Label::neither, patterns::LabelSource::pattern, "p", {}}};
    const auto ds = LabeledDataset::assemble(seqs, labels);
    REQUIRE(ds.size() == 2);
    CHECK(ds.index_of("a") != ds.index_of("c"));
    CHECK_THROWS_AS(ds.index_of("b"), NotFoundError);
    CHECK(ds.patient_ids() == std::vector<std::string>{"P"});

    const std::vector<patterns::LabelRecord> dangling = {{"zz", Label::positive, patterns::LabelSource::manual, {}, "x"}};
    CHECK_THROWS_AS(LabeledDataset::assemble(seqs, dangling), DataError);
}

TEST_CASE("split examples") {
    std::vector<LabeledItem> items;
    for (int i = 0; i < 10; ++i) items.push_back(item("P" + std::to_string(i), "s" + std::to_string(i), Label::positive));
    const LabeledDataset ds(items);
    const auto s = stratified_patient_split(ds, 0.1, 7);
    CHECK(s.test.size() == 1);
    CHECK(s.train.size() == 9);
    CHECK(s.strata_definition == kStrataDefinition);
    check_partition(ds, s);

    CHECK_THROWS_AS(stratified_patient_split(ds, 0.0, 1), UsageError);
    CHECK_THROWS_AS(stratified_patient_split(ds, 1.0, 1), UsageError);
    CHECK_THROWS_AS(stratified_patient_split(LabeledDataset({items[0]}), 0.5, 1), DataError);

    CHECK(stratified_patient_split(ds, 0.3, 5).test == stratified_patient_split(ds, 0.3, 5).test);
}

TEST_CASE("split is patient-disjoint and balanced on a synthetic fixture") {
    const auto fx = fixture::labeled_synthetic(100, 3);
    const auto& ds = fx.dataset;
    REQUIRE(ds.size() > 500);
    std::set<std::string> strata;
    for (const auto& it : ds.items()) strata.insert(stratum(it.record));
    CHECK(strata.size() == 6);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = stratified_patient_split(ds, 0.1, seed);
        check_partition(ds, s);
        CHECK(max_stratum_deviation(ds, s) <= 5.0);
        const double frac = static_cast<double>(s.test.size()) / static_cast<double>(ds.size());
        CHECK(frac == doctest::Approx(0.1).epsilon(0.3));
    }
}

TEST_CASE("k-fold partitions") {
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back("P" + std::to_string(i));
    auto folds = kfold_patient_folds(ids, 10, 1);
    for (const auto& f : folds) CHECK(f.size() == 1);

    ids.clear();
    for (int i = 0; i < 23; ++i) ids.push_back("P" + std::to_string(i));
    folds = kfold_patient_folds(ids, 10, 1);
    std::size_t twos = 0;
    std::set<std::string> seen;
    for (const auto& f : folds) {
        CHECK((f.size() == 2 || f.size() == 3));
        twos += f.size() == 2;
        for (const auto& p : f) CHECK(seen.insert(p).second);
    }
    CHECK(twos == 7);
    CHECK(seen.size() == 23);
    CHECK(kfold_patient_folds(ids, 10, 1) == folds);
    CHECK(kfold_patient_folds(ids, 10, 2) != folds);

    CHECK_THROWS_AS(kfold_patient_folds(ids, 1, 1), UsageError);
    CHECK_THROWS_AS(kfold_patient_folds(ids, 24, 1), DataError);
}

TEST_CASE("subset keeps dataset order") {
    std::vector<LabeledItem> items;
    for (int i = 0; i < 5; ++i) items.push_back(item("P" + std::to_string(i % 2), "s" + std::to_string(i), Label::negative));
    const LabeledDataset ds(items);
    const auto sub = subset(ds, {"s3", "s0"});
    REQUIRE(sub.size() == 2);
    CHECK(sub.items()[0].sequence.sequence_id == "s0");
    CHECK_THROWS_AS(subset(ds, {"nope"}), NotFoundError);
}

TEST_CASE("dataset files round trip") {
    testing::TempDir dir("dataset");
    std::vector<LabeledItem> items = {item("P1", "a", Label::positive), item("P2", "b", Label::neither, patterns::LabelSource::manual)};
    items[0].sequence.keyword_matches.push_back({"Memory", 0, 6});
    items[0].sequence.span = {10, 20, {0}};
    items[0].sequence.token_count = 2;
    const LabeledDataset ds(items);
    save_dataset(ds, dir / "d.jsonl");
    const auto back = load_dataset(dir / "d.jsonl");
    CHECK(back == ds);
    CHECK(serialize(back) == serialize(ds));

    std::string text = serialize(ds);
    const auto v = text.find("\"schema_version\":1");
    REQUIRE(v != std::string::npos);
    text.replace(v, 18, "\"schema_version\":9");
    try {
        deserialize(text);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("schema_version 9") != std::string::npos);
    }
    CHECK_THROWS_AS(deserialize(serialize(ds) + "{corrupt\n"), DataError);
    CHECK_THROWS_AS(deserialize(""), DataError);

    Split s{{"a"}, {"b"}, 42, kStrataDefinition};
    io::write_file_atomic(dir / "split.json", io::dump_pretty(to_json(s)));
    const auto s2 = load_split(dir / "split.json");
    CHECK(s2.train == s.train);
    CHECK(s2.test == s.test);
    CHECK(s2.seed == 42);
}

TEST_CASE("large dataset round trip is fast") {
    std::vector<LabeledItem> items;
    for (int i = 0; i < 8656; ++i) {
        auto it = item("P" + std::to_string(i / 4), "s" + std::to_string(i), static_cast<Label>(i % 3));
        it.sequence.text = std::string(600, 'x');
        items.push_back(std::move(it));
    }
    const LabeledDataset ds(std::move(items));
    testing::TempDir dir("dataset");
    const auto t0 = std::chrono::steady_clock::now();
    save_dataset(ds, dir / "big.jsonl");
    const auto back = load_dataset(dir / "big.jsonl");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(back.size() == 8656);
    CHECK(secs < 2.0);
}
