#include <cmath>
#include <fstream>

#include "doctest.h"

#include "cogscreen/error.hpp"
#include "cogscreen/patient.hpp"
#include "cogscreen/util/rng.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cogscreen;
using namespace cogscreen::patient;

namespace {

PatientFeatures row(const std::string& id, double pos, double neg, std::size_t total) {
    return {id, pos, neg, 1.0 - pos - neg, total};
}

// pct_positive alone separates the classes: CI patients above 0.3, others below 0.2.
void separable(Rng& rng, std::size_t n, std::vector<PatientFeatures>& f, std::vector<PatientLabel>& l) {
    for (std::size_t i = 0; i < n; ++i) {
        const bool ci = i % 2 == 0;
        const double pos = ci ? 0.3 + 0.5 * rng.uniform() : 0.2 * rng.uniform();
        const double neg = (1 - pos) * rng.uniform();
        const std::string id = "P" + std::to_string(i);
        f.push_back(row(id, pos, neg, 11 + rng.below(30)));
        l.push_back({id, ci, "fixture"});
    }
}

}  // namespace

TEST_CASE("aggregate features") {
    const std::vector<ClassProbs> four_pos(4, ClassProbs{0.1, 0.1, 0.8});
    CHECK(aggregate_features("A", four_pos) == PatientFeatures{"A", 1.0, 0.0, 0.0, 4});
    CHECK(aggregate_features("A", {}) == PatientFeatures{"A", 0, 0, 0, 0});
    const auto f = aggregate_features("B", {{0.6, 0.3, 0.1}, {0.1, 0.2, 0.7}, {0.2, 0.2, 0.6}, {0.5, 0.4, 0.1}});
    CHECK(f.pct_positive == 0.5);
    CHECK(f.pct_negative == 0.0);
    CHECK(f.pct_neither == 0.5);
    CHECK(f.total_sequences == 4);
    CHECK(f.as_row() == std::vector<double>{0.5, 0.0, 0.5, 4.0});

    // Ties go to the higher class.
    const auto t = aggregate_features("C", {{0.4, 0.4, 0.2}, {0.5, 0, 0.5}, {1.0 / 3, 1.0 / 3, 1.0 / 3}});
    CHECK(t.pct_negative == doctest::Approx(1.0 / 3));
    CHECK(t.pct_positive == doctest::Approx(2.0 / 3));

    Rng rng(30);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<ClassProbs> probs(rng.between(1, 40));
        for (auto& p : probs) {
            const double a = rng.uniform(), b = rng.uniform() * (1 - a);
            p = {a, b, 1 - a - b};
        }
        const auto g = aggregate_features("R", probs);
        CHECK(std::abs(g.pct_positive + g.pct_negative + g.pct_neither - 1.0) <= 1e-9);
        CHECK(g.total_sequences == probs.size());
    }
}

TEST_CASE("filter by sequence count") {
    const std::vector<PatientFeatures> f{row("a", 0, 0, 5), row("b", 0, 0, 10), row("c", 0, 0, 11), row("d", 0, 0, 40)};
    const auto kept = filter_min_sequences(f);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].patient_id == "c");
    CHECK(kept[1].patient_id == "d");
    CHECK(filter_min_sequences(f, 0).size() == 4);
    CHECK(filter_min_sequences(f, 40).empty());
}

TEST_CASE("standardization") {
    const auto s = linmodel::fit_standardizer({{1, 5}, {2, 5}, {3, 5}});
    CHECK(s.mean[0] == 2.0);
    CHECK(s.sd[0] == doctest::Approx(std::sqrt(2.0 / 3)).epsilon(1e-15));
    const double expect[] = {-1.224744871391589, 0.0, 1.224744871391589};
    for (int i = 0; i < 3; ++i) {
        const auto z = s.apply(std::vector<double>{1.0 + i, 5});
        CHECK(z[0] == doctest::Approx(expect[i]).epsilon(1e-12));
        CHECK(z[1] == 0.0);
    }

    Rng rng(31);
    std::vector<std::vector<double>> rows(50, std::vector<double>(3));
    for (auto& r : rows) {
        r[0] = rng.normal() * 7 + 3;
        r[1] = rng.uniform();
        r[2] = 4.0;
    }
    const auto st = linmodel::fit_standardizer(rows);
    std::vector<std::vector<double>> z;
    for (const auto& r : rows) z.push_back(st.apply(r));
    for (std::size_t j = 0; j < 2; ++j) {
        std::vector<double> col;
        for (const auto& r : z) col.push_back(r[j]);
        const double m = oracle::mean(col);
        double ss = 0;
        for (double v : col) ss += (v - m) * (v - m);
        CHECK(std::abs(m) < 1e-10);
        CHECK(std::abs(std::sqrt(ss / col.size()) - 1.0) < 1e-10);
    }
    for (const auto& r : z) CHECK(r[2] == 0.0);
    const auto again = linmodel::fit_standardizer(z);
    CHECK(std::abs(again.mean[0]) < 1e-10);
    CHECK(again.sd[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("training on a separable fixture") {
    Rng rng(32);
    std::vector<PatientFeatures> f;
    std::vector<PatientLabel> l;
    separable(rng, 60, f, l);

    PatientTrainOptions opts;
    opts.lambdas = {0.0, 1e6};
    opts.seed = 4;
    auto r = train_patient_model(f, l, opts);
    CHECK(r.cv[r.best].lambda == 0.0);
    CHECK(r.cv[0].mean_accuracy == 1.0);
    CHECK(r.cv[1].mean_accuracy < 0.8);
    CHECK(r.model.binary());
    REQUIRE(r.model.standardizer.has_value());

    for (std::size_t i = 0; i < f.size(); ++i) {
        const double p = predict_patient(r.model, f[i]);
        // Separable at lambda 0, so the extremes may round to exactly 0 or 1.
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        if (l[i].has_ci) CHECK(p > 0.9);
        else CHECK(p < 0.1);
    }

    // A row at the training mean scores sigmoid(intercept).
    const auto& mu = r.model.standardizer->mean;
    const PatientFeatures centre{"m", mu[0], mu[1], mu[2], static_cast<std::size_t>(0)};
    auto m2 = r.model;
    m2.standardizer->mean[3] = 0.0;
    CHECK(predict_patient(m2, centre) == doctest::Approx(linmodel::sigmoid(m2.intercepts[0])).epsilon(1e-12));

    auto zero = r.model;
    for (auto& w : zero.weights[0]) w = 0.0;
    CHECK(predict_patient(zero, f[0]) == doctest::Approx(linmodel::sigmoid(zero.intercepts[0])).epsilon(1e-15));

    // Same inputs, same bytes.
    const auto r2 = train_patient_model(f, l, opts);
    CHECK(io::dump_line(to_json(r2)) == io::dump_line(to_json(r)));

    const auto back = patient_model_from_json(to_json(r));
    CHECK(predict_patient(back, f[3]) == predict_patient(r.model, f[3]));
}

TEST_CASE("selection picks a working lambda from the default grid") {
    Rng rng(33);
    std::vector<PatientFeatures> f;
    std::vector<PatientLabel> l;
    separable(rng, 80, f, l);
    const auto r = train_patient_model(f, l);
    CHECK(r.cv.size() == 4);
    CHECK(r.cv[0].fold_accuracy.size() == 10);
    CHECK(r.cv[r.best].mean_accuracy >= 0.95);
}

TEST_CASE("no signal predicts one half") {
    std::vector<PatientFeatures> f;
    std::vector<PatientLabel> l;
    for (int i = 0; i < 20; ++i) {
        f.push_back(row("P" + std::to_string(i), 0.2, 0.3, 12));
        l.push_back({"P" + std::to_string(i), i % 2 == 0, "x"});
    }
    PatientTrainOptions opts;
    opts.lambdas = {1.0};
    opts.folds = 4;
    const auto r = train_patient_model(f, l, opts);
    for (const auto& x : f) CHECK(predict_patient(r.model, x) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("training errors") {
    std::vector<PatientFeatures> f{row("a", 1, 0, 12), row("b", 0, 0, 12)};
    CHECK_THROWS_AS(train_patient_model(f, {{"a", true, ""}}), DataError);
    CHECK_THROWS_AS(train_patient_model(f, {{"a", true, ""}, {"b", true, ""}}), DataError);
    PatientTrainOptions opts;
    opts.lambdas = {};
    CHECK_THROWS_AS(train_patient_model(f, {{"a", true, ""}, {"b", false, ""}}, opts), UsageError);
}

TEST_CASE("features csv and labels files") {
    const std::vector<PatientFeatures> f{row("a", 0.5, 0.25, 12), {"b", 0, 0, 0, 0}};
    const auto csv = features_csv(f);
    CHECK(csv.rfind("patient_id,pct_positive,pct_negative,pct_neither,total_sequences\n", 0) == 0);
    CHECK(parse_features_csv(csv) == f);
    CHECK_THROWS_AS(parse_features_csv("patient_id,pct_positive,pct_negative,pct_neither,total_sequences\na,1,2\n"),
                    DataError);
    CHECK_THROWS_AS(features_csv({row("x,y", 0, 0, 1)}), DataError);

    testing::TempDir dir("plabels");
    const std::vector<PatientLabel> labels{{"a", true, "review"}, {"b", false, "review"}};
    std::ofstream(dir / "l.jsonl") << patient_labels_jsonl(labels);
    const auto back = load_patient_labels(dir / "l.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[0].has_ci);
    CHECK(back[1].source == "review");
    std::ofstream(dir / "d.jsonl") << patient_labels_jsonl({labels[0], labels[0]});
    CHECK_THROWS_AS(load_patient_labels(dir / "d.jsonl"), DataError);
}
