#include <cmath>

#include "doctest.h"

#include "cogscreen/error.hpp"
#include "cogscreen/linmodel/sequence_model.hpp"
#include "cogscreen/linmodel/stats.hpp"
#include "cogscreen/linmodel/tfidf.hpp"
#include "cogscreen/util/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cogscreen;
using namespace cogscreen::linmodel;

using Docs = std::vector<std::vector<std::string>>;

TEST_CASE("sparse vectors and matrices") {
    const auto v = SparseVector::from_pairs(5, {{3, 1.0}, {1, 2.0}, {3, 0.5}, {4, 0.0}});
    CHECK(v.indices == std::vector<std::uint32_t>{1, 3});
    CHECK(v.values == std::vector<double>{2.0, 1.5});
    CHECK(v.valid());
    CHECK(v.at(3) == 1.5);
    CHECK(v.at(0) == 0.0);
    CHECK_THROWS_AS(SparseVector::from_pairs(2, {{2, 1.0}}), UsageError);
    CHECK(SparseVector::from_dense(std::vector<double>{0, 3, 0}).indices == std::vector<std::uint32_t>{1});

    const auto X = CsrMatrix::from_dense({{1, 0, 2}, {0, 0, 3}}, 3);
    CHECK(X.rows() == 2);
    CHECK(X.nnz() == 3);
    CHECK(X.column(2) == std::vector<double>{2, 3});
    const auto Y = X.select_columns({true, false, true});
    CHECK(Y.cols() == 2);
    CHECK(Y.column(1) == std::vector<double>{2, 3});
    const std::vector<double> scale{2, 1, 10};
    CHECK(X.scale_columns(scale).column(2) == std::vector<double>{20, 30});
    CHECK(X.column_mean_squares() == std::vector<double>{0.5, 0.0, 6.5});
}

TEST_CASE("tf-idf examples") {
    const Docs docs = {{"memory", "loss", "memory"}, {"memory", "intact"}};
    const auto m = fit_tfidf(docs);
    CHECK(m.dimension() == 3);
    CHECK(m.terms == std::vector<std::string>{"intact", "loss", "memory"});
    CHECK(m.idf[m.vocabulary.at("memory")] == 0.0);
    CHECK(m.idf[m.vocabulary.at("loss")] == doctest::Approx(0.6931471805599453).epsilon(1e-15));

    const auto v = transform(m, docs[0]);
    CHECK(v.at(m.vocabulary.at("loss")) == doctest::Approx(std::log(2.0) / 3.0).epsilon(1e-15));
    CHECK(v.at(m.vocabulary.at("memory")) == 0.0);
    CHECK(transform(m, std::vector<std::string>{"unseen", "words"}).nnz() == 0);
    CHECK(transform(m, std::vector<std::string>{}).nnz() == 0);

    const auto single = fit_tfidf(Docs{{"a", "b"}});
    for (double w : single.idf) CHECK(w == 0.0);

    CHECK_THROWS_AS(fit_tfidf(Docs{}), DataError);
    CHECK_THROWS_AS(fit_tfidf(Docs{{}, {}}), DataError);

    const auto back = tfidf_from_json(to_json(m));
    CHECK(back.terms == m.terms);
    CHECK(back.idf == m.idf);
    CHECK(back.doc_count == 2);
}

TEST_CASE("tf-idf matches the oracle on random corpora") {
    Rng rng(8);
    const char* vocab[] = {"a", "b", "c", "d", "e", "f", "g"};
    for (int trial = 0; trial < 300; ++trial) {
        Docs docs(static_cast<std::size_t>(rng.between(1, 8)));
        for (auto& d : docs) {
            const int n = rng.between(0, 9);
            for (int i = 0; i < n; ++i) d.push_back(vocab[rng.below(7)]);
        }
        if (std::all_of(docs.begin(), docs.end(), [](const auto& d) { return d.empty(); })) docs[0].push_back("a");
        const auto m = fit_tfidf(docs);
        const auto idf = oracle::idf(docs);
        for (const auto& [t, w] : idf) CHECK(std::abs(m.idf[m.vocabulary.at(t)] - w) <= 1e-12);
        for (const auto& d : docs) {
            const auto v = transform(m, d);
            const auto ref = oracle::tfidf(docs, d);
            for (const auto& [t, w] : ref) CHECK(std::abs(v.at(m.vocabulary.at(t)) - w) <= 1e-12);
            // A token present in every doc weighs zero everywhere.
            for (const auto& [t, w] : idf) {
                if (w == 0.0) CHECK(v.at(m.vocabulary.at(t)) == 0.0);
            }
        }
    }
}

TEST_CASE("pcc examples and errors") {
    const std::vector<double> a{1, 2, 3}, b{3, 2, 1};
    CHECK(pcc(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pcc(a, b) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(pcc(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK_THROWS_AS(pcc(a, std::vector<double>{1, 1, 1}), DataError);
    CHECK_THROWS_AS(pcc(std::vector<double>{1}, std::vector<double>{2}), DataError);
    CHECK_THROWS_AS(pcc(a, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("pcc and column_pcc match the oracle") {
    Rng rng(9);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.between(2, 30));
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.chance(0.3) ? 0.0 : rng.normal() * 3 + 1;
            y[i] = rng.chance(0.5) ? 1.0 : 0.0;
        }
        if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) x[0] += 1;
        if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) y[0] = 1 - y[0];
        const double ref = oracle::pcc(x, y);
        CHECK(std::abs(pcc(x, y) - ref) <= 1e-12);
        CHECK(std::abs(pcc(y, x) - ref) <= 1e-12);

        std::vector<std::vector<double>> rows(n, std::vector<double>(1));
        for (std::size_t i = 0; i < n; ++i) rows[i][0] = x[i];
        const auto col = column_pcc(CsrMatrix::from_dense(rows, 1), y);
        REQUIRE(col[0].has_value());
        CHECK(std::abs(*col[0] - ref) <= 1e-12);
    }
}

TEST_CASE("feature selection") {
    CHECK(mask_from_pcc({0.9, 0.005, -0.5}, 0.01) == std::vector<bool>{true, false, true});
    CHECK(mask_from_pcc({0.9, 0.005, -0.5, std::nullopt}, 0.0) == std::vector<bool>{true, true, true, false});
    CHECK(mask_from_pcc({0.9, 0.005, -0.5}, 1.01) == std::vector<bool>{false, false, false});

    Rng rng(10);
    const std::size_t n = 40, d = 6;
    std::vector<std::vector<double>> rows(n, std::vector<double>(d, 0.0));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = i % 2;
        for (std::size_t j = 0; j + 1 < d; ++j) rows[i][j] = rng.chance(0.5) ? rng.uniform() + y[i] * j * 0.1 : 0.0;
        rows[i][d - 1] = 2.0;
    }
    const auto X = CsrMatrix::from_dense(rows, d);
    const auto p = column_pcc(X, y);
    CHECK_FALSE(p[d - 1].has_value());
    for (double thr : {0.0, 0.05, 0.2, 0.5}) {
        const auto mask = select_features(X, y, thr);
        for (std::size_t j = 0; j + 1 < d; ++j) {
            const double ref = oracle::pcc(X.column(j), y);
            CHECK(mask[j] == (std::abs(ref) >= thr));
        }
        CHECK_FALSE(mask[d - 1]);
    }
}

TEST_CASE("feature tokens are lowercased extraction tokens") {
    CHECK(feature_tokens("MOCA 22/30, Memory") == std::vector<std::string>{"moca", "22", "/", "30", ",", "memory"});
}

TEST_CASE("sequence model composes tf-idf, mask and logistic regression") {
    const Docs docs = {{"memory", "intact"}, {"memory", "loss"}, {"knee", "pain"}, {"memory", "intact", "today"},
                       {"severe", "memory", "loss"}, {"knee", "surgery"}};
    const std::vector<int> labels{1, 2, 0, 1, 2, 0};
    const auto m = fit_sequence_model(docs, labels, 0.01, 0.0);
    CHECK(m.logreg.classes == std::vector<int>{0, 1, 2});
    CHECK(m.tfidf.selected.has_value());

    // Manual composition: transform, zero unselected columns via weights, OvR normalize.
    const std::vector<std::string> doc{"memory", "loss", "unknown"};
    const auto x = transform(m.tfidf, doc);
    std::vector<double> ps;
    for (std::size_t k = 0; k < 3; ++k) {
        double z = m.logreg.intercepts[k];
        for (std::size_t i = 0; i < x.nnz(); ++i) z += x.values[i] * m.logreg.weights[k][x.indices[i]];
        ps.push_back(oracle::sigmoid(z));
    }
    const double total = ps[0] + ps[1] + ps[2];
    const auto probs = predict_tokens(m, doc);
    CHECK(probs.p_neither == doctest::Approx(ps[0] / total).epsilon(1e-12));
    CHECK(probs.p_negative == doctest::Approx(ps[1] / total).epsilon(1e-12));
    CHECK(probs.p_positive == doctest::Approx(ps[2] / total).epsilon(1e-12));
    CHECK(probs.argmax() == Label::positive);
    CHECK(predict(m, "Memory loss unknown") == probs);

    // Unselected columns carry zero weight.
    const auto m2 = fit_sequence_model(docs, labels, 0.01, 0.99);
    for (std::size_t j = 0; j < m2.tfidf.dimension(); ++j) {
        if (!(*m2.tfidf.selected)[j]) {
            for (const auto& w : m2.logreg.weights) CHECK(w[j] == 0.0);
        }
    }

    const auto back = sequence_model_from_json(to_json(m));
    CHECK(predict_tokens(back, doc) == probs);
    CHECK(back.pcc_threshold == m.pcc_threshold);
}

TEST_CASE("default grid ships the reported optimum") {
    const CvGrid g;
    CHECK(std::find(g.lambdas.begin(), g.lambdas.end(), 10.0) != g.lambdas.end());
    CHECK(std::find(g.pcc_thresholds.begin(), g.pcc_thresholds.end(), 0.01) != g.pcc_thresholds.end());
}

TEST_CASE("best-cell tie rules") {
    std::vector<CvCell> cells(4);
    cells[0] = {1.0, 0.01, {}, 0.9, 0, true, ""};
    cells[1] = {10.0, 0.01, {}, 0.9, 0, true, ""};
    cells[2] = {10.0, 0.05, {}, 0.9, 0, true, ""};
    cells[3] = {0.1, 0.0, {}, 0.95, 0, false, "class missing"};
    CHECK(pick_best(cells) == 2);
    cells[3].valid = true;
    CHECK(pick_best(cells) == 3);
    for (auto& c : cells) c.valid = false;
    CHECK_THROWS_AS(pick_best(cells), DataError);
}

TEST_CASE("cross-validation on a synthetic corpus") {
    const auto fx = fixture::labeled_synthetic(40, 5, 0);
    const auto& ds = fx.dataset;
    const auto folds = dataset::kfold_patient_folds(ds.patient_ids(), 4, 1);

    SUBCASE("single cell") {
        CvGrid g{{1.0}, {0.01}};
        const auto r = cross_validate(ds, folds, g);
        REQUIRE(r.cells.size() == 1);
        CHECK(r.best == 0);
        CHECK(r.cells[0].fold_accuracy.size() == 4);
        CHECK(r.folds == 4);
    }
    SUBCASE("a huge penalty collapses to the prior") {
        CvGrid g{{0.0, 1e6}, {0.0}};
        CvOptions opts;
        opts.fit.tol = 1e-6;
        const auto r = cross_validate(ds, folds, g, opts);
        CHECK(r.best_cell().lambda == 0.0);
        CHECK(r.cells[0].mean_accuracy > r.cells[1].mean_accuracy + 0.2);
    }
    SUBCASE("deterministic, with sample sd") {
        CvGrid g{{0.1, 1.0}, {0.0, 0.05}};
        CvOptions one;
        one.threads = 1;
        CvOptions many;
        many.threads = 3;
        const auto a = cross_validate(ds, folds, g, one);
        const auto b = cross_validate(ds, folds, g, many);
        CHECK(io::dump_line(to_json(a)) == io::dump_line(to_json(b)));
        for (const auto& c : a.cells) {
            double mean = 0;
            for (double v : c.fold_accuracy) mean += v;
            mean /= c.fold_accuracy.size();
            double ss = 0;
            for (double v : c.fold_accuracy) ss += (v - mean) * (v - mean);
            CHECK(c.mean_accuracy == doctest::Approx(mean).epsilon(1e-12));
            CHECK(c.sd_accuracy == doctest::Approx(std::sqrt(ss / (c.fold_accuracy.size() - 1))).epsilon(1e-12));
        }
    }
    SUBCASE("a fold that removes a class invalidates the cell") {
        // Keep positives only for one patient; its fold leaves training without positives.
        std::vector<dataset::LabeledItem> items;
        std::string keeper;
        for (const auto& it : ds.items()) {
            if (it.record.label == Label::positive) {
                if (keeper.empty()) keeper = it.sequence.patient_id;
                if (it.sequence.patient_id != keeper) continue;
            }
            items.push_back(it);
        }
        const dataset::LabeledDataset narrow(items);
        std::vector<std::vector<std::string>> f2 = {{keeper}, {}};
        for (const auto& p : narrow.patient_ids()) {
            if (p != keeper) f2[1].push_back(p);
        }
        CvGrid g{{1.0}, {0.0}};
        CHECK_THROWS_WITH_AS(cross_validate(narrow, f2, g),
                             "cross-validation: every grid cell is invalid (training folds for fold 0 lack class positive)",
                             DataError);
        CHECK_THROWS_AS(train_sequence_model(narrow, f2, g), DataError);
    }
}
