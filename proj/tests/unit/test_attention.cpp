#include <cmath>

#include "doctest.h"

#include "cogscreen/attention/attention.hpp"
#include "cogscreen/error.hpp"
#include "cogscreen/util/rng.hpp"
#include "oracles.hpp"

using namespace cogscreen;
using namespace cogscreen::attention;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    std::vector<double> v(r * c);
    for (auto& x : v) x = rng.normal() * scale;
    return Matrix(r, c, std::move(v));
}

// Straight from the definition, no shared helpers.
Matrix naive_attention(const Matrix& q, const Matrix& k, const Matrix& v) {
    Matrix out(q.rows(), v.cols());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        std::vector<double> logits(k.rows());
        for (std::size_t j = 0; j < k.rows(); ++j) {
            double s = 0;
            for (std::size_t t = 0; t < q.cols(); ++t) s += q(i, t) * k(j, t);
            logits[j] = s / std::sqrt(static_cast<double>(q.cols()));
        }
        const auto w = oracle::softmax(logits);
        for (std::size_t c = 0; c < v.cols(); ++c) {
            double s = 0;
            for (std::size_t j = 0; j < k.rows(); ++j) s += w[j] * v(j, c);
            out(i, c) = s;
        }
    }
    return out;
}

void check_close(const Matrix& a, const Matrix& b, double tol) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) CHECK(std::abs(a(i, j) - b(i, j)) <= tol);
    }
}

}  // namespace

TEST_CASE("softmax") {
    const auto u = softmax(std::vector<double>{0, 0});
    CHECK(u == std::vector<double>{0.5, 0.5});
    const auto s = softmax(std::vector<double>{std::log(3.0), 0});
    CHECK(s[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(s[1] == doctest::Approx(0.25).epsilon(1e-15));
    for (double c : {-1e4, -3.0, 0.0, 17.0, 1e4}) {
        for (double p : softmax(std::vector<double>{c, c, c})) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-15));
    }
    const auto big = softmax(std::vector<double>{1e4, 0, -1e4});
    CHECK(big[0] == 1.0);
    CHECK(big[2] >= 0.0);
    CHECK_THROWS_AS(softmax(std::vector<double>{}), DataError);
    CHECK_THROWS_AS(softmax(std::vector<double>{1, NAN}), DataError);
    CHECK_THROWS_AS(softmax(std::vector<double>{INFINITY}), DataError);

    Rng rng(20);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> z(static_cast<std::size_t>(rng.between(1, 12)));
        for (auto& x : z) x = rng.normal() * 50;
        const auto p = softmax(z);
        const auto ref = oracle::softmax(z);
        double sum = 0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            CHECK(p[i] >= 0.0);
            CHECK(std::abs(p[i] - ref[i]) <= 1e-12);
            sum += p[i];
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("matrix basics") {
    const Matrix a(2, 3, {1, 2, 3, 4, 5, 6});
    const Matrix b(3, 1, {1, 0, -1});
    CHECK(matmul(a, b) == Matrix(2, 1, {-2, -2}));
    CHECK(a.transpose() == Matrix(3, 2, {1, 4, 2, 5, 3, 6}));
    CHECK(matmul(Matrix::identity(2), a) == a);
    CHECK_THROWS_AS(matmul(a, a), DataError);
    CHECK_THROWS_AS(Matrix(2, 2, {1, 2, 3}), DataError);
    CHECK_THROWS_AS(Matrix(1, 1, std::vector<double>{NAN}), DataError);
}

TEST_CASE("scaled dot-product attention") {
    Rng rng(21);
    SUBCASE("single key repeats its value") {
        const auto q = random_matrix(rng, 4, 3);
        const Matrix k(1, 3, {0.2, -1, 5});
        const Matrix v(1, 2, {7, -8});
        const auto out = scaled_dot_product_attention(q, k, v);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(out(i, 0) == 7.0);
            CHECK(out(i, 1) == -8.0);
        }
    }
    SUBCASE("a sharp query picks out its key") {
        const auto k = Matrix::identity(3);
        const Matrix v(3, 2, {1, 2, 3, 4, 5, 6});
        const double alpha = 100;
        const Matrix q(1, 3, {0, alpha, 0});
        const auto out = scaled_dot_product_attention(q, k, v);
        // Hand softmax over logits (0, alpha/sqrt3, 0).
        const double e = std::exp(-alpha / std::sqrt(3.0));
        const double w_hit = 1 / (1 + 2 * e), w_miss = e / (1 + 2 * e);
        CHECK(out(0, 0) == doctest::Approx(w_hit * 3 + w_miss * (1 + 5)).epsilon(1e-12));
        CHECK(out(0, 1) == doctest::Approx(w_hit * 4 + w_miss * (2 + 6)).epsilon(1e-12));
        CHECK(std::abs(out(0, 0) - 3) < 1e-20 + 1e-10);
    }
    SUBCASE("permuting keys and values together") {
        const auto q = random_matrix(rng, 3, 4);
        const auto k = random_matrix(rng, 5, 4);
        const auto v = random_matrix(rng, 5, 2);
        const std::size_t perm[] = {3, 0, 4, 1, 2};
        Matrix k2(5, 4), v2(5, 2);
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t t = 0; t < 4; ++t) k2(i, t) = k(perm[i], t);
            for (std::size_t t = 0; t < 2; ++t) v2(i, t) = v(perm[i], t);
        }
        check_close(scaled_dot_product_attention(q, k, v), scaled_dot_product_attention(q, k2, v2), 1e-12);
    }
    SUBCASE("logits are divided by sqrt(d_k)") {
        const auto q = random_matrix(rng, 3, 4);
        const auto k = random_matrix(rng, 6, 4);
        const auto v = random_matrix(rng, 6, 3);
        check_close(scaled_dot_product_attention(q, k, v), naive_attention(q, k, v), 1e-12);
        // Unscaled logits of (sqrt(d_k) Q) K^T reproduce the scaled attention of Q.
        Matrix q2 = q;
        for (std::size_t i = 0; i < q.rows(); ++i) {
            for (std::size_t t = 0; t < 4; ++t) q2(i, t) *= 2.0;
        }
        const auto w = attention_weights(q2, k);
        for (std::size_t i = 0; i < q.rows(); ++i) {
            std::vector<double> logits(k.rows());
            for (std::size_t j = 0; j < k.rows(); ++j) {
                for (std::size_t t = 0; t < 4; ++t) logits[j] += q(i, t) * k(j, t);
            }
            const auto ref = oracle::softmax(logits);
            for (std::size_t j = 0; j < k.rows(); ++j) CHECK(std::abs(w(i, j) - ref[j]) <= 1e-12);
        }
    }
    SUBCASE("weight rows sum to one") {
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t n = rng.between(1, 5), m = rng.between(1, 6), d = rng.between(1, 8);
            const auto w = attention_weights(random_matrix(rng, n, d, 3), random_matrix(rng, m, d, 3));
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0;
                for (double x : w.row(i)) s += x;
                CHECK(std::abs(s - 1.0) <= 1e-12);
            }
        }
    }
    SUBCASE("shape errors") {
        CHECK_THROWS_AS(scaled_dot_product_attention(Matrix(2, 3), Matrix(2, 4), Matrix(2, 1)), DataError);
        CHECK_THROWS_AS(scaled_dot_product_attention(Matrix(2, 3), Matrix(2, 3), Matrix(3, 1)), DataError);
        CHECK_THROWS_AS(scaled_dot_product_attention(Matrix(2, 0), Matrix(2, 0), Matrix(2, 1)), DataError);
    }
}

TEST_CASE("multi-head attention") {
    Rng rng(22);
    SUBCASE("one identity head reduces to single-head attention") {
        const auto q = random_matrix(rng, 3, 4), k = random_matrix(rng, 5, 4), v = random_matrix(rng, 5, 4);
        MultiHeadConfig cfg{4, 4, 4, {{Matrix::identity(4), Matrix::identity(4), Matrix::identity(4)}},
                            Matrix::identity(4)};
        check_close(multi_head_attention(q, k, v, cfg), scaled_dot_product_attention(q, k, v), 1e-12);
        cfg.wo = Matrix(4, 4);
        const auto zero = multi_head_attention(q, k, v, cfg);
        for (double x : zero.values()) CHECK(x == 0.0);
    }
    SUBCASE("two heads by hand") {
        // d_model = 2, d_k = d_v = 1.
        const Matrix q(1, 2, {1, 0});
        const Matrix k(2, 2, {1, 0, 0, 1});
        const Matrix v(2, 2, {2, 0, 0, 4});
        MultiHeadConfig cfg;
        cfg.d_model = 2;
        cfg.d_k = 1;
        cfg.d_v = 1;
        cfg.heads.push_back({Matrix(2, 1, {1, 0}), Matrix(2, 1, {1, 0}), Matrix(2, 1, {1, 0})});
        cfg.heads.push_back({Matrix(2, 1, {0, 1}), Matrix(2, 1, {1, 1}), Matrix(2, 1, {0, 1})});
        cfg.wo = Matrix(2, 2, {1, 2, 3, 4});
        // head 1: q'=1, k'=(1,0), v'=(2,0): weights softmax(1,0).
        const double a = std::exp(1.0) / (std::exp(1.0) + 1);
        const double h1 = a * 2;
        // head 2: q'=0, k'=(1,1): uniform weights over v'=(0,4).
        const double h2 = 2.0;
        const auto out = multi_head_attention(q, k, v, cfg);
        CHECK(out.rows() == 1);
        CHECK(out(0, 0) == doctest::Approx(h1 * 1 + h2 * 3).epsilon(1e-14));
        CHECK(out(0, 1) == doctest::Approx(h1 * 2 + h2 * 4).epsilon(1e-14));
    }
    SUBCASE("random heads against the naive composition") {
        const std::size_t dm = 4, dk = 3, dv = 2, h = 3;
        const auto q = random_matrix(rng, 2, dm), k = random_matrix(rng, 5, dm), v = random_matrix(rng, 5, dm);
        MultiHeadConfig cfg;
        cfg.d_model = dm;
        cfg.d_k = dk;
        cfg.d_v = dv;
        for (std::size_t i = 0; i < h; ++i) {
            cfg.heads.push_back({random_matrix(rng, dm, dk), random_matrix(rng, dm, dk), random_matrix(rng, dm, dv)});
        }
        cfg.wo = random_matrix(rng, h * dv, dm);
        Matrix concat(2, h * dv);
        for (std::size_t i = 0; i < h; ++i) {
            const auto head = naive_attention(matmul(q, cfg.heads[i].wq), matmul(k, cfg.heads[i].wk),
                                              matmul(v, cfg.heads[i].wv));
            for (std::size_t r = 0; r < 2; ++r) {
                for (std::size_t c = 0; c < dv; ++c) concat(r, i * dv + c) = head(r, c);
            }
        }
        const auto a = multi_head_attention(q, k, v, cfg);
        check_close(a, matmul(concat, cfg.wo), 1e-12);
        CHECK(multi_head_attention(q, k, v, cfg) == a);
    }
    SUBCASE("shape errors") {
        MultiHeadConfig cfg{2, 1, 1, {}, Matrix(0, 2)};
        CHECK_THROWS_AS(cfg.validate(), DataError);
        cfg.heads.push_back({Matrix(2, 1), Matrix(2, 2), Matrix(2, 1)});
        cfg.wo = Matrix(1, 2);
        CHECK_THROWS_AS(cfg.validate(), DataError);
        cfg.heads[0].wk = Matrix(2, 1);
        CHECK_NOTHROW(cfg.validate());
        cfg.wo = Matrix(2, 2);
        CHECK_THROWS_AS(cfg.validate(), DataError);
        cfg.wo = Matrix(1, 2);
        CHECK_THROWS_AS(multi_head_attention(Matrix(1, 3), Matrix(1, 3), Matrix(1, 3), cfg), DataError);
    }
}
