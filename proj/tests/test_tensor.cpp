#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "boolkit/tensor.hpp"

using namespace boolkit;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double lo = -4.0,
                          double hi = 4.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    DenseMatrix m(r, c);
    for (double& v : m.data) v = dist(rng);
    return m;
}

/// Largest eigenvalue of M^T M by long power iteration; independent of the
/// alternating scheme used by top_singular_triplet.
double gram_top_eigenvalue(const DenseMatrix& M) {
    const DenseMatrix G = matmul_tn(M, M);
    std::vector<double> v(G.cols, 1.0);
    double lambda = 0.0;
    for (int it = 0; it < 2000; ++it) {
        std::vector<double> gv(G.rows, 0.0);
        for (std::size_t r = 0; r < G.rows; ++r)
            for (std::size_t c = 0; c < G.cols; ++c) gv[r] += G.at(r, c) * v[c];
        double n2 = 0.0;
        for (double x : gv) n2 += x * x;
        const double nrm = std::sqrt(n2);
        if (nrm == 0.0) return 0.0;
        for (std::size_t i = 0; i < gv.size(); ++i) v[i] = gv[i] / nrm;
        lambda = nrm;
    }
    return lambda;
}

}  // namespace

TEST_CASE("matmul_dense basics") {
    const DenseMatrix A = DenseMatrix::from_rows({{1, 2}});
    const DenseMatrix I = DenseMatrix::from_rows({{1, 0}, {0, 1}});
    const DenseMatrix Y = matmul_dense(A, I);
    REQUIRE(Y.rows == 1);
    REQUIRE(Y.cols == 2);
    CHECK(Y.at(0, 0) == 1.0);
    CHECK(Y.at(0, 1) == 2.0);

    const DenseMatrix Z = matmul_dense(DenseMatrix(2, 3), DenseMatrix(4, 3));
    for (double v : Z.data) CHECK(v == 0.0);

    CHECK_THROWS_AS(matmul_dense(DenseMatrix(2, 3), DenseMatrix(4, 5)), std::invalid_argument);
}

TEST_CASE("matmul_dense matches the triple-loop oracle") {
    const DenseMatrix A = random_matrix(5, 7, 21);
    const DenseMatrix B_T = random_matrix(4, 7, 22);
    const DenseMatrix Y = matmul_dense(A, B_T);
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < 7; ++i) acc += A.at(r, i) * B_T.at(j, i);
            CHECK(Y.at(r, j) == acc);
        }
}

TEST_CASE("matmul_bool on hand cases") {
    DenseMatrix X = DenseMatrix::from_rows({{1, 2}});
    BitMatrix all_true(1, 2);
    all_true.set(0, 0, true);
    all_true.set(0, 1, true);
    CHECK(matmul_bool(X, all_true).at(0, 0) == 3.0);

    BitMatrix tf(1, 2);
    tf.set(0, 0, true);
    tf.set(0, 1, false);
    CHECK(matmul_bool(X, tf).at(0, 0) == -1.0);
}

TEST_CASE("matmul_bool is bit-exact against the +-1 dense embedding") {
    std::mt19937_64 rng(33);
    std::bernoulli_distribution coin(0.5);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t b = 1 + rep % 8, m = 1 + (rep * 3) % 9, n = 1 + (rep * 7) % 70;
        const DenseMatrix X = random_matrix(b, n, 100 + rep);
        BitMatrix W(m, n);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) W.set(r, c, coin(rng));
        const DenseMatrix via_bits = matmul_bool(X, W);
        const DenseMatrix via_dense = matmul_dense(X, unpack(W));
        REQUIRE(via_bits.same_shape(via_dense));
        for (std::size_t i = 0; i < via_bits.size(); ++i)
            CHECK(via_bits.data[i] == via_dense.data[i]);
    }
}

TEST_CASE("matmul_bool_nn matches the dense product") {
    std::mt19937_64 rng(34);
    std::bernoulli_distribution coin(0.5);
    const DenseMatrix Z = random_matrix(5, 6, 35);
    BitMatrix W(6, 9);
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 9; ++c) W.set(r, c, coin(rng));
    const DenseMatrix got = matmul_bool_nn(Z, W);
    const DenseMatrix want = matmul_nn(Z, unpack(W));
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got.data[i] == Catch::Approx(want.data[i]).margin(1e-15));
}

TEST_CASE("top singular triplet on a diagonal matrix") {
    const DenseMatrix M = DenseMatrix::from_rows({{2, 0}, {0, 1}});
    const SingularTriplet t = top_singular_triplet(M);
    CHECK(t.sigma == Catch::Approx(2.0).epsilon(1e-9));
    CHECK(t.u[0] == Catch::Approx(1.0).margin(1e-7));
    CHECK(t.u[1] == Catch::Approx(0.0).margin(1e-5));
    CHECK(t.v[0] == Catch::Approx(1.0).margin(1e-7));
    CHECK_FALSE(t.degenerate);
}

TEST_CASE("top singular triplet on a rank-1 all-equal matrix") {
    const DenseMatrix M = DenseMatrix::from_rows({{2, 2}, {2, 2}});
    const SingularTriplet t = top_singular_triplet(M);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(t.sigma == Catch::Approx(4.0).epsilon(1e-10));
    CHECK(t.u[0] == Catch::Approx(inv_sqrt2).epsilon(1e-10));
    CHECK(t.u[1] == Catch::Approx(inv_sqrt2).epsilon(1e-10));
    CHECK(t.v[0] == Catch::Approx(inv_sqrt2).epsilon(1e-10));
}

TEST_CASE("top singular triplet vs Gram-matrix eigenvalue oracle") {
    for (int rep = 0; rep < 20; ++rep) {
        const DenseMatrix M = random_matrix(6, 9, 200 + rep, 0.0, 5.0);
        const SingularTriplet t = top_singular_triplet(M, 1e-12, 5000);
        const double lambda = gram_top_eigenvalue(M);
        CHECK(t.sigma * t.sigma == Catch::Approx(lambda).epsilon(1e-8));
        for (double x : t.u) CHECK(x >= -1e-12);
        for (double x : t.v) CHECK(x >= -1e-12);
        CHECK(t.sigma <= frobenius(M) + 1e-12);
    }
}

TEST_CASE("top singular triplet flags the zero matrix") {
    const SingularTriplet t = top_singular_triplet(DenseMatrix(3, 4));
    CHECK(t.sigma == 0.0);
    CHECK(t.degenerate);
    CHECK(t.u[0] == 1.0);
    CHECK(t.v[0] == 1.0);
}

TEST_CASE("norms") {
    const auto [fz, lz] = norms(DenseMatrix(3, 3));
    CHECK(fz == 0.0);
    CHECK(lz == 0.0);

    const auto [f, l] = norms(DenseMatrix::from_rows({{3, 4}}));
    CHECK(f == Catch::Approx(5.0));
    CHECK(l == Catch::Approx(7.0));

    const DenseMatrix M = random_matrix(10, 10, 55);
    double fro = 0.0, l1 = 0.0;
    for (double v : M.data) {
        fro += v * v;
        l1 += std::fabs(v);
    }
    const auto [fm, lm] = norms(M);
    CHECK(fm == Catch::Approx(std::sqrt(fro)).epsilon(1e-14));
    CHECK(lm == Catch::Approx(l1).epsilon(1e-14));
}

TEST_CASE("bit packing layout") {
    // Row T,F,T,T,F,F,F,T packs to 0x8D LSB-first.
    DenseMatrix signs(1, 8);
    const double row[] = {1, -1, 1, 1, -1, -1, -1, 1};
    for (std::size_t c = 0; c < 8; ++c) signs.at(0, c) = row[c];
    const BitMatrix b = pack(signs);
    CHECK((b.words[0] & 0xFF) == 0x8D);
    CHECK(b.words[0] == 0x8D);  // padding bits above the row are zero

    // Roundtrip identity on random sign matrices.
    std::mt19937_64 rng(77);
    std::bernoulli_distribution coin(0.5);
    for (int rep = 0; rep < 10; ++rep) {
        DenseMatrix s(3, 70);
        for (double& v : s.data) v = coin(rng) ? 1.0 : -1.0;
        const BitMatrix packed = pack(s);
        const DenseMatrix back = unpack(packed);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(back.data[i] == s.data[i]);
        CHECK(pack(back) == packed);
    }

    // Padding bits of a short row are zero.
    DenseMatrix ones(1, 3, 1.0);
    const BitMatrix small = pack(ones);
    CHECK(small.words_per_row == 1);
    CHECK(small.words[0] == 0b111);

    DenseMatrix bad(1, 2, 1.0);
    bad.at(0, 1) = 0.5;
    CHECK_THROWS_AS(pack(bad), std::invalid_argument);
}
