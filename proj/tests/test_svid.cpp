#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "boolkit/svid.hpp"

using namespace boolkit;

namespace {

DenseMatrix gaussian_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return gaussian(r, c, rng);
}

/// sqrt(sigma_1)-scaled leading singular pair of a general matrix, by power
/// iteration on W^T W with a random start. Test-side oracle only.
std::pair<std::vector<double>, std::vector<double>> leading_pair(const DenseMatrix& W,
                                                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(W.cols);
    for (double& x : v) x = dist(rng);
    std::vector<double> wv(W.rows);
    double sigma = 0.0;
    for (int it = 0; it < 4000; ++it) {
        for (std::size_t r = 0; r < W.rows; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < W.cols; ++c) acc += W.at(r, c) * v[c];
            wv[r] = acc;
        }
        std::vector<double> next(W.cols, 0.0);
        for (std::size_t r = 0; r < W.rows; ++r)
            for (std::size_t c = 0; c < W.cols; ++c) next[c] += W.at(r, c) * wv[r];
        double n2 = 0.0;
        for (double x : next) n2 += x * x;
        const double nrm = std::sqrt(n2);
        if (nrm == 0.0) break;
        for (std::size_t c = 0; c < W.cols; ++c) v[c] = next[c] / nrm;
    }
    for (std::size_t r = 0; r < W.rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < W.cols; ++c) acc += W.at(r, c) * v[c];
        wv[r] = acc;
    }
    double s2 = 0.0;
    for (double x : wv) s2 += x * x;
    sigma = std::sqrt(s2);
    std::vector<double> a(W.rows), b(W.cols);
    const double root = std::sqrt(sigma);
    for (std::size_t r = 0; r < W.rows; ++r) a[r] = sigma > 0.0 ? root * wv[r] / sigma : 0.0;
    for (std::size_t c = 0; c < W.cols; ++c) b[c] = root * v[c];
    return {a, b};
}

double rank1_error(const DenseMatrix& W, const std::vector<double>& a,
                   const std::vector<double>& b) {
    double e = 0.0;
    for (std::size_t r = 0; r < W.rows; ++r)
        for (std::size_t c = 0; c < W.cols; ++c) {
            const double d = W.at(r, c) - a[r] * b[c];
            e += d * d;
        }
    return std::sqrt(e);
}

double masked_rank1_error(const DenseMatrix& W, const BitMatrix& bits,
                          const std::vector<double>& c, const std::vector<double>& d) {
    double e = 0.0;
    for (std::size_t r = 0; r < W.rows; ++r)
        for (std::size_t j = 0; j < W.cols; ++j) {
            const double diff = W.at(r, j) - bits.sign(r, j) * c[r] * d[j];
            e += diff * diff;
        }
    return std::sqrt(e);
}

}  // namespace

TEST_CASE("svid on an exact nonnegative rank-1 matrix") {
    const DenseMatrix W = DenseMatrix::from_rows({{2, 2}, {2, 2}});
    const auto [k, residual] = svid_extract(W);
    CHECK(k.bits.get(0, 0));
    CHECK(k.bits.get(1, 1));
    const double s = std::sqrt(2.0);
    for (double v : k.s_out) CHECK(v == Catch::Approx(s).epsilon(1e-9));
    for (double v : k.s_in) CHECK(v == Catch::Approx(s).epsilon(1e-9));
    CHECK(frobenius(residual) < 1e-9);
}

TEST_CASE("svid separates sign from value") {
    const DenseMatrix W = DenseMatrix::from_rows({{2, -2}, {-2, 2}});
    const auto [k, residual] = svid_extract(W);
    CHECK(k.bits.get(0, 0));
    CHECK_FALSE(k.bits.get(0, 1));
    CHECK_FALSE(k.bits.get(1, 0));
    CHECK(k.bits.get(1, 1));
    const double s = std::sqrt(2.0);
    for (double v : k.s_out) CHECK(v == Catch::Approx(s).epsilon(1e-9));
    CHECK(frobenius(residual) < 1e-9);
}

TEST_CASE("svid on the zero matrix is degenerate") {
    const auto [k, residual] = svid_extract(DenseMatrix(3, 3));
    CHECK(k.degenerate);
    for (double v : k.s_out) CHECK(v == 0.0);
    for (double v : k.s_in) CHECK(v == 0.0);
    CHECK(frobenius(residual) == 0.0);
}

TEST_CASE("svid beats random masked rank-1 competitors") {
    std::mt19937_64 rng(404);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const DenseMatrix W = gaussian_matrix(4, 4, 500 + rep);
        const auto [k, residual] = svid_extract(W);
        const double svid_err = frobenius(residual);
        for (int comp = 0; comp < 100; ++comp) {
            std::vector<double> c(4), d(4);
            for (double& x : c) x = dist(rng);
            for (double& x : d) x = dist(rng);
            CHECK(svid_err <= masked_rank1_error(W, k.bits, c, d) + 1e-8);
        }
    }
}

TEST_CASE("svid beats the plain leading rank-1 approximation") {
    for (int rep = 0; rep < 30; ++rep) {
        const DenseMatrix W = gaussian_matrix(5 + rep % 4, 6 + rep % 3, 700 + rep);
        const auto [k, residual] = svid_extract(W, 1e-12, 5000);
        const auto [a, b] = leading_pair(W, 900 + rep);
        CHECK(frobenius(residual) <= rank1_error(W, a, b) + 1e-8);
    }
}

TEST_CASE("extraction scales are nonnegative") {
    for (int rep = 0; rep < 10; ++rep) {
        const DenseMatrix W = gaussian_matrix(6, 6, 1100 + rep);
        const auto [k, residual] = svid_extract(W);
        for (double v : k.s_out) CHECK(v >= 0.0);
        for (double v : k.s_in) CHECK(v >= 0.0);
    }
}

TEST_CASE("successive extraction base case equals one svid step") {
    const DenseMatrix W = gaussian_matrix(5, 7, 1300);
    const ExtractionReport rep = successive_extract(W, 1);
    const auto [k, residual] = svid_extract(W);
    REQUIRE(rep.kernels.size() == 1);
    CHECK(rep.kernels[0].bits == k.bits);
    CHECK(rep.residual_frobenius[0] == Catch::Approx(frobenius(residual)).epsilon(1e-12));
    CHECK_THROWS_AS(successive_extract(W, 0), std::invalid_argument);
}

TEST_CASE("successive extraction of an exact rank-1 matrix stops contributing") {
    const DenseMatrix W = DenseMatrix::from_rows({{1, 2}, {2, 4}});
    const ExtractionReport rep = successive_extract(W, 3);
    for (std::size_t k = 1; k < 3; ++k) {
        for (double v : rep.kernels[k].s_out) CHECK(std::fabs(v) < 1e-7);
        CHECK(rep.residual_frobenius[k] < 1e-7);
    }
    CHECK(rep.residual_frobenius[0] < 1e-9);
}

TEST_CASE("residual norms decrease along the extraction chain") {
    const DenseMatrix W = gaussian_matrix(16, 16, 1500);
    const ExtractionReport rep = successive_extract(W, 8);
    double prev_fro = frobenius(W);
    double prev_l1 = 1.0;
    for (std::size_t k = 0; k < 8; ++k) {
        CHECK(rep.residual_frobenius[k] < prev_fro);
        CHECK(rep.residual_l1_normalized[k] < prev_l1);
        prev_fro = rep.residual_frobenius[k];
        prev_l1 = rep.residual_l1_normalized[k];
    }
}

TEST_CASE("reconstruct") {
    const DenseMatrix zeros = reconstruct({}, 2, 3);
    for (double v : zeros.data) CHECK(v == 0.0);
    CHECK_THROWS_AS(reconstruct({}), std::invalid_argument);

    SvidKernel unit;
    unit.bits = BitMatrix(2, 2);
    unit.bits.set(0, 0, true);
    unit.bits.set(0, 1, true);
    unit.bits.set(1, 0, true);
    unit.bits.set(1, 1, true);
    unit.s_out = {1.0, 1.0};
    unit.s_in = {1.0, 1.0};
    const DenseMatrix ones = reconstruct({unit});
    for (double v : ones.data) CHECK(v == 1.0);

    const DenseMatrix W = gaussian_matrix(9, 5, 1700);
    const ExtractionReport rep = successive_extract(W, 4);
    const DenseMatrix R = reconstruct(rep.kernels);
    CHECK(frobenius(subtract(W, R)) ==
          Catch::Approx(rep.residual_frobenius.back()).margin(1e-9));
}

TEST_CASE("approx_error") {
    const DenseMatrix W = DenseMatrix::from_rows({{2, -2}, {-2, 2}});
    const auto [k, residual] = svid_extract(W);
    const ApproxError exact = approx_error(W, {k});
    CHECK(exact.frobenius < 1e-9);
    CHECK(exact.l1_normalized < 1e-9);

    const ApproxError empty = approx_error(W, {});
    CHECK(empty.frobenius == Catch::Approx(frobenius(W)));
    CHECK(empty.l1_normalized == Catch::Approx(1.0));

    CHECK_THROWS_AS(approx_error(DenseMatrix(2, 2), {}), std::invalid_argument);

    const DenseMatrix R = gaussian_matrix(12, 12, 1900);
    const ExtractionReport rep3 = successive_extract(R, 3);
    const ExtractionReport rep4 = successive_extract(R, 4);
    CHECK(approx_error(R, rep4.kernels).l1_normalized <=
          approx_error(R, rep3.kernels).l1_normalized);
}
