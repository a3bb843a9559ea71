#ifndef BOOLKIT_TENSOR_HPP
#define BOOLKIT_TENSOR_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "boolkit/logic.hpp"

namespace boolkit {

/// Dense row-major matrix of doubles. Immutable by convention once built;
/// all operations below allocate fresh results.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }

    std::size_t size() const { return rows * cols; }

    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> init) {
        DenseMatrix m(init.size(), init.size() ? init.begin()->size() : 0);
        std::size_t r = 0;
        for (const auto& rowlist : init) {
            if (rowlist.size() != m.cols) throw std::invalid_argument("from_rows: ragged init");
            std::size_t c = 0;
            for (double v : rowlist) m.at(r, c++) = v;
            ++r;
        }
        return m;
    }
};

/// Bit-packed Boolean matrix. Row-major, 64-bit words, LSB-first within each
/// word, bit 1 = TRUE (+1), bit 0 = FALSE (-1). Each row is padded to a word
/// boundary; padding bits are always zero. This layout is also the on-disk
/// checkpoint layout and must not change.
struct BitMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t words_per_row = 0;
    std::vector<std::uint64_t> words;

    BitMatrix() = default;
    BitMatrix(std::size_t r, std::size_t c)
        : rows(r), cols(c), words_per_row((c + 63) / 64), words(r * words_per_row, 0) {}

    bool get(std::size_t r, std::size_t c) const {
        return (words[r * words_per_row + c / 64] >> (c % 64)) & 1u;
    }

    void set(std::size_t r, std::size_t c, bool v) {
        std::uint64_t& w = words[r * words_per_row + c / 64];
        const std::uint64_t mask = std::uint64_t(1) << (c % 64);
        if (v) w |= mask; else w &= ~mask;
    }

    BoolWeight weight(std::size_t r, std::size_t c) const {
        return get(r, c) ? BoolWeight::True : BoolWeight::False;
    }

    void flip(std::size_t r, std::size_t c) {
        words[r * words_per_row + c / 64] ^= std::uint64_t(1) << (c % 64);
    }

    double sign(std::size_t r, std::size_t c) const { return get(r, c) ? 1.0 : -1.0; }

    std::size_t size() const { return rows * cols; }
    std::size_t payload_bytes() const { return words.size() * sizeof(std::uint64_t); }

    bool operator==(const BitMatrix& o) const {
        return rows == o.rows && cols == o.cols && words == o.words;
    }
};

struct SingularTriplet {
    double sigma = 0.0;
    std::vector<double> u;
    std::vector<double> v;
    bool degenerate = false;  // zero input matrix
    bool converged = true;    // false when max_iter was hit
    std::size_t iterations = 0;
};

namespace detail {

inline void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline double norm2(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace detail

/// A * B^T with 64-bit accumulation in ascending inner index. B_T holds the
/// transposed right factor (m x n), so rows of both operands are contiguous.
inline DenseMatrix matmul_dense(const DenseMatrix& A, const DenseMatrix& B_T) {
    detail::check(A.cols == B_T.cols, "matmul_dense: inner dimensions disagree");
    DenseMatrix Y(A.rows, B_T.rows);
    for (std::size_t r = 0; r < A.rows; ++r) {
        const double* a = A.row(r);
        for (std::size_t j = 0; j < B_T.rows; ++j) {
            const double* b = B_T.row(j);
            double acc = 0.0;
            for (std::size_t i = 0; i < A.cols; ++i) acc += a[i] * b[i];
            Y.at(r, j) = acc;
        }
    }
    return Y;
}

/// A * B (plain, no transposition). Internal helper for model code.
inline DenseMatrix matmul_nn(const DenseMatrix& A, const DenseMatrix& B) {
    detail::check(A.cols == B.rows, "matmul_nn: inner dimensions disagree");
    DenseMatrix Y(A.rows, B.cols);
    for (std::size_t r = 0; r < A.rows; ++r) {
        const double* a = A.row(r);
        double* y = Y.row(r);
        for (std::size_t i = 0; i < A.cols; ++i) {
            const double av = a[i];
            const double* b = B.row(i);
            for (std::size_t c = 0; c < B.cols; ++c) y[c] += av * b[c];
        }
    }
    return Y;
}

/// A^T * B. Internal helper for gradient computations.
inline DenseMatrix matmul_tn(const DenseMatrix& A, const DenseMatrix& B) {
    detail::check(A.rows == B.rows, "matmul_tn: outer dimensions disagree");
    DenseMatrix Y(A.cols, B.cols);
    for (std::size_t r = 0; r < A.rows; ++r) {
        const double* a = A.row(r);
        const double* b = B.row(r);
        for (std::size_t i = 0; i < A.cols; ++i) {
            const double av = a[i];
            double* y = Y.row(i);
            for (std::size_t c = 0; c < B.cols; ++c) y[c] += av * b[c];
        }
    }
    return Y;
}

/// X * W^T where W is a packed Boolean matrix with values in {+1, -1}.
/// No multiplications touch the weights: each input element is added with its
/// sign conditionally flipped (an IEEE sign-bit xor, exactly a subtraction
/// when the bit is FALSE). Accumulation runs in ascending column index, which
/// makes the result bit-identical to matmul_dense against the +-1 embedding
/// of W.
inline DenseMatrix matmul_bool(const DenseMatrix& X, const BitMatrix& W) {
    detail::check(X.cols == W.cols, "matmul_bool: inner dimensions disagree");
    DenseMatrix Y(X.rows, W.rows);
    for (std::size_t k = 0; k < X.rows; ++k) {
        const double* x = X.row(k);
        for (std::size_t j = 0; j < W.rows; ++j) {
            const std::uint64_t* wr = W.words.data() + j * W.words_per_row;
            double acc = 0.0;
            std::size_t i = 0;
            for (std::size_t wi = 0; wi < W.words_per_row; ++wi) {
                std::uint64_t bits = wr[wi];
                const std::size_t hi = std::min<std::size_t>(64, W.cols - wi * 64);
                for (std::size_t b = 0; b < hi; ++b, ++i) {
                    const std::uint64_t sign = (~bits & 1u) << 63;
                    acc += std::bit_cast<double>(std::bit_cast<std::uint64_t>(x[i]) ^ sign);
                    bits >>= 1;
                }
            }
            Y.at(k, j) = acc;
        }
    }
    return Y;
}

/// Z * W where W is packed (m x n) and Z is (b x m): the no-transpose
/// companion of matmul_bool, again additions and subtractions only.
inline DenseMatrix matmul_bool_nn(const DenseMatrix& Z, const BitMatrix& W) {
    detail::check(Z.cols == W.rows, "matmul_bool_nn: inner dimensions disagree");
    DenseMatrix Y(Z.rows, W.cols);
    for (std::size_t t = 0; t < Z.rows; ++t) {
        const double* z = Z.row(t);
        double* y = Y.row(t);
        for (std::size_t j = 0; j < W.rows; ++j) {
            const double zv = z[j];
            const std::uint64_t* wr = W.words.data() + j * W.words_per_row;
            std::size_t i = 0;
            for (std::size_t wi = 0; wi < W.words_per_row; ++wi) {
                std::uint64_t bits = wr[wi];
                const std::size_t hi = std::min<std::size_t>(64, W.cols - wi * 64);
                for (std::size_t b = 0; b < hi; ++b, ++i) {
                    const std::uint64_t sign = (~bits & 1u) << 63;
                    y[i] += std::bit_cast<double>(std::bit_cast<std::uint64_t>(zv) ^ sign);
                    bits >>= 1;
                }
            }
        }
    }
    return Y;
}

/// (frobenius, l1) of all entries.
inline std::pair<double, double> norms(const DenseMatrix& M) {
    double fro = 0.0, l1 = 0.0;
    for (double v : M.data) {
        fro += v * v;
        l1 += std::fabs(v);
    }
    return {std::sqrt(fro), l1};
}

inline double frobenius(const DenseMatrix& M) { return norms(M).first; }

/// Leading singular triplet of a nonnegative matrix via alternating power
/// iteration from the all-ones start vector. sigma is taken as ||M v|| at the
/// final iterate, so the implied rank-1 residual never exceeds ||M||_F even
/// before convergence. u and v are returned with nonnegative orientation.
inline SingularTriplet top_singular_triplet(const DenseMatrix& M, double tol = 1e-10,
                                            std::size_t max_iter = 1000) {
    detail::check(M.rows > 0 && M.cols > 0, "top_singular_triplet: empty matrix");
    detail::check(tol > 0.0, "top_singular_triplet: tol must be positive");
    for (double v : M.data)
        detail::check(v >= 0.0, "top_singular_triplet: negative entry");

    SingularTriplet t;
    t.u.assign(M.rows, 0.0);
    t.v.assign(M.cols, 0.0);

    const double total = frobenius(M);
    if (total == 0.0) {
        t.u[0] = 1.0;
        t.v[0] = 1.0;
        t.degenerate = true;
        return t;
    }

    std::vector<double> u(M.rows, 1.0 / std::sqrt(double(M.rows)));
    std::vector<double> v(M.cols, 0.0);
    double sigma_prev = -1.0;
    double sigma = 0.0;
    std::size_t it = 0;
    for (; it < max_iter; ++it) {
        // v <- normalize(M^T u)
        for (std::size_t c = 0; c < M.cols; ++c) v[c] = 0.0;
        for (std::size_t r = 0; r < M.rows; ++r) {
            const double* mr = M.row(r);
            const double ur = u[r];
            for (std::size_t c = 0; c < M.cols; ++c) v[c] += mr[c] * ur;
        }
        double nv = detail::norm2(v);
        if (nv == 0.0) break;
        for (double& x : v) x /= nv;
        // u <- M v, sigma = ||M v||, then normalize
        for (std::size_t r = 0; r < M.rows; ++r) {
            const double* mr = M.row(r);
            double acc = 0.0;
            for (std::size_t c = 0; c < M.cols; ++c) acc += mr[c] * v[c];
            u[r] = acc;
        }
        sigma = detail::norm2(u);
        if (sigma == 0.0) break;
        for (double& x : u) x /= sigma;
        if (sigma_prev >= 0.0 && std::fabs(sigma - sigma_prev) < tol) {
            ++it;
            break;
        }
        sigma_prev = sigma;
    }
    t.iterations = it;
    t.converged = it < max_iter || std::fabs(sigma - sigma_prev) < tol;

    // Nonnegative orientation: flip both signs if the dominant component of u
    // is negative. For nonnegative inputs the iterates are already nonnegative.
    double dominant = 0.0;
    for (double x : u) if (std::fabs(x) > std::fabs(dominant)) dominant = x;
    if (dominant < 0.0) {
        for (double& x : u) x = -x;
        for (double& x : v) x = -x;
    }
    t.sigma = sigma;
    t.u = std::move(u);
    t.v = std::move(v);
    return t;
}

/// Pack a +-1 matrix into bits. Rejects anything that is not exactly +1/-1.
inline BitMatrix pack(const DenseMatrix& signs) {
    BitMatrix b(signs.rows, signs.cols);
    for (std::size_t r = 0; r < signs.rows; ++r)
        for (std::size_t c = 0; c < signs.cols; ++c) {
            const double v = signs.at(r, c);
            if (v == 1.0) b.set(r, c, true);
            else if (v == -1.0) b.set(r, c, false);
            else throw std::invalid_argument("pack: entry not in {+1,-1}");
        }
    return b;
}

inline DenseMatrix unpack(const BitMatrix& W) {
    DenseMatrix m(W.rows, W.cols);
    for (std::size_t r = 0; r < W.rows; ++r)
        for (std::size_t c = 0; c < W.cols; ++c) m.at(r, c) = W.sign(r, c);
    return m;
}

// Elementwise helpers used across modules.

inline DenseMatrix subtract(const DenseMatrix& A, const DenseMatrix& B) {
    detail::check(A.same_shape(B), "subtract: shape mismatch");
    DenseMatrix R(A.rows, A.cols);
    for (std::size_t i = 0; i < A.size(); ++i) R.data[i] = A.data[i] - B.data[i];
    return R;
}

inline DenseMatrix add(const DenseMatrix& A, const DenseMatrix& B) {
    detail::check(A.same_shape(B), "add: shape mismatch");
    DenseMatrix R(A.rows, A.cols);
    for (std::size_t i = 0; i < A.size(); ++i) R.data[i] = A.data[i] + B.data[i];
    return R;
}

inline DenseMatrix abs(const DenseMatrix& A) {
    DenseMatrix R(A.rows, A.cols);
    for (std::size_t i = 0; i < A.size(); ++i) R.data[i] = std::fabs(A.data[i]);
    return R;
}

/// Scale column c of X by s[c].
inline DenseMatrix scale_cols(const DenseMatrix& X, const std::vector<double>& s) {
    detail::check(X.cols == s.size(), "scale_cols: length mismatch");
    DenseMatrix R(X.rows, X.cols);
    for (std::size_t r = 0; r < X.rows; ++r)
        for (std::size_t c = 0; c < X.cols; ++c) R.at(r, c) = X.at(r, c) * s[c];
    return R;
}

inline DenseMatrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double stddev = 1.0) {
    std::normal_distribution<double> dist(0.0, stddev);
    DenseMatrix m(rows, cols);
    for (double& v : m.data) v = dist(rng);
    return m;
}

}  // namespace boolkit

#endif
