#ifndef BOOLKIT_SVID_HPP
#define BOOLKIT_SVID_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "boolkit/tensor.hpp"

// Sign-value independent decomposition: a real matrix splits into its sign
// pattern (a Boolean matrix) and a rank-1 approximation of its absolute
// values, written as two nonnegative scaling vectors. Applying the
// decomposition repeatedly to the residual yields a sum of Boolean kernels.

namespace boolkit {

/// One Boolean kernel: bits (m x n) plus outer scales s_out (m) and s_in (n).
/// Reconstruction is bits .* (s_out s_in^T). Scales are nonnegative at
/// extraction time; finetuning may move them anywhere.
struct SvidKernel {
    BitMatrix bits;
    std::vector<double> s_out;
    std::vector<double> s_in;
    bool degenerate = false;

    std::size_t rows() const { return bits.rows; }
    std::size_t cols() const { return bits.cols; }

    double reconstruct_at(std::size_t r, std::size_t c) const {
        return bits.sign(r, c) * s_out[r] * s_in[c];
    }

    DenseMatrix reconstruct() const {
        DenseMatrix R(rows(), cols());
        for (std::size_t r = 0; r < rows(); ++r)
            for (std::size_t c = 0; c < cols(); ++c) R.at(r, c) = reconstruct_at(r, c);
        return R;
    }
};

struct ExtractionReport {
    std::vector<SvidKernel> kernels;
    std::vector<double> residual_frobenius;      // ||W_res||_F after each step
    std::vector<double> residual_l1_normalized;  // ||W_res||_1 / ||W||_1 after each step
    DenseMatrix final_residual;
};

/// Extract one kernel: bits = sign(W) with sign(0) = TRUE, scales from the
/// leading singular triplet of |W|, residual = W - reconstruction.
inline std::pair<SvidKernel, DenseMatrix> svid_extract(const DenseMatrix& W,
                                                       double tol = 1e-10,
                                                       std::size_t max_iter = 1000) {
    detail::check(W.rows > 0 && W.cols > 0, "svid_extract: empty matrix");
    for (double v : W.data) detail::check(std::isfinite(v), "svid_extract: non-finite entry");

    SvidKernel k;
    k.bits = BitMatrix(W.rows, W.cols);
    for (std::size_t r = 0; r < W.rows; ++r)
        for (std::size_t c = 0; c < W.cols; ++c) k.bits.set(r, c, W.at(r, c) >= 0.0);

    const SingularTriplet t = top_singular_triplet(abs(W), tol, max_iter);
    const double root = std::sqrt(t.sigma);
    k.s_out.assign(W.rows, 0.0);
    k.s_in.assign(W.cols, 0.0);
    for (std::size_t r = 0; r < W.rows; ++r) k.s_out[r] = root * t.u[r];
    for (std::size_t c = 0; c < W.cols; ++c) k.s_in[c] = root * t.v[c];
    k.degenerate = t.degenerate;
    if (t.degenerate) {
        k.s_out.assign(W.rows, 0.0);
        k.s_in.assign(W.cols, 0.0);
    }

    DenseMatrix residual(W.rows, W.cols);
    for (std::size_t r = 0; r < W.rows; ++r)
        for (std::size_t c = 0; c < W.cols; ++c)
            residual.at(r, c) = W.at(r, c) - k.reconstruct_at(r, c);
    return {std::move(k), std::move(residual)};
}

/// K rounds of svid_extract, each applied to the previous residual.
inline ExtractionReport successive_extract(const DenseMatrix& W, std::size_t K,
                                           double tol = 1e-10, std::size_t max_iter = 1000) {
    detail::check(K >= 1, "successive_extract: K must be >= 1");
    const double l1_total = norms(W).second;

    ExtractionReport rep;
    DenseMatrix current = W;
    for (std::size_t step = 0; step < K; ++step) {
        auto [kernel, residual] = svid_extract(current, tol, max_iter);
        rep.kernels.push_back(std::move(kernel));
        const auto [fro, l1] = norms(residual);
        rep.residual_frobenius.push_back(fro);
        rep.residual_l1_normalized.push_back(l1_total > 0.0 ? l1 / l1_total : 0.0);
        current = std::move(residual);
    }
    rep.final_residual = std::move(current);
    return rep;
}

/// Sum of per-kernel reconstructions. The kernel list may be empty if a shape
/// is supplied.
inline DenseMatrix reconstruct(const std::vector<SvidKernel>& kernels,
                               std::size_t rows = 0, std::size_t cols = 0) {
    if (kernels.empty()) {
        detail::check(rows > 0 && cols > 0, "reconstruct: empty kernel list needs a shape");
        return DenseMatrix(rows, cols);
    }
    const std::size_t m = kernels.front().rows();
    const std::size_t n = kernels.front().cols();
    DenseMatrix R(m, n);
    for (const SvidKernel& k : kernels) {
        detail::check(k.rows() == m && k.cols() == n, "reconstruct: kernel shape mismatch");
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) R.at(r, c) += k.reconstruct_at(r, c);
    }
    return R;
}

struct ApproxError {
    double frobenius = 0.0;
    double l1_normalized = 0.0;
};

/// Frobenius and normalized-L1 error of approximating W by the kernel sum.
inline ApproxError approx_error(const DenseMatrix& W, const std::vector<SvidKernel>& kernels) {
    const DenseMatrix R = reconstruct(kernels, W.rows, W.cols);
    detail::check(R.same_shape(W), "approx_error: shape mismatch");
    const double l1_total = norms(W).second;
    detail::check(l1_total > 0.0, "approx_error: zero-norm reference matrix");
    const auto [fro, l1] = norms(subtract(W, R));
    return {fro, l1 / l1_total};
}

}  // namespace boolkit

#endif
