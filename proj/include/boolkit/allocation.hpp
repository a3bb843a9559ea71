#ifndef BOOLKIT_ALLOCATION_HPP
#define BOOLKIT_ALLOCATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "boolkit/tensor.hpp"

// Kernel-count allocation under an expansion-ratio budget: residual errors,
// PWCCA-based weight importance, the (1/p)log(1/p) size weighting, and the
// greedy incrementer with its exhaustive counterpart for verification.

namespace boolkit {

namespace detail {

struct EighResult {
    std::vector<double> values;  // ascending is NOT guaranteed; see sort below
    DenseMatrix vectors;         // column i is the eigenvector of values[i]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Small inputs only
/// (activations have at most a few hundred features at this scale).
inline EighResult jacobi_eigh(DenseMatrix A, std::size_t max_sweeps = 64,
                              double tol = 1e-14) {
    const std::size_t n = A.rows;
    check(A.rows == A.cols, "jacobi_eigh: matrix not square");
    DenseMatrix V(n, n);
    for (std::size_t i = 0; i < n; ++i) V.at(i, i) = 1.0;

    double scale = 0.0;
    for (double v : A.data) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) scale = 1.0;

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += A.at(p, q) * A.at(p, q);
        if (std::sqrt(off) <= tol * scale * double(n)) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = A.at(p, q);
                if (std::fabs(apq) <= tol * scale) continue;
                const double theta = (A.at(q, q) - A.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A.at(k, p), akq = A.at(k, q);
                    A.at(k, p) = c * akp - s * akq;
                    A.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A.at(p, k), aqk = A.at(q, k);
                    A.at(p, k) = c * apk - s * aqk;
                    A.at(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = V.at(k, p), vkq = V.at(k, q);
                    V.at(k, p) = c * vkp - s * vkq;
                    V.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    EighResult r;
    r.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.values[i] = A.at(i, i);
    r.vectors = std::move(V);
    return r;
}

/// Center the columns of M in place.
inline void center_columns(DenseMatrix& M) {
    for (std::size_t c = 0; c < M.cols; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < M.rows; ++r) mean += M.at(r, c);
        mean /= double(M.rows);
        for (std::size_t r = 0; r < M.rows; ++r) M.at(r, c) -= mean;
    }
}

/// Inverse square root of a symmetric PSD matrix with a relative ridge on the
/// eigenvalues. Sets degraded when the effective rank dropped.
inline DenseMatrix inv_sqrt_psd(const DenseMatrix& S, double ridge, bool& degraded) {
    const std::size_t n = S.rows;
    EighResult e = jacobi_eigh(S);
    double lmax = 0.0;
    for (double v : e.values) lmax = std::max(lmax, v);
    const double floor_val = std::max(ridge * std::max(lmax, 1e-300), 1e-300);
    DenseMatrix R(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double lam = e.values[i];
        if (lam < lmax * 1e-10) degraded = true;
        lam = std::max(lam, floor_val);
        const double w = 1.0 / std::sqrt(lam);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                R.at(r, c) += w * e.vectors.at(r, i) * e.vectors.at(c, i);
    }
    return R;
}

}  // namespace detail

struct PwccaResult {
    std::vector<double> rho;    // canonical correlations, descending, in [0,1]
    std::vector<double> alpha;  // projection weights, same order
    double weighted_mean = 0.0;
    bool degraded_rank = false;
};

/// Projection-weighted canonical correlation between X (d x n) and Y (d x m):
/// canonical correlations from the whitened cross-covariance, each weighted
/// by how much of X the corresponding canonical variable explains.
inline PwccaResult pwcca(DenseMatrix X, DenseMatrix Y, double ridge = 1e-8) {
    detail::check(X.rows == Y.rows, "pwcca: sample counts disagree");
    detail::check(X.rows > std::max(X.cols, Y.cols), "pwcca: need more samples than features");
    const std::size_t n = X.cols, m = Y.cols;

    detail::center_columns(X);
    detail::center_columns(Y);

    const DenseMatrix Sxx = matmul_tn(X, X);
    const DenseMatrix Syy = matmul_tn(Y, Y);
    const DenseMatrix Sxy = matmul_tn(X, Y);

    PwccaResult out;
    const DenseMatrix Wx = detail::inv_sqrt_psd(Sxx, ridge, out.degraded_rank);
    const DenseMatrix Wy = detail::inv_sqrt_psd(Syy, ridge, out.degraded_rank);

    // T = Wx Sxy Wy, singular values are the canonical correlations.
    const DenseMatrix T = matmul_nn(matmul_nn(Wx, Sxy), Wy);
    const std::size_t c = std::min(n, m);

    // Left singular vectors of T via the smaller Gram matrix.
    std::vector<std::vector<double>> left(c);
    std::vector<double> rho(c);
    if (n <= m) {
        detail::EighResult e = detail::jacobi_eigh(matmul_dense(T, T));  // T T^T, n x n
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return e.values[a] > e.values[b]; });
        for (std::size_t i = 0; i < c; ++i) {
            rho[i] = std::sqrt(std::max(0.0, e.values[order[i]]));
            left[i].resize(n);
            for (std::size_t r = 0; r < n; ++r) left[i][r] = e.vectors.at(r, order[i]);
        }
    } else {
        detail::EighResult e = detail::jacobi_eigh(matmul_tn(T, T));  // T^T T, m x m
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return e.values[a] > e.values[b]; });
        for (std::size_t i = 0; i < c; ++i) {
            rho[i] = std::sqrt(std::max(0.0, e.values[order[i]]));
            // u = T v / sigma
            left[i].assign(n, 0.0);
            for (std::size_t r = 0; r < n; ++r) {
                double acc = 0.0;
                for (std::size_t j = 0; j < m; ++j) acc += T.at(r, j) * e.vectors.at(j, order[i]);
                left[i][r] = rho[i] > 1e-12 ? acc / rho[i] : 0.0;
            }
        }
    }
    for (double& r : rho) r = std::min(r, 1.0);

    // alpha_i = sum_j |<h_i, x_j>| with h_i = X w_i, w_i = Wx u_i.
    out.rho = rho;
    out.alpha.assign(c, 0.0);
    std::vector<double> w(n), h(X.rows);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t r = 0; r < n; ++r) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += Wx.at(r, k) * left[i][k];
            w[r] = acc;
        }
        for (std::size_t d = 0; d < X.rows; ++d) {
            double acc = 0.0;
            const double* xr = X.row(d);
            for (std::size_t k = 0; k < n; ++k) acc += xr[k] * w[k];
            h[d] = acc;
        }
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t d = 0; d < X.rows; ++d) dot += h[d] * X.at(d, j);
            out.alpha[i] += std::fabs(dot);
        }
    }

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        num += out.alpha[i] * rho[i];
        den += out.alpha[i];
    }
    if (den > 0.0) {
        out.weighted_mean = num / den;
    } else {
        double s = 0.0;
        for (double r : rho) s += r;
        out.weighted_mean = c ? s / double(c) : 0.0;
    }
    return out;
}

/// Importance of one linear weight from its input/output activations:
/// h = 1 - weighted PWCCA mean, clipped to [0,1]. Near-identity maps score 0.
inline double importance_score(const DenseMatrix& input_acts, const DenseMatrix& output_acts,
                               double ridge = 1e-8) {
    const PwccaResult r = pwcca(input_acts, output_acts, ridge);
    return std::clamp(1.0 - r.weighted_mean, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Budgeted allocation
// ---------------------------------------------------------------------------

struct AllocationProblem {
    DenseMatrix E;           // N_W x K_max residual errors, rows non-increasing
    std::vector<double> h;   // importance, >= 0
    std::vector<double> p;   // size ratios, > 0, sum 1
    double T = 1.0;          // expansion budget, >= 1
    std::size_t K_max = 1;

    std::size_t weights() const { return h.size(); }

    void validate() const {
        detail::check(E.rows == h.size() && E.rows == p.size(),
                      "allocation: E/h/p sizes disagree");
        detail::check(E.cols == K_max, "allocation: E column count != K_max");
        detail::check(T >= 1.0, "allocation: budget below 1 is infeasible");
        detail::check(K_max >= 1, "allocation: K_max must be >= 1");
        double psum = 0.0;
        for (double v : p) {
            detail::check(v > 0.0, "allocation: size ratios must be positive");
            psum += v;
        }
        detail::check(std::fabs(psum - 1.0) <= 1e-9, "allocation: size ratios must sum to 1");
        for (double v : h) detail::check(v >= 0.0, "allocation: negative importance");
        for (std::size_t l = 0; l < E.rows; ++l)
            for (std::size_t k = 0; k + 1 < E.cols; ++k)
                detail::check(E.at(l, k) >= E.at(l, k + 1) - 1e-12,
                              "allocation: residual row not non-increasing");
    }
};

struct Allocation {
    std::vector<std::size_t> k;  // kernel count per weight, in [1, K_max]
    double achieved_ratio = 0.0;
    double energy = 0.0;
};

inline double expansion_ratio(const std::vector<std::size_t>& k, const std::vector<double>& p) {
    detail::check(k.size() == p.size(), "expansion_ratio: length mismatch");
    double r = 0.0;
    for (std::size_t l = 0; l < k.size(); ++l) r += double(k[l]) * p[l];
    return r;
}

/// Size weighting f(p) = (1/p) ln(1/p); f(1) = 0.
inline double size_weight(double p) { return (1.0 / p) * std::log(1.0 / p); }

inline double energy(const std::vector<std::size_t>& k, const AllocationProblem& prob) {
    detail::check(k.size() == prob.weights(), "energy: length mismatch");
    double e = 0.0;
    for (std::size_t l = 0; l < k.size(); ++l) {
        detail::check(k[l] >= 1 && k[l] <= prob.K_max, "energy: kernel count out of bounds");
        e += prob.h[l] * prob.E.at(l, k[l] - 1) * size_weight(prob.p[l]);
    }
    return e;
}

/// Greedy allocator: start from all-ones, repeatedly apply the feasible
/// single increment with the largest energy reduction. Gain ties break toward
/// the lowest weight index.
inline Allocation allocate_greedy(const AllocationProblem& prob) {
    prob.validate();
    const std::size_t N = prob.weights();

    // C[l][k] = f(p_l) * h_l * E[l,k]
    DenseMatrix C(N, prob.K_max);
    for (std::size_t l = 0; l < N; ++l)
        for (std::size_t k = 0; k < prob.K_max; ++k)
            C.at(l, k) = size_weight(prob.p[l]) * prob.h[l] * prob.E.at(l, k);

    std::vector<std::size_t> k(N, 1);
    std::vector<bool> feasible(N);
    for (std::size_t l = 0; l < N; ++l) feasible[l] = k[l] < prob.K_max;

    while (std::any_of(feasible.begin(), feasible.end(), [](bool f) { return f; })) {
        std::vector<std::pair<double, std::size_t>> gains;
        for (std::size_t l = 0; l < N; ++l)
            if (feasible[l]) gains.emplace_back(C.at(l, k[l] - 1) - C.at(l, k[l]), l);
        std::stable_sort(gains.begin(), gains.end(), [](const auto& a, const auto& b) {
            return a.first > b.first;
        });

        for (const auto& [gain, l] : gains) {
            std::vector<std::size_t> trial = k;
            ++trial[l];
            if (expansion_ratio(trial, prob.p) <= prob.T) {
                ++k[l];
                break;
            }
            feasible[l] = false;
        }
        for (std::size_t l = 0; l < N; ++l)
            feasible[l] = feasible[l] && k[l] < prob.K_max;
    }

    return {k, expansion_ratio(k, prob.p), energy(k, prob)};
}

/// Exhaustive minimizer over [1, K_max]^N_W, guarded to a million points.
/// Ties break toward the lexicographically smallest assignment.
inline Allocation allocate_bruteforce(const AllocationProblem& prob) {
    prob.validate();
    const std::size_t N = prob.weights();
    double points = 1.0;
    for (std::size_t l = 0; l < N; ++l) points *= double(prob.K_max);
    detail::check(points <= 1e6, "allocate_bruteforce: search space too large");

    std::vector<std::size_t> k(N, 1);
    Allocation best;
    bool found = false;
    bool more = true;
    while (more) {
        const double rho = expansion_ratio(k, prob.p);
        if (rho <= prob.T) {
            const double e = energy(k, prob);
            if (!found || e < best.energy) {
                best = {k, rho, e};
                found = true;
            }
        }
        // Odometer with the last index fastest, so k is visited in
        // lexicographic order and the first minimum wins ties.
        more = false;
        for (std::size_t pos = N; pos-- > 0;) {
            if (k[pos] < prob.K_max) {
                ++k[pos];
                for (std::size_t j = pos + 1; j < N; ++j) k[j] = 1;
                more = true;
                break;
            }
        }
    }
    return best;
}

}  // namespace boolkit

#endif
