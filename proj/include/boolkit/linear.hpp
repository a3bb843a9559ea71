#ifndef BOOLKIT_LINEAR_HPP
#define BOOLKIT_LINEAR_HPP

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "boolkit/svid.hpp"
#include "boolkit/tensor.hpp"

namespace boolkit {

enum class TrainablePolicy { LastOnly, All };

/// Signals produced by one backward pass. Q is present only for trainable
/// kernels (empty matrices elsewhere); scale gradients cover every kernel.
struct BackwardSignals {
    std::vector<DenseMatrix> Q;                    // per kernel, m x n, empty if frozen
    DenseMatrix P;                                 // b x n, summed over all kernels
    std::vector<std::vector<double>> grad_s_out;   // per kernel, length m
    std::vector<std::vector<double>> grad_s_in;    // per kernel, length n
    std::vector<double> grad_bias;                 // empty when the layer has no bias
};

/// Multi-kernel Boolean linear layer with output Y = sum_k [(X .* s_in_k^T)
/// W_k^T] .* s_out_k^T (+ bias). A forward/backward pair is single-writer:
/// forward caches the activations backward consumes, and backward clears them.
/// forward_inference is the re-entrant, cache-free entry point.
class BooleanLinear {
  public:
    std::vector<SvidKernel> kernels;
    std::vector<double> bias;              // empty = no bias
    std::set<std::size_t> trainable;       // 0-based kernel indices

    BooleanLinear() = default;

    static BooleanLinear from_dense(const DenseMatrix& W, std::size_t K,
                                    TrainablePolicy policy = TrainablePolicy::LastOnly) {
        BooleanLinear layer;
        layer.kernels = successive_extract(W, K).kernels;
        if (policy == TrainablePolicy::LastOnly) {
            layer.trainable.insert(K - 1);
        } else {
            for (std::size_t k = 0; k < K; ++k) layer.trainable.insert(k);
        }
        layer.flips_.assign(K, 0);
        return layer;
    }

    static BooleanLinear from_kernels(std::vector<SvidKernel> ks,
                                      std::set<std::size_t> trainable_set) {
        BooleanLinear layer;
        layer.kernels = std::move(ks);
        layer.trainable = std::move(trainable_set);
        for (std::size_t k : layer.trainable)
            detail::check(k < layer.kernels.size(), "from_kernels: trainable index out of range");
        layer.flips_.assign(layer.kernels.size(), 0);
        return layer;
    }

    std::size_t out_features() const { return kernels.empty() ? 0 : kernels.front().rows(); }
    std::size_t in_features() const { return kernels.empty() ? 0 : kernels.front().cols(); }
    std::size_t kernel_count() const { return kernels.size(); }

    DenseMatrix forward(const DenseMatrix& X) {
        cache_.emplace();
        cache_->X = X;
        return run_forward(X, &*cache_);
    }

    DenseMatrix forward_inference(const DenseMatrix& X) const {
        return run_forward(X, nullptr);
    }

    BackwardSignals backward(const DenseMatrix& Z) {
        if (!cache_) throw std::logic_error("backward: no cached forward pass");
        const std::size_t b = cache_->X.rows;
        detail::check(Z.rows == b && Z.cols == out_features(), "backward: Z shape mismatch");

        const std::size_t K = kernels.size();
        BackwardSignals sig;
        sig.Q.resize(K);
        sig.grad_s_out.resize(K);
        sig.grad_s_in.resize(K);
        sig.P = DenseMatrix(b, in_features());

        for (std::size_t k = 0; k < K; ++k) {
            const SvidKernel& ker = kernels[k];
            const DenseMatrix Zs = scale_cols(Z, ker.s_out);
            if (trainable.count(k)) sig.Q[k] = matmul_tn(Zs, cache_->scaled_inputs[k]);

            // Upstream signal through this kernel: (Z .* s_out) W .* s_in.
            const DenseMatrix G = matmul_bool_nn(Zs, ker.bits);
            for (std::size_t t = 0; t < b; ++t)
                for (std::size_t i = 0; i < in_features(); ++i)
                    sig.P.at(t, i) += G.at(t, i) * ker.s_in[i];

            // d/ds_out[j] = sum_t Z[t,j] * [(X .* s_in) W^T][t,j]
            sig.grad_s_out[k].assign(out_features(), 0.0);
            const DenseMatrix& H = cache_->prescale_outputs[k];
            for (std::size_t t = 0; t < b; ++t)
                for (std::size_t j = 0; j < out_features(); ++j)
                    sig.grad_s_out[k][j] += Z.at(t, j) * H.at(t, j);

            // d/ds_in[i] = sum_t [(Z .* s_out) W][t,i] * X[t,i]
            sig.grad_s_in[k].assign(in_features(), 0.0);
            for (std::size_t t = 0; t < b; ++t)
                for (std::size_t i = 0; i < in_features(); ++i)
                    sig.grad_s_in[k][i] += G.at(t, i) * cache_->X.at(t, i);
        }

        if (!bias.empty()) {
            sig.grad_bias.assign(out_features(), 0.0);
            for (std::size_t t = 0; t < b; ++t)
                for (std::size_t j = 0; j < out_features(); ++j)
                    sig.grad_bias[j] += Z.at(t, j);
        }

        cache_.reset();
        return sig;
    }

    bool has_cache() const { return cache_.has_value(); }

    /// Flip telemetry, incremented by the optimizer.
    const std::vector<std::size_t>& flips_per_kernel() const { return flips_; }
    std::size_t total_weights() const { return kernel_count() * out_features() * in_features(); }
    void count_flip(std::size_t kernel_idx) { ++flips_[kernel_idx]; }
    void reset_flip_stats() { flips_.assign(kernels.size(), 0); }

  private:
    struct Cache {
        DenseMatrix X;
        std::vector<DenseMatrix> scaled_inputs;    // X .* s_in_k^T
        std::vector<DenseMatrix> prescale_outputs; // (X .* s_in_k^T) W_k^T
    };

    DenseMatrix run_forward(const DenseMatrix& X, Cache* cache) const {
        detail::check(!kernels.empty(), "forward: layer has no kernels");
        detail::check(X.cols == in_features(), "forward: input width mismatch");
        DenseMatrix Y(X.rows, out_features());
        for (const SvidKernel& ker : kernels) {
            DenseMatrix Xs = scale_cols(X, ker.s_in);
            DenseMatrix H = matmul_bool(Xs, ker.bits);
            for (std::size_t t = 0; t < X.rows; ++t)
                for (std::size_t j = 0; j < out_features(); ++j)
                    Y.at(t, j) += H.at(t, j) * ker.s_out[j];
            if (cache) {
                cache->scaled_inputs.push_back(std::move(Xs));
                cache->prescale_outputs.push_back(std::move(H));
            }
        }
        if (!bias.empty()) {
            detail::check(bias.size() == out_features(), "forward: bias length mismatch");
            for (std::size_t t = 0; t < X.rows; ++t)
                for (std::size_t j = 0; j < out_features(); ++j) Y.at(t, j) += bias[j];
        }
        return Y;
    }

    std::optional<Cache> cache_;
    std::vector<std::size_t> flips_;
};

}  // namespace boolkit

#endif
