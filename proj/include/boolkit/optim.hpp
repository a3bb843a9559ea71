#ifndef BOOLKIT_OPTIM_HPP
#define BOOLKIT_OPTIM_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "boolkit/linear.hpp"
#include "boolkit/logic.hpp"

namespace boolkit {

/// Per-layer Boolean optimizer state: one real accumulator per trainable
/// weight plus a single plasticity factor beta. A weight flips when its
/// accumulator agrees in sign with the weight AND has integrated a full unit
/// of evidence; the accumulator then resets to exactly zero. The unit
/// threshold is what makes the accumulation-factor schedule meaningful: with
/// a sign test alone, eta would cancel out of the dynamics entirely.
struct FlipAccumulator {
    static constexpr double kFlipThreshold = 1.0;

    std::vector<DenseMatrix> M;  // indexed by kernel; empty for frozen kernels
    double beta = 1.0;

    static FlipAccumulator for_layer(const BooleanLinear& layer) {
        FlipAccumulator st;
        st.M.resize(layer.kernel_count());
        for (std::size_t k : layer.trainable)
            st.M[k] = DenseMatrix(layer.out_features(), layer.in_features());
        return st;
    }

    std::size_t state_scalars() const {
        std::size_t n = 0;
        for (const DenseMatrix& m : M) n += m.size();
        return n;
    }
};

struct FlipReport {
    std::size_t flips = 0;
    std::size_t total = 0;
    double beta_after = 1.0;
};

/// One Boolean update: accumulate eta * Q into M with decay beta, flip where
/// xnor(M, w) = TRUE and |M| has reached the unit threshold, reset flipped
/// accumulators, then set beta to the fraction of unchanged weights in this
/// layer.
inline FlipReport bool_step(BooleanLinear& layer, const BackwardSignals& signals,
                            FlipAccumulator& state, double eta) {
    detail::check(state.M.size() == layer.kernel_count(), "bool_step: state/layer mismatch");
    FlipReport rep;
    for (std::size_t k : layer.trainable) {
        const DenseMatrix& Q = signals.Q[k];
        DenseMatrix& M = state.M[k];
        detail::check(Q.rows == M.rows && Q.cols == M.cols, "bool_step: Q shape mismatch");
        for (double q : Q.data)
            detail::check(std::isfinite(q), "bool_step: non-finite Q");

        BitMatrix& bits = layer.kernels[k].bits;
        for (std::size_t r = 0; r < M.rows; ++r) {
            for (std::size_t c = 0; c < M.cols; ++c) {
                double& m = M.at(r, c);
                m = state.beta * m + eta * Q.at(r, c);
                ++rep.total;
                if (std::fabs(m) >= FlipAccumulator::kFlipThreshold &&
                    flip_decision(m, bits.weight(r, c))) {
                    bits.flip(r, c);
                    m = 0.0;
                    ++rep.flips;
                    layer.count_flip(k);
                }
            }
        }
    }
    rep.beta_after = rep.total == 0 ? 1.0
                                    : double(rep.total - rep.flips) / double(rep.total);
    state.beta = rep.beta_after;
    return rep;
}

/// Decoupled-weight-decay adaptive-moment optimizer for the full-precision
/// parameters (scales, biases, embeddings, norms).
struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;
    AdamConfig config;

    explicit AdamState(std::size_t n = 0, AdamConfig cfg = {})
        : m(n, 0.0), v(n, 0.0), config(cfg) {}

    std::size_t state_scalars() const { return m.size() + v.size(); }
};

inline void adam_step(std::span<double> params, std::span<const double> grads,
                      AdamState& state, double lr) {
    detail::check(params.size() == grads.size(), "adam_step: size mismatch");
    detail::check(params.size() == state.m.size(), "adam_step: state size mismatch");
    for (double g : grads) detail::check(std::isfinite(g), "adam_step: non-finite gradient");

    const AdamConfig& c = state.config;
    ++state.step;
    const double bc1 = 1.0 - std::pow(c.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, double(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grads[i];
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + c.eps);
        params[i] -= lr * c.weight_decay * params[i];
    }
}

/// Linear warmup to max_lr followed by cosine decay to zero.
struct LrSchedule {
    double max_lr = 1e-3;
    double warmup_fraction = 0.03;
    std::size_t total_steps = 1;

    double lr_at(std::size_t step) const {
        detail::check(step <= total_steps, "lr_at: step out of range");
        const std::size_t warmup =
            std::size_t(std::llround(warmup_fraction * double(total_steps)));
        if (step < warmup) return max_lr * double(step) / double(warmup);
        if (total_steps == warmup) return max_lr;
        const double progress = double(step - warmup) / double(total_steps - warmup);
        return max_lr * 0.5 * (1.0 + std::cos(progress * 3.14159265358979323846));
    }
};

inline double lr_at(const LrSchedule& s, std::size_t step) { return s.lr_at(step); }

}  // namespace boolkit

#endif
