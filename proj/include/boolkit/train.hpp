#ifndef BOOLKIT_TRAIN_HPP
#define BOOLKIT_TRAIN_HPP

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "boolkit/allocation.hpp"
#include "boolkit/model.hpp"
#include "boolkit/optim.hpp"

namespace boolkit {

// ---------------------------------------------------------------------------
// Optimizer plumbing shared by teacher training and distillation
// ---------------------------------------------------------------------------

/// One AdamW state per named tensor, created lazily. Updated parameters are
/// rounded back to their float32 storage precision.
class AdamPool {
  public:
    explicit AdamPool(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(const std::string& name, std::span<double> value,
              std::span<const double> grad, double lr) {
        auto it = states_.find(name);
        if (it == states_.end())
            it = states_.emplace(name, AdamState(value.size(), cfg_)).first;
        adam_step(value, grad, it->second, lr);
        for (double& v : value) v = round_f32(v);
    }

    std::size_t state_scalars() const {
        std::size_t n = 0;
        for (const auto& [name, st] : states_) n += st.state_scalars();
        return n;
    }

  private:
    AdamConfig cfg_;
    std::map<std::string, AdamState> states_;
};

/// Visit every full-precision tensor of the model together with its gradient.
/// Boolean slots contribute their scale vectors and bias only when a backward
/// pass has produced signals for them.
template <typename Fn>
void for_each_fp_tensor(Transformer& m, Fn&& fn) {
    fn("tok_emb", std::span<double>(m.tok_emb.data), std::span<const double>(m.g_tok_emb.data));
    fn("pos_emb", std::span<double>(m.pos_emb.data), std::span<const double>(m.g_pos_emb.data));
    auto visit_slot = [&](LinearSlot& s) {
        if (s.is_boolean()) {
            if (!s.signals) return;
            BooleanLinear& bl = *s.boolean;
            for (std::size_t k = 0; k < bl.kernel_count(); ++k) {
                const std::string base = s.name + ".k" + std::to_string(k);
                fn(base + ".s_out", std::span<double>(bl.kernels[k].s_out),
                   std::span<const double>(s.signals->grad_s_out[k]));
                fn(base + ".s_in", std::span<double>(bl.kernels[k].s_in),
                   std::span<const double>(s.signals->grad_s_in[k]));
            }
            if (!bl.bias.empty())
                fn(s.name + ".b", std::span<double>(bl.bias),
                   std::span<const double>(s.signals->grad_bias));
        } else {
            fn(s.name + ".W", std::span<double>(s.dense.W.data),
               std::span<const double>(s.dense.gW.data));
            if (!s.dense.b.empty())
                fn(s.name + ".b", std::span<double>(s.dense.b),
                   std::span<const double>(s.dense.gb));
        }
    };
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        TransformerBlock& blk = m.blocks[b];
        const std::string p = "blk" + std::to_string(b) + ".";
        fn(p + "ln1.g", std::span<double>(blk.ln1.gamma), std::span<const double>(blk.ln1.g_gamma));
        fn(p + "ln1.b", std::span<double>(blk.ln1.beta), std::span<const double>(blk.ln1.g_beta));
        for (LinearSlot* s : blk.slots()) visit_slot(*s);
        fn(p + "ln2.g", std::span<double>(blk.ln2.gamma), std::span<const double>(blk.ln2.g_gamma));
        fn(p + "ln2.b", std::span<double>(blk.ln2.beta), std::span<const double>(blk.ln2.g_beta));
    }
    fn("lnf.g", std::span<double>(m.ln_f.gamma), std::span<const double>(m.ln_f.g_gamma));
    fn("lnf.b", std::span<double>(m.ln_f.beta), std::span<const double>(m.ln_f.g_beta));
    visit_slot(m.head);
}

template <typename Fn>
void for_each_fp_tensor(MlpModel& m, Fn&& fn) {
    for (LinearSlot& s : m.layers) {
        if (s.is_boolean()) {
            if (!s.signals) continue;
            BooleanLinear& bl = *s.boolean;
            for (std::size_t k = 0; k < bl.kernel_count(); ++k) {
                const std::string base = s.name + ".k" + std::to_string(k);
                fn(base + ".s_out", std::span<double>(bl.kernels[k].s_out),
                   std::span<const double>(s.signals->grad_s_out[k]));
                fn(base + ".s_in", std::span<double>(bl.kernels[k].s_in),
                   std::span<const double>(s.signals->grad_s_in[k]));
            }
            if (!bl.bias.empty())
                fn(s.name + ".b", std::span<double>(bl.bias),
                   std::span<const double>(s.signals->grad_bias));
        } else {
            fn(s.name + ".W", std::span<double>(s.dense.W.data),
               std::span<const double>(s.dense.gW.data));
            if (!s.dense.b.empty())
                fn(s.name + ".b", std::span<double>(s.dense.b),
                   std::span<const double>(s.dense.gb));
        }
    }
}

// ---------------------------------------------------------------------------
// Metrics log: one JSON record per line
// ---------------------------------------------------------------------------

class MetricsWriter {
  public:
    explicit MetricsWriter(const std::string& path) {
        if (!path.empty()) {
            file_ = std::fopen(path.c_str(), "wb");
            if (!file_) throw std::runtime_error("metrics: cannot open " + path);
        }
    }
    ~MetricsWriter() {
        if (file_) std::fclose(file_);
    }
    MetricsWriter(const MetricsWriter&) = delete;
    MetricsWriter& operator=(const MetricsWriter&) = delete;

    void record(std::size_t step, double loss_logits, double loss_is, std::size_t flips,
                double lr) {
        if (!file_) return;
        std::fprintf(file_,
                     "{\"step\":%zu,\"loss_logits\":%.17g,\"loss_is\":%.17g,"
                     "\"flips\":%zu,\"lr\":%.17g}\n",
                     step, loss_logits, loss_is, flips, lr);
    }

  private:
    std::FILE* file_ = nullptr;
};

// ---------------------------------------------------------------------------
// Teacher training
// ---------------------------------------------------------------------------

struct LmTrainConfig {
    std::size_t epochs = 8;
    std::size_t batch = 8;
    std::size_t stride = 16;
    double max_lr = 1e-3;
    double warmup_fraction = 0.03;
    double weight_decay = 0.0;
    std::uint64_t seed = 1;
};

struct TrainSummary {
    double initial_train_loss = 0.0;
    double final_train_loss = 0.0;
    double val_loss = 0.0;
    double val_perplexity = 0.0;
};

inline TrainSummary train_teacher_lm(Transformer& model, const CharLmData& data,
                                     const LmSplit& split, const LmTrainConfig& cfg) {
    detail::check(cfg.epochs > 0 && cfg.batch > 0, "train_teacher_lm: bad config");
    AdamConfig acfg;
    acfg.weight_decay = cfg.weight_decay;
    AdamPool pool(acfg);
    const std::size_t batches_per_epoch = (split.train.size() + cfg.batch - 1) / cfg.batch;
    LrSchedule sched{cfg.max_lr, cfg.warmup_fraction, cfg.epochs * batches_per_epoch};

    TrainSummary summary;
    summary.initial_train_loss = evaluate_lm(model, data, split.train).loss;

    std::size_t step = 0;
    double last_loss = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = split.train;
        std::mt19937_64 rng(cfg.seed * 1000003 + epoch);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t at = 0; at < order.size(); at += cfg.batch) {
            const std::size_t hi = std::min(at + cfg.batch, order.size());
            const std::vector<std::size_t> chunk(order.begin() + at, order.begin() + hi);
            const TokenBatch b = gather_windows(data, chunk);
            model.zero_grads();
            const TransformerTrace tr = model.forward(b, false);
            const CeResult ce = cross_entropy(tr.logits, b.target, true);
            if (!std::isfinite(ce.loss))
                throw std::runtime_error("train_teacher_lm: loss diverged");
            model.backward(b, tr, ce.dlogits, nullptr);
            const double lr = sched.lr_at(++step);
            for_each_fp_tensor(model, [&](const std::string& name, std::span<double> v,
                                          std::span<const double> g) {
                pool.step(name, v, g, lr);
            });
            last_loss = ce.loss;
        }
    }
    summary.final_train_loss = last_loss;
    const EvalResult val = evaluate_lm(model, data, split.val);
    summary.val_loss = val.loss;
    summary.val_perplexity = val.perplexity;
    return summary;
}

struct MlpTrainConfig {
    std::size_t epochs = 40;
    std::size_t batch = 16;
    double max_lr = 1e-2;
    double warmup_fraction = 0.03;
    std::uint64_t seed = 1;
};

struct MseResult {
    double loss = 0.0;
    DenseMatrix dpred;
};

inline MseResult mse_loss(const DenseMatrix& pred, const DenseMatrix& target, bool want_grad) {
    detail::check(pred.same_shape(target), "mse: shape mismatch");
    MseResult out;
    const double inv_n = 1.0 / double(pred.size());
    if (want_grad) out.dpred = DenseMatrix(pred.rows, pred.cols);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        out.loss += d * d * inv_n;
        if (want_grad) out.dpred.data[i] = 2.0 * d * inv_n;
    }
    return out;
}

inline double train_teacher_mlp(MlpModel& model, const VectorDataset& data,
                                const MlpTrainConfig& cfg) {
    AdamPool pool;
    const std::size_t batches = (data.inputs.rows + cfg.batch - 1) / cfg.batch;
    LrSchedule sched{cfg.max_lr, cfg.warmup_fraction, cfg.epochs * batches};
    std::size_t step = 0;
    double last = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(data.inputs.rows);
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(cfg.seed * 99991 + epoch);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t at = 0; at < order.size(); at += cfg.batch) {
            const std::size_t hi = std::min(at + cfg.batch, order.size());
            DenseMatrix X(hi - at, data.inputs.cols), T(hi - at, data.targets.cols);
            for (std::size_t r = at; r < hi; ++r) {
                for (std::size_t c = 0; c < X.cols; ++c) X.at(r - at, c) = data.inputs.at(order[r], c);
                for (std::size_t c = 0; c < T.cols; ++c) T.at(r - at, c) = data.targets.at(order[r], c);
            }
            model.zero_grads();
            MlpModel::Trace trace;
            const DenseMatrix pred = model.forward(X, &trace, false);
            const MseResult mse = mse_loss(pred, T, true);
            if (!std::isfinite(mse.loss)) throw std::runtime_error("train_teacher_mlp: diverged");
            model.backward(trace, mse.dpred);
            const double lr = sched.lr_at(++step);
            for_each_fp_tensor(model, [&](const std::string& name, std::span<double> v,
                                          std::span<const double> g) {
                pool.step(name, v, g, lr);
            });
            last = mse.loss;
        }
    }
    return last;
}

// ---------------------------------------------------------------------------
// Knowledge-distillation finetuning
// ---------------------------------------------------------------------------

struct DistillConfig {
    KdConfig kd;
    std::size_t epochs = 3;
    std::size_t batch = 8;
    std::size_t stride = 16;
    double lr_fp = 1e-3;
    double lr_bool = 5e-3;
    double warmup_fraction = 0.03;
    std::uint64_t seed = 3;
};

struct EpochMetrics {
    double mean_loss_logits = 0.0;
    double mean_loss_is = 0.0;
    double mean_total = 0.0;
    std::size_t flips = 0;
    double val_loss = 0.0;
    double val_perplexity = 0.0;
};

struct DistillResult {
    double init_val_loss = 0.0;
    double init_val_perplexity = 0.0;
    std::vector<EpochMetrics> epochs;
    std::size_t total_flips = 0;

    double final_val_loss() const { return epochs.back().val_loss; }
    double final_val_perplexity() const { return epochs.back().val_perplexity; }
};

/// One result bundle per batch: logits loss, hidden-state loss, their
/// gamma-weighted total.
struct KdBatchResult {
    double loss_logits = 0.0;
    double loss_is = 0.0;
    double total = 0.0;
    std::size_t flips = 0;
};

inline DistillResult distill_lm(Transformer& teacher, Transformer& student,
                                const CharLmData& data, const LmSplit& split,
                                const DistillConfig& cfg, MetricsWriter* metrics = nullptr) {
    detail::check(teacher.cfg.vocab == student.cfg.vocab &&
                      teacher.cfg.blocks == student.cfg.blocks &&
                      teacher.cfg.width == student.cfg.width,
                  "distill_lm: teacher/student structure mismatch");

    AdamPool pool;
    std::map<std::string, FlipAccumulator> flip_states;
    for (LinearSlot* slot : student.designated_slots())
        if (slot->is_boolean())
            flip_states.emplace(slot->name, FlipAccumulator::for_layer(*slot->boolean));

    const std::size_t batches_per_epoch =
        (split.train.size() + cfg.batch - 1) / cfg.batch;
    const std::size_t total_steps = std::max<std::size_t>(1, cfg.epochs * batches_per_epoch);
    LrSchedule fp_sched{cfg.lr_fp, cfg.warmup_fraction, total_steps};
    LrSchedule bool_sched{cfg.lr_bool, cfg.warmup_fraction, total_steps};

    DistillResult result;
    {
        const EvalResult init = evaluate_lm(student, data, split.val);
        result.init_val_loss = init.loss;
        result.init_val_perplexity = init.perplexity;
    }

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = split.train;
        std::mt19937_64 rng(cfg.seed * 7919 + epoch);
        std::shuffle(order.begin(), order.end(), rng);

        EpochMetrics em;
        std::size_t batches = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch) {
            const std::size_t hi = std::min(at + cfg.batch, order.size());
            const std::vector<std::size_t> chunk(order.begin() + at, order.begin() + hi);
            const TokenBatch b = gather_windows(data, chunk);

            const TransformerTrace tt = teacher.forward(b, false);
            student.zero_grads();
            const TransformerTrace st = student.forward(b, true);

            const LogitsLoss ll = kd_logits_loss(tt.logits, st.logits, cfg.kd);
            const HiddenLoss hl = kd_hidden_loss(tt.hidden_states(), st.hidden_states());
            KdBatchResult batch_result;
            batch_result.loss_logits = ll.loss;
            batch_result.loss_is = hl.loss;
            batch_result.total = ll.loss + cfg.kd.gamma * hl.loss;
            if (!std::isfinite(batch_result.total))
                throw std::runtime_error(
                    "distill_lm: loss diverged at step " + std::to_string(step) +
                    " (logits " + std::to_string(ll.loss) + ", is " +
                    std::to_string(hl.loss) + ")");

            std::vector<DenseMatrix> dhidden = hl.grads;
            for (DenseMatrix& g : dhidden)
                for (double& v : g.data) v *= cfg.kd.gamma;
            student.backward(b, st, ll.grad, &dhidden);

            ++step;
            const double lr_fp = fp_sched.lr_at(step);
            const double lr_bool = bool_sched.lr_at(step);
            for_each_fp_tensor(student, [&](const std::string& name, std::span<double> v,
                                            std::span<const double> g) {
                pool.step(name, v, g, lr_fp);
            });
            for (LinearSlot* slot : student.designated_slots()) {
                if (!slot->is_boolean() || !slot->signals) continue;
                const FlipReport fr =
                    bool_step(*slot->boolean, *slot->signals, flip_states.at(slot->name),
                              lr_bool);
                batch_result.flips += fr.flips;
            }

            em.mean_loss_logits += ll.loss;
            em.mean_loss_is += hl.loss;
            em.mean_total += batch_result.total;
            em.flips += batch_result.flips;
            ++batches;
            if (metrics)
                metrics->record(step, ll.loss, hl.loss, batch_result.flips, lr_fp);
        }
        em.mean_loss_logits /= double(batches);
        em.mean_loss_is /= double(batches);
        em.mean_total /= double(batches);
        const EvalResult val = evaluate_lm(student, data, split.val);
        em.val_loss = val.loss;
        em.val_perplexity = val.perplexity;
        result.total_flips += em.flips;
        result.epochs.push_back(em);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Importance probing
// ---------------------------------------------------------------------------

/// Run a probe batch through the teacher and capture input/output activations
/// of every designated linear weight.
inline std::vector<ActivationCapture> probe_activations(Transformer& teacher,
                                                        const TokenBatch& batch) {
    std::vector<ActivationCapture> captures;
    teacher.forward(batch, false, &captures);
    return captures;
}

inline std::vector<ActivationCapture> probe_activations(MlpModel& teacher,
                                                        const DenseMatrix& inputs) {
    std::vector<ActivationCapture> captures;
    teacher.forward(inputs, nullptr, false, &captures);
    return captures;
}

struct ImportanceReport {
    std::vector<std::string> names;
    std::vector<double> h;
    std::vector<bool> degraded;
};

/// h_l = 1 - weighted PWCCA mean of (input, output) activations per weight.
/// Capture failures surface as exceptions, not silent skips.
inline ImportanceReport importance_from_captures(const std::vector<ActivationCapture>& captures,
                                                 double ridge = 1e-8) {
    detail::check(!captures.empty(), "importance: no activations captured");
    ImportanceReport rep;
    for (const ActivationCapture& cap : captures) {
        const PwccaResult r = pwcca(cap.input, cap.output, ridge);
        rep.names.push_back(cap.name);
        rep.h.push_back(std::clamp(1.0 - r.weighted_mean, 0.0, 1.0));
        rep.degraded.push_back(r.degraded_rank);
    }
    return rep;
}

}  // namespace boolkit

#endif
