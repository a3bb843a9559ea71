#ifndef BOOLKIT_MODEL_HPP
#define BOOLKIT_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "boolkit/data.hpp"
#include "boolkit/distill.hpp"
#include "boolkit/linear.hpp"
#include "boolkit/tensor.hpp"

// Desk-scale teachers and students: an MLP and a tiny pre-norm decoder-only
// transformer, both with hand-written backward passes. Only the designated
// linear weights (attention projections and the two MLP matrices, or the MLP
// teacher's layers) are ever booleanized; embeddings, norms, biases and the
// output head stay full precision.

namespace boolkit {

/// Parameters are stored at float32 precision (checkpoints are f32 blobs, and
/// a load(save(model)) roundtrip must be exact); all arithmetic stays double.
inline double round_f32(double x) { return double(float(x)); }

inline void round_f32(std::vector<double>& v) {
    for (double& x : v) x = round_f32(x);
}

inline void round_f32(DenseMatrix& m) { round_f32(m.data); }

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

struct LayerNorm {
    static constexpr double kEps = 1e-5;
    std::vector<double> gamma, beta;
    std::vector<double> g_gamma, g_beta;

    void init(std::size_t width) {
        gamma.assign(width, 1.0);
        beta.assign(width, 0.0);
        zero_grads();
    }

    void zero_grads() {
        g_gamma.assign(gamma.size(), 0.0);
        g_beta.assign(beta.size(), 0.0);
    }

    DenseMatrix forward(const DenseMatrix& X, DenseMatrix& xhat,
                        std::vector<double>& rstd) const {
        const std::size_t w = gamma.size();
        detail::check(X.cols == w, "layernorm: width mismatch");
        DenseMatrix Y(X.rows, w);
        xhat = DenseMatrix(X.rows, w);
        rstd.assign(X.rows, 0.0);
        for (std::size_t r = 0; r < X.rows; ++r) {
            double mean = 0.0;
            for (std::size_t c = 0; c < w; ++c) mean += X.at(r, c);
            mean /= double(w);
            double var = 0.0;
            for (std::size_t c = 0; c < w; ++c) {
                const double d = X.at(r, c) - mean;
                var += d * d;
            }
            var /= double(w);
            const double rs = 1.0 / std::sqrt(var + kEps);
            rstd[r] = rs;
            for (std::size_t c = 0; c < w; ++c) {
                const double xh = (X.at(r, c) - mean) * rs;
                xhat.at(r, c) = xh;
                Y.at(r, c) = xh * gamma[c] + beta[c];
            }
        }
        return Y;
    }

    DenseMatrix backward(const DenseMatrix& dY, const DenseMatrix& xhat,
                         const std::vector<double>& rstd) {
        const std::size_t w = gamma.size();
        DenseMatrix dX(dY.rows, w);
        for (std::size_t r = 0; r < dY.rows; ++r) {
            double mean_dg = 0.0, mean_dgx = 0.0;
            for (std::size_t c = 0; c < w; ++c) {
                const double dg = dY.at(r, c) * gamma[c];
                mean_dg += dg;
                mean_dgx += dg * xhat.at(r, c);
                g_gamma[c] += dY.at(r, c) * xhat.at(r, c);
                g_beta[c] += dY.at(r, c);
            }
            mean_dg /= double(w);
            mean_dgx /= double(w);
            for (std::size_t c = 0; c < w; ++c) {
                const double dg = dY.at(r, c) * gamma[c];
                dX.at(r, c) = rstd[r] * (dg - mean_dg - xhat.at(r, c) * mean_dgx);
            }
        }
        return dX;
    }
};

struct DenseLinear {
    DenseMatrix W;  // m x n
    std::vector<double> b;
    DenseMatrix gW;
    std::vector<double> gb;

    void init(std::size_t m, std::size_t n, std::mt19937_64& rng, bool with_bias = true) {
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(double(n)));
        W = DenseMatrix(m, n);
        for (double& v : W.data) v = round_f32(dist(rng));
        if (with_bias) b.assign(m, 0.0);
        zero_grads();
    }

    void zero_grads() {
        gW = DenseMatrix(W.rows, W.cols);
        gb.assign(b.size(), 0.0);
    }

    DenseMatrix forward(const DenseMatrix& X) const {
        DenseMatrix Y = matmul_dense(X, W);
        if (!b.empty())
            for (std::size_t r = 0; r < Y.rows; ++r)
                for (std::size_t c = 0; c < Y.cols; ++c) Y.at(r, c) += b[c];
        return Y;
    }

    DenseMatrix backward(const DenseMatrix& X, const DenseMatrix& Z) {
        gW = add(gW, matmul_tn(Z, X));
        if (!b.empty())
            for (std::size_t r = 0; r < Z.rows; ++r)
                for (std::size_t c = 0; c < Z.cols; ++c) gb[c] += Z.at(r, c);
        return matmul_nn(Z, W);
    }
};

/// One linear weight of a model, either dense (teacher) or a multi-kernel
/// Boolean layer (student).
struct LinearSlot {
    std::string name;
    DenseLinear dense;
    std::optional<BooleanLinear> boolean;
    std::optional<BackwardSignals> signals;  // last backward, boolean form only

    bool is_boolean() const { return boolean.has_value(); }

    std::size_t out_features() const {
        return is_boolean() ? boolean->out_features() : dense.W.rows;
    }
    std::size_t in_features() const {
        return is_boolean() ? boolean->in_features() : dense.W.cols;
    }

    DenseMatrix forward(const DenseMatrix& X, bool training) {
        if (is_boolean())
            return training ? boolean->forward(X) : boolean->forward_inference(X);
        return dense.forward(X);
    }

    DenseMatrix forward_const(const DenseMatrix& X) const {
        return is_boolean() ? boolean->forward_inference(X) : dense.forward(X);
    }

    DenseMatrix backward(const DenseMatrix& X, const DenseMatrix& Z) {
        if (is_boolean()) {
            signals = boolean->backward(Z);
            return signals->P;
        }
        return dense.backward(X, Z);
    }

    void zero_grads() {
        if (!is_boolean()) dense.zero_grads();
        signals.reset();
    }

    /// Replace the dense weight by an extracted Boolean layer; the bias moves
    /// across unchanged.
    void booleanize(std::size_t K, TrainablePolicy policy) {
        detail::check(!is_boolean(), "booleanize: slot already boolean");
        BooleanLinear layer = BooleanLinear::from_dense(dense.W, K, policy);
        for (SvidKernel& ker : layer.kernels) {
            round_f32(ker.s_out);
            round_f32(ker.s_in);
        }
        layer.bias = dense.b;
        boolean = std::move(layer);
        dense = DenseLinear{};
    }

    std::size_t param_count() const {
        if (is_boolean()) {
            std::size_t n = boolean->bias.size();
            for (const SvidKernel& k : boolean->kernels)
                n += k.s_out.size() + k.s_in.size() + k.bits.size();
            return n;
        }
        return dense.W.size() + dense.b.size();
    }
};

struct ActivationCapture {
    std::string name;
    DenseMatrix input;
    DenseMatrix output;
};

// ---------------------------------------------------------------------------
// MLP
// ---------------------------------------------------------------------------

struct MlpModel {
    std::vector<std::size_t> sizes;
    std::vector<LinearSlot> layers;

    struct Trace {
        std::vector<DenseMatrix> inputs;  // input to each layer
        std::vector<DenseMatrix> pre;     // pre-activation outputs
    };

    DenseMatrix forward(const DenseMatrix& X, Trace* trace, bool training,
                        std::vector<ActivationCapture>* probe = nullptr) {
        DenseMatrix h = X;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            if (trace) trace->inputs.push_back(h);
            DenseMatrix y = layers[l].forward(h, training);
            if (probe) probe->push_back({layers[l].name, h, y});
            if (trace) trace->pre.push_back(y);
            if (l + 1 < layers.size())
                for (double& v : y.data) v = v > 0.0 ? v : 0.0;  // ReLU
            h = std::move(y);
        }
        return h;
    }

    DenseMatrix forward_inference(const DenseMatrix& X) {
        return forward(X, nullptr, false);
    }

    void backward(const Trace& trace, DenseMatrix dOut) {
        for (std::size_t l = layers.size(); l-- > 0;) {
            if (l + 1 < layers.size()) {
                const DenseMatrix& pre = trace.pre[l];
                for (std::size_t i = 0; i < dOut.size(); ++i)
                    if (pre.data[i] <= 0.0) dOut.data[i] = 0.0;
            }
            dOut = layers[l].backward(trace.inputs[l], dOut);
        }
    }

    void zero_grads() {
        for (LinearSlot& slot : layers) slot.zero_grads();
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const LinearSlot& slot : layers) n += slot.param_count();
        return n;
    }
};

inline MlpModel build_mlp(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
    detail::check(sizes.size() >= 2, "build_mlp: need at least input and output sizes");
    MlpModel m;
    m.sizes = sizes;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        LinearSlot slot;
        slot.name = "fc" + std::to_string(l);
        slot.dense.init(sizes[l + 1], sizes[l], rng);
        m.layers.push_back(std::move(slot));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Tiny decoder-only transformer
// ---------------------------------------------------------------------------

struct TransformerConfig {
    std::size_t vocab = 0;
    std::size_t width = 64;
    std::size_t blocks = 2;
    std::size_t heads = 4;
    std::size_t context = 64;

    std::size_t hidden() const { return 4 * width; }
    std::size_t head_dim() const { return width / heads; }

    void validate() const {
        detail::check(vocab >= 2, "transformer: vocab too small");
        detail::check(width % heads == 0, "transformer: width not divisible by heads");
        detail::check(blocks >= 1 && context >= 2, "transformer: bad shape");
    }
};

struct TransformerBlock {
    LayerNorm ln1, ln2;
    LinearSlot wq, wk, wv, wo, fc1, fc2;

    std::vector<LinearSlot*> slots() { return {&wq, &wk, &wv, &wo, &fc1, &fc2}; }
    std::vector<const LinearSlot*> slots() const {
        return {&wq, &wk, &wv, &wo, &fc1, &fc2};
    }
};

struct BlockTrace {
    DenseMatrix input;
    DenseMatrix ln1_xhat, ln1_out;
    std::vector<double> ln1_rstd;
    DenseMatrix q, k, v;
    std::vector<DenseMatrix> probs;  // per (sequence, head), L x L
    DenseMatrix attn_concat, attn_proj;
    DenseMatrix res1;
    DenseMatrix ln2_xhat, ln2_out;
    std::vector<double> ln2_rstd;
    DenseMatrix fc1_out, relu_out, fc2_out;
    DenseMatrix output;  // block output = res1 + fc2_out, a KD hidden state
};

struct TransformerTrace {
    std::size_t B = 0, L = 0;
    DenseMatrix emb;
    std::vector<BlockTrace> blocks;
    DenseMatrix lnf_xhat, lnf_out;
    std::vector<double> lnf_rstd;
    DenseMatrix logits;

    std::vector<DenseMatrix> hidden_states() const {
        std::vector<DenseMatrix> h;
        h.reserve(blocks.size());
        for (const BlockTrace& b : blocks) h.push_back(b.output);
        return h;
    }
};

struct Transformer {
    TransformerConfig cfg;
    DenseMatrix tok_emb;  // vocab x width
    DenseMatrix pos_emb;  // context x width
    DenseMatrix g_tok_emb, g_pos_emb;
    std::vector<TransformerBlock> blocks;
    LayerNorm ln_f;
    LinearSlot head;  // stays dense

    TransformerTrace forward(const TokenBatch& batch, bool training,
                             std::vector<ActivationCapture>* probe = nullptr) {
        detail::check(batch.length <= cfg.context, "forward: sequence exceeds context");
        const std::size_t rows = batch.batch * batch.length;
        TransformerTrace tr;
        tr.B = batch.batch;
        tr.L = batch.length;

        tr.emb = DenseMatrix(rows, cfg.width);
        for (std::size_t r = 0; r < rows; ++r) {
            const int tok = batch.input[r];
            detail::check(tok >= 0 && std::size_t(tok) < cfg.vocab, "forward: token out of range");
            const std::size_t pos = r % batch.length;
            for (std::size_t c = 0; c < cfg.width; ++c)
                tr.emb.at(r, c) = tok_emb.at(tok, c) + pos_emb.at(pos, c);
        }

        DenseMatrix h = tr.emb;
        for (TransformerBlock& blk : blocks) {
            BlockTrace bt;
            bt.input = h;
            bt.ln1_out = blk.ln1.forward(h, bt.ln1_xhat, bt.ln1_rstd);

            bt.q = blk.wq.forward(bt.ln1_out, training);
            bt.k = blk.wk.forward(bt.ln1_out, training);
            bt.v = blk.wv.forward(bt.ln1_out, training);
            if (probe) {
                probe->push_back({blk.wq.name, bt.ln1_out, bt.q});
                probe->push_back({blk.wk.name, bt.ln1_out, bt.k});
                probe->push_back({blk.wv.name, bt.ln1_out, bt.v});
            }

            attention_forward(bt, batch);
            bt.attn_proj = blk.wo.forward(bt.attn_concat, training);
            if (probe) probe->push_back({blk.wo.name, bt.attn_concat, bt.attn_proj});
            bt.res1 = add(bt.input, bt.attn_proj);

            bt.ln2_out = blk.ln2.forward(bt.res1, bt.ln2_xhat, bt.ln2_rstd);
            bt.fc1_out = blk.fc1.forward(bt.ln2_out, training);
            if (probe) probe->push_back({blk.fc1.name, bt.ln2_out, bt.fc1_out});
            bt.relu_out = bt.fc1_out;
            for (double& v : bt.relu_out.data) v = v > 0.0 ? v : 0.0;
            bt.fc2_out = blk.fc2.forward(bt.relu_out, training);
            if (probe) probe->push_back({blk.fc2.name, bt.relu_out, bt.fc2_out});
            bt.output = add(bt.res1, bt.fc2_out);

            h = bt.output;
            tr.blocks.push_back(std::move(bt));
        }

        tr.lnf_out = ln_f.forward(h, tr.lnf_xhat, tr.lnf_rstd);
        tr.logits = head.forward_const(tr.lnf_out);
        return tr;
    }

    /// Backward through the whole model. dhidden, when given, is added to the
    /// gradient at each block output (the KD intermediate-state path) and must
    /// already carry its loss weighting.
    void backward(const TokenBatch& batch, const TransformerTrace& tr,
                  const DenseMatrix& dlogits, const std::vector<DenseMatrix>* dhidden) {
        DenseMatrix d = head.backward(tr.lnf_out, dlogits);
        d = ln_f.backward(d, tr.lnf_xhat, tr.lnf_rstd);

        for (std::size_t bi = blocks.size(); bi-- > 0;) {
            TransformerBlock& blk = blocks[bi];
            const BlockTrace& bt = tr.blocks[bi];
            if (dhidden) d = add(d, (*dhidden)[bi]);

            // feed-forward branch
            DenseMatrix d_relu = blk.fc2.backward(bt.relu_out, d);
            for (std::size_t i = 0; i < d_relu.size(); ++i)
                if (bt.fc1_out.data[i] <= 0.0) d_relu.data[i] = 0.0;
            DenseMatrix d_ln2 = blk.fc1.backward(bt.ln2_out, d_relu);
            DenseMatrix d_res1 = add(d, blk.ln2.backward(d_ln2, bt.ln2_xhat, bt.ln2_rstd));

            // attention branch
            DenseMatrix d_concat = blk.wo.backward(bt.attn_concat, d_res1);
            DenseMatrix dq(d.rows, cfg.width), dk(d.rows, cfg.width), dv(d.rows, cfg.width);
            attention_backward(bt, batch, d_concat, dq, dk, dv);
            DenseMatrix d_ln1 = blk.wq.backward(bt.ln1_out, dq);
            d_ln1 = add(d_ln1, blk.wk.backward(bt.ln1_out, dk));
            d_ln1 = add(d_ln1, blk.wv.backward(bt.ln1_out, dv));
            d = add(d_res1, blk.ln1.backward(d_ln1, bt.ln1_xhat, bt.ln1_rstd));
        }

        for (std::size_t r = 0; r < d.rows; ++r) {
            const int tok = batch.input[r];
            const std::size_t pos = r % batch.length;
            for (std::size_t c = 0; c < cfg.width; ++c) {
                g_tok_emb.at(tok, c) += d.at(r, c);
                g_pos_emb.at(pos, c) += d.at(r, c);
            }
        }
    }

    void zero_grads() {
        g_tok_emb = DenseMatrix(tok_emb.rows, tok_emb.cols);
        g_pos_emb = DenseMatrix(pos_emb.rows, pos_emb.cols);
        for (TransformerBlock& blk : blocks) {
            blk.ln1.zero_grads();
            blk.ln2.zero_grads();
            for (LinearSlot* s : blk.slots()) s->zero_grads();
        }
        ln_f.zero_grads();
        head.zero_grads();
    }

    std::size_t param_count() const {
        std::size_t n = tok_emb.size() + pos_emb.size();
        for (const TransformerBlock& blk : blocks) {
            n += blk.ln1.gamma.size() * 2 + blk.ln2.gamma.size() * 2;
            for (const LinearSlot* s : blk.slots()) n += s->param_count();
        }
        n += ln_f.gamma.size() * 2;
        n += head.param_count();
        return n;
    }

    std::vector<LinearSlot*> designated_slots() {
        std::vector<LinearSlot*> out;
        for (TransformerBlock& blk : blocks)
            for (LinearSlot* s : blk.slots()) out.push_back(s);
        return out;
    }

  private:
    void attention_forward(BlockTrace& bt, const TokenBatch& batch) const {
        const std::size_t L = batch.length, dh = cfg.head_dim();
        const double inv_scale = 1.0 / std::sqrt(double(dh));
        bt.attn_concat = DenseMatrix(bt.q.rows, cfg.width);
        bt.probs.reserve(batch.batch * cfg.heads);
        for (std::size_t b = 0; b < batch.batch; ++b) {
            const std::size_t base = b * L;
            for (std::size_t h = 0; h < cfg.heads; ++h) {
                const std::size_t off = h * dh;
                DenseMatrix P(L, L);
                for (std::size_t i = 0; i < L; ++i) {
                    double mx = -1e300;
                    std::vector<double> row(i + 1);
                    for (std::size_t j = 0; j <= i; ++j) {
                        double s = 0.0;
                        for (std::size_t c = 0; c < dh; ++c)
                            s += bt.q.at(base + i, off + c) * bt.k.at(base + j, off + c);
                        row[j] = s * inv_scale;
                        if (row[j] > mx) mx = row[j];
                    }
                    double sum = 0.0;
                    for (std::size_t j = 0; j <= i; ++j) {
                        row[j] = std::exp(row[j] - mx);
                        sum += row[j];
                    }
                    for (std::size_t j = 0; j <= i; ++j) P.at(i, j) = row[j] / sum;
                }
                for (std::size_t i = 0; i < L; ++i)
                    for (std::size_t c = 0; c < dh; ++c) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j <= i; ++j)
                            acc += P.at(i, j) * bt.v.at(base + j, off + c);
                        bt.attn_concat.at(base + i, off + c) = acc;
                    }
                bt.probs.push_back(std::move(P));
            }
        }
    }

    void attention_backward(const BlockTrace& bt, const TokenBatch& batch,
                            const DenseMatrix& d_concat, DenseMatrix& dq, DenseMatrix& dk,
                            DenseMatrix& dv) const {
        const std::size_t L = batch.length, dh = cfg.head_dim();
        const double inv_scale = 1.0 / std::sqrt(double(dh));
        for (std::size_t b = 0; b < batch.batch; ++b) {
            const std::size_t base = b * L;
            for (std::size_t h = 0; h < cfg.heads; ++h) {
                const std::size_t off = h * dh;
                const DenseMatrix& P = bt.probs[b * cfg.heads + h];

                // dV and dP
                DenseMatrix dP(L, L);
                for (std::size_t i = 0; i < L; ++i)
                    for (std::size_t j = 0; j <= i; ++j) {
                        double acc = 0.0;
                        for (std::size_t c = 0; c < dh; ++c)
                            acc += d_concat.at(base + i, off + c) * bt.v.at(base + j, off + c);
                        dP.at(i, j) = acc;
                    }
                for (std::size_t j = 0; j < L; ++j)
                    for (std::size_t c = 0; c < dh; ++c) {
                        double acc = 0.0;
                        for (std::size_t i = j; i < L; ++i)
                            acc += P.at(i, j) * d_concat.at(base + i, off + c);
                        dv.at(base + j, off + c) += acc;
                    }

                // softmax backward row by row, then into q and k
                for (std::size_t i = 0; i < L; ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j <= i; ++j) dot += dP.at(i, j) * P.at(i, j);
                    for (std::size_t j = 0; j <= i; ++j) {
                        const double ds = P.at(i, j) * (dP.at(i, j) - dot) * inv_scale;
                        for (std::size_t c = 0; c < dh; ++c) {
                            dq.at(base + i, off + c) += ds * bt.k.at(base + j, off + c);
                            dk.at(base + j, off + c) += ds * bt.q.at(base + i, off + c);
                        }
                    }
                }
            }
        }
    }
};

inline Transformer build_transformer(const TransformerConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Transformer m;
    m.cfg = cfg;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> emb_dist(0.0, 0.05);

    m.tok_emb = DenseMatrix(cfg.vocab, cfg.width);
    for (double& v : m.tok_emb.data) v = round_f32(emb_dist(rng));
    m.pos_emb = DenseMatrix(cfg.context, cfg.width);
    for (double& v : m.pos_emb.data) v = round_f32(emb_dist(rng));

    for (std::size_t b = 0; b < cfg.blocks; ++b) {
        TransformerBlock blk;
        const std::string prefix = "blk" + std::to_string(b) + ".";
        blk.ln1.init(cfg.width);
        blk.ln2.init(cfg.width);
        blk.wq.name = prefix + "attn.q";
        blk.wk.name = prefix + "attn.k";
        blk.wv.name = prefix + "attn.v";
        blk.wo.name = prefix + "attn.out";
        blk.fc1.name = prefix + "mlp.fc1";
        blk.fc2.name = prefix + "mlp.fc2";
        blk.wq.dense.init(cfg.width, cfg.width, rng);
        blk.wk.dense.init(cfg.width, cfg.width, rng);
        blk.wv.dense.init(cfg.width, cfg.width, rng);
        blk.wo.dense.init(cfg.width, cfg.width, rng);
        blk.fc1.dense.init(cfg.hidden(), cfg.width, rng);
        blk.fc2.dense.init(cfg.width, cfg.hidden(), rng);
        m.blocks.push_back(std::move(blk));
    }
    m.ln_f.init(cfg.width);
    m.head.name = "head";
    m.head.dense.init(cfg.vocab, cfg.width, rng);
    m.zero_grads();
    return m;
}

// ---------------------------------------------------------------------------
// Kernel plans, booleanization, evaluation
// ---------------------------------------------------------------------------

/// Kernel counts per designated weight; a uniform default applies to any
/// weight without an explicit entry.
struct KernelPlan {
    std::size_t uniform = 1;
    std::map<std::string, std::size_t> per_weight;

    std::size_t count_for(const std::string& name) const {
        const auto it = per_weight.find(name);
        return it == per_weight.end() ? uniform : it->second;
    }
};

/// Replace every designated linear weight of the teacher copy by extracted
/// Boolean kernels; everything else is copied bit-identically.
inline Transformer booleanize(const Transformer& teacher, const KernelPlan& plan,
                              TrainablePolicy policy = TrainablePolicy::LastOnly) {
    Transformer student = teacher;
    for (LinearSlot* slot : student.designated_slots())
        slot->booleanize(plan.count_for(slot->name), policy);
    return student;
}

inline MlpModel booleanize(const MlpModel& teacher, const KernelPlan& plan,
                           TrainablePolicy policy = TrainablePolicy::LastOnly) {
    MlpModel student = teacher;
    for (LinearSlot& slot : student.layers)
        slot.booleanize(plan.count_for(slot.name), policy);
    return student;
}

struct EvalResult {
    double loss = 0.0;
    double perplexity = 1.0;
    std::size_t tokens = 0;
};

struct CeResult {
    double loss = 0.0;
    DenseMatrix dlogits;  // gradient of the mean loss, if requested
};

/// Mean token cross entropy; the gradient is (softmax - onehot) / N.
inline CeResult cross_entropy(const DenseMatrix& logits, const std::vector<int>& targets,
                              bool want_grad) {
    detail::check(logits.rows == targets.size(), "cross_entropy: row/target mismatch");
    CeResult out;
    if (want_grad) out.dlogits = DenseMatrix(logits.rows, logits.cols);
    const double inv_n = 1.0 / double(logits.rows);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        std::span<const double> row(logits.row(r), logits.cols);
        const auto lp = log_softmax_tau(row, 1.0);
        const int t = targets[r];
        detail::check(t >= 0 && std::size_t(t) < logits.cols, "cross_entropy: bad target");
        out.loss -= lp[t] * inv_n;
        if (want_grad) {
            for (std::size_t c = 0; c < logits.cols; ++c)
                out.dlogits.at(r, c) = std::exp(lp[c]) * inv_n;
            out.dlogits.at(r, t) -= inv_n;
        }
    }
    return out;
}

/// Teacher-forced evaluation over a set of windows.
inline EvalResult evaluate_lm(Transformer& model, const CharLmData& data,
                              const std::vector<std::size_t>& starts,
                              std::size_t batch_size = 16) {
    detail::check(!starts.empty(), "evaluate_lm: empty evaluation set");
    double total = 0.0;
    std::size_t tokens = 0;
    for (std::size_t at = 0; at < starts.size(); at += batch_size) {
        const std::size_t hi = std::min(at + batch_size, starts.size());
        const std::vector<std::size_t> chunk(starts.begin() + at, starts.begin() + hi);
        const TokenBatch b = gather_windows(data, chunk);
        const TransformerTrace tr = model.forward(b, false);
        const CeResult ce = cross_entropy(tr.logits, b.target, false);
        total += ce.loss * double(b.target.size());
        tokens += b.target.size();
    }
    EvalResult r;
    r.loss = total / double(tokens);
    r.perplexity = std::exp(r.loss);
    r.tokens = tokens;
    return r;
}

}  // namespace boolkit

#endif
