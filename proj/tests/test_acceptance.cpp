// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line. Everything runs on fixed seeds and desk-scale models; the whole
// binary completes in a few minutes on a laptop CPU.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <vector>

#include "boolkit/boolkit.hpp"

using namespace boolkit;
namespace fs = std::filesystem;

namespace {

void report(int criterion, bool ok, const std::string& what) {
    std::printf("[criterion %2d] %s  %s\n", criterion, ok ? "PASS" : "FAIL", what.c_str());
    std::fflush(stdout);
}

DenseMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng,
                          bool heavy_tailed) {
    std::normal_distribution<double> normal(0.0, 1.0);
    DenseMatrix m(r, c);
    for (double& v : m.data) {
        if (heavy_tailed) {
            // ratio of normals: Cauchy-distributed entries
            double denom = normal(rng);
            while (std::fabs(denom) < 1e-9) denom = normal(rng);
            v = normal(rng) / denom;
        } else {
            v = normal(rng);
        }
    }
    return m;
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

/// Leading singular pair of a general matrix scaled by sqrt(sigma); the
/// Proposition-1 competitor. Power iteration on W^T W with a random start.
std::pair<std::vector<double>, std::vector<double>> general_leading_pair(
    const DenseMatrix& W, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(W.cols);
    for (double& x : v) x = dist(rng);
    std::vector<double> wv(W.rows);
    double prev = -1.0;
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
        if (prev >= 0.0 && std::fabs(nrm - prev) < 1e-13 * std::max(1.0, nrm)) break;
        prev = nrm;
    }
    for (std::size_t r = 0; r < W.rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < W.cols; ++c) acc += W.at(r, c) * v[c];
        wv[r] = acc;
    }
    double s2 = 0.0;
    for (double x : wv) s2 += x * x;
    const double sigma = std::sqrt(s2);
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

bool rel_close(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

// Shared desk pipeline (built once, reused by criteria 9 and 11).
struct DeskPipeline {
    CharLmData data;
    LmSplit split;
    Transformer teacher;

    static DeskPipeline& instance() {
        static DeskPipeline p = [] {
            DeskPipeline d{make_char_lm(64), {}, {}};
            d.split = split_windows(d.data, 16);
            TransformerConfig cfg;
            cfg.vocab = d.data.vocab_size();
            cfg.width = 64;
            cfg.blocks = 2;
            cfg.heads = 4;
            cfg.context = 64;
            d.teacher = build_transformer(cfg, 1);
            LmTrainConfig tc;
            tc.epochs = 6;
            tc.batch = 8;
            tc.max_lr = 1.5e-3;
            tc.seed = 1;
            train_teacher_lm(d.teacher, d.data, d.split, tc);
            return d;
        }();
        return p;
    }
};

}  // namespace

TEST_CASE("criterion 1: svid optimality against random competitors") {
    std::mt19937_64 rng(20240601);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> dim(1, 32);
    std::size_t violations = 0;
    const std::size_t matrices = 1000, competitors = 100;
    for (std::size_t i = 0; i < matrices; ++i) {
        const DenseMatrix W = random_matrix(dim(rng), dim(rng), rng, i % 2 == 1);
        const auto [kernel, residual] = svid_extract(W, 1e-12, 5000);
        const double svid_err = frobenius(residual);
        std::vector<double> c(W.rows), d(W.cols);
        for (std::size_t comp = 0; comp < competitors; ++comp) {
            for (double& x : c) x = dist(rng);
            for (double& x : d) x = dist(rng);
            if (svid_err > masked_rank1_error(W, kernel.bits, c, d) + 1e-8) ++violations;
        }
    }
    report(1, violations == 0,
           "svid error <= masked rank-1 competitors over 1000 matrices x 100 competitors, "
           "violations=" + std::to_string(violations));
    REQUIRE(violations == 0);
}

TEST_CASE("criterion 2: svid beats the plain leading rank-1 pair") {
    std::mt19937_64 rng(20240602);
    std::uniform_int_distribution<std::size_t> dim(1, 32);
    std::size_t violations = 0;
    const std::size_t matrices = 500;
    for (std::size_t i = 0; i < matrices; ++i) {
        const DenseMatrix W = random_matrix(dim(rng), dim(rng), rng, i % 2 == 1);
        const auto [kernel, residual] = svid_extract(W, 1e-12, 5000);
        const auto [a, b] = general_leading_pair(W, rng);
        if (frobenius(residual) > rank1_error(W, a, b) + 1e-8) ++violations;
    }
    report(2, violations == 0,
           "svid error <= leading-pair error over 500 matrices, violations=" +
               std::to_string(violations));
    REQUIRE(violations == 0);
}

TEST_CASE("criterion 3: boolean/dense matmul equivalence is bit-exact") {
    std::mt19937_64 rng(20240603);
    std::uniform_int_distribution<std::size_t> bdim(1, 8), mdim(1, 17), ndim(1, 130);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> dist(0.0, 3.0);
    std::size_t cases = 0, mismatches = 0;
    while (cases < 10000) {
        const std::size_t b = bdim(rng), m = mdim(rng), n = ndim(rng);
        DenseMatrix X(b, n);
        for (double& v : X.data) v = dist(rng);
        BitMatrix W(m, n);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) W.set(r, c, coin(rng));
        const DenseMatrix yb = matmul_bool(X, W);
        const DenseMatrix yd = matmul_dense(X, unpack(W));
        for (std::size_t i = 0; i < yb.size(); ++i)
            if (yb.data[i] != yd.data[i]) ++mismatches;
        ++cases;
    }
    report(3, mismatches == 0,
           "10000 randomized shapes incl. ragged, bitwise mismatches=" +
               std::to_string(mismatches));
    REQUIRE(mismatches == 0);
}

TEST_CASE("criterion 4: boolean backward signals equal dense gradients") {
    std::mt19937_64 rng(20240604);
    std::uniform_int_distribution<std::size_t> dim(1, 6), bdim(1, 4), kdim(1, 3);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::size_t configs = 0, q_fail = 0, p_fail = 0, fd_fail = 0;
    while (configs < 200) {
        const std::size_t m = dim(rng), n = dim(rng), K = kdim(rng), b = bdim(rng);
        DenseMatrix W(m, n);
        for (double& v : W.data) v = dist(rng);
        BooleanLinear layer = BooleanLinear::from_dense(W, K, TrainablePolicy::All);
        DenseMatrix X(b, n), Z(b, m);
        for (double& v : X.data) v = dist(rng);
        for (double& v : Z.data) v = dist(rng);

        layer.forward(X);
        const BackwardSignals sig = layer.backward(Z);

        // Q oracle: dense hand-derived gradient w.r.t. each kernel's embedding
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t i = 0; i < n; ++i) {
                    double want = 0.0;
                    for (std::size_t t = 0; t < b; ++t)
                        want += Z.at(t, j) * layer.kernels[k].s_out[j] * X.at(t, i) *
                                layer.kernels[k].s_in[i];
                    if (!rel_close(sig.Q[k].at(j, i), want, 1e-8)) ++q_fail;
                }

        // P oracle: dense gradient w.r.t. X of the reconstructed map
        const DenseMatrix want_p = matmul_nn(Z, reconstruct(layer.kernels));
        for (std::size_t i = 0; i < want_p.size(); ++i)
            if (!rel_close(sig.P.data[i], want_p.data[i], 1e-8)) ++p_fail;

        // scale gradients vs central finite differences of sum(Z .* Y)
        auto loss = [&] {
            const DenseMatrix Y = layer.forward_inference(X);
            double s = 0.0;
            for (std::size_t i = 0; i < Y.size(); ++i) s += Z.data[i] * Y.data[i];
            return s;
        };
        const double eps = 1e-6;
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t j = 0; j < m; ++j) {
                double& s = layer.kernels[k].s_out[j];
                const double keep = s;
                s = keep + eps;
                const double up = loss();
                s = keep - eps;
                const double dn = loss();
                s = keep;
                if (!rel_close(sig.grad_s_out[k][j], (up - dn) / (2 * eps), 1e-5)) ++fd_fail;
            }
            for (std::size_t i = 0; i < n; ++i) {
                double& s = layer.kernels[k].s_in[i];
                const double keep = s;
                s = keep + eps;
                const double up = loss();
                s = keep - eps;
                const double dn = loss();
                s = keep;
                if (!rel_close(sig.grad_s_in[k][i], (up - dn) / (2 * eps), 1e-5)) ++fd_fail;
            }
        }
        ++configs;
    }
    const bool ok = q_fail == 0 && p_fail == 0 && fd_fail == 0;
    report(4, ok,
           "200 layer configs: Q mismatches=" + std::to_string(q_fail) +
               ", P mismatches=" + std::to_string(p_fail) +
               ", scale-gradient FD mismatches=" + std::to_string(fd_fail));
    REQUIRE(ok);
}

TEST_CASE("criterion 5: successive extraction error trend") {
    std::mt19937_64 rng(20240605);
    const DenseMatrix W = gaussian(64, 64, rng);
    const ExtractionReport rep = successive_extract(W, 8);
    bool strictly_decreasing = true;
    double prev = 1.0;
    for (double v : rep.residual_l1_normalized) {
        if (v >= prev) strictly_decreasing = false;
        prev = v;
    }
    const double gain_1_to_4 = rep.residual_l1_normalized[0] - rep.residual_l1_normalized[3];
    const double gain_4_to_8 = rep.residual_l1_normalized[3] - rep.residual_l1_normalized[7];
    const bool diminishing = gain_4_to_8 < gain_1_to_4;
    report(5, strictly_decreasing && diminishing,
           "normalized L1 strictly decreasing over K=1..8; gain(1->4)=" +
               std::to_string(gain_1_to_4) + " > gain(4->8)=" + std::to_string(gain_4_to_8));
    REQUIRE(strictly_decreasing);
    REQUIRE(diminishing);
}

TEST_CASE("criterion 6: optimizer flip/reset/beta truth table and state size") {
    // every sign combination of (M, Q, w) at flip-capable magnitudes
    std::size_t checked = 0, wrong = 0;
    for (double m0 : {-2.0, 0.0, 2.0}) {
        for (double q : {-3.0, 0.0, 3.0}) {
            for (bool w : {true, false}) {
                SvidKernel ker;
                ker.bits = BitMatrix(1, 1);
                ker.bits.set(0, 0, w);
                ker.s_out = {1.0};
                ker.s_in = {1.0};
                BooleanLinear layer = BooleanLinear::from_kernels({ker}, {0});
                FlipAccumulator st = FlipAccumulator::for_layer(layer);
                st.M[0].at(0, 0) = m0;

                BackwardSignals sig;
                sig.Q = {DenseMatrix::from_rows({{q}})};
                const FlipReport fr = bool_step(layer, sig, st, 1.0);

                const double m_new = m0 + q;  // beta = 1 initially
                const bool should_flip =
                    std::fabs(m_new) >= 1.0 &&
                    ((m_new > 0.0 && w) || (m_new < 0.0 && !w));
                const bool flipped = layer.kernels[0].bits.get(0, 0) != w;
                if (flipped != should_flip) ++wrong;
                if (should_flip && st.M[0].at(0, 0) != 0.0) ++wrong;
                if (!should_flip && st.M[0].at(0, 0) != m_new) ++wrong;
                if (fr.beta_after != (should_flip ? 0.0 : 1.0)) ++wrong;
                ++checked;
            }
        }
    }

    // beta formula on a mixed layer
    SvidKernel ker;
    ker.bits = BitMatrix(2, 5);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 5; ++c) ker.bits.set(r, c, true);
    ker.s_out = {1.0, 1.0};
    ker.s_in = std::vector<double>(5, 1.0);
    BooleanLinear layer = BooleanLinear::from_kernels({ker}, {0});
    FlipAccumulator st = FlipAccumulator::for_layer(layer);
    DenseMatrix Q(2, 5, -2.0);
    Q.at(0, 0) = 2.0;
    Q.at(0, 3) = 2.0;
    Q.at(1, 4) = 2.0;
    BackwardSignals sig;
    sig.Q = {Q};
    const FlipReport fr = bool_step(layer, sig, st, 1.0);
    const bool beta_exact = fr.flips == 3 && fr.total == 10 && fr.beta_after == 0.7;

    // memory contract: one accumulator scalar per trainable weight vs two
    // moments per parameter for the adaptive optimizer
    BooleanLinear wide = BooleanLinear::from_dense(DenseMatrix(6, 7, 1.0), 3,
                                                   TrainablePolicy::LastOnly);
    const FlipAccumulator ws = FlipAccumulator::for_layer(wide);
    AdamState adam(6 * 7);
    const bool memory_ok = ws.state_scalars() == 6 * 7 && adam.state_scalars() == 2 * 6 * 7;

    const bool ok = wrong == 0 && beta_exact && memory_ok;
    report(6, ok,
           "truth table combos=" + std::to_string(checked) + " wrong=" +
               std::to_string(wrong) + "; beta=0.7 case " +
               (beta_exact ? "exact" : "WRONG") + "; state accounting " +
               (memory_ok ? "1-vs-2 scalars per weight" : "WRONG"));
    REQUIRE(ok);
}

TEST_CASE("criterion 7: greedy allocation constraints and optimality gap") {
    std::mt19937_64 rng(20240607);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> ndim(1, 4), kdim(1, 4);
    std::size_t budget_violations = 0, uniform_violations = 0;
    double total_gap = 0.0, total_rel_gap = 0.0;
    const std::size_t instances = 200;
    for (std::size_t i = 0; i < instances; ++i) {
        const std::size_t N = ndim(rng), K_max = kdim(rng);
        AllocationProblem prob;
        prob.K_max = K_max;
        prob.E = DenseMatrix(N, K_max);
        for (std::size_t l = 0; l < N; ++l) {
            double e = 1.0 + 5.0 * uni(rng);
            for (std::size_t k = 0; k < K_max; ++k) {
                prob.E.at(l, k) = e;
                e *= 0.2 + 0.7 * uni(rng);
            }
        }
        prob.h.resize(N);
        for (double& v : prob.h) v = uni(rng);
        prob.p.resize(N);
        double sum = 0.0;
        for (double& v : prob.p) {
            v = 0.05 + uni(rng);
            sum += v;
        }
        for (double& v : prob.p) v /= sum;
        prob.T = 1.0 + uni(rng) * (double(K_max) - 1.0);

        const Allocation greedy = allocate_greedy(prob);
        const Allocation exact = allocate_bruteforce(prob);
        if (greedy.achieved_ratio > prob.T + 1e-12) ++budget_violations;
        total_gap += greedy.energy - exact.energy;
        if (exact.energy > 0.0)
            total_rel_gap += (greedy.energy - exact.energy) / exact.energy;

        const std::size_t uniform = std::size_t(prob.T);
        if (uniform >= 1 && uniform <= K_max) {
            const std::vector<std::size_t> uk(N, uniform);
            if (expansion_ratio(uk, prob.p) <= prob.T + 1e-12 &&
                greedy.energy > energy(uk, prob) + 1e-12)
                ++uniform_violations;
        }
    }
    char gap_msg[160];
    std::snprintf(gap_msg, sizeof(gap_msg),
                  "200 instances: budget violations=%zu, uniform-dominance violations=%zu, "
                  "mean gap=%.3g (informational mean rel gap=%.3g)",
                  budget_violations, uniform_violations, total_gap / double(instances),
                  total_rel_gap / double(instances));
    const bool ok = budget_violations == 0 && uniform_violations == 0;
    report(7, ok, gap_msg);
    REQUIRE(ok);
}

TEST_CASE("criterion 8: pwcca invariance, identity importance, determinism") {
    std::mt19937_64 rng(20240608);
    // invariance under invertible linear transformation
    const DenseMatrix X = gaussian(400, 8, rng);
    DenseMatrix A = gaussian(8, 8, rng);
    for (std::size_t i = 0; i < 8; ++i) A.at(i, i) += 3.0;
    const PwccaResult inv = pwcca(X, matmul_nn(X, A));
    bool invariance = true;
    for (double rho : inv.rho)
        if (std::fabs(rho - 1.0) > 1e-6) invariance = false;

    const double h_identity = importance_score(X, X);
    const bool identity_ok = h_identity <= 1e-8;

    // determinism with 128 probe samples through an MLP teacher
    auto probe_run = [] {
        MlpModel teacher = build_mlp({8, 16, 12, 4}, 77);
        std::mt19937_64 prng(128);
        const DenseMatrix probe = gaussian(128, 8, prng);
        const auto caps = probe_activations(teacher, probe);
        return importance_from_captures(caps).h;
    };
    const std::vector<double> h1 = probe_run();
    const std::vector<double> h2 = probe_run();
    const bool deterministic = h1 == h2;

    const bool ok = invariance && identity_ok && deterministic;
    report(8, ok,
           std::string("invertible-map rho==1 ") + (invariance ? "ok" : "FAIL") +
               "; identity h=" + std::to_string(h_identity) + "; 128-sample probe " +
               (deterministic ? "bit-reproducible" : "NOT reproducible"));
    REQUIRE(ok);
}

TEST_CASE("criterion 9: end-to-end pipeline, perplexity trends") {
    DeskPipeline& p = DeskPipeline::instance();

    double prev = 1e300;
    bool monotone = true;
    std::string ppl_list;
    for (std::size_t K = 1; K <= 4; ++K) {
        KernelPlan plan;
        plan.uniform = K;
        Transformer student = booleanize(p.teacher, plan);
        const EvalResult r = evaluate_lm(student, p.data, p.split.val);
        if (r.perplexity > prev + 1e-12) monotone = false;
        prev = r.perplexity;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s%.3f", K == 1 ? "" : " -> ", r.perplexity);
        ppl_list += buf;
    }

    KernelPlan plan;
    plan.uniform = 2;
    Transformer student = booleanize(p.teacher, plan);
    DistillConfig dc;
    dc.epochs = 3;
    dc.batch = 8;
    dc.seed = 3;
    dc.kd.gamma = 10.0;
    dc.lr_fp = 1e-3;
    dc.lr_bool = 0.2;
    const DistillResult dr = distill_lm(p.teacher, student, p.data, p.split, dc);
    const bool improved = dr.final_val_perplexity() < dr.init_val_perplexity;

    char msg[256];
    std::snprintf(msg, sizeof(msg),
                  "init ppl by K: %s (non-increasing %s); KD K=2: %.3f -> %.3f (%s)",
                  ppl_list.c_str(), monotone ? "ok" : "FAIL", dr.init_val_perplexity,
                  dr.final_val_perplexity(), improved ? "improved" : "FAIL");
    report(9, monotone && improved, msg);
    REQUIRE(monotone);
    REQUIRE(improved);
}

TEST_CASE("criterion 10: last-kernel-only beats first-kernel-only") {
    const CharLmData data = make_char_lm(32);
    const LmSplit split = split_windows(data, 16);
    TransformerConfig cfg;
    cfg.vocab = data.vocab_size();
    cfg.width = 32;
    cfg.blocks = 2;
    cfg.heads = 2;
    cfg.context = 32;
    Transformer teacher = build_transformer(cfg, 11);
    LmTrainConfig tc;
    tc.epochs = 4;
    tc.batch = 16;
    tc.max_lr = 1.5e-3;
    tc.seed = 11;
    train_teacher_lm(teacher, data, split, tc);

    int wins = 0;
    std::string detail;
    for (std::uint64_t seed : {101, 202, 303, 404}) {
        auto run = [&](std::set<std::size_t> trainable) {
            KernelPlan plan;
            plan.uniform = 4;
            Transformer student = booleanize(teacher, plan);
            for (LinearSlot* s : student.designated_slots())
                s->boolean->trainable = trainable;
            DistillConfig dc;
            dc.epochs = 2;
            dc.batch = 16;
            dc.seed = seed;
            dc.kd.gamma = 10.0;
            dc.lr_fp = 1e-3;
            dc.lr_bool = 0.2;
            const DistillResult dr = distill_lm(teacher, student, data, split, dc);
            return std::pair{dr.final_val_loss(), dr.total_flips};
        };
        const auto [loss_last, flips_last] = run({3});
        const auto [loss_first, flips_first] = run({0});
        const bool win = loss_last <= loss_first && flips_last < flips_first;
        wins += win;
        char buf[96];
        std::snprintf(buf, sizeof(buf), " seed%llu:%s(f%zu/%zu)",
                      (unsigned long long)seed, win ? "win" : "loss", flips_last,
                      flips_first);
        detail += buf;
    }
    report(10, wins >= 3, "last-vs-first kernel wins=" + std::to_string(wins) + "/4" + detail);
    REQUIRE(wins >= 3);
}

TEST_CASE("criterion 11: all five divergences run and vanish at equality") {
    const CharLmData data = make_char_lm(16);
    const LmSplit split = split_windows(data, 64);
    TransformerConfig cfg;
    cfg.vocab = data.vocab_size();
    cfg.width = 16;
    cfg.blocks = 1;
    cfg.heads = 2;
    cfg.context = 16;
    Transformer teacher = build_transformer(cfg, 5);

    bool all_ok = true;
    std::string detail;
    for (Divergence d : {Divergence::ForwardKL, Divergence::ReverseKL,
                         Divergence::SymmetricKL, Divergence::JS, Divergence::TV}) {
        // (a) the desk pipeline runs to completion with this divergence
        KernelPlan plan;
        plan.uniform = 2;
        Transformer student = booleanize(teacher, plan);
        DistillConfig dc;
        dc.epochs = 1;
        dc.batch = 16;
        dc.seed = 5;
        dc.kd.divergence = d;
        dc.lr_bool = 0.2;
        bool ran = true;
        try {
            distill_lm(teacher, student, data, split, dc);
        } catch (const std::exception&) {
            ran = false;
        }

        // (b) exactly zero loss when the student IS the teacher
        Transformer clone = teacher;
        DistillConfig dz = dc;
        const DistillResult dr = distill_lm(teacher, clone, data, split, dz);
        const bool zero = dr.epochs[0].mean_loss_logits == 0.0 &&
                          dr.epochs[0].mean_loss_is == 0.0 &&
                          dr.epochs[0].mean_total == 0.0 && dr.epochs[0].flips == 0;
        all_ok = all_ok && ran && zero;
        detail += std::string(" ") + divergence_name(d) + (ran && zero ? ":ok" : ":FAIL");
    }
    report(11, all_ok, "divergence menu" + detail);
    REQUIRE(all_ok);
}

TEST_CASE("criterion 12: checkpoint bit-exactness and payload accounting") {
    const fs::path dir = fs::temp_directory_path() / "boolkit_acceptance_ckpt";
    fs::remove_all(dir);

    TransformerConfig cfg;
    cfg.vocab = 19;
    cfg.width = 64;
    cfg.blocks = 1;
    cfg.heads = 4;
    cfg.context = 8;
    Transformer teacher = build_transformer(cfg, 13);
    KernelPlan plan;
    plan.uniform = 3;
    Transformer student = booleanize(teacher, plan);
    save_checkpoint(student, dir / "a");
    Transformer loaded = load_transformer(dir / "a");
    save_checkpoint(loaded, dir / "b");

    auto read_bytes = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::vector<char>{std::istreambuf_iterator<char>(in),
                                 std::istreambuf_iterator<char>()};
    };
    bool roundtrip = true;
    for (const char* f : {"manifest.json", "dense.bin", "bool.bin"})
        roundtrip = roundtrip && read_bytes(dir / "a" / f) == read_bytes(dir / "b" / f);

    // the 0x8D packing vector at container level
    MlpModel probe = build_mlp({8, 1}, 3);
    DenseMatrix signs(1, 8);
    const double row[] = {1, -1, 1, 1, -1, -1, -1, 1};
    for (std::size_t c = 0; c < 8; ++c) signs.at(0, c) = row[c];
    SvidKernel ker;
    ker.bits = pack(signs);
    ker.s_out = {1.0};
    ker.s_in = std::vector<double>(8, 1.0);
    probe.layers[0].boolean = BooleanLinear::from_kernels({ker}, {0});
    probe.layers[0].dense = DenseLinear{};
    save_checkpoint(probe, dir / "pack");
    const auto pack_bytes = read_bytes(dir / "pack" / "bool.bin");
    const bool packed_ok = pack_bytes.size() == 8 && (unsigned char)pack_bytes[0] == 0x8D;

    // Boolean payload size within 1% of K*m*n/8
    std::size_t expected_bits = 0;
    for (LinearSlot* s : student.designated_slots())
        expected_bits += plan.uniform * s->out_features() * s->in_features();
    const double expected_bytes = double(expected_bits) / 8.0;
    const double actual_bytes = double(fs::file_size(dir / "a" / "bool.bin"));
    const bool payload_ok = std::fabs(actual_bytes - expected_bytes) <= 0.01 * expected_bytes;

    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "roundtrip %s; 0x8D vector %s; payload %.0fB vs K*m*n/8=%.0fB",
                  roundtrip ? "bit-exact" : "FAIL", packed_ok ? "ok" : "FAIL", actual_bytes,
                  expected_bytes);
    report(12, roundtrip && packed_ok && payload_ok, msg);
    REQUIRE(roundtrip);
    REQUIRE(packed_ok);
    REQUIRE(payload_ok);
}
