#ifndef BOOLKIT_DISTILL_HPP
#define BOOLKIT_DISTILL_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "boolkit/tensor.hpp"

// Knowledge-distillation losses: a temperature softmax, a menu of logit
// divergences D(p_teacher || p_student) with analytic gradients w.r.t. the
// student logits, and the squared-L2 intermediate-state loss.

namespace boolkit {

enum class Divergence { ForwardKL, ReverseKL, SymmetricKL, JS, TV };

inline Divergence divergence_from_string(const std::string& s) {
    if (s == "forward_kl") return Divergence::ForwardKL;
    if (s == "reverse_kl") return Divergence::ReverseKL;
    if (s == "symmetric_kl") return Divergence::SymmetricKL;
    if (s == "js") return Divergence::JS;
    if (s == "tv") return Divergence::TV;
    throw std::invalid_argument("unknown divergence: " + s);
}

inline const char* divergence_name(Divergence d) {
    switch (d) {
        case Divergence::ForwardKL: return "forward_kl";
        case Divergence::ReverseKL: return "reverse_kl";
        case Divergence::SymmetricKL: return "symmetric_kl";
        case Divergence::JS: return "js";
        case Divergence::TV: return "tv";
    }
    return "?";
}

struct KdConfig {
    double tau = 1.0;
    double gamma = 10.0;
    Divergence divergence = Divergence::ForwardKL;
};

/// Max-subtracted softmax at temperature tau.
inline std::vector<double> softmax_tau(std::span<const double> logits, double tau) {
    detail::check(tau > 0.0, "softmax_tau: tau must be positive");
    detail::check(!logits.empty(), "softmax_tau: empty logits");
    double mx = logits[0];
    for (double v : logits) {
        detail::check(std::isfinite(v), "softmax_tau: non-finite logit");
        if (v > mx) mx = v;
    }
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp((logits[i] - mx) / tau);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

/// Log-softmax companion, used to keep divergences finite when probabilities
/// underflow.
inline std::vector<double> log_softmax_tau(std::span<const double> logits, double tau) {
    detail::check(tau > 0.0, "log_softmax_tau: tau must be positive");
    double mx = logits[0];
    for (double v : logits) if (v > mx) mx = v;
    double sum = 0.0;
    for (double v : logits) sum += std::exp((v - mx) / tau);
    const double lse = std::log(sum);
    std::vector<double> lp(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) lp[i] = (logits[i] - mx) / tau - lse;
    return lp;
}

namespace detail {

/// Divergence of one position and its gradient w.r.t. the student logits.
inline double divergence_row(Divergence d, double tau,
                             std::span<const double> p, std::span<const double> lp,
                             std::span<const double> q, std::span<const double> lq,
                             std::span<double> grad) {
    const std::size_t n = p.size();
    const double fkl = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (p[i] > 0.0) s += p[i] * (lp[i] - lq[i]);
        return s;
    }();
    const double rkl = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (q[i] > 0.0) s += q[i] * (lq[i] - lp[i]);
        return s;
    }();

    switch (d) {
        case Divergence::ForwardKL: {
            for (std::size_t i = 0; i < n; ++i) grad[i] = (q[i] - p[i]) / tau;
            return fkl;
        }
        case Divergence::ReverseKL: {
            for (std::size_t i = 0; i < n; ++i)
                grad[i] = q[i] > 0.0 ? q[i] / tau * ((lq[i] - lp[i]) - rkl) : 0.0;
            return rkl;
        }
        case Divergence::SymmetricKL: {
            for (std::size_t i = 0; i < n; ++i) {
                grad[i] = (q[i] - p[i]) / tau;
                if (q[i] > 0.0) grad[i] += q[i] / tau * ((lq[i] - lp[i]) - rkl);
            }
            return fkl + rkl;
        }
        case Divergence::JS: {
            double loss = 0.0;
            double qg = 0.0;  // sum_k q_k g_k with g_k = 0.5 ln(q_k/m_k)
            std::vector<double> g(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double m = 0.5 * (p[i] + q[i]);
                if (p[i] > 0.0) loss += 0.5 * p[i] * std::log(p[i] / m);
                if (q[i] > 0.0) {
                    loss += 0.5 * q[i] * std::log(q[i] / m);
                    g[i] = 0.5 * std::log(q[i] / m);
                    qg += q[i] * g[i];
                }
            }
            for (std::size_t i = 0; i < n; ++i) grad[i] = q[i] / tau * (g[i] - qg);
            return loss;
        }
        case Divergence::TV: {
            double loss = 0.0;
            double qg = 0.0;
            std::vector<double> g(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                loss += 0.5 * std::fabs(p[i] - q[i]);
                g[i] = q[i] > p[i] ? 0.5 : (q[i] < p[i] ? -0.5 : 0.0);
                qg += q[i] * g[i];
            }
            for (std::size_t i = 0; i < n; ++i) grad[i] = q[i] / tau * (g[i] - qg);
            return loss;
        }
    }
    return 0.0;
}

}  // namespace detail

struct LogitsLoss {
    double loss = 0.0;
    DenseMatrix grad;  // w.r.t. student logits, same shape
};

/// Mean over rows (token positions) of D(p_teacher || p_student).
inline LogitsLoss kd_logits_loss(const DenseMatrix& teacher_logits,
                                 const DenseMatrix& student_logits, const KdConfig& cfg) {
    detail::check(teacher_logits.same_shape(student_logits), "kd_logits_loss: shape mismatch");
    detail::check(teacher_logits.rows > 0, "kd_logits_loss: empty input");
    const std::size_t L = teacher_logits.rows;
    const std::size_t n = teacher_logits.cols;

    LogitsLoss out;
    out.grad = DenseMatrix(L, n);
    std::vector<double> grad_row(n);
    for (std::size_t r = 0; r < L; ++r) {
        std::span<const double> tl(teacher_logits.row(r), n);
        std::span<const double> sl(student_logits.row(r), n);
        const auto p = softmax_tau(tl, cfg.tau);
        const auto lp = log_softmax_tau(tl, cfg.tau);
        const auto q = softmax_tau(sl, cfg.tau);
        const auto lq = log_softmax_tau(sl, cfg.tau);
        out.loss += detail::divergence_row(cfg.divergence, cfg.tau, p, lp, q, lq, grad_row);
        for (std::size_t i = 0; i < n; ++i) out.grad.at(r, i) = grad_row[i] / double(L);
    }
    out.loss /= double(L);
    return out;
}

struct HiddenLoss {
    double loss = 0.0;
    std::vector<DenseMatrix> grads;  // w.r.t. each student state
};

/// (1/L) sum over states and positions of ||teacher - student||^2, where L is
/// the common number of positions per state.
inline HiddenLoss kd_hidden_loss(const std::vector<DenseMatrix>& teacher_states,
                                 const std::vector<DenseMatrix>& student_states) {
    detail::check(teacher_states.size() == student_states.size(),
                  "kd_hidden_loss: state count mismatch");
    detail::check(!teacher_states.empty(), "kd_hidden_loss: no states selected");
    const std::size_t L = teacher_states.front().rows;

    HiddenLoss out;
    out.grads.reserve(student_states.size());
    for (std::size_t s = 0; s < teacher_states.size(); ++s) {
        const DenseMatrix& T = teacher_states[s];
        const DenseMatrix& S = student_states[s];
        detail::check(T.same_shape(S), "kd_hidden_loss: state shape mismatch");
        detail::check(T.rows == L, "kd_hidden_loss: inconsistent position count");
        DenseMatrix g(S.rows, S.cols);
        for (std::size_t i = 0; i < S.size(); ++i) {
            const double diff = T.data[i] - S.data[i];
            out.loss += diff * diff;
            g.data[i] = 2.0 * (S.data[i] - T.data[i]) / double(L);
        }
        out.grads.push_back(std::move(g));
    }
    out.loss /= double(L);
    return out;
}

}  // namespace boolkit

#endif
