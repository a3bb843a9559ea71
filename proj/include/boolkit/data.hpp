#ifndef BOOLKIT_DATA_HPP
#define BOOLKIT_DATA_HPP

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "boolkit/corpus.hpp"
#include "boolkit/tensor.hpp"

namespace boolkit {

// ---------------------------------------------------------------------------
// Synthetic regression / classification data for the MLP teachers
// ---------------------------------------------------------------------------

struct VectorDataset {
    DenseMatrix inputs;    // size x in_dim
    DenseMatrix targets;   // size x out_dim (one-hot rows for classification)
    std::vector<int> labels;  // classification only
};

/// y = A x + noise with a seed-determined A. The same (seed, size) always
/// produces identical bytes.
inline VectorDataset make_regression(std::uint64_t seed, std::size_t size,
                                     std::size_t in_dim = 8, std::size_t out_dim = 4,
                                     double noise = 0.05) {
    detail::check(size > 0, "make_regression: size must be positive");
    std::mt19937_64 rng(seed);
    const DenseMatrix A = gaussian(out_dim, in_dim, rng);
    VectorDataset ds;
    ds.inputs = gaussian(size, in_dim, rng);
    ds.targets = matmul_dense(ds.inputs, A);
    std::normal_distribution<double> eps(0.0, noise);
    for (double& v : ds.targets.data) v += eps(rng);
    return ds;
}

inline VectorDataset make_classification(std::uint64_t seed, std::size_t size,
                                         std::size_t in_dim = 8, std::size_t classes = 4) {
    detail::check(size > 0, "make_classification: size must be positive");
    std::mt19937_64 rng(seed);
    const DenseMatrix A = gaussian(classes, in_dim, rng);
    VectorDataset ds;
    ds.inputs = gaussian(size, in_dim, rng);
    const DenseMatrix scores = matmul_dense(ds.inputs, A);
    ds.targets = DenseMatrix(size, classes);
    ds.labels.resize(size);
    for (std::size_t r = 0; r < size; ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c)
            if (scores.at(r, c) > scores.at(r, best)) best = c;
        ds.labels[r] = int(best);
        ds.targets.at(r, best) = 1.0;
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Character-level language-modelling data over the embedded corpus
// ---------------------------------------------------------------------------

struct CharLmData {
    std::vector<int> tokens;           // corpus as token ids
    std::vector<unsigned char> vocab;  // id -> byte, sorted ascending
    std::size_t context = 64;

    std::size_t vocab_size() const { return vocab.size(); }
};

/// Tokenize the embedded corpus with a byte-level vocabulary (distinct bytes,
/// sorted). Vocabulary size is bounded by 256.
inline CharLmData make_char_lm(std::size_t context = 64) {
    detail::check(context >= 2, "make_char_lm: context too small");
    const std::string text = kCorpus;
    bool present[256] = {};
    for (unsigned char ch : text) present[ch] = true;

    CharLmData data;
    data.context = context;
    int id_of[256];
    std::memset(id_of, -1, sizeof(id_of));
    for (int b = 0; b < 256; ++b)
        if (present[b]) {
            id_of[b] = int(data.vocab.size());
            data.vocab.push_back((unsigned char)b);
        }
    data.tokens.reserve(text.size());
    for (unsigned char ch : text) data.tokens.push_back(id_of[ch]);
    detail::check(data.tokens.size() > context + 1, "make_char_lm: corpus too short");
    return data;
}

/// One training batch of token windows: inputs are positions [s, s+L) and
/// targets are shifted by one.
struct TokenBatch {
    std::size_t batch = 0;
    std::size_t length = 0;
    std::vector<int> input;   // batch * length, row-major
    std::vector<int> target;  // batch * length
};

/// Deterministic window starts over the token stream. Stride < context packs
/// more sequences out of a small corpus.
inline std::vector<std::size_t> window_starts(const CharLmData& data, std::size_t stride) {
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + data.context + 1 <= data.tokens.size(); s += stride)
        starts.push_back(s);
    return starts;
}

inline TokenBatch gather_windows(const CharLmData& data,
                                 const std::vector<std::size_t>& starts) {
    TokenBatch b;
    b.batch = starts.size();
    b.length = data.context;
    b.input.reserve(b.batch * b.length);
    b.target.reserve(b.batch * b.length);
    for (std::size_t s : starts) {
        for (std::size_t t = 0; t < data.context; ++t) {
            b.input.push_back(data.tokens[s + t]);
            b.target.push_back(data.tokens[s + t + 1]);
        }
    }
    return b;
}

/// Fixed train/validation split of window starts: the tail fraction of the
/// token stream is validation.
struct LmSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

inline LmSplit split_windows(const CharLmData& data, std::size_t stride,
                             double val_fraction = 0.1) {
    const std::vector<std::size_t> all = window_starts(data, stride);
    detail::check(all.size() >= 4, "split_windows: not enough windows");
    const std::size_t boundary_token =
        std::size_t(double(data.tokens.size()) * (1.0 - val_fraction));
    LmSplit split;
    for (std::size_t s : all) {
        if (s + data.context + 1 <= boundary_token) split.train.push_back(s);
        else split.val.push_back(s);
    }
    detail::check(!split.train.empty() && !split.val.empty(),
                  "split_windows: degenerate split");
    return split;
}

}  // namespace boolkit

#endif
