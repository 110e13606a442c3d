// SPDX-License-Identifier: Apache-2.0
//
// Hierarchical semantic aggregation for text: multi-scale phrase extraction
// over sliding windows, word-to-phrase attention per scale, learnable fusion
// of the per-scale contexts, and mean pooling into a single query vector.

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kdc/rng.hpp"
#include "kdc/tensor.hpp"

namespace kdc {

struct WordSequence {
    Tensor features; // [L x D], L >= 1
};

struct PhraseSet {
    int scale = 0;
    Tensor features; // [N x D], N = max(1, L - scale + 1)
};

struct HsaScaleProjections {
    Tensor wq, wk, wv; // [D x D] each
};

struct HsaParams {
    std::vector<int> scales;                      // window lengths, each >= 1
    int heads = 4;                                // must divide D
    std::vector<HsaScaleProjections> projections; // parallel to scales
    std::vector<Tensor> fusion_weights;           // one scalar per scale
    Tensor ln_gain, ln_bias;                      // [D]

    static HsaParams init(std::size_t dim, std::vector<int> scales, int heads, Rng& rng);
    std::size_t dim() const;
    std::size_t scale_index(int scale) const; // contract error if unconfigured
    void collect_params(const std::string& prefix,
                        std::vector<std::pair<std::string, Tensor>>& out) const;
};

// One phrase per stride-1 window of `scale` tokens: multi-head self-attention
// restricted to the window, then average pooling of the window outputs. A
// scale longer than the sequence collapses to a single full-sequence window.
PhraseSet extract_phrases(const WordSequence& words, int scale, const HsaParams& params);

// Context vector for one word: attention over the scale's phrases with
// temperature sqrt(D), then the convex combination of phrase vectors.
Tensor scale_context(const Tensor& word, const PhraseSet& phrases);

// LayerNorm(word + sum_m beta_m * context_m) with the module's gain/bias.
Tensor fuse_scales(const Tensor& word, const std::map<int, Tensor>& contexts,
                   const HsaParams& params);

// Full encoder: phrases for every scale, per-word context + fusion, mean pool.
Tensor encode_query(const WordSequence& words, const HsaParams& params);

} // namespace kdc
