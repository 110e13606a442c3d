// SPDX-License-Identifier: Apache-2.0

#include "kdc/hsa.hpp"

#include <algorithm>
#include <cmath>

namespace kdc {

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> v(rows * cols);
    for (double& x : v) {
        x = rng.uniform(-limit, limit);
    }
    return Tensor::param({rows, cols}, std::move(v));
}

// Multi-head self-attention over the rows of pre-projected q/k/v, restricted
// to rows [w0, w1). Heads use temperature sqrt(d_head). No output projection:
// the concatenated heads are the phrase token features.
Tensor window_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        std::size_t w0, std::size_t w1, int heads) {
    const std::size_t d = q.cols();
    const std::size_t dh = d / static_cast<std::size_t>(heads);
    Tensor qw = slice_rows(q, w0, w1);
    Tensor kw = slice_rows(k, w0, w1);
    Tensor vw = slice_rows(v, w0, w1);
    std::vector<Tensor> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        const std::size_t c0 = static_cast<std::size_t>(h) * dh;
        Tensor qh = slice_cols(qw, c0, c0 + dh);
        Tensor kh = slice_cols(kw, c0, c0 + dh);
        Tensor vh = slice_cols(vw, c0, c0 + dh);
        Tensor scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(double(dh)));
        Tensor weights = softmax(scores, 1);
        outs.push_back(matmul(weights, vh));
    }
    return concat_cols(outs);
}

} // namespace

HsaParams HsaParams::init(std::size_t dim, std::vector<int> scales, int heads, Rng& rng) {
    if (scales.empty()) {
        throw config_error("hsa: scale set must not be empty");
    }
    for (int m : scales) {
        if (m < 1) {
            throw config_error("hsa: scales must be >= 1, got " + std::to_string(m));
        }
    }
    if (heads < 1 || dim % static_cast<std::size_t>(heads) != 0) {
        throw config_error("hsa: head count " + std::to_string(heads) +
                           " must divide hidden dim " + std::to_string(dim));
    }
    HsaParams p;
    p.scales = std::move(scales);
    p.heads = heads;
    const double beta0 = 1.0 / static_cast<double>(p.scales.size());
    for (std::size_t i = 0; i < p.scales.size(); ++i) {
        p.projections.push_back({glorot(dim, dim, rng), glorot(dim, dim, rng),
                                 glorot(dim, dim, rng)});
        p.fusion_weights.push_back(Tensor::param({1}, {beta0}));
    }
    p.ln_gain = Tensor::param({dim}, std::vector<double>(dim, 1.0));
    p.ln_bias = Tensor::param({dim}, std::vector<double>(dim, 0.0));
    return p;
}

std::size_t HsaParams::dim() const { return ln_gain.size(); }

std::size_t HsaParams::scale_index(int scale) const {
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (scales[i] == scale) {
            return i;
        }
    }
    throw contract_error("hsa: scale " + std::to_string(scale) + " is not configured");
}

void HsaParams::collect_params(const std::string& prefix,
                               std::vector<std::pair<std::string, Tensor>>& out) const {
    for (std::size_t i = 0; i < scales.size(); ++i) {
        const std::string s = prefix + ".scale" + std::to_string(scales[i]);
        out.emplace_back(s + ".wq", projections[i].wq);
        out.emplace_back(s + ".wk", projections[i].wk);
        out.emplace_back(s + ".wv", projections[i].wv);
        out.emplace_back(s + ".beta", fusion_weights[i]);
    }
    out.emplace_back(prefix + ".ln_gain", ln_gain);
    out.emplace_back(prefix + ".ln_bias", ln_bias);
}

PhraseSet extract_phrases(const WordSequence& words, int scale, const HsaParams& params) {
    if (scale < 1) {
        throw contract_error("extract_phrases: scale must be >= 1");
    }
    const std::size_t len = words.features.rows();
    const std::size_t idx = params.scale_index(scale);
    const auto& proj = params.projections[idx];

    // project the whole sequence once; windows reuse the rows
    Tensor q = matmul(words.features, proj.wq);
    Tensor k = matmul(words.features, proj.wk);
    Tensor v = matmul(words.features, proj.wv);

    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(scale), len);
    const std::size_t count = len - w + 1;
    std::vector<Tensor> phrases;
    phrases.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        Tensor attended = window_attention(q, k, v, s, s + w, params.heads);
        phrases.push_back(mean_rows(attended));
    }
    return PhraseSet{scale, stack_rows(phrases)};
}

Tensor scale_context(const Tensor& word, const PhraseSet& phrases) {
    if (!phrases.features.defined() || phrases.features.rows() == 0) {
        throw contract_error("scale_context: empty phrase set");
    }
    const double d = static_cast<double>(word.size());
    Tensor logits = scale(matvec(phrases.features, word), 1.0 / std::sqrt(d));
    Tensor weights = softmax(logits, 0);
    return tmatvec(phrases.features, weights);
}

Tensor fuse_scales(const Tensor& word, const std::map<int, Tensor>& contexts,
                   const HsaParams& params) {
    Tensor acc = word;
    for (std::size_t i = 0; i < params.scales.size(); ++i) {
        auto it = contexts.find(params.scales[i]);
        if (it == contexts.end()) {
            throw contract_error("fuse_scales: missing context for scale " +
                                 std::to_string(params.scales[i]));
        }
        acc = add(acc, scalar_mul(it->second, params.fusion_weights[i]));
    }
    return layer_norm(acc, params.ln_gain, params.ln_bias);
}

Tensor encode_query(const WordSequence& words, const HsaParams& params) {
    const std::size_t len = words.features.rows();
    if (len < 1) {
        throw dimension_error("encode_query: empty word sequence");
    }
    std::vector<PhraseSet> phrase_sets;
    phrase_sets.reserve(params.scales.size());
    for (int m : params.scales) {
        phrase_sets.push_back(extract_phrases(words, m, params));
    }
    std::vector<Tensor> enhanced;
    enhanced.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
        Tensor word = row_of(words.features, i);
        std::map<int, Tensor> contexts;
        for (const auto& ps : phrase_sets) {
            contexts.emplace(ps.scale, scale_context(word, ps));
        }
        enhanced.push_back(fuse_scales(word, contexts, params));
    }
    return mean_rows(stack_rows(enhanced));
}

} // namespace kdc
