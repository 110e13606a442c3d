// SPDX-License-Identifier: Apache-2.0

#include "kdc/dta.hpp"

#include <algorithm>
#include <cmath>

namespace kdc {

namespace {

constexpr double kMaskSentinel = -1e9;

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> v(rows * cols);
    for (double& x : v) {
        x = rng.uniform(-limit, limit);
    }
    return Tensor::param({rows, cols}, std::move(v));
}

} // namespace

DtaParams DtaParams::init(std::size_t dim, int heads, int max_offset,
                          std::vector<int> radii, Rng& rng) {
    if (heads < 1 || dim % static_cast<std::size_t>(heads) != 0) {
        throw config_error("dta: head count " + std::to_string(heads) +
                           " must divide hidden dim " + std::to_string(dim));
    }
    if (max_offset < 1) {
        throw config_error("dta: max relative offset must be >= 1");
    }
    if (radii.empty()) {
        throw config_error("dta: radius set must not be empty");
    }
    for (int r : radii) {
        if (r < 0) {
            throw config_error("dta: window radius must be >= 0, got " + std::to_string(r));
        }
    }
    DtaParams p;
    p.heads = heads;
    p.max_offset = max_offset;
    p.radii = std::move(radii);
    p.wq = glorot(dim, dim, rng);
    p.wk = glorot(dim, dim, rng);
    p.wv = glorot(dim, dim, rng);
    p.wo = glorot(dim, dim, rng);
    p.bias_table = Tensor::param({static_cast<std::size_t>(2 * max_offset + 1)},
                                 std::vector<double>(2 * max_offset + 1, 0.0));
    return p;
}

std::size_t DtaParams::dim() const { return wq.rows(); }

void DtaParams::collect_params(const std::string& prefix,
                               std::vector<std::pair<std::string, Tensor>>& out) const {
    out.emplace_back(prefix + ".wq", wq);
    out.emplace_back(prefix + ".wk", wk);
    out.emplace_back(prefix + ".wv", wv);
    out.emplace_back(prefix + ".wo", wo);
    out.emplace_back(prefix + ".bias_table", bias_table);
}

PnParams PnParams::init(std::size_t dim, double lambda) {
    if (lambda < 0.0) {
        throw config_error("pn: lambda must be >= 0");
    }
    PnParams p;
    p.lambda = lambda;
    p.gain = Tensor::param({dim}, std::vector<double>(dim, 1.0));
    p.bias = Tensor::param({dim}, std::vector<double>(dim, 0.0));
    return p;
}

void PnParams::collect_params(const std::string& prefix,
                              std::vector<std::pair<std::string, Tensor>>& out) const {
    out.emplace_back(prefix + ".gain", gain);
    out.emplace_back(prefix + ".bias", bias);
}

FfnParams FfnParams::init(std::size_t dim, Rng& rng) {
    FfnParams p;
    p.w1 = glorot(dim, 2 * dim, rng);
    p.b1 = Tensor::param({2 * dim}, std::vector<double>(2 * dim, 0.0));
    p.w2 = glorot(2 * dim, dim, rng);
    p.b2 = Tensor::param({dim}, std::vector<double>(dim, 0.0));
    return p;
}

void FfnParams::collect_params(const std::string& prefix,
                               std::vector<std::pair<std::string, Tensor>>& out) const {
    out.emplace_back(prefix + ".w1", w1);
    out.emplace_back(prefix + ".b1", b1);
    out.emplace_back(prefix + ".w2", w2);
    out.emplace_back(prefix + ".b2", b2);
}

DtaEncoderParams DtaEncoderParams::init(std::size_t dim, int heads, int max_offset,
                                        std::vector<int> radii, double lambda, Rng& rng) {
    DtaEncoderParams p;
    p.attention = DtaParams::init(dim, heads, max_offset, std::move(radii), rng);
    p.pn_attention = PnParams::init(dim, lambda);
    p.pn_ffn = PnParams::init(dim, lambda);
    p.ffn = FfnParams::init(dim, rng);
    return p;
}

void DtaEncoderParams::collect_params(const std::string& prefix,
                                      std::vector<std::pair<std::string, Tensor>>& out) const {
    attention.collect_params(prefix + ".attn", out);
    pn_attention.collect_params(prefix + ".pn_attn", out);
    pn_ffn.collect_params(prefix + ".pn_ffn", out);
    ffn.collect_params(prefix + ".ffn", out);
}

double relative_bias(int i, int j, const DtaParams& params) {
    const int offset = std::clamp(j - i, -params.max_offset, params.max_offset);
    return params.bias_table.at(static_cast<std::size_t>(offset + params.max_offset));
}

Tensor window_mask(int frames, int radius) {
    if (frames < 1) {
        throw dimension_error("window_mask: frame count must be >= 1");
    }
    if (radius < 0) {
        throw domain_error("window_mask: radius must be >= 0");
    }
    const std::size_t k = static_cast<std::size_t>(frames);
    std::vector<double> m(k * k, kMaskSentinel);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t lo = i > static_cast<std::size_t>(radius) ? i - radius : 0;
        const std::size_t hi = std::min(k - 1, i + static_cast<std::size_t>(radius));
        for (std::size_t j = lo; j <= hi; ++j) {
            m[i * k + j] = 0.0;
        }
    }
    return Tensor::from({k, k}, std::move(m));
}

Tensor relative_bias_matrix(const Tensor& table, int frames, int max_offset) {
    const std::size_t k = static_cast<std::size_t>(frames);
    std::vector<std::size_t> idx(k * k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const int off = std::clamp(static_cast<int>(j) - static_cast<int>(i),
                                       -max_offset, max_offset);
            idx[i * k + j] = static_cast<std::size_t>(off + max_offset);
        }
    }
    return reshape(gather(table, std::move(idx)), {k, k});
}

Tensor dta_attention(const FrameSequence& frames, const DtaParams& params, int radius) {
    const std::size_t k = frames.features.rows();
    const std::size_t d = frames.features.cols();
    const std::size_t dh = d / static_cast<std::size_t>(params.heads);

    Tensor q = matmul(frames.features, params.wq);
    Tensor key = matmul(frames.features, params.wk);
    Tensor v = matmul(frames.features, params.wv);
    Tensor bias = relative_bias_matrix(params.bias_table, static_cast<int>(k),
                                       params.max_offset);
    Tensor mask = window_mask(static_cast<int>(k), radius);
    Tensor additive = add(bias, mask);

    std::vector<Tensor> heads;
    heads.reserve(static_cast<std::size_t>(params.heads));
    for (int h = 0; h < params.heads; ++h) {
        const std::size_t c0 = static_cast<std::size_t>(h) * dh;
        Tensor qh = slice_cols(q, c0, c0 + dh);
        Tensor kh = slice_cols(key, c0, c0 + dh);
        Tensor vh = slice_cols(v, c0, c0 + dh);
        Tensor scores = add(scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(double(dh))),
                            additive);
        heads.push_back(matmul(softmax(scores, 1), vh));
    }
    return matmul(concat_cols(heads), params.wo);
}

Tensor dta_attention(const FrameSequence& frames, const DtaParams& params) {
    const int k = static_cast<int>(frames.features.rows());
    Tensor acc;
    for (int radius : params.radii) {
        Tensor pass = dta_attention(frames, params, std::min(radius, k - 1));
        acc = acc.defined() ? add(acc, pass) : pass;
    }
    return scale(acc, 1.0 / static_cast<double>(params.radii.size()));
}

Tensor purification_norm(const Tensor& x, const PnParams& params) {
    Tensor normalized = l2_normalize_rows(x);
    Tensor similarity = softmax(matmul(normalized, transpose(normalized)), 1);
    Tensor purified = sub(x, scale(matmul(similarity, x), params.lambda));
    return layer_norm(purified, params.gain, params.bias);
}

VideoEncoding encode_video(const FrameSequence& frames, const DtaEncoderParams& params) {
    if (frames.features.rows() < 1) {
        throw dimension_error("encode_video: empty frame sequence");
    }
    Tensor attended = add(frames.features, dta_attention(frames, params.attention));
    Tensor hidden = purification_norm(attended, params.pn_attention);

    Tensor expanded = gelu(add_row_broadcast(matmul(hidden, params.ffn.w1), params.ffn.b1));
    Tensor projected = add_row_broadcast(matmul(expanded, params.ffn.w2), params.ffn.b2);
    Tensor frame_level = purification_norm(add(hidden, projected), params.pn_ffn);
    return VideoEncoding{frame_level, mean_rows(frame_level)};
}

} // namespace kdc
