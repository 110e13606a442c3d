// SPDX-License-Identifier: Apache-2.0
//
// Dynamic temporal attention for video frames: scaled dot-product attention
// augmented with a learnable relative-position bias (per clipped offset) and
// additive window masks, plus purification normalization, which subtracts
// self-similarity-weighted redundancy before layer normalization.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kdc/rng.hpp"
#include "kdc/tensor.hpp"

namespace kdc {

struct FrameSequence {
    Tensor features; // [K x D], K >= 1
};

struct DtaParams {
    int heads = 4;
    int max_offset = 30;            // bias table covers offsets in [-max_offset, max_offset]
    std::vector<int> radii = {10, 20};
    Tensor wq, wk, wv, wo;          // [D x D] each
    Tensor bias_table;              // [2*max_offset + 1], shared across heads

    static DtaParams init(std::size_t dim, int heads, int max_offset,
                          std::vector<int> radii, Rng& rng);
    std::size_t dim() const;
    void collect_params(const std::string& prefix,
                        std::vector<std::pair<std::string, Tensor>>& out) const;
};

struct PnParams {
    double lambda = 0.1; // redundancy scale, >= 0
    Tensor gain, bias;   // [D]

    static PnParams init(std::size_t dim, double lambda);
    void collect_params(const std::string& prefix,
                        std::vector<std::pair<std::string, Tensor>>& out) const;
};

struct FfnParams {
    Tensor w1, b1; // [D x 2D], [2D]
    Tensor w2, b2; // [2D x D], [D]

    static FfnParams init(std::size_t dim, Rng& rng);
    void collect_params(const std::string& prefix,
                        std::vector<std::pair<std::string, Tensor>>& out) const;
};

// One encoder block: attention -> residual -> PN -> feed-forward -> residual -> PN.
struct DtaEncoderParams {
    DtaParams attention;
    PnParams pn_attention;
    PnParams pn_ffn;
    FfnParams ffn;

    static DtaEncoderParams init(std::size_t dim, int heads, int max_offset,
                                 std::vector<int> radii, double lambda, Rng& rng);
    void collect_params(const std::string& prefix,
                        std::vector<std::pair<std::string, Tensor>>& out) const;
};

// Bias for one (i, j) pair: table[clip(j - i, -max_offset, max_offset) + max_offset].
double relative_bias(int i, int j, const DtaParams& params);

// Additive mask: 0 inside |j - i| <= radius, -1e9 outside. The finite sentinel
// keeps softmax free of NaN while driving masked weights to numeric zero.
Tensor window_mask(int frames, int radius);

// Learnable [K x K] bias matrix assembled from the offset table.
Tensor relative_bias_matrix(const Tensor& table, int frames, int max_offset);

// Single-radius attention pass: per head, scores = qk/sqrt(d_head) + bias + mask,
// row softmax, value mix; heads concatenated then output-projected.
Tensor dta_attention(const FrameSequence& frames, const DtaParams& params, int radius);

// Multi-radius variant: one pass per configured radius (clamped to K-1),
// outputs averaged.
Tensor dta_attention(const FrameSequence& frames, const DtaParams& params);

// LayerNorm(x - lambda * S x) with S = row-softmax of the cosine self-similarity
// of the L2-normalized rows.
Tensor purification_norm(const Tensor& x, const PnParams& params);

struct VideoEncoding {
    Tensor frame_level; // [K x D]
    Tensor video_level; // [D], mean pooled
};

VideoEncoding encode_video(const FrameSequence& frames, const DtaEncoderParams& params);

} // namespace kdc
