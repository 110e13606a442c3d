// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "kdc/dta.hpp"
#include "kdc/gradcheck.hpp"
#include "kdc/rng.hpp"

using namespace kdc;

namespace {

using Mat = std::vector<double>;

Mat mul(const Mat& a, const Mat& b, std::size_t m, std::size_t k, std::size_t n) {
    Mat c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
            c[i * n + j] = s;
        }
    return c;
}

std::vector<double> softmax_row(std::vector<double> x) {
    double mx = x[0];
    for (double v : x) mx = std::max(mx, v);
    double den = 0.0;
    for (double& v : x) {
        v = std::exp(v - mx);
        den += v;
    }
    for (double& v : x) v /= den;
    return x;
}

// Literal evaluation of one biased+masked attention pass.
Mat oracle_attention(const Mat& x, const Mat& wq, const Mat& wk, const Mat& wv,
                     const Mat& wo, const std::vector<double>& table, int max_offset,
                     std::size_t k, std::size_t d, int heads, int radius) {
    Mat q = mul(x, wq, k, d, d);
    Mat key = mul(x, wk, k, d, d);
    Mat v = mul(x, wv, k, d, d);
    const std::size_t dh = d / static_cast<std::size_t>(heads);
    Mat concat(k * d, 0.0);
    for (int h = 0; h < heads; ++h) {
        const std::size_t c0 = static_cast<std::size_t>(h) * dh;
        for (std::size_t i = 0; i < k; ++i) {
            std::vector<double> logits(k);
            for (std::size_t j = 0; j < k; ++j) {
                double s = 0.0;
                for (std::size_t t = 0; t < dh; ++t) {
                    s += q[i * d + c0 + t] * key[j * d + c0 + t];
                }
                s /= std::sqrt(static_cast<double>(dh));
                int off = static_cast<int>(j) - static_cast<int>(i);
                off = std::clamp(off, -max_offset, max_offset);
                s += table[static_cast<std::size_t>(off + max_offset)];
                const long dist = std::labs(static_cast<long>(j) - static_cast<long>(i));
                if (dist > radius) s += -1e9;
                logits[j] = s;
            }
            auto w = softmax_row(logits);
            double wsum = 0.0;
            for (double wv_ : w) wsum += wv_;
            REQUIRE(std::fabs(wsum - 1.0) < 1e-9);
            for (std::size_t j = 0; j < k; ++j) {
                for (std::size_t t = 0; t < dh; ++t) {
                    concat[i * d + c0 + t] += w[j] * v[j * d + c0 + t];
                }
            }
        }
    }
    return mul(concat, wo, k, d, d);
}

std::vector<double> oracle_ln_row(const double* x, const double* gain, const double* bias,
                                  std::size_t d) {
    double mean = 0.0;
    for (std::size_t t = 0; t < d; ++t) mean += x[t];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t t = 0; t < d; ++t) var += (x[t] - mean) * (x[t] - mean);
    var /= static_cast<double>(d);
    std::vector<double> out(d);
    for (std::size_t t = 0; t < d; ++t) {
        out[t] = gain[t] * (x[t] - mean) / std::sqrt(var + 1e-5) + bias[t];
    }
    return out;
}

Mat oracle_pn(const Mat& x, double lambda, const std::vector<double>& gain,
              const std::vector<double>& bias, std::size_t k, std::size_t d) {
    Mat xhat(k * d, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double n = 0.0;
        for (std::size_t t = 0; t < d; ++t) n += x[i * d + t] * x[i * d + t];
        n = std::sqrt(n);
        if (n >= 1e-12) {
            for (std::size_t t = 0; t < d; ++t) xhat[i * d + t] = x[i * d + t] / n;
        }
    }
    Mat purified(k * d);
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> logits(k);
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < d; ++t) s += xhat[i * d + t] * xhat[j * d + t];
            logits[j] = s;
        }
        auto w = softmax_row(logits);
        double wsum = 0.0;
        for (double v : w) wsum += v;
        REQUIRE(std::fabs(wsum - 1.0) < 1e-9);
        for (std::size_t t = 0; t < d; ++t) {
            double sx = 0.0;
            for (std::size_t j = 0; j < k; ++j) sx += w[j] * x[j * d + t];
            purified[i * d + t] = x[i * d + t] - lambda * sx;
        }
    }
    Mat out(k * d);
    for (std::size_t i = 0; i < k; ++i) {
        auto row = oracle_ln_row(purified.data() + i * d, gain.data(), bias.data(), d);
        std::copy(row.begin(), row.end(), out.begin() + i * d);
    }
    return out;
}

double oracle_gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

struct Setup {
    std::size_t k, d;
    DtaEncoderParams params;
    FrameSequence frames;
    Mat x, wq, wk, wv, wo;
    std::vector<double> table;
};

Setup make_setup(std::size_t k, std::size_t d, int heads, int max_offset,
                 std::vector<int> radii, double lambda, std::uint64_t seed,
                 bool random_bias = true) {
    Rng rng(seed);
    Setup s{k, d, DtaEncoderParams::init(d, heads, max_offset, radii, lambda, rng),
            {}, {}, {}, {}, {}, {}, {}};
    if (random_bias) {
        std::vector<double> t(2 * max_offset + 1);
        for (double& v : t) v = rng.uniform(-0.5, 0.5);
        s.params.attention.bias_table = Tensor::param({t.size()}, t);
    }
    std::vector<double> x(k * d);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    s.x = x;
    s.frames.features = Tensor::from({k, d}, std::move(x));
    auto grab = [](const Tensor& t) { return Mat(t.values().begin(), t.values().end()); };
    s.wq = grab(s.params.attention.wq);
    s.wk = grab(s.params.attention.wk);
    s.wv = grab(s.params.attention.wv);
    s.wo = grab(s.params.attention.wo);
    s.table = grab(s.params.attention.bias_table);
    return s;
}

} // namespace

TEST_SUITE_BEGIN("dta");

TEST_CASE("relative bias depends only on the clipped offset") {
    Rng rng(61);
    DtaParams p = DtaParams::init(8, 2, 4, {2}, rng);
    std::vector<double> t(9);
    for (std::size_t i = 0; i < 9; ++i) t[i] = 0.1 * static_cast<double>(i);
    p.bias_table = Tensor::param({9}, t);

    for (int i : {0, 3, 7}) {
        CHECK(relative_bias(i, i, p) == t[4]); // center entry
    }
    for (int c : {1, 2, 5}) {
        CHECK(relative_bias(1, 3, p) == relative_bias(1 + c, 3 + c, p));
    }
    CHECK(relative_bias(0, 9, p) == relative_bias(0, 4, p)); // clipped beyond max offset
    CHECK(relative_bias(9, 0, p) == relative_bias(4, 0, p));
}

TEST_CASE("window mask patterns") {
    Tensor saturated = window_mask(4, 3);
    for (double v : saturated.values()) {
        CHECK(v == 0.0);
    }
    Tensor self_only = window_mask(3, 0);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(self_only.at(i, j) == (i == j ? 0.0 : -1e9));
        }
    }
    Tensor tri = window_mask(5, 1);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            const bool inside = std::labs(long(i) - long(j)) <= 1; // direct predicate
            CHECK(tri.at(i, j) == (inside ? 0.0 : -1e9));
        }
    }
}

TEST_CASE("single frame attention is the projected value") {
    auto s = make_setup(1, 8, 2, 3, {1}, 0.1, 62);
    Tensor out = dta_attention(s.frames, s.params.attention, 1);
    Mat expect = mul(mul(s.x, s.wv, 1, 8, 8), s.wo, 1, 8, 8);
    for (std::size_t t = 0; t < 8; ++t) {
        CHECK(out.values()[t] == doctest::Approx(expect[t]).epsilon(1e-12));
    }
}

TEST_CASE("zero bias and saturated window reduce to standard attention") {
    auto s = make_setup(5, 8, 2, 6, {10}, 0.1, 63, /*random_bias=*/false);
    Tensor out = dta_attention(s.frames, s.params.attention, 10);
    // reference standard attention: no bias, no mask
    Mat expect = oracle_attention(s.x, s.wq, s.wk, s.wv, s.wo,
                                  std::vector<double>(13, 0.0), 6, 5, 8, 2,
                                  /*radius=*/100);
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(std::fabs(out.values()[i] - expect[i]) < 1e-12);
    }
}

TEST_CASE("attention matches the per-pair oracle with bias and mask") {
    auto s = make_setup(4, 8, 1, 3, {1}, 0.1, 64);
    Tensor out = dta_attention(s.frames, s.params.attention, 1);
    Mat expect = oracle_attention(s.x, s.wq, s.wk, s.wv, s.wo, s.table, 3, 4, 8, 1, 1);
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(std::fabs(out.values()[i] - expect[i]) < 1e-10);
    }
}

TEST_CASE("attention weights vanish outside the radius and rows sum to one") {
    // with identity frames, identity value/output projections and one head the
    // attention output *is* the weight matrix, so the invariants are observable
    const std::size_t k = 6;
    Rng rng(65);
    DtaParams p = DtaParams::init(k, 1, 4, {1}, rng);
    std::vector<double> eye(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) eye[i * k + i] = 1.0;
    p.wv = Tensor::param({k, k}, eye);
    p.wo = Tensor::param({k, k}, eye);
    std::vector<double> t(9);
    for (double& v : t) v = rng.uniform(-0.3, 0.3);
    p.bias_table = Tensor::param({9}, t);

    FrameSequence frames{Tensor::from({k, k}, eye)};
    const int radius = 2;
    Tensor weights = dta_attention(frames, p, radius);
    for (std::size_t i = 0; i < k; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double w = weights.at(i, j);
            if (std::labs(long(j) - long(i)) > radius) {
                CHECK(w == 0.0); // sentinel drives exp to exact zero
            } else {
                CHECK(w > 0.0);
            }
            sum += w;
        }
        CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("purification norm with zero lambda equals layer norm") {
    Rng rng(66);
    std::vector<double> x(5 * 6);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    Tensor xt = Tensor::from({5, 6}, x);
    PnParams pn = PnParams::init(6, 0.0);
    Tensor a = purification_norm(xt, pn);
    Tensor b = layer_norm(xt, pn.gain, pn.bias);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::fabs(a.values()[i] - b.values()[i]) < 1e-12);
    }
}

TEST_CASE("purification norm on a single row") {
    std::vector<double> x{0.5, -1.0, 2.0};
    Tensor xt = Tensor::from({1, 3}, x);
    PnParams pn = PnParams::init(3, 0.3);
    Tensor out = purification_norm(xt, pn);
    // S = [[1]], so the input shrinks to (1 - lambda) x before normalization
    std::vector<double> shrunk(3);
    for (int t = 0; t < 3; ++t) shrunk[t] = 0.7 * x[t];
    std::vector<double> gain(3, 1.0), bias(3, 0.0);
    auto expect = oracle_ln_row(shrunk.data(), gain.data(), bias.data(), 3);
    for (int t = 0; t < 3; ++t) {
        CHECK(out.values()[t] == doctest::Approx(expect[t]).epsilon(1e-12));
    }
}

TEST_CASE("purification norm matches the direct formula") {
    Rng rng(67);
    std::vector<double> x(3 * 4);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    Tensor xt = Tensor::from({3, 4}, x);
    PnParams pn = PnParams::init(4, 0.1);
    Tensor out = purification_norm(xt, pn);
    std::vector<double> gain(4, 1.0), bias(4, 0.0);
    Mat expect = oracle_pn(x, 0.1, gain, bias, 3, 4);
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(std::fabs(out.values()[i] - expect[i]) < 1e-12);
    }
}

TEST_CASE("zeroed value projection reduces the block to the feed-forward path") {
    auto s = make_setup(4, 8, 2, 3, {2}, 0.1, 68);
    s.params.attention.wv = Tensor::param({8, 8}, std::vector<double>(64, 0.0));
    VideoEncoding enc = encode_video(s.frames, s.params);

    Tensor hidden = purification_norm(s.frames.features, s.params.pn_attention);
    Tensor ff = add_row_broadcast(
        matmul(gelu(add_row_broadcast(matmul(hidden, s.params.ffn.w1), s.params.ffn.b1)),
               s.params.ffn.w2),
        s.params.ffn.b2);
    Tensor expect = purification_norm(add(hidden, ff), s.params.pn_ffn);
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(enc.frame_level.values()[i] == expect.values()[i]);
    }
}

TEST_CASE("frame permutation changes the encoding") {
    auto s = make_setup(6, 8, 2, 4, {1}, 0.1, 69);
    VideoEncoding a = encode_video(s.frames, s.params);
    // swap first and last frames
    Mat x = s.x;
    for (std::size_t t = 0; t < 8; ++t) {
        std::swap(x[0 * 8 + t], x[5 * 8 + t]);
    }
    VideoEncoding b = encode_video(FrameSequence{Tensor::from({6, 8}, x)}, s.params);
    double diff = 0.0;
    for (std::size_t t = 0; t < 8; ++t) {
        diff = std::max(diff, std::fabs(a.video_level.values()[t] - b.video_level.values()[t]));
    }
    CHECK(diff > 1e-6);
}

TEST_CASE("encode_video matches the straight-line oracle") {
    auto s = make_setup(6, 8, 2, 3, {1, 2}, 0.1, 70);
    VideoEncoding enc = encode_video(s.frames, s.params);

    // multi-radius average, radii clamped to K-1
    Mat att(6 * 8, 0.0);
    for (int radius : {1, 2}) {
        Mat pass = oracle_attention(s.x, s.wq, s.wk, s.wv, s.wo, s.table, 3, 6, 8, 2,
                                    std::min(radius, 5));
        for (std::size_t i = 0; i < att.size(); ++i) att[i] += pass[i];
    }
    for (double& v : att) v /= 2.0;
    Mat h1(6 * 8);
    for (std::size_t i = 0; i < h1.size(); ++i) h1[i] = s.x[i] + att[i];
    auto grab = [](const Tensor& t) {
        return std::vector<double>(t.values().begin(), t.values().end());
    };
    Mat hidden = oracle_pn(h1, 0.1, grab(s.params.pn_attention.gain),
                           grab(s.params.pn_attention.bias), 6, 8);
    Mat w1 = grab(s.params.ffn.w1), b1 = grab(s.params.ffn.b1);
    Mat w2 = grab(s.params.ffn.w2), b2 = grab(s.params.ffn.b2);
    Mat mid = mul(hidden, w1, 6, 8, 16);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t t = 0; t < 16; ++t) {
            mid[i * 16 + t] = oracle_gelu(mid[i * 16 + t] + b1[t]);
        }
    }
    Mat ff = mul(mid, w2, 6, 16, 8);
    Mat h2(6 * 8);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t t = 0; t < 8; ++t) {
            h2[i * 8 + t] = hidden[i * 8 + t] + ff[i * 8 + t] + b2[t];
        }
    }
    Mat frame_level = oracle_pn(h2, 0.1, grab(s.params.pn_ffn.gain),
                                grab(s.params.pn_ffn.bias), 6, 8);
    for (std::size_t i = 0; i < frame_level.size(); ++i) {
        CHECK(std::fabs(enc.frame_level.values()[i] - frame_level[i]) < 1e-9);
    }
    for (std::size_t t = 0; t < 8; ++t) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 6; ++i) mean += frame_level[i * 8 + t];
        mean /= 6.0;
        CHECK(std::fabs(enc.video_level.values()[t] - mean) < 1e-9);
    }
}

TEST_CASE("all encoder parameters receive finite-difference-correct gradients") {
    auto s = make_setup(5, 8, 2, 3, {1, 2}, 0.1, 71);
    std::vector<std::pair<std::string, Tensor>> named;
    s.params.collect_params("enc", named);
    std::vector<Tensor> inputs;
    for (auto& [name, t] : named) inputs.push_back(t);
    auto forward = [&]() { return mean_all(encode_video(s.frames, s.params).frame_level); };
    CHECK(max_rel_grad_error(forward, inputs) < 1e-4);
}

TEST_SUITE_END();
