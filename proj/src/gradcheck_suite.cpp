// SPDX-License-Identifier: Apache-2.0

#include <functional>

#include "kdc/dta.hpp"
#include "kdc/gradcheck.hpp"
#include "kdc/hsa.hpp"
#include "kdc/krd.hpp"
#include "kdc/model.hpp"
#include "kdc/rng.hpp"

namespace kdc {

namespace {

Tensor rand_param(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor::param(shape, std::move(v));
}

} // namespace

std::vector<GradCheckRow> run_gradcheck_suite(std::uint64_t seed) {
    std::vector<GradCheckRow> rows;
    std::uint64_t stream = seed;
    auto record = [&rows](const std::string& op, double err) {
        rows.push_back({op, err, err < 1e-4});
    };

    {
        Rng rng(stream++ * 7919 + 1);
        Tensor a = rand_param({3, 4}, rng);
        Tensor b = rand_param({4, 5}, rng);
        std::vector<Tensor> in{a, b};
        record("matmul", max_rel_grad_error(
            [&]() { return mean_all(gelu(matmul(a, b))); }, in));
    }
    {
        Rng rng(stream++ * 7919 + 1);
        Tensor x = rand_param({3, 5}, rng);
        std::vector<Tensor> in{x};
        record("softmax", max_rel_grad_error(
            [&]() { return mean_all(gelu(softmax(x, 1))); }, in));
        record("log_softmax", max_rel_grad_error(
            [&]() { return mean_all(gelu(log_softmax(x, 0))); }, in));
    }
    {
        Rng rng(stream++ * 7919 + 1);
        Tensor x = rand_param({4, 6}, rng);
        Tensor gain = rand_param({6}, rng, 0.5, 1.5);
        Tensor bias = rand_param({6}, rng, -0.5, 0.5);
        std::vector<Tensor> in{x, gain, bias};
        record("layer_norm", max_rel_grad_error(
            [&]() { return mean_all(gelu(layer_norm(x, gain, bias))); }, in));
    }
    {
        Rng rng(stream++ * 7919 + 1);
        Tensor x = rand_param({3, 4}, rng);
        std::vector<Tensor> in{x};
        record("gelu", max_rel_grad_error([&]() { return mean_all(gelu(x)); }, in));
        record("l2_normalize", max_rel_grad_error(
            [&]() { return mean_all(gelu(l2_normalize_rows(x))); }, in));
    }
    {
        Rng rng(stream++ * 7919 + 1);
        Tensor u = rand_param({6}, rng);
        Tensor v = rand_param({6}, rng);
        Tensor m = rand_param({4, 6}, rng);
        std::vector<Tensor> in{u, v, m};
        record("cosine", max_rel_grad_error(
            [&]() { return cosine_similarity(u, v); }, in));
        record("row_cosine", max_rel_grad_error(
            [&]() { return mean_all(gelu(row_cosine(m, v))); }, in));
    }
    {
        Rng rng(stream++ * 7919 + 1);
        Tensor s = rand_param({6}, rng);
        Tensor q = softmax(rand_param({6}, rng), 0);
        std::vector<Tensor> in{s};
        record("kl_divergence", max_rel_grad_error(
            [&]() { return kl_divergence(log_softmax(s, 0), q); }, in));
    }
    {
        Rng rng(stream++ * 7919 + 1);
        Tensor table = rand_param({7}, rng);
        std::vector<Tensor> in{table};
        record("relative_bias", max_rel_grad_error(
            [&]() { return mean_all(gelu(relative_bias_matrix(table, 5, 3))); }, in));
    }
    {
        Rng rng(stream++ * 7919 + 1);
        DtaParams attn = DtaParams::init(8, 2, 3, {2}, rng);
        attn.bias_table = rand_param({7}, rng, -0.4, 0.4);
        FrameSequence frames{rand_param({5, 8}, rng)};
        std::vector<std::pair<std::string, Tensor>> named;
        attn.collect_params("attn", named);
        std::vector<Tensor> in{frames.features};
        for (auto& [n, t] : named) in.push_back(t);
        record("dta_attention", max_rel_grad_error(
            [&]() { return mean_all(gelu(dta_attention(frames, attn, 2))); }, in));
    }
    {
        Rng rng(stream++ * 7919 + 1);
        PnParams pn = PnParams::init(6, 0.1);
        Tensor x = rand_param({4, 6}, rng);
        std::vector<Tensor> in{x, pn.gain, pn.bias};
        record("purification_norm", max_rel_grad_error(
            [&]() { return mean_all(gelu(purification_norm(x, pn))); }, in));
    }
    {
        Rng rng(stream++ * 7919 + 1);
        HsaParams hsa = HsaParams::init(8, {2, 3}, 2, rng);
        WordSequence words{rand_param({4, 8}, rng)};
        std::vector<std::pair<std::string, Tensor>> named;
        hsa.collect_params("hsa", named);
        std::vector<Tensor> in{words.features};
        for (auto& [n, t] : named) in.push_back(t);
        record("hsa_fusion", max_rel_grad_error(
            [&]() { return mean_all(gelu(encode_query(words, hsa))); }, in));
    }
    {
        Rng rng(stream++ * 7919 + 1);
        DtaEncoderParams enc = DtaEncoderParams::init(8, 2, 3, {1, 2}, 0.1, rng);
        enc.attention.bias_table = rand_param({7}, rng, -0.4, 0.4);
        FrameSequence frames{rand_param({5, 8}, rng)};
        std::vector<std::pair<std::string, Tensor>> named;
        enc.collect_params("enc", named);
        std::vector<Tensor> in{frames.features};
        for (auto& [n, t] : named) in.push_back(t);
        record("video_encoder", max_rel_grad_error(
            [&]() { return mean_all(gelu(encode_video(frames, enc).frame_level)); }, in));
    }
    {
        Rng rng(stream++ * 7919 + 1);
        Tensor sim = rand_param({4, 4}, rng);
        std::vector<Tensor> in{sim};
        record("info_nce", max_rel_grad_error(
            [&]() { return info_nce_loss({sim}, 0.2); }, in));
        record("triplet", max_rel_grad_error(
            [&]() { return triplet_loss({sim}, 0.2); }, in));
    }
    {
        Rng rng(stream++ * 7919 + 1);
        Tensor student = rand_param({6}, rng);
        std::vector<double> teacher(6);
        for (double& v : teacher) v = rng.uniform(-1.0, 1.0);
        RefinedScores refined = refine_scores({teacher}, 3);
        std::vector<Tensor> in{student};
        record("krd_loss", max_rel_grad_error(
            [&]() { return krd_loss(student, refined); }, in));
    }
    return rows;
}

} // namespace kdc
