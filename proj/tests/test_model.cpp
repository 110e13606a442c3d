// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "kdc/gradcheck.hpp"
#include "kdc/model.hpp"
#include "kdc/rng.hpp"

using namespace kdc;

namespace {

Tensor random_values(Shape shape, Rng& rng) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return Tensor::from(shape, std::move(v));
}

ModelHyper tiny_hyper() {
    ModelHyper h;
    h.heads = 2;
    h.scales = {2};
    h.max_offset = 3;
    h.radii = {1, 2};
    h.pn_lambda = 0.1;
    return h;
}

RetrievalDataset tiny_dataset(std::size_t n, std::size_t frames, std::size_t query_len,
                              std::size_t dim, std::size_t teacher_dim, std::uint64_t seed) {
    Rng rng(seed);
    RetrievalDataset d;
    d.dim = dim;
    d.teacher_dim = teacher_dim;
    d.frames = frames;
    d.query_len = query_len;
    for (std::size_t i = 0; i < n; ++i) {
        d.queries.push_back(random_values({query_len, dim}, rng));
        d.videos.push_back(random_values({frames, dim}, rng));
        d.teacher_frames.push_back(random_values({frames, teacher_dim}, rng));
        d.teacher_queries.push_back(random_values({teacher_dim}, rng));
        d.mv_ratios.push_back(0.25);
        d.moment_starts.push_back(0);
        d.moment_lengths.push_back(static_cast<int>(frames) / 4);
    }
    return d;
}

double naive_info_nce(const std::vector<double>& s, std::size_t b, double temp) {
    auto ce_direction = [&](bool rows) {
        double total = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
            double mx = -1e300;
            for (std::size_t j = 0; j < b; ++j) {
                double v = (rows ? s[i * b + j] : s[j * b + i]) / temp;
                mx = std::max(mx, v);
            }
            double den = 0.0;
            for (std::size_t j = 0; j < b; ++j) {
                den += std::exp((rows ? s[i * b + j] : s[j * b + i]) / temp - mx);
            }
            total += -(s[i * b + i] / temp - mx - std::log(den));
        }
        return total / static_cast<double>(b);
    };
    return 0.5 * (ce_direction(true) + ce_direction(false));
}

double naive_triplet(const std::vector<double>& s, std::size_t b, double margin) {
    double row_total = 0.0, col_total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        double hard_row = -1e300, hard_col = -1e300;
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            hard_row = std::max(hard_row, s[i * b + j]);
            hard_col = std::max(hard_col, s[j * b + i]);
        }
        row_total += std::max(0.0, margin - s[i * b + i] + hard_row);
        col_total += std::max(0.0, margin - s[i * b + i] + hard_col);
    }
    return 0.5 * (row_total + col_total) / static_cast<double>(b);
}

} // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("branch similarity shapes and duplicated videos") {
    Rng rng(501);
    StudentModel model = StudentModel::init(8, tiny_hyper(), 77);

    std::vector<WordSequence> queries{{random_values({3, 8}, rng)}};
    std::vector<FrameSequence> videos{{random_values({4, 8}, rng)}};
    SimilarityMatrix one = branch_similarity(queries, videos, model.exploration);
    CHECK(one.values.shape() == Shape{1, 1});

    queries.push_back({random_values({3, 8}, rng)});
    Tensor shared = random_values({4, 8}, rng);
    std::vector<FrameSequence> dup{{shared}, {shared}};
    SimilarityMatrix two = branch_similarity(queries, dup, model.exploration);
    CHECK(two.values.at(0, 0) == two.values.at(0, 1));
    CHECK(two.values.at(1, 0) == two.values.at(1, 1));

    CHECK_THROWS_AS(branch_similarity({}, {}, model.exploration), config_error);
}

TEST_CASE("branch similarity composes the module encoders") {
    Rng rng(502);
    StudentModel model = StudentModel::init(8, tiny_hyper(), 78);
    std::vector<WordSequence> queries{{random_values({3, 8}, rng)},
                                      {random_values({4, 8}, rng)}};
    std::vector<FrameSequence> videos{{random_values({5, 8}, rng)},
                                      {random_values({5, 8}, rng)}};
    SimilarityMatrix sim = branch_similarity(queries, videos, model.inheritance);
    for (std::size_t i = 0; i < 2; ++i) {
        Tensor q = encode_query(queries[i], model.inheritance.text);
        for (std::size_t j = 0; j < 2; ++j) {
            Tensor v = encode_video(videos[j], model.inheritance.video).video_level;
            CHECK(std::fabs(sim.values.at(i, j) - cosine_similarity(q, v).value()) < 1e-9);
        }
    }
}

TEST_CASE("info nce limits") {
    // strongly separable: diagonal +10, off-diagonal -10
    std::vector<double> sep(9, -10.0);
    for (int i = 0; i < 3; ++i) sep[i * 3 + i] = 10.0;
    CHECK(info_nce_loss({Tensor::from({3, 3}, sep)}, 1.0).value() < 1e-6);

    // all-equal matrix gives ln B at any temperature
    for (double temp : {0.07, 0.5, 1.0}) {
        for (std::size_t b : {std::size_t{2}, std::size_t{5}}) {
            std::vector<double> flat(b * b, 0.37);
            double loss = info_nce_loss({Tensor::from({b, b}, flat)}, temp).value();
            CHECK(std::fabs(loss - std::log(double(b))) < 1e-9);
        }
    }

    std::vector<double> hand{0.9, 0.1, -0.4, 0.2, 0.8, 0.0, -0.3, 0.5, 0.6};
    double got = info_nce_loss({Tensor::from({3, 3}, hand)}, 0.25).value();
    CHECK(std::fabs(got - naive_info_nce(hand, 3, 0.25)) < 1e-10);

    CHECK_THROWS_AS(info_nce_loss({Tensor::from({2, 2}, {1, 0, 0, 1})}, 0.0),
                    config_error);
}

TEST_CASE("triplet loss limits") {
    // positives clear all negatives by more than the margin
    std::vector<double> sep{0.9, 0.1, 0.2, 0.05, 0.8, 0.15, 0.1, 0.0, 0.95};
    CHECK(triplet_loss({Tensor::from({3, 3}, sep)}, 0.2).value() == 0.0);

    std::vector<double> flat(16, 0.5);
    CHECK(triplet_loss({Tensor::from({4, 4}, flat)}, 0.3).value() ==
          doctest::Approx(0.3).epsilon(1e-15));

    std::vector<double> hand{0.6, 0.7, -0.2, 0.1, 0.5, 0.4, 0.9, -0.1, 0.3};
    double got = triplet_loss({Tensor::from({3, 3}, hand)}, 0.2).value();
    CHECK(std::fabs(got - naive_triplet(hand, 3, 0.2)) < 1e-12);

    CHECK(triplet_loss({Tensor::from({1, 1}, {0.4})}, 0.2).value() == 0.0);
}

TEST_CASE("loss gradients match finite differences") {
    Rng rng(503);
    std::vector<double> v(16);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    Tensor sim = Tensor::param({4, 4}, v);
    std::vector<Tensor> inputs{sim};
    auto nce = [&]() { return info_nce_loss({sim}, 0.2); };
    CHECK(max_rel_grad_error(nce, inputs) < 1e-4);
    auto trip = [&]() { return triplet_loss({sim}, 0.2); };
    CHECK(max_rel_grad_error(trip, inputs) < 1e-4);
}

TEST_CASE("total loss decay schedule") {
    TrainConfig cfg;
    cfg.distill_weight = 1.0;
    cfg.distill_decay = 1.0;
    Tensor le = Tensor::scalar(0.4), li = Tensor::scalar(0.3), lk = Tensor::scalar(0.2);
    CHECK(total_loss(le, li, lk, 0, cfg).value() == doctest::Approx(0.9).epsilon(1e-15));

    cfg.distill_decay = 0.0;
    CHECK(total_loss(le, li, lk, 1, cfg).value() == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(total_loss(le, li, lk, 5, cfg).value() == doctest::Approx(0.7).epsilon(1e-15));

    cfg.distill_decay = 0.9;
    CHECK(distill_weight_at(2, cfg) == doctest::Approx(0.81).epsilon(1e-15));
    CHECK(total_loss(le, li, lk, 2, cfg).value() ==
          doctest::Approx(0.7 + 0.81 * 0.2).epsilon(1e-12));

    // strictly decreasing for decay in (0,1), constant for decay 1
    cfg.distill_decay = 0.95;
    for (int e = 0; e < 10; ++e) {
        CHECK(distill_weight_at(e + 1, cfg) < distill_weight_at(e, cfg));
    }
    cfg.distill_decay = 1.0;
    CHECK(distill_weight_at(7, cfg) == distill_weight_at(0, cfg));
}

TEST_CASE("similarity fusion") {
    CHECK(fuse_similarity(0.5, 0.7, 0.0) == 0.7);
    CHECK(fuse_similarity(0.5, 0.7, 1.0) == 0.5);
    CHECK(fuse_similarity(0.5, 0.7, 0.1) == doctest::Approx(0.68).epsilon(1e-15));
    CHECK_THROWS_AS(fuse_similarity(0.5, 0.7, -0.1), config_error);
    CHECK_THROWS_AS(fuse_similarity(0.5, 0.7, 1.5), config_error);

    // monotone in both inputs
    CHECK(fuse_similarity(0.6, 0.7, 0.3) > fuse_similarity(0.5, 0.7, 0.3));
    CHECK(fuse_similarity(0.5, 0.8, 0.3) > fuse_similarity(0.5, 0.7, 0.3));

    // a common shift of both branch scores preserves candidate order
    Rng rng(504);
    std::vector<double> se(6), si(6);
    for (std::size_t i = 0; i < 6; ++i) {
        se[i] = rng.uniform(-1.0, 1.0);
        si[i] = rng.uniform(-1.0, 1.0);
    }
    const double shift = 0.37;
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            double a = fuse_similarity(se[i], si[i], 0.1);
            double b = fuse_similarity(se[j], si[j], 0.1);
            double as = fuse_similarity(se[i] + shift, si[i] + shift, 0.1);
            double bs = fuse_similarity(se[j] + shift, si[j] + shift, 0.1);
            CHECK(((a < b) == (as < bs)));
        }
    }
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
    StudentModel model = StudentModel::init(8, tiny_hyper(), 79);
    RetrievalDataset data = tiny_dataset(5, 4, 3, 8, 6, 505);
    std::vector<std::vector<double>> before;
    for (auto& [name, t] : model.named_params()) {
        before.emplace_back(t.values().begin(), t.values().end());
    }
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 2;
    cfg.batch_size = 3;
    cfg.krd_window = 2;
    TrainResult result = train(model, data, cfg);
    CHECK(result.history.size() == 2);
    std::size_t i = 0;
    for (auto& [name, t] : model.named_params()) {
        CHECK(std::vector<double>(t.values().begin(), t.values().end()) == before[i]);
        ++i;
    }
}

TEST_CASE("training records finite history and is seed-deterministic") {
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.epochs = 3;
    cfg.batch_size = 3;
    cfg.krd_window = 2;
    cfg.seed = 11;

    auto run = [&]() {
        StudentModel model = StudentModel::init(8, tiny_hyper(), 80);
        RetrievalDataset data = tiny_dataset(6, 4, 3, 8, 6, 506);
        TrainResult r = train(model, data, cfg);
        std::vector<double> flat;
        for (const auto& e : r.history) {
            flat.insert(flat.end(), {e.exploration_loss, e.inheritance_loss,
                                     e.distill_loss, e.distill_weight});
        }
        for (auto& [name, t] : model.named_params()) {
            flat.insert(flat.end(), t.values().begin(), t.values().end());
        }
        return flat;
    };
    auto a = run();
    auto b = run();
    CHECK(a == b);
    for (double v : a) {
        CHECK(std::isfinite(v));
    }

    // epochs = 0 leaves an empty history
    StudentModel model = StudentModel::init(8, tiny_hyper(), 81);
    RetrievalDataset data = tiny_dataset(4, 4, 3, 8, 6, 507);
    cfg.epochs = 0;
    CHECK(train(model, data, cfg).history.empty());
}

TEST_CASE("branches share no parameter storage") {
    StudentModel model = StudentModel::init(8, tiny_hyper(), 82);
    Rng rng(508);
    WordSequence query{random_values({3, 8}, rng)};
    FrameSequence video{random_values({4, 8}, rng)};

    Tensor q_before = encode_query(query, model.inheritance.text);
    Tensor v_before = encode_video(video, model.inheritance.video).video_level;

    // overwrite every exploration parameter
    std::vector<std::pair<std::string, Tensor>> expl;
    model.exploration.collect_params("exploration", expl);
    for (auto& [name, t] : expl) {
        std::vector<double> junk(t.size(), 0.123);
        t.load_values(junk);
    }

    Tensor q_after = encode_query(query, model.inheritance.text);
    Tensor v_after = encode_video(video, model.inheritance.video).video_level;
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(q_before.values()[i] == q_after.values()[i]);
        CHECK(v_before.values()[i] == v_after.values()[i]);
    }
}

TEST_CASE("non-finite inputs abort training with a diagnostic") {
    StudentModel model = StudentModel::init(8, tiny_hyper(), 83);
    RetrievalDataset data = tiny_dataset(3, 4, 3, 8, 6, 509);
    std::vector<double> poisoned(4 * 8, std::numeric_limits<double>::quiet_NaN());
    data.videos[1] = Tensor::from({4, 8}, poisoned);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 3;
    cfg.krd_window = 2;
    CHECK_THROWS_WITH_AS(train(model, data, cfg), doctest::Contains("item 1"), data_error);
}

TEST_SUITE_END();
