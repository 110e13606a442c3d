// SPDX-License-Identifier: Apache-2.0

#include "kdc/model.hpp"

#include <cmath>
#include <numeric>

#include "kdc/rng.hpp"

namespace kdc {

void BranchParams::collect_params(const std::string& prefix,
                                  std::vector<std::pair<std::string, Tensor>>& out) const {
    text.collect_params(prefix + ".text", out);
    video.collect_params(prefix + ".video", out);
}

StudentModel StudentModel::init(std::size_t dim, const ModelHyper& hyper,
                                std::uint64_t seed) {
    StudentModel m;
    m.dim = dim;
    m.hyper = hyper;
    Rng rng(seed);
    // same shapes, independent draws: the branches share no storage
    m.exploration.text = HsaParams::init(dim, hyper.scales, hyper.heads, rng);
    m.exploration.video = DtaEncoderParams::init(dim, hyper.heads, hyper.max_offset,
                                                 hyper.radii, hyper.pn_lambda, rng);
    m.inheritance.text = HsaParams::init(dim, hyper.scales, hyper.heads, rng);
    m.inheritance.video = DtaEncoderParams::init(dim, hyper.heads, hyper.max_offset,
                                                 hyper.radii, hyper.pn_lambda, rng);
    return m;
}

std::vector<std::pair<std::string, Tensor>> StudentModel::named_params() const {
    std::vector<std::pair<std::string, Tensor>> out;
    exploration.collect_params("exploration", out);
    inheritance.collect_params("inheritance", out);
    return out;
}

void StudentModel::sgd_step(double learning_rate) {
    for (auto& [name, tensor] : named_params()) {
        tensor.apply_gradient_step(learning_rate);
    }
}

void StudentModel::zero_grads() {
    for (auto& [name, tensor] : named_params()) {
        tensor.zero_grad();
    }
}

SimilarityMatrix branch_similarity(std::span<const WordSequence> queries,
                                   std::span<const FrameSequence> videos,
                                   const BranchParams& branch) {
    if (queries.empty() || queries.size() != videos.size()) {
        throw config_error("branch_similarity: batch sizes " +
                           std::to_string(queries.size()) + " and " +
                           std::to_string(videos.size()) + " must match and be >= 1");
    }
    std::vector<Tensor> query_vecs, video_vecs;
    query_vecs.reserve(queries.size());
    video_vecs.reserve(videos.size());
    for (const auto& q : queries) {
        query_vecs.push_back(encode_query(q, branch.text));
    }
    for (const auto& v : videos) {
        video_vecs.push_back(encode_video(v, branch.video).video_level);
    }
    Tensor q = l2_normalize_rows(stack_rows(query_vecs));
    Tensor v = l2_normalize_rows(stack_rows(video_vecs));
    return SimilarityMatrix{matmul(q, transpose(v))};
}

Tensor info_nce_loss(const SimilarityMatrix& sim, double temperature) {
    if (temperature <= 0.0) {
        throw config_error("info_nce_loss: temperature must be positive");
    }
    if (sim.values.rows() != sim.values.cols()) {
        throw dimension_error("info_nce_loss: similarity matrix is not square");
    }
    Tensor scaled = scale(sim.values, 1.0 / temperature);
    Tensor row_ce = mean_all(diagonal(log_softmax(scaled, 1)));
    Tensor col_ce = mean_all(diagonal(log_softmax(scaled, 0)));
    return scale(add(row_ce, col_ce), -0.5);
}

Tensor triplet_loss(const SimilarityMatrix& sim, double margin) {
    if (margin < 0.0) {
        throw config_error("triplet_loss: margin must be >= 0");
    }
    if (sim.values.rows() != sim.values.cols()) {
        throw dimension_error("triplet_loss: similarity matrix is not square");
    }
    if (sim.values.rows() < 2) {
        return Tensor::scalar(0.0); // no negatives in a singleton batch
    }
    Tensor positives = diagonal(sim.values);
    Tensor hardest_video = row_max_excluding_diagonal(sim.values);
    Tensor hardest_query = row_max_excluding_diagonal(transpose(sim.values));
    Tensor row_hinge = relu(add_const(sub(hardest_video, positives), margin));
    Tensor col_hinge = relu(add_const(sub(hardest_query, positives), margin));
    return scale(add(mean_all(row_hinge), mean_all(col_hinge)), 0.5);
}

double distill_weight_at(int epoch, const TrainConfig& cfg) {
    if (epoch < 0) {
        throw contract_error("distill_weight_at: epoch must be >= 0");
    }
    return cfg.distill_weight * std::pow(cfg.distill_decay, epoch);
}

Tensor total_loss(const Tensor& exploration, const Tensor& inheritance,
                  const Tensor& distill, int epoch, const TrainConfig& cfg) {
    return add(add(exploration, inheritance),
               scale(distill, distill_weight_at(epoch, cfg)));
}

double fuse_similarity(double exploration, double inheritance, double delta) {
    if (delta < 0.0 || delta > 1.0) {
        throw config_error("fuse_similarity: delta " + std::to_string(delta) +
                           " outside [0, 1]");
    }
    return delta * exploration + (1.0 - delta) * inheritance;
}

namespace {

struct BranchBatch {
    std::vector<Tensor> query_vecs;   // [D] each
    std::vector<VideoEncoding> videos;
    Tensor similarity;                // [B x B]
};

BranchBatch encode_batch(const RetrievalDataset& data,
                         const std::vector<std::size_t>& batch,
                         const BranchParams& branch) {
    BranchBatch out;
    out.query_vecs.reserve(batch.size());
    out.videos.reserve(batch.size());
    for (std::size_t idx : batch) {
        out.query_vecs.push_back(encode_query({data.queries[idx]}, branch.text));
        out.videos.push_back(encode_video({data.videos[idx]}, branch.video));
    }
    std::vector<Tensor> video_vecs;
    video_vecs.reserve(batch.size());
    for (const auto& enc : out.videos) {
        video_vecs.push_back(enc.video_level);
    }
    Tensor q = l2_normalize_rows(stack_rows(out.query_vecs));
    Tensor v = l2_normalize_rows(stack_rows(video_vecs));
    out.similarity = matmul(q, transpose(v));
    return out;
}

} // namespace

TrainResult train(StudentModel& model, const RetrievalDataset& data,
                  const TrainConfig& cfg) {
    const std::size_t n = data.size();
    if (n == 0) {
        throw config_error("train: dataset is empty");
    }
    if (cfg.batch_size < 1) {
        throw config_error("train: batch size must be >= 1");
    }
    if (cfg.epochs < 0) {
        throw config_error("train: epoch count must be >= 0");
    }
    if (data.dim != model.dim) {
        throw dimension_error("train: dataset dim " + std::to_string(data.dim) +
                              " does not match model dim " + std::to_string(model.dim));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!all_finite(data.queries[i].values()) || !all_finite(data.videos[i].values()) ||
            !all_finite(data.teacher_frames[i].values()) ||
            !all_finite(data.teacher_queries[i].values())) {
            throw data_error("train: non-finite feature values in item " + std::to_string(i));
        }
    }

    // Teacher targets are constant across training: score, refine, softmax once.
    std::vector<RefinedScores> refined(n);
    for (std::size_t i = 0; i < n; ++i) {
        TeacherScores scores =
            teacher_scores({data.teacher_frames[i], data.teacher_queries[i]});
        refined[i] = refine_scores(scores, cfg.krd_window);
    }

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.history.reserve(static_cast<std::size_t>(cfg.epochs));
    const std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        const double w = distill_weight_at(epoch, cfg);
        EpochStats stats;
        stats.distill_weight = w;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < n; start += batch_size) {
            std::vector<std::size_t> batch(
                order.begin() + start,
                order.begin() + std::min(n, start + batch_size));

            BranchBatch expl = encode_batch(data, batch, model.exploration);
            BranchBatch inh = encode_batch(data, batch, model.inheritance);

            Tensor loss_e = add(info_nce_loss({expl.similarity}, cfg.temperature),
                                triplet_loss({expl.similarity}, cfg.margin));
            Tensor loss_i = add(info_nce_loss({inh.similarity}, cfg.temperature),
                                triplet_loss({inh.similarity}, cfg.margin));

            // student frame scores mirror the teacher construction: cosine of
            // inheritance frame features against the inheritance query vector
            Tensor loss_krd;
            for (std::size_t b = 0; b < batch.size(); ++b) {
                Tensor scores = row_cosine(inh.videos[b].frame_level, inh.query_vecs[b]);
                Tensor item = krd_loss(scores, refined[batch[b]]);
                loss_krd = loss_krd.defined() ? add(loss_krd, item) : item;
            }
            loss_krd = scale(loss_krd, 1.0 / static_cast<double>(batch.size()));

            Tensor loss = total_loss(loss_e, loss_i, loss_krd, epoch, cfg);
            if (!std::isfinite(loss.value())) {
                throw numeric_error("train: non-finite loss at epoch " +
                                    std::to_string(epoch) + ", batch " +
                                    std::to_string(batches));
            }
            backward(loss);
            model.sgd_step(cfg.learning_rate);
            model.zero_grads();

            stats.exploration_loss += loss_e.value();
            stats.inheritance_loss += loss_i.value();
            stats.distill_loss += loss_krd.value();
            ++batches;
        }
        stats.exploration_loss /= static_cast<double>(batches);
        stats.inheritance_loss /= static_cast<double>(batches);
        stats.distill_loss /= static_cast<double>(batches);
        result.history.push_back(stats);
    }
    return result;
}

} // namespace kdc
