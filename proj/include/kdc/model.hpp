// SPDX-License-Identifier: Apache-2.0
//
// Dual-branch student: an exploration branch and an inheritance branch with
// identical shapes and fully independent parameter storage. Both branches are
// trained with InfoNCE + triplet ranking losses; the inheritance branch
// additionally receives the refined distillation loss, weighted by an
// exponentially decaying factor. Inference fuses the two branch similarities.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kdc/data.hpp"
#include "kdc/dta.hpp"
#include "kdc/hsa.hpp"
#include "kdc/krd.hpp"
#include "kdc/tensor.hpp"

namespace kdc {

struct ModelHyper {
    int heads = 4;
    std::vector<int> scales = {2, 3};
    int max_offset = 30;
    std::vector<int> radii = {10, 20};
    double pn_lambda = 0.1;
};

struct TrainConfig {
    double learning_rate = 2e-4;
    int epochs = 100;
    int batch_size = 16;
    double margin = 0.2;        // triplet hinge margin
    double temperature = 0.07;  // InfoNCE temperature
    double distill_decay = 0.95;  // per-epoch decay of the distillation weight
    double distill_weight = 1.0;  // initial distillation weight
    double fusion_delta = 0.1;    // exploration share at inference, in [0, 1]
    int krd_window = 3;
    std::uint64_t seed = 0;
};

struct BranchParams {
    HsaParams text;
    DtaEncoderParams video;

    void collect_params(const std::string& prefix,
                        std::vector<std::pair<std::string, Tensor>>& out) const;
};

struct StudentModel {
    std::size_t dim = 0;
    ModelHyper hyper;
    BranchParams exploration;
    BranchParams inheritance;

    static StudentModel init(std::size_t dim, const ModelHyper& hyper, std::uint64_t seed);
    std::vector<std::pair<std::string, Tensor>> named_params() const;
    void sgd_step(double learning_rate);
    void zero_grads();
};

struct SimilarityMatrix {
    Tensor values; // [B x B]; rows are queries, columns videos, diagonal positive
};

// Encodes every query and video with one branch and fills the cosine matrix.
SimilarityMatrix branch_similarity(std::span<const WordSequence> queries,
                                   std::span<const FrameSequence> videos,
                                   const BranchParams& branch);

// Symmetric InfoNCE: mean of the row-wise and column-wise cross-entropy of
// softmax(sim / temperature) against the diagonal.
Tensor info_nce_loss(const SimilarityMatrix& sim, double temperature);

// Hardest-negative hinge over rows and columns, averaged. A 1x1 batch has no
// negatives and contributes zero.
Tensor triplet_loss(const SimilarityMatrix& sim, double margin);

double distill_weight_at(int epoch, const TrainConfig& cfg);

Tensor total_loss(const Tensor& exploration, const Tensor& inheritance,
                  const Tensor& distill, int epoch, const TrainConfig& cfg);

double fuse_similarity(double exploration, double inheritance, double delta);

struct EpochStats {
    double exploration_loss = 0.0;
    double inheritance_loss = 0.0;
    double distill_loss = 0.0;
    double distill_weight = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
};

// Plain SGD over shuffled batches. Deterministic under the config seed;
// aborts with numeric_error on a non-finite loss.
TrainResult train(StudentModel& model, const RetrievalDataset& data,
                  const TrainConfig& cfg);

} // namespace kdc
