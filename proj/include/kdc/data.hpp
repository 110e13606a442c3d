// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "kdc/tensor.hpp"

namespace kdc {

// A paired query/video retrieval corpus with teacher features. Student
// features live in the model's hidden space (dim), teacher features in the
// teacher's own space (teacher_dim); the two never need to match because
// distillation passes through score distributions only.
struct RetrievalDataset {
    std::size_t dim = 0;         // student hidden dim D
    std::size_t teacher_dim = 0; // teacher feature dim d
    std::size_t frames = 0;      // frames per video K
    std::size_t query_len = 0;   // tokens per query L

    std::vector<Tensor> queries;         // [L x D] each
    std::vector<Tensor> videos;          // [K x D] each
    std::vector<Tensor> teacher_frames;  // [K x d] each
    std::vector<Tensor> teacher_queries; // [d] each
    std::vector<double> mv_ratios;       // in (0, 1]
    std::vector<int> moment_starts;
    std::vector<int> moment_lengths;

    std::size_t size() const { return videos.size(); }
};

} // namespace kdc
