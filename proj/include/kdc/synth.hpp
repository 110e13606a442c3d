// SPDX-License-Identifier: Apache-2.0
//
// Synthetic paired corpus with planted moments: each video hides a latent
// event inside a contiguous frame span, the paired query is a noisy view of
// the same event, and teacher features are a fixed random linear map of the
// per-frame content. Controls the moment-to-video ratio exactly.

#pragma once

#include <cstdint>
#include <utility>

#include "kdc/data.hpp"

namespace kdc {

struct SyntheticSpec {
    int count = 200;        // corpus size
    int frames = 32;        // K
    int dim = 384;          // student hidden dim D
    int teacher_dim = 512;  // teacher dim d
    int query_len = 8;      // tokens per query
    int moment_min = 4;     // moment length range (clamped to [1, frames])
    int moment_max = 16;
    double noise = 0.1;     // feature noise level, >= 0
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

RetrievalDataset make_synthetic(const SyntheticSpec& spec);

// First ceil(fraction * n) items train, remainder test.
std::pair<RetrievalDataset, RetrievalDataset> split_dataset(const RetrievalDataset& data,
                                                            double train_fraction);

} // namespace kdc
