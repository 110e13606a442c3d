// SPDX-License-Identifier: Apache-2.0
//
// Ranking metrics: Recall@K for K in {1, 5, 10, 100}, their sum (SumR), and
// SumR within moment-to-video ratio buckets.

#pragma once

#include <array>
#include <optional>
#include <vector>

#include "kdc/errors.hpp"

namespace kdc {

struct QueryResult {
    int query_id = 0;
    std::vector<int> ranking; // candidate video ids, best first
    int ground_truth = 0;     // appears exactly once in ranking
    double mv_ratio = 0.0;    // in (0, 1]
};

// Right-closed M/V buckets, matching the interval notation (0,0.2], (0.2,0.4],
// (0.4,1].
inline constexpr std::array<double, 3> kBucketUpper{0.2, 0.4, 1.0};

struct RetrievalReport {
    double r1 = 0.0, r5 = 0.0, r10 = 0.0, r100 = 0.0; // percentages
    double sum_r = 0.0;
    std::array<std::optional<double>, 3> bucket_sum_r; // absent when bucket empty
    std::array<std::size_t, 3> bucket_counts{0, 0, 0};
    std::size_t query_count = 0;
};

// 1-based rank of the ground truth inside the ranking; throws data_error if
// the ground truth is missing.
std::size_t rank_of_truth(const QueryResult& result);

double recall_at_k(const std::vector<QueryResult>& results, int k);

double sum_r(double r1, double r5, double r10, double r100);

std::array<std::optional<double>, 3> bucketed_sum_r(const std::vector<QueryResult>& results);

RetrievalReport evaluate(const std::vector<QueryResult>& results);

// Deterministic ranking helper: candidate ids sorted by similarity descending,
// ties broken by ascending id.
std::vector<int> rank_candidates(const std::vector<int>& ids,
                                 const std::vector<double>& similarities);

} // namespace kdc
