// SPDX-License-Identifier: Apache-2.0

#include "kdc/eval.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace kdc {

std::size_t rank_of_truth(const QueryResult& result) {
    for (std::size_t i = 0; i < result.ranking.size(); ++i) {
        if (result.ranking[i] == result.ground_truth) {
            return i + 1;
        }
    }
    throw data_error("query " + std::to_string(result.query_id) +
                     ": ground truth video " + std::to_string(result.ground_truth) +
                     " is not among the candidates");
}

double recall_at_k(const std::vector<QueryResult>& results, int k) {
    if (results.empty()) {
        throw domain_error("recall_at_k: no query results");
    }
    if (k < 1) {
        throw domain_error("recall_at_k: k must be >= 1");
    }
    std::size_t hits = 0;
    for (const auto& r : results) {
        if (rank_of_truth(r) <= static_cast<std::size_t>(k)) {
            ++hits;
        }
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(results.size());
}

double sum_r(double r1, double r5, double r10, double r100) {
    return r1 + r5 + r10 + r100;
}

namespace {

std::size_t bucket_of(double ratio) {
    if (!(ratio > 0.0) || ratio > 1.0) {
        throw data_error("mv ratio " + std::to_string(ratio) + " outside (0, 1]");
    }
    for (std::size_t b = 0; b < kBucketUpper.size(); ++b) {
        if (ratio <= kBucketUpper[b]) {
            return b;
        }
    }
    return kBucketUpper.size() - 1; // unreachable
}

} // namespace

std::array<std::optional<double>, 3> bucketed_sum_r(const std::vector<QueryResult>& results) {
    std::array<std::vector<QueryResult>, 3> buckets;
    for (const auto& r : results) {
        buckets[bucket_of(r.mv_ratio)].push_back(r);
    }
    std::array<std::optional<double>, 3> out;
    for (std::size_t b = 0; b < 3; ++b) {
        if (buckets[b].empty()) {
            continue;
        }
        out[b] = sum_r(recall_at_k(buckets[b], 1), recall_at_k(buckets[b], 5),
                       recall_at_k(buckets[b], 10), recall_at_k(buckets[b], 100));
    }
    return out;
}

RetrievalReport evaluate(const std::vector<QueryResult>& results) {
    RetrievalReport report;
    report.query_count = results.size();
    report.r1 = recall_at_k(results, 1);
    report.r5 = recall_at_k(results, 5);
    report.r10 = recall_at_k(results, 10);
    report.r100 = recall_at_k(results, 100);
    report.sum_r = sum_r(report.r1, report.r5, report.r10, report.r100);
    report.bucket_sum_r = bucketed_sum_r(results);
    for (const auto& r : results) {
        report.bucket_counts[bucket_of(r.mv_ratio)]++;
    }
    return report;
}

std::vector<int> rank_candidates(const std::vector<int>& ids,
                                 const std::vector<double>& similarities) {
    if (ids.size() != similarities.size()) {
        throw dimension_error("rank_candidates: " + std::to_string(ids.size()) +
                              " ids vs " + std::to_string(similarities.size()) +
                              " similarities");
    }
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (similarities[a] != similarities[b]) {
            return similarities[a] > similarities[b];
        }
        return ids[a] < ids[b];
    });
    std::vector<int> ranked(ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        ranked[i] = ids[order[i]];
    }
    return ranked;
}

} // namespace kdc
