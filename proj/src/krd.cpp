// SPDX-License-Identifier: Apache-2.0

#include "kdc/krd.hpp"

#include <algorithm>
#include <cmath>

namespace kdc {

TeacherScores teacher_scores(const TeacherFeatures& features) {
    const std::size_t k = features.frames.rows();
    const std::size_t d = features.frames.cols();
    if (features.query.size() != d) {
        throw dimension_error("teacher_scores: query dim " +
                              std::to_string(features.query.size()) +
                              " does not match frame dim " + std::to_string(d));
    }
    TeacherScores out;
    out.scores.resize(k);
    const auto frames = features.frames.values();
    const auto query = features.query.values();
    for (std::size_t i = 0; i < k; ++i) {
        out.scores[i] = cosine_similarity(frames.subspan(i * d, d), query);
    }
    return out;
}

RefinementStats adaptive_thresholds(const TeacherScores& scores) {
    auto [mean, stddev] = mean_std(scores.scores);
    RefinementStats stats;
    stats.mean = mean;
    stats.stddev = stddev;
    stats.tau_high = mean + stddev;
    stats.tau_low = mean - stddev;
    const double denom = mean + stddev;
    stats.alpha = denom == 0.0 ? 0.0 : mean * stddev / denom;
    return stats;
}

RefinedScores refine_scores(const TeacherScores& scores, int window,
                            RefinementStats& stats_out) {
    if (window < 1) {
        throw config_error("refine_scores: window size must be >= 1, got " +
                           std::to_string(window));
    }
    stats_out = adaptive_thresholds(scores);
    stats_out.window = window;
    const std::size_t k = scores.scores.size();
    RefinedScores out;
    out.scores.resize(k);
    out.indicator.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t end = std::min(k, i + static_cast<std::size_t>(window));
        bool all_high = true;
        bool all_low = true;
        for (std::size_t j = i; j < end; ++j) {
            all_high = all_high && scores.scores[j] >= stats_out.tau_high;
            all_low = all_low && scores.scores[j] <= stats_out.tau_low;
        }
        // both can hold only when stddev is zero, where alpha is zero as well;
        // the high branch wins for determinism
        const int ind = all_high ? 1 : (all_low ? -1 : 0);
        out.indicator[i] = ind;
        out.scores[i] = scores.scores[i] + static_cast<double>(ind) * stats_out.alpha;
    }
    return out;
}

RefinedScores refine_scores(const TeacherScores& scores, int window) {
    RefinementStats stats;
    return refine_scores(scores, window, stats);
}

Tensor krd_loss(const Tensor& student_scores, const RefinedScores& refined) {
    if (student_scores.rank() != 1 || student_scores.size() != refined.scores.size()) {
        throw dimension_error("krd_loss: student scores length " +
                              std::to_string(student_scores.size()) +
                              " does not match refined length " +
                              std::to_string(refined.scores.size()));
    }
    Tensor target = softmax(Tensor::from({refined.scores.size()},
                                         refined.scores), 0);
    return kl_divergence(log_softmax(student_scores, 0), target);
}

} // namespace kdc
