// SPDX-License-Identifier: Apache-2.0
//
// Knowledge refinement distillation: teacher query-frame similarity scores,
// adaptive thresholds from per-sequence statistics, sliding-window temporal
// continuity decisions that amplify or suppress runs of confident scores, and
// the KL distillation loss against the refined distribution.

#pragma once

#include <vector>

#include "kdc/tensor.hpp"

namespace kdc {

struct TeacherFeatures {
    Tensor frames; // [K x d], teacher embedding space
    Tensor query;  // [d]
};

struct TeacherScores {
    std::vector<double> scores; // cosine similarities, each in [-1, 1]
};

struct RefinementStats {
    double mean = 0.0;
    double stddev = 0.0;        // population
    double tau_high = 0.0;      // mean + stddev
    double tau_low = 0.0;       // mean - stddev
    double alpha = 0.0;         // mean*stddev / (mean + stddev), 0 if degenerate
    int window = 0;             // filled in by refine_scores
};

struct RefinedScores {
    std::vector<double> scores;
    std::vector<int> indicator; // entries in {-1, 0, +1}
};

TeacherScores teacher_scores(const TeacherFeatures& features);

RefinementStats adaptive_thresholds(const TeacherScores& scores);

// Window i holds the k scores [s_i .. s_{i+k-1}], truncated to the remaining
// suffix near the tail. Indicator +1 when every element >= tau_high (checked
// first), -1 when every element <= tau_low, else 0. Refined score is
// s_i + indicator * alpha.
RefinedScores refine_scores(const TeacherScores& scores, int window);
RefinedScores refine_scores(const TeacherScores& scores, int window,
                            RefinementStats& stats_out);

// Softmax both sequences over the K frames, then KL against the refined
// teacher distribution. Gradient reaches the student scores only.
Tensor krd_loss(const Tensor& student_scores, const RefinedScores& refined);

} // namespace kdc
