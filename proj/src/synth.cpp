// SPDX-License-Identifier: Apache-2.0

#include "kdc/synth.hpp"

#include <algorithm>
#include <cmath>

#include "kdc/rng.hpp"

namespace kdc {

RetrievalDataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.count < 1 || spec.frames < 1 || spec.dim < 1 || spec.teacher_dim < 1 ||
        spec.query_len < 1) {
        throw config_error("synth: counts and dims must be >= 1");
    }
    if (spec.noise < 0.0) {
        throw config_error("synth: noise level must be >= 0");
    }
    const int mmin = std::clamp(spec.moment_min, 1, spec.frames);
    const int mmax = std::clamp(spec.moment_max, mmin, spec.frames);
    if (spec.moment_min > spec.moment_max) {
        throw config_error("synth: moment_min exceeds moment_max");
    }

    const std::size_t d = static_cast<std::size_t>(spec.dim);
    const std::size_t td = static_cast<std::size_t>(spec.teacher_dim);
    const std::size_t k = static_cast<std::size_t>(spec.frames);
    const std::size_t l = static_cast<std::size_t>(spec.query_len);

    Rng rng(spec.seed);

    // fixed teacher projection, shared by the whole corpus
    std::vector<double> teacher_map(td * d);
    const double map_scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& v : teacher_map) {
        v = rng.normal() * map_scale;
    }
    auto to_teacher = [&](const std::vector<double>& content) {
        std::vector<double> out(td, 0.0);
        for (std::size_t r = 0; r < td; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                s += teacher_map[r * d + c] * content[c];
            }
            out[r] = s + spec.noise * rng.normal();
        }
        return out;
    };

    RetrievalDataset data;
    data.dim = d;
    data.teacher_dim = td;
    data.frames = k;
    data.query_len = l;

    for (int item = 0; item < spec.count; ++item) {
        std::vector<double> event(d);
        for (double& v : event) v = rng.normal();

        const int moment_len = mmin + static_cast<int>(rng.below(mmax - mmin + 1));
        const int moment_start = static_cast<int>(rng.below(spec.frames - moment_len + 1));

        std::vector<double> video(k * d);
        std::vector<std::vector<double>> content(k);
        for (std::size_t f = 0; f < k; ++f) {
            const bool in_moment = static_cast<int>(f) >= moment_start &&
                                   static_cast<int>(f) < moment_start + moment_len;
            content[f].resize(d);
            if (in_moment) {
                content[f] = event;
            } else {
                for (double& v : content[f]) v = rng.normal(); // distractor
            }
            for (std::size_t c = 0; c < d; ++c) {
                video[f * d + c] = content[f][c] + spec.noise * rng.normal();
            }
        }

        std::vector<double> query(l * d);
        for (std::size_t t = 0; t < l; ++t) {
            for (std::size_t c = 0; c < d; ++c) {
                query[t * d + c] = event[c] + spec.noise * rng.normal();
            }
        }

        std::vector<double> teacher_frames(k * td);
        for (std::size_t f = 0; f < k; ++f) {
            auto tf = to_teacher(content[f]);
            std::copy(tf.begin(), tf.end(), teacher_frames.begin() + f * td);
        }
        std::vector<double> teacher_query = to_teacher(event);

        data.videos.push_back(Tensor::from({k, d}, std::move(video)));
        data.queries.push_back(Tensor::from({l, d}, std::move(query)));
        data.teacher_frames.push_back(Tensor::from({k, td}, std::move(teacher_frames)));
        data.teacher_queries.push_back(Tensor::from({td}, std::move(teacher_query)));
        data.mv_ratios.push_back(static_cast<double>(moment_len) /
                                 static_cast<double>(spec.frames));
        data.moment_starts.push_back(moment_start);
        data.moment_lengths.push_back(moment_len);
    }
    return data;
}

std::pair<RetrievalDataset, RetrievalDataset> split_dataset(const RetrievalDataset& data,
                                                            double train_fraction) {
    if (train_fraction < 0.0 || train_fraction > 1.0) {
        throw config_error("split: train fraction must lie in [0, 1]");
    }
    const std::size_t n = data.size();
    const std::size_t train_n = static_cast<std::size_t>(
        std::ceil(train_fraction * static_cast<double>(n)));

    auto take = [&](std::size_t from, std::size_t to) {
        RetrievalDataset part;
        part.dim = data.dim;
        part.teacher_dim = data.teacher_dim;
        part.frames = data.frames;
        part.query_len = data.query_len;
        for (std::size_t i = from; i < to; ++i) {
            part.queries.push_back(data.queries[i]);
            part.videos.push_back(data.videos[i]);
            part.teacher_frames.push_back(data.teacher_frames[i]);
            part.teacher_queries.push_back(data.teacher_queries[i]);
            part.mv_ratios.push_back(data.mv_ratios[i]);
            part.moment_starts.push_back(data.moment_starts[i]);
            part.moment_lengths.push_back(data.moment_lengths[i]);
        }
        return part;
    };
    return {take(0, train_n), take(train_n, n)};
}

} // namespace kdc
