// SPDX-License-Identifier: Apache-2.0

#include "kdc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace kdc {

double max_rel_grad_error(const std::function<Tensor()>& forward,
                          std::span<Tensor> inputs, double step, double floor) {
    // Analytic pass.
    for (auto& in : inputs) {
        in.zero_grad();
    }
    Tensor loss = forward();
    backward(loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (auto& in : inputs) {
        if (in.has_grad()) {
            analytic.emplace_back(in.grad().begin(), in.grad().end());
        } else {
            analytic.emplace_back(in.size(), 0.0);
        }
    }

    double worst = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        Tensor& in = inputs[t];
        std::vector<double> base(in.values().begin(), in.values().end());
        std::vector<double> probe(base);
        for (std::size_t i = 0; i < base.size(); ++i) {
            probe[i] = base[i] + step;
            in.load_values(probe);
            const double up = forward().value();
            probe[i] = base[i] - step;
            in.load_values(probe);
            const double down = forward().value();
            probe[i] = base[i];

            const double numeric = (up - down) / (2.0 * step);
            const double a = analytic[t][i];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), floor});
            worst = std::max(worst, std::fabs(a - numeric) / denom);
        }
        in.load_values(base);
    }
    return worst;
}

} // namespace kdc
