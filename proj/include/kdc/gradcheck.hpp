// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kdc/tensor.hpp"

namespace kdc {

// Central finite-difference verification of the analytic gradients.
//
// `forward` must rebuild the scalar loss from scratch on every call, reading
// the current values of `inputs` (leaf tensors with requires_grad set). The
// returned figure is the maximum relative error across all coordinates, with
// relative error |analytic - numeric| / max(|analytic|, |numeric|, floor).
double max_rel_grad_error(const std::function<Tensor()>& forward,
                          std::span<Tensor> inputs, double step = 1e-5,
                          double floor = 1e-3);

struct GradCheckRow {
    std::string op;
    double max_rel_err;
    bool pass;
};

// Finite-difference sweep over every differentiable operation and both
// encoders, on small random shapes. Threshold 1e-4, step 1e-5.
std::vector<GradCheckRow> run_gradcheck_suite(std::uint64_t seed);

} // namespace kdc
