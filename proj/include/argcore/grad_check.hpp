// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "argcore/tensor.hpp"

namespace argcore {

struct GradCheckRecord {
    std::string name;
    double max_rel_err = 0.0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    int coords_checked = 0;
};

struct GradReport {
    std::vector<GradCheckRecord> records;
    bool pass = false;
    double epsilon = 0.0;
    double tolerance = 0.0;
    double worst_rel_err() const;
};

// Central-difference verification of reverse-mode gradients.
//
// loss_builder must rebuild and return the scalar loss from the current
// parameter values; it is re-invoked per perturbed coordinate (value only,
// no graph). Relative error is |a - n| / max(1, |a|, |n|). Tensors larger
// than max_coords_per_tensor are sub-sampled at coordinates chosen
// deterministically from the seed.
GradReport grad_check(const std::function<TensorPtr()>& loss_builder,
                      const std::vector<std::pair<std::string, TensorPtr>>& params, double epsilon,
                      std::uint64_t seed = 0, int max_coords_per_tensor = 24, double tolerance = 1e-4);

}  // namespace argcore
