// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#include "argcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "argcore/errors.hpp"
#include "argcore/rng.hpp"

namespace argcore {

double GradReport::worst_rel_err() const {
    double w = 0.0;
    for (const auto& r : records) w = std::max(w, r.max_rel_err);
    return w;
}

GradReport grad_check(const std::function<TensorPtr()>& loss_builder,
                      const std::vector<std::pair<std::string, TensorPtr>>& params, double epsilon,
                      std::uint64_t seed, int max_coords_per_tensor, double tolerance) {
    if (epsilon <= 0.0) throw ConfigError("grad_check: epsilon must be > 0");

    for (const auto& [name, t] : params) {
        (void)name;
        t->zero_grad();
    }
    TensorPtr loss = loss_builder();
    if (!std::isfinite(loss->value())) throw NumericError("grad_check: non-finite loss");
    loss->backward();

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& [name, t] : params) {
        (void)name;
        t->ensure_grad();
        analytic.push_back(t->grad);
    }

    const auto eval = [&]() {
        NoGradGuard ng;
        const double v = loss_builder()->value();
        if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss during perturbation");
        return v;
    };

    GradReport report;
    report.epsilon = epsilon;
    report.tolerance = tolerance;
    report.pass = true;

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        const auto& [name, t] = params[pi];
        GradCheckRecord rec;
        rec.name = name;

        std::vector<std::size_t> coords;
        const std::size_t n = t->data.size();
        if (static_cast<int>(n) <= max_coords_per_tensor) {
            coords.resize(n);
            for (std::size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            Rng rng(derive_seed(seed, {0x6c0de5u, static_cast<std::uint64_t>(pi)}));
            std::unordered_set<std::size_t> picked;
            while (picked.size() < static_cast<std::size_t>(max_coords_per_tensor)) {
                picked.insert(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1)));
            }
            coords.assign(picked.begin(), picked.end());
            std::sort(coords.begin(), coords.end());
        }

        for (std::size_t c : coords) {
            const double saved = t->data[c];
            t->data[c] = saved + epsilon;
            const double f_plus = eval();
            t->data[c] = saved - epsilon;
            const double f_minus = eval();
            t->data[c] = saved;

            const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
            const double a = analytic[pi][c];
            const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            ++rec.coords_checked;
            if (rel > rec.max_rel_err) {
                rec.max_rel_err = rel;
                rec.analytic_at_worst = a;
                rec.numeric_at_worst = numeric;
            }
        }
        if (rec.max_rel_err >= tolerance) report.pass = false;
        report.records.push_back(std::move(rec));
    }
    return report;
}

}  // namespace argcore
