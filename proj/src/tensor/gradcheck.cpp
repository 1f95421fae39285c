#include "tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace cajscc::nn {

namespace {

double evaluate(const std::function<Tensor()>& fn) {
    const double v = fn().item();
    if (!std::isfinite(v)) throw NumericError("finite_difference_check: function evaluated to a non-finite value");
    return v;
}

}  // namespace

GradCheckReport finite_difference_check(const std::function<Tensor()>& fn, std::span<const Tensor> inputs,
                                        const GradCheckOptions& options) {
    std::vector<bool> previous(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        previous[i] = inputs[i].requires_grad();
        inputs[i].set_requires_grad(true);
        inputs[i].zero_grad();
    }

    std::vector<std::vector<double>> analytic(inputs.size());
    {
        Tape tape;
        Tape::Scope scope(tape);
        Tensor loss = fn();
        if (!std::isfinite(loss.item())) throw NumericError("finite_difference_check: non-finite loss");
        tape.backward(loss);
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].has_grad()) {
            analytic[i].assign(inputs[i].grad().begin(), inputs[i].grad().end());
        } else {
            analytic[i].assign(inputs[i].numel(), 0.0);
        }
        inputs[i].zero_grad();
    }

    GradCheckReport report;
    const double center = options.kink_tol > 0.0 ? evaluate(fn) : 0.0;
    Rng rng(options.seed, "gradcheck");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        Tensor x = inputs[i];
        std::vector<std::size_t> coords(x.numel());
        std::iota(coords.begin(), coords.end(), 0);
        if (options.max_coords_per_input != 0 && coords.size() > options.max_coords_per_input) {
            std::shuffle(coords.begin(), coords.end(), rng.engine());
            coords.resize(options.max_coords_per_input);
        }
        for (std::size_t idx : coords) {
            const double saved = x[idx];
            x[idx] = saved + options.eps;
            const double up = evaluate(fn);
            x[idx] = saved - options.eps;
            const double down = evaluate(fn);
            x[idx] = saved;
            const double numeric = (up - down) / (2.0 * options.eps);
            if (options.kink_tol > 0.0) {
                const double slope_gap = std::abs((up - center) - (center - down)) / options.eps;
                if (slope_gap > options.kink_tol * std::max(1.0, std::abs(numeric))) {
                    ++report.skipped;
                    continue;
                }
            }
            const double a = analytic[i][idx];
            const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
            if (err > report.max_rel_error || report.checked == 0) {
                report.max_rel_error = std::max(report.max_rel_error, err);
                if (err >= report.max_rel_error) {
                    report.worst_input = i;
                    report.worst_index = idx;
                }
            }
            ++report.checked;
        }
    }

    for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i].set_requires_grad(previous[i]);
    return report;
}

}  // namespace cajscc::nn
