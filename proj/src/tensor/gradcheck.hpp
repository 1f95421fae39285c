#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "tensor/tensor.hpp"

namespace cajscc::nn {

struct GradCheckOptions {
    double eps = 1e-6;
    // 0 checks every coordinate; otherwise a deterministic sample of this
    // many coordinates per input tensor.
    std::size_t max_coords_per_input = 0;
    std::uint64_t seed = 7;
    // When positive, coordinates whose one-sided slopes differ by more than
    // kink_tol * max(1, |central|) sit on a kink inside the stencil; they are
    // counted in `skipped` instead of compared.
    double kink_tol = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_input = 0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
};

// Compares reverse-mode gradients of the scalar fn() with respect to every
// tensor in `inputs` against central differences. The inputs are perturbed in
// place and restored. Error per coordinate is
// |analytic - numeric| / max(1, |analytic|).
GradCheckReport finite_difference_check(const std::function<Tensor()>& fn, std::span<const Tensor> inputs,
                                        const GradCheckOptions& options = {});

}  // namespace cajscc::nn
