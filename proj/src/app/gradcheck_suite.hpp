#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cajscc::app {

struct GradCheckResult {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
};

// Finite-difference checks of every differentiable operation plus the full
// encode -> channel -> equalize -> decode -> MSE chain on a 1x8x8 image with
// L_f = 16, N_s = 2.
std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed, double eps = 1e-6);

}  // namespace cajscc::app
