#pragma once

#include <span>
#include <vector>

#include "phy/complex_grid.hpp"

namespace cajscc::phy {

// Unnormalized forward DFT: X[k] = sum_n x[n] exp(-2 pi j k n / N).
std::vector<cplx> fft(std::span<const cplx> x);
// Inverse DFT including the 1/N factor, so ifft(fft(x)) == x.
std::vector<cplx> ifft(std::span<const cplx> x);

}  // namespace cajscc::phy
