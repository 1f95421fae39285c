#pragma once

#include <span>

namespace cajscc::train {

// PSNR reported for a zero-error reconstruction.
inline constexpr double kPsnrCap = 100.0;

double mse(std::span<const double> x, std::span<const double> x_hat);
double psnr_from_mse(double mse, double max_val = 1.0);
double psnr(std::span<const double> x, std::span<const double> x_hat, double max_val = 1.0);

}  // namespace cajscc::train
