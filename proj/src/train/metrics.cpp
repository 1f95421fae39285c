#include "train/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace cajscc::train {

double mse(std::span<const double> x, std::span<const double> x_hat) {
    if (x.size() != x_hat.size() || x.empty()) throw DimensionError("mse: images differ in size");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - x_hat[i];
        s += d * d;
    }
    return s / static_cast<double>(x.size());
}

double psnr_from_mse(double mse, double max_val) {
    if (!(max_val > 0.0)) throw ConfigError("psnr: max_val must be positive");
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(max_val * max_val / mse));
}

double psnr(std::span<const double> x, std::span<const double> x_hat, double max_val) {
    return psnr_from_mse(mse(x, x_hat), max_val);
}

}  // namespace cajscc::train
