#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "phy/complex_grid.hpp"
#include "phy/ofdm.hpp"

namespace cajscc::csi {

using phy::ComplexGrid;
using phy::cplx;

enum class EstimatorKind { Perfect, Mmse, Ls };

std::string to_string(EstimatorKind kind);
// Accepts "perfect", "mmse", "ls".
EstimatorKind parse_estimator(const std::string& name);

// Per-subcarrier average of rx / pilot over the pilot symbols.
std::vector<cplx> ls_estimate(const ComplexGrid& rx_pilots, const ComplexGrid& pilots);

// Scalar LMMSE shrinkage of the LS estimate under the CN(0,1) prior with
// unit-power pilots: h_ls / (1 + sigma2 / N_p).
std::vector<cplx> mmse_estimate(const ComplexGrid& rx_pilots, const ComplexGrid& pilots, double sigma2);

// Dispatches on kind; Perfect copies the true frequency response.
std::vector<cplx> estimate(EstimatorKind kind, const ComplexGrid& rx_pilots, const ComplexGrid& pilots,
                           double sigma2, const phy::ChannelRealization& truth);

// conj(h) / (|h|^2 + sigma2) per subcarrier.
std::vector<cplx> mmse_equalizer_taps(std::span<const cplx> gains, double sigma2);
ComplexGrid mmse_equalize(const ComplexGrid& rx, std::span<const cplx> gains, double sigma2);

struct CsiVector {
    std::vector<double> gains;  // |h_k|
    double mu_db = 0.0;

    std::size_t size() const { return gains.size() + 1; }
    // [|h_1|, ..., |h_L|, mu]
    std::vector<double> flatten() const;
};

CsiVector build_csi_vector(std::span<const cplx> gains, double mu_db);

struct SubcarrierPermutation {
    std::vector<std::size_t> forward;  // forward[m] = physical subcarrier of sorted slot m
    std::vector<std::size_t> inverse;  // inverse[forward[m]] = m

    static SubcarrierPermutation identity(std::size_t n);
    // values[forward[m]] for m = 0..n-1.
    template <typename T>
    std::vector<T> apply(std::span<const T> values) const {
        std::vector<T> out(forward.size());
        for (std::size_t m = 0; m < forward.size(); ++m) out[m] = values[forward[m]];
        return out;
    }
};

// Orders subcarriers by descending |h|^2; ties by ascending index.
SubcarrierPermutation sort_subcarriers(std::span<const cplx> gains);

// CSI vector as seen through the permutation (gains reordered, mu unchanged).
CsiVector permute(const CsiVector& csi, const SubcarrierPermutation& perm);

}  // namespace cajscc::csi
