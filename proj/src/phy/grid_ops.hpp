#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "phy/complex_grid.hpp"
#include "tensor/tensor.hpp"

namespace cajscc::phy {

// Differentiable views of complex grids. A batch of N_s x L_f grids is the
// real tensor [B, 2, N_s, L_f]: plane 0 holds real parts, plane 1 imaginary
// parts. These operations record on the active tape like the nn operations.

nn::Tensor grids_to_tensor(std::span<const ComplexGrid> grids);
ComplexGrid tensor_to_grid(const nn::Tensor& t, std::size_t item);

// Per batch item: scale so that mean |Y|^2 over the N_s x L_f grid equals p_s.
nn::Tensor power_normalize(const nn::Tensor& grids, double p_s = 1.0);

// Per batch item b and subcarrier k: Y[b,i,k] = coeffs[b][k] * X[b,i,k].
// Used for the channel H and for the equalizer taps.
nn::Tensor scale_subcarriers(const nn::Tensor& grids, std::span<const std::vector<cplx>> coeffs);

// Per batch item b: Y[b,:,:,k] = X[b,:,:,index[b][k]].
nn::Tensor gather_subcarriers(const nn::Tensor& grids, std::span<const std::vector<std::size_t>> index);

}  // namespace cajscc::phy
