#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "csi/estimation.hpp"
#include "model/layers.hpp"
#include "model/model_config.hpp"
#include "phy/complex_grid.hpp"

namespace cajscc::model {

// Network view of a CSI vector: the L_f gains in sorted-subcarrier order,
// then mu / 20 so the SNR entry has roughly the magnitude of the gains.
inline constexpr double kMuScale = 1.0 / 20.0;
Tensor csi_features(std::span<const csi::CsiVector> sorted_csi);

// Encoder/decoder comb: FL1 CL1 FL2 CL2 FL3 CL3 FL4 CL4 FL5 on each side.
//
// Encoder output [B, 2N_s, s, s] (s = sqrt(L_f)) is read as [B, 2, N_s, L_f]:
// channels 0..N_s-1 are real parts, N_s..2N_s-1 imaginary parts, and
// spatial position (j, k) is sorted subcarrier slot j*s + k. The batched
// methods work in sorted-slot order; the single-item encode/decode map slots
// onto physical subcarriers through the permutation.
class CajsccModel {
public:
    CajsccModel(ModelConfig config, std::uint64_t init_seed);
    CajsccModel(const CajsccModel&) = delete;
    CajsccModel& operator=(const CajsccModel&) = delete;

    const ModelConfig& config() const { return config_; }
    nn::ParameterSet& params() { return params_; }
    const nn::ParameterSet& params() const { return params_; }
    std::size_t parameter_count() const { return params_.scalar_count(); }

    // images [B, c, h, w], csi [B, L_f+1] -> power-normalized [B, 2, N_s, L_f].
    Tensor encode_batch(const Tensor& images, const Tensor& csi, Mode mode);
    // Same without the final power normalization.
    Tensor encode_features(const Tensor& images, const Tensor& csi, Mode mode);
    // equalized [B, 2, N_s, L_f] in slot order, csi [B, L_f+1] -> images in [0,1].
    Tensor decode_batch(const Tensor& grid, const Tensor& csi, Mode mode);

    // Single image [c, h, w] to the physical N_s x L_f grid. `csi` holds the
    // estimated gains in physical order; `perm` is the sorting permutation.
    phy::ComplexGrid encode(const Tensor& image, const csi::CsiVector& csi, const csi::SubcarrierPermutation& perm,
                            Mode mode = Mode::Eval);
    // Physical equalized grid back to an image [c, h, w].
    Tensor decode(const phy::ComplexGrid& equalized, const csi::CsiVector& csi,
                  const csi::SubcarrierPermutation& perm, Mode mode = Mode::Eval);

    // Sets every attention mask network to output exactly 1.
    void force_identity_masks();

    std::span<ClModule> encoder_cl() { return {enc_cl_.data(), enc_cl_.size()}; }

private:
    ModelConfig config_;
    nn::ParameterSet params_;
    std::vector<FlBlock> enc_fl_, dec_fl_;
    std::vector<ClModule> enc_cl_, dec_cl_;
};

}  // namespace cajscc::model
