#pragma once

#include <span>
#include <vector>

#include "common/rng.hpp"
#include "csi/estimation.hpp"
#include "model/cajscc_model.hpp"
#include "phy/ofdm.hpp"

namespace cajscc::train {

// One image's use of the channel: realization, frame noise and the
// receiver-side estimate derived from the pilot preamble. The transmitter is
// given the same estimate (ideal feedback).
struct LinkDraw {
    double mu_db = 0.0;
    double sigma2 = 0.0;
    phy::ChannelRealization channel;
    phy::ComplexGrid noise;  // (N_p + N_s) x L_f, pilot rows first
    std::vector<phy::cplx> estimate;
    csi::CsiVector csi;  // physical subcarrier order
    csi::SubcarrierPermutation perm;
};

LinkDraw draw_link(const phy::OfdmConfig& ofdm, csi::EstimatorKind estimator, double mu_db, Rng& channel_rng,
                   Rng& noise_rng);

struct LinkOutput {
    nn::Tensor transmitted;     // power-normalized encoder output, sorted-slot order
    nn::Tensor reconstruction;  // [B, c, h, w]
};

// encode -> map slots to subcarriers -> H -> + W -> MMSE equalize -> map
// back -> decode, differentiable with respect to the model parameters.
LinkOutput run_link(model::CajsccModel& model, const nn::Tensor& images, std::span<const LinkDraw> draws,
                    nn::Mode mode);

}  // namespace cajscc::train
