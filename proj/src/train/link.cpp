#include "train/link.hpp"

#include "common/error.hpp"
#include "phy/grid_ops.hpp"
#include "tensor/ops.hpp"

namespace cajscc::train {

LinkDraw draw_link(const phy::OfdmConfig& ofdm, csi::EstimatorKind estimator, double mu_db, Rng& channel_rng,
                   Rng& noise_rng) {
    LinkDraw d;
    d.mu_db = mu_db;
    d.sigma2 = phy::snr_to_sigma2(mu_db, ofdm.p_s);
    d.channel = ofdm.mode == phy::ChannelMode::Taps ? phy::sample_channel_taps(ofdm.l_t, ofdm.l_f, channel_rng)
                                                    : phy::sample_channel_freq(ofdm.l_f, channel_rng);
    d.noise = phy::sample_awgn(ofdm.n_p + ofdm.n_s, ofdm.l_f, d.sigma2, noise_rng);

    // The pilot preamble shares the frame's channel realization; cp_len >=
    // L_t - 1 makes the frequency-domain relation exact in tap mode as well.
    const phy::ComplexGrid pilots = phy::pilot_block(ofdm.n_p, ofdm.l_f);
    const phy::ComplexGrid pilot_noise = phy::split_frame(d.noise, ofdm.n_p).pilots;
    const phy::ComplexGrid rx_pilots = phy::apply_channel_freq(pilots, d.channel, pilot_noise);
    d.estimate = csi::estimate(estimator, rx_pilots, pilots, d.sigma2, d.channel);
    d.csi = csi::build_csi_vector(d.estimate, mu_db);
    d.perm = csi::sort_subcarriers(d.estimate);
    return d;
}

LinkOutput run_link(model::CajsccModel& model, const nn::Tensor& images, std::span<const LinkDraw> draws,
                    nn::Mode mode) {
    const std::size_t batch = images.dim(0);
    if (draws.size() != batch) throw DimensionError("run_link: one link draw per image required");
    const auto& cfg = model.config();

    std::vector<csi::CsiVector> sorted;
    std::vector<std::vector<std::size_t>> to_physical, to_slots;
    std::vector<std::vector<phy::cplx>> channel, equalizer;
    std::vector<phy::ComplexGrid> data_noise;
    for (const auto& d : draws) {
        sorted.push_back(csi::permute(d.csi, d.perm));
        to_physical.push_back(d.perm.inverse);
        to_slots.push_back(d.perm.forward);
        channel.push_back(d.channel.freq_response);
        equalizer.push_back(csi::mmse_equalizer_taps(d.estimate, d.sigma2));
        data_noise.push_back(phy::split_frame(d.noise, d.noise.rows() - cfg.n_s).data);
    }
    const nn::Tensor features = model::csi_features(sorted);

    LinkOutput out;
    out.transmitted = model.encode_batch(images, features, mode);
    const nn::Tensor physical = phy::gather_subcarriers(out.transmitted, to_physical);
    const nn::Tensor received = nn::add(phy::scale_subcarriers(physical, channel), phy::grids_to_tensor(data_noise));
    const nn::Tensor equalized = phy::scale_subcarriers(received, equalizer);
    const nn::Tensor slots = phy::gather_subcarriers(equalized, to_slots);
    out.reconstruction = model.decode_batch(slots, features, mode);
    return out;
}

}  // namespace cajscc::train
