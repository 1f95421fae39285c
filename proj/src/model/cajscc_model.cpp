#include "model/cajscc_model.hpp"

#include <string>

#include "common/error.hpp"
#include "phy/grid_ops.hpp"

namespace cajscc::model {

Tensor csi_features(std::span<const csi::CsiVector> sorted_csi) {
    if (sorted_csi.empty()) throw DimensionError("csi_features: empty batch");
    const std::size_t len = sorted_csi[0].size();
    Tensor t({sorted_csi.size(), len});
    for (std::size_t b = 0; b < sorted_csi.size(); ++b) {
        if (sorted_csi[b].size() != len) throw DimensionError("csi_features: CSI vectors differ in length");
        for (std::size_t k = 0; k + 1 < len; ++k) t[b * len + k] = sorted_csi[b].gains[k];
        t[b * len + len - 1] = sorted_csi[b].mu_db * kMuScale;
    }
    return t;
}

CajsccModel::CajsccModel(ModelConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
    config_.validate();
    const auto stages = config_.encoder_stages();
    const std::size_t csi_len = config_.l_f + 1;
    const bool attention = config_.variant != Variant::None;
    const bool spatial = config_.variant == Variant::Dual;

    enc_fl_.reserve(5);
    dec_fl_.reserve(5);
    std::size_t in = config_.channels;
    for (std::size_t i = 0; i < 5; ++i) {
        const std::string name = "enc.fl" + std::to_string(i + 1);
        enc_fl_.emplace_back(params_, name, FlKind::Down, in, stages[i].channels, config_.kernel,
                             nn::ConvGeometry{config_.strides[i], config_.padding, 0}, init_seed);
        in = stages[i].channels;
        if (i < 4 && attention) {
            enc_cl_.emplace_back(params_, "enc.cl" + std::to_string(i + 1), stages[i].channels, stages[i].height,
                                 stages[i].width, csi_len, spatial, init_seed);
        }
    }
    // Decoder stage i mirrors encoder stage 4-i.
    for (std::size_t i = 0; i < 5; ++i) {
        const std::size_t mirror = 4 - i;
        const bool last = i == 4;
        const StageShape out = last ? StageShape{config_.channels, config_.height, config_.width} : stages[mirror - 1];
        const std::size_t stride = config_.strides[mirror];
        dec_fl_.emplace_back(params_, "dec.fl" + std::to_string(i + 1), last ? FlKind::Head : FlKind::Up, in,
                             out.channels, config_.kernel, nn::ConvGeometry{stride, config_.padding, stride - 1},
                             init_seed);
        in = out.channels;
        if (!last && attention) {
            dec_cl_.emplace_back(params_, "dec.cl" + std::to_string(i + 1), out.channels, out.height, out.width,
                                 csi_len, spatial, init_seed);
        }
    }
}

Tensor CajsccModel::encode_features(const Tensor& images, const Tensor& csi, Mode mode) {
    if (images.rank() != 4 || images.dim(1) != config_.channels || images.dim(2) != config_.height ||
        images.dim(3) != config_.width) {
        throw ConfigError("encode: image batch " + nn::shape_str(images.shape()) + " does not match the model");
    }
    if (csi.rank() != 2 || csi.dim(0) != images.dim(0) || csi.dim(1) != config_.l_f + 1) {
        throw ConfigError("encode: CSI batch " + nn::shape_str(csi.shape()) + " does not match L_f + 1 = " +
                          std::to_string(config_.l_f + 1));
    }
    Tensor x = images;
    for (std::size_t i = 0; i < 5; ++i) {
        x = enc_fl_[i].forward(x, mode);
        if (i < enc_cl_.size()) x = enc_cl_[i].forward(x, csi);
    }
    return nn::reshape(x, {images.dim(0), 2, config_.n_s, config_.l_f});
}

Tensor CajsccModel::encode_batch(const Tensor& images, const Tensor& csi, Mode mode) {
    return phy::power_normalize(encode_features(images, csi, mode), 1.0);
}

Tensor CajsccModel::decode_batch(const Tensor& grid, const Tensor& csi, Mode mode) {
    const std::size_t side = config_.grid_side();
    if (grid.rank() != 4 || grid.dim(1) != 2 || grid.dim(2) != config_.n_s || grid.dim(3) != config_.l_f) {
        throw ConfigError("decode: grid " + nn::shape_str(grid.shape()) + " does not match N_s x L_f = " +
                          std::to_string(config_.n_s) + "x" + std::to_string(config_.l_f));
    }
    if (csi.rank() != 2 || csi.dim(0) != grid.dim(0) || csi.dim(1) != config_.l_f + 1) {
        throw ConfigError("decode: CSI batch " + nn::shape_str(csi.shape()) + " does not match the grid batch");
    }
    Tensor x = nn::reshape(grid, {grid.dim(0), 2 * config_.n_s, side, side});
    for (std::size_t i = 0; i < 5; ++i) {
        x = dec_fl_[i].forward(x, mode);
        if (i < dec_cl_.size()) x = dec_cl_[i].forward(x, csi);
    }
    return x;
}

phy::ComplexGrid CajsccModel::encode(const Tensor& image, const csi::CsiVector& csi,
                                     const csi::SubcarrierPermutation& perm, Mode mode) {
    if (image.rank() != 3) throw ConfigError("encode: expected a single [c, h, w] image");
    const csi::CsiVector sorted = csi::permute(csi, perm);
    const Tensor batch = nn::reshape(image, {1, image.dim(0), image.dim(1), image.dim(2)});
    const Tensor slots = encode_batch(batch, csi_features({&sorted, 1}), mode);
    // Physical subcarrier k carries slot inverse[k].
    const std::vector<std::size_t> to_physical = perm.inverse;
    return phy::tensor_to_grid(phy::gather_subcarriers(slots, {&to_physical, 1}), 0);
}

Tensor CajsccModel::decode(const phy::ComplexGrid& equalized, const csi::CsiVector& csi,
                           const csi::SubcarrierPermutation& perm, Mode mode) {
    if (equalized.rows() != config_.n_s || equalized.cols() != config_.l_f) {
        throw ConfigError("decode: grid is " + std::to_string(equalized.rows()) + "x" +
                          std::to_string(equalized.cols()) + ", model expects " + std::to_string(config_.n_s) + "x" +
                          std::to_string(config_.l_f));
    }
    const csi::CsiVector sorted = csi::permute(csi, perm);
    const std::vector<std::size_t> to_slots = perm.forward;
    const Tensor slots = phy::gather_subcarriers(phy::grids_to_tensor({&equalized, 1}), {&to_slots, 1});
    const Tensor out = decode_batch(slots, csi_features({&sorted, 1}), mode);
    return nn::reshape(out, {config_.channels, config_.height, config_.width});
}

void CajsccModel::force_identity_masks() {
    for (auto& cl : enc_cl_) cl.force_identity_masks();
    for (auto& cl : dec_cl_) cl.force_identity_masks();
}

}  // namespace cajscc::model
