#include "model/layers.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace cajscc::model {

namespace {
constexpr double kPreluInit = 0.25;
}

Tensor kaiming_uniform(const nn::Shape& shape, std::size_t fan_in, std::uint64_t seed, const std::string& name) {
    const double bound = std::sqrt(6.0 / ((1.0 + kPreluInit * kPreluInit) * static_cast<double>(fan_in)));
    Rng rng(seed, name);
    Tensor t(shape);
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
    return t;
}

Tensor bias_uniform(std::size_t n, std::size_t fan_in, std::uint64_t seed, const std::string& name) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Rng rng(seed, name);
    Tensor t({n});
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
    return t;
}

FlBlock::FlBlock(nn::ParameterSet& params, const std::string& prefix, FlKind kind, std::size_t in_channels,
                 std::size_t out_channels, std::size_t kernel, const nn::ConvGeometry& geometry, std::uint64_t seed)
    : kind_(kind), geometry_(geometry), bn_(out_channels) {
    const std::size_t fan_in = in_channels * kernel * kernel;
    const std::string conv = prefix + (kind == FlKind::Down ? ".conv" : ".deconv");
    const nn::Shape wshape = kind == FlKind::Down ? nn::Shape{out_channels, in_channels, kernel, kernel}
                                                  : nn::Shape{in_channels, out_channels, kernel, kernel};
    weight_ = params.add(conv + ".weight", kaiming_uniform(wshape, fan_in, seed, conv + ".weight"));
    bias_ = params.add(conv + ".bias", bias_uniform(out_channels, fan_in, seed, conv + ".bias"));
    if (kind != FlKind::Head) {
        gamma_ = params.add(prefix + ".bn.gamma", Tensor::full({out_channels}, 1.0));
        beta_ = params.add(prefix + ".bn.beta", Tensor::zeros({out_channels}));
        slope_ = params.add(prefix + ".prelu.slope", Tensor::scalar(kPreluInit));
        params.add_buffer(prefix + ".bn.running_mean", bn_.running_mean);
        params.add_buffer(prefix + ".bn.running_var", bn_.running_var);
        bn_.seed_identity();
    }
}

Tensor FlBlock::forward(const Tensor& x, Mode mode) {
    if (kind_ == FlKind::Down) {
        return nn::prelu(nn::batch_norm(nn::conv2d(x, weight_, bias_, geometry_), gamma_, beta_, bn_, mode), slope_);
    }
    Tensor y = nn::conv_transpose2d(x, weight_, bias_, geometry_);
    if (kind_ == FlKind::Head) return nn::sigmoid(y);
    return nn::prelu(nn::batch_norm(y, gamma_, beta_, bn_, mode), slope_);
}

MaskNet::MaskNet(nn::ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out,
                 std::uint64_t seed) {
    const std::size_t hidden = std::max<std::size_t>(1, in / 2);
    w1_ = params.add(prefix + ".fc1.weight", kaiming_uniform({hidden, in}, in, seed, prefix + ".fc1.weight"));
    b1_ = params.add(prefix + ".fc1.bias", bias_uniform(hidden, in, seed, prefix + ".fc1.bias"));
    slope_ = params.add(prefix + ".prelu.slope", Tensor::scalar(kPreluInit));
    w2_ = params.add(prefix + ".fc2.weight", kaiming_uniform({out, hidden}, hidden, seed, prefix + ".fc2.weight"));
    b2_ = params.add(prefix + ".fc2.bias", Tensor::full({out}, 1.0));
}

Tensor MaskNet::forward(const Tensor& x) {
    return nn::fully_connected(nn::prelu(nn::fully_connected(x, w1_, b1_), slope_), w2_, b2_);
}

void MaskNet::force_ones() {
    std::fill(w2_.data().begin(), w2_.data().end(), 0.0);
    std::fill(b2_.data().begin(), b2_.data().end(), 1.0);
}

ClModule::ClModule(nn::ParameterSet& params, const std::string& prefix, std::size_t channels, std::size_t height,
                   std::size_t width, std::size_t csi_len, bool spatial, std::uint64_t seed)
    : channels_(channels),
      height_(height),
      width_(width),
      channel_in_(channels + csi_len),
      spatial_in_(height * width + csi_len) {
    channel_ = std::make_unique<MaskNet>(params, prefix + ".channel", channel_in_, channels, seed);
    if (spatial) spatial_ = std::make_unique<MaskNet>(params, prefix + ".spatial", spatial_in_, height * width, seed);
}

Tensor ClModule::channel_attention(const Tensor& features, const Tensor& csi) {
    if (csi.rank() != 2 || csi.dim(1) + channels_ != channel_in_) {
        throw DimensionError("CL module: CSI input " + nn::shape_str(csi.shape()) + " has the wrong length");
    }
    const Tensor pooled = nn::avg_pool_channelwise(features);  // [N, c]
    const Tensor mask = channel_->forward(nn::concat(pooled, csi, 1));
    return nn::elementwise_mul_broadcast(features, mask);
}

Tensor ClModule::spatial_attention(const Tensor& features, const Tensor& csi) {
    if (!spatial_) throw ConfigError("CL module has no spatial stage");
    const std::size_t n = features.dim(0);
    const Tensor pooled = nn::reshape(nn::avg_pool_spatial(features), {n, height_ * width_});
    const Tensor mask = spatial_->forward(nn::concat(pooled, csi, 1));
    return nn::elementwise_mul_broadcast(features, nn::reshape(mask, {n, height_, width_}));
}

Tensor ClModule::forward(const Tensor& features, const Tensor& csi) {
    Tensor out = channel_attention(features, csi);
    return spatial_ ? spatial_attention(out, csi) : out;
}

void ClModule::force_identity_masks() {
    channel_->force_ones();
    if (spatial_) spatial_->force_ones();
}

}  // namespace cajscc::model
