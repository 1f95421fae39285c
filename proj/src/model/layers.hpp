#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "tensor/ops.hpp"
#include "tensor/parameters.hpp"

namespace cajscc::model {

using nn::Mode;
using nn::Tensor;

// Kaiming-uniform (fan-in, PReLU gain with slope 0.25) weights, uniform
// +-1/sqrt(fan_in) biases. Each tensor is seeded from its own name, so the
// values do not depend on construction order.
Tensor kaiming_uniform(const nn::Shape& shape, std::size_t fan_in, std::uint64_t seed, const std::string& name);
Tensor bias_uniform(std::size_t n, std::size_t fan_in, std::uint64_t seed, const std::string& name);

enum class FlKind {
    Down,  // conv -> batch norm -> PReLU
    Up,    // transposed conv -> batch norm -> PReLU
    Head,  // transposed conv -> sigmoid (decoder output)
};

// Feature-learning stage.
class FlBlock {
public:
    FlBlock(nn::ParameterSet& params, const std::string& prefix, FlKind kind, std::size_t in_channels,
            std::size_t out_channels, std::size_t kernel, const nn::ConvGeometry& geometry, std::uint64_t seed);

    Tensor forward(const Tensor& x, Mode mode);
    nn::BatchNormState& bn() { return bn_; }

private:
    FlKind kind_;
    nn::ConvGeometry geometry_;
    Tensor weight_, bias_, gamma_, beta_, slope_;
    nn::BatchNormState bn_;
};

// Two fully connected layers: in -> in/2 -> out, PReLU after the first.
// The final layer is linear; its bias starts at 1 so that fresh masks sit
// near the identity.
class MaskNet {
public:
    MaskNet(nn::ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out,
            std::uint64_t seed);

    Tensor forward(const Tensor& x);
    // Output becomes exactly 1 for every input.
    void force_ones();

private:
    Tensor w1_, b1_, slope_, w2_, b2_;
};

// Dual-attention channel-learning module. With channel_only set, only the
// channel-wise stage runs.
class ClModule {
public:
    ClModule(nn::ParameterSet& params, const std::string& prefix, std::size_t channels, std::size_t height,
             std::size_t width, std::size_t csi_len, bool spatial, std::uint64_t seed);

    // Channel-wise stage: F_cout = S_c(concat(Ave_c(F_in), csi)) * F_in.
    Tensor channel_attention(const Tensor& features, const Tensor& csi);
    // Spatial stage: F_out = S_s(concat(Ave_s(F_cout), csi)) * F_cout.
    Tensor spatial_attention(const Tensor& features, const Tensor& csi);
    Tensor forward(const Tensor& features, const Tensor& csi);

    void force_identity_masks();
    bool has_spatial() const { return spatial_ != nullptr; }

    // Mask inputs for inspection: channel stage expects c + csi_len,
    // spatial stage h*w + csi_len.
    std::size_t channel_input_size() const { return channel_in_; }
    std::size_t spatial_input_size() const { return spatial_in_; }

private:
    std::size_t channels_, height_, width_, channel_in_, spatial_in_;
    std::unique_ptr<MaskNet> channel_;
    std::unique_ptr<MaskNet> spatial_;
};

}  // namespace cajscc::model
