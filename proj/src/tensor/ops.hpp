#pragma once

#include <cstddef>
#include <vector>

#include "tensor/tensor.hpp"

namespace cajscc::nn {

// Every operation below records its backward closure on the active Tape when
// at least one input requires a gradient. Feature maps are batched
// [N, C, H, W]; the unbatched [C, H, W] form is accepted wherever the
// architecture describes a single item.

// y = W x + b. x is [n_in] or [N, n_in]; W is [n_out, n_in]; b is [n_out].
Tensor fully_connected(const Tensor& x, const Tensor& weights, const Tensor& bias);

struct ConvGeometry {
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t output_padding = 0;  // transposed convolution only
};

std::size_t conv_output_size(std::size_t in, std::size_t kernel, const ConvGeometry& g);
std::size_t conv_transpose_output_size(std::size_t in, std::size_t kernel, const ConvGeometry& g);

// Cross-correlation. weights [C_out, C_in, k, k], bias [C_out].
Tensor conv2d(const Tensor& x, const Tensor& weights, const Tensor& bias, const ConvGeometry& g);

// Adjoint of conv2d with respect to its input, used as a forward
// (upsampling) operation. weights [C_in, C_out, k, k], bias [C_out].
Tensor conv_transpose2d(const Tensor& x, const Tensor& weights, const Tensor& bias, const ConvGeometry& g);

enum class Mode { Train, Eval };

// Running statistics are tensors without gradients so that checkpoints can
// store them alongside the learnable parameters.
struct BatchNormState {
    Tensor running_mean;
    Tensor running_var;
    bool initialized = false;
    double momentum = 0.1;
    double eps = 1e-5;

    explicit BatchNormState(std::size_t channels = 0)
        : running_mean(Tensor::zeros({channels})), running_var(Tensor::full({channels}, 1.0)) {}

    // Marks mean 0 / variance 1 as valid running statistics so that eval
    // mode works before any training step.
    void seed_identity();
};

// x is [N, C, H, W] or [N, C]. Train mode normalizes with batch statistics
// over the batch and spatial axes and updates the running statistics.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, Mode mode);

// slope is a single learnable scalar of shape [1].
Tensor prelu(const Tensor& x, const Tensor& slope);

Tensor sigmoid(const Tensor& x);

// Mean over spatial axes per channel: [N,C,H,W] -> [N,C].
Tensor avg_pool_channelwise(const Tensor& x);
// Mean over the channel axis per position: [N,C,H,W] -> [N,H,W].
Tensor avg_pool_spatial(const Tensor& x);

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);

// Scales features by a channel mask ([N,C] / [C]) or a spatial mask
// ([N,H,W] / [H,W]); the mask rank selects the broadcast form.
Tensor elementwise_mul_broadcast(const Tensor& features, const Tensor& mask);

Tensor reshape(const Tensor& x, Shape shape);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor sum(const Tensor& x);
// Mean of squared differences over all elements, shape [1].
Tensor mse_loss(const Tensor& prediction, const Tensor& target);

}  // namespace cajscc::nn
