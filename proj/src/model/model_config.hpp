#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace cajscc::model {

enum class Variant { Dual, ChannelOnly, None };

std::string to_string(Variant v);
// Accepts "dual", "channel-only", "none".
Variant parse_variant(const std::string& name);

struct StageShape {
    std::size_t channels, height, width;
};

struct ModelConfig {
    std::size_t channels = 3;
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t l_f = 64;
    std::size_t n_s = 8;
    // Output widths of encoder FL stages 1-4; stage 5 always emits 2 * n_s.
    std::vector<std::size_t> widths{64, 128, 128, 128};
    std::vector<std::size_t> strides{2, 2, 1, 1, 1};
    std::size_t kernel = 3;
    std::size_t padding = 1;
    Variant variant = Variant::Dual;

    // Channel uses per source symbol: N_s L_f / (c h w).
    double bandwidth_ratio() const;
    std::size_t grid_side() const;  // sqrt(L_f)

    // Output shape of each encoder FL stage; the decoder mirrors it.
    std::vector<StageShape> encoder_stages() const;
    // Throws ConfigError unless the encoder ends at 2N_s x sqrt(L_f) x sqrt(L_f)
    // and the transposed-convolution mirror restores (c, h, w).
    void validate() const;

    // Stable description of everything that determines parameter shapes.
    std::string canonical() const;
    std::uint64_t arch_hash() const;
};

// N_s such that N_s L_f / (c h w) equals numerator / denominator exactly.
std::size_t n_s_for_ratio(std::size_t c, std::size_t h, std::size_t w, std::size_t l_f, std::size_t numerator,
                          std::size_t denominator);

}  // namespace cajscc::model
