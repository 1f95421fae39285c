#include "model/model_config.hpp"

#include <cmath>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "tensor/ops.hpp"

namespace cajscc::model {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Dual: return "dual";
        case Variant::ChannelOnly: return "channel-only";
        case Variant::None: return "none";
    }
    return "unknown";
}

Variant parse_variant(const std::string& name) {
    if (name == "dual") return Variant::Dual;
    if (name == "channel-only") return Variant::ChannelOnly;
    if (name == "none") return Variant::None;
    throw ConfigError("unknown model variant '" + name + "' (expected dual, channel-only or none)");
}

double ModelConfig::bandwidth_ratio() const {
    return static_cast<double>(n_s * l_f) / static_cast<double>(channels * height * width);
}

std::size_t ModelConfig::grid_side() const {
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(l_f))));
    return side * side == l_f ? side : 0;
}

std::vector<StageShape> ModelConfig::encoder_stages() const {
    if (widths.size() != 4) throw ConfigError("model.widths must list 4 encoder widths");
    if (strides.size() != 5) throw ConfigError("model.strides must list 5 encoder strides");
    std::vector<StageShape> out;
    std::size_t h = height, w = width;
    for (std::size_t i = 0; i < 5; ++i) {
        const nn::ConvGeometry g{strides[i], padding, 0};
        h = nn::conv_output_size(h, kernel, g);
        w = nn::conv_output_size(w, kernel, g);
        out.push_back({i < 4 ? widths[i] : 2 * n_s, h, w});
    }
    return out;
}

void ModelConfig::validate() const {
    if (channels == 0 || height == 0 || width == 0) throw ConfigError("model image shape must be positive");
    if (n_s == 0) throw ConfigError("ofdm.n_s must be at least 1");
    const std::size_t side = grid_side();
    if (side == 0) throw ConfigError("ofdm.l_f (" + std::to_string(l_f) + ") must be a perfect square for the model");
    for (auto s : strides)
        if (s == 0 || s > 2) throw ConfigError("model.strides entries must be 1 or 2");
    for (auto c : widths)
        if (c == 0) throw ConfigError("model.widths entries must be positive");
    const auto stages = encoder_stages();
    if (stages.back().height != side || stages.back().width != side) {
        throw ConfigError("encoder output is " + std::to_string(stages.back().height) + "x" +
                          std::to_string(stages.back().width) + ", but sqrt(ofdm.l_f) = " + std::to_string(side));
    }
    // Decoder mirror: stage i undoes encoder stage 4-i.
    std::size_t h = side, w = side;
    for (std::size_t i = 5; i-- > 0;) {
        const nn::ConvGeometry g{strides[i], padding, strides[i] - 1};
        h = nn::conv_transpose_output_size(h, kernel, g);
        w = nn::conv_transpose_output_size(w, kernel, g);
        const std::size_t want_h = i == 0 ? height : stages[i - 1].height;
        const std::size_t want_w = i == 0 ? width : stages[i - 1].width;
        if (h != want_h || w != want_w) {
            throw ConfigError("decoder stage cannot mirror encoder stage " + std::to_string(i + 1) +
                              " (odd spatial size?)");
        }
    }
}

std::string ModelConfig::canonical() const {
    std::ostringstream os;
    os << "c=" << channels << ";h=" << height << ";w=" << width << ";l_f=" << l_f << ";n_s=" << n_s << ";widths=";
    for (auto v : widths) os << v << ',';
    os << ";strides=";
    for (auto v : strides) os << v << ',';
    os << ";kernel=" << kernel << ";padding=" << padding << ";variant=" << to_string(variant);
    return os.str();
}

std::uint64_t ModelConfig::arch_hash() const { return fnv1a(canonical()); }

std::size_t n_s_for_ratio(std::size_t c, std::size_t h, std::size_t w, std::size_t l_f, std::size_t numerator,
                          std::size_t denominator) {
    const std::size_t source = c * h * w;
    if (denominator == 0 || l_f == 0 || (numerator * source) % (denominator * l_f) != 0) {
        throw ConfigError("bandwidth ratio " + std::to_string(numerator) + "/" + std::to_string(denominator) +
                          " does not give an integer number of OFDM symbols");
    }
    return numerator * source / (denominator * l_f);
}

}  // namespace cajscc::model
