#include "phy/ofdm.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "common/error.hpp"
#include "phy/fft.hpp"

namespace cajscc::phy {

ComplexGrid::ComplexGrid(std::size_t rows, std::size_t cols, std::vector<cplx> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw DimensionError("complex grid " + std::to_string(rows) + "x" + std::to_string(cols) + " given " +
                             std::to_string(values_.size()) + " values");
    }
}

double ComplexGrid::squared_norm() const {
    double s = 0.0;
    for (const auto& v : values_) s += std::norm(v);
    return s;
}

void OfdmConfig::validate() const {
    if (l_f == 0 || (l_f & (l_f - 1)) != 0) {
        throw ConfigError("ofdm.l_f must be a positive power of two, got " + std::to_string(l_f));
    }
    if (n_s == 0) throw ConfigError("ofdm.n_s must be at least 1");
    if (n_p == 0) throw ConfigError("ofdm.n_p must be at least 1 (channel estimation needs pilots)");
    if (l_t == 0) throw ConfigError("ofdm.l_t must be at least 1");
    if (cp_len + 1 < l_t) {
        throw ConfigError("ofdm.cp_len (" + std::to_string(cp_len) + ") must be >= ofdm.l_t - 1 (" +
                          std::to_string(l_t - 1) + ")");
    }
    if (!(p_s > 0.0)) throw ConfigError("ofdm.p_s must be positive");
}

NoiseSpec NoiseSpec::from_snr(double mu_db, double p_s) { return {snr_to_sigma2(mu_db, p_s), mu_db}; }

double snr_to_sigma2(double mu_db, double p_s) {
    if (!(p_s > 0.0)) throw ConfigError("snr_to_sigma2: P_s must be positive");
    return p_s * std::pow(10.0, -mu_db / 10.0);
}

ComplexGrid power_normalize(const ComplexGrid& grid, double p_s) {
    const double norm = grid.squared_norm();
    if (!(norm > 0.0)) throw NumericError("power_normalize: grid is all zeros");
    const double k = std::sqrt(p_s * static_cast<double>(grid.size()) / norm);
    ComplexGrid out = grid;
    for (auto& v : out.values()) v *= k;
    return out;
}

std::vector<cplx> zadoff_chu(std::size_t root, std::size_t n) {
    if (n == 0 || std::gcd(root, n) != 1) {
        throw ConfigError("zadoff_chu: root " + std::to_string(root) + " is not coprime with length " +
                          std::to_string(n));
    }
    std::vector<cplx> z(n);
    const double r = static_cast<double>(root);
    const double len = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        // n^2 and n(n+1) are reduced mod 2N to keep the phase argument small.
        const std::size_t m = (n % 2 == 0) ? (i * i) % (2 * n) : (i * (i + 1)) % (2 * n);
        const double phase = -std::numbers::pi * r * static_cast<double>(m) / len;
        z[i] = std::polar(1.0, phase);
    }
    return z;
}

ComplexGrid pilot_block(std::size_t n_p, std::size_t l_f) {
    if (n_p == 0) throw ConfigError("pilot_block: n_p must be at least 1");
    ComplexGrid block(n_p, l_f);
    std::size_t root = 1;
    for (std::size_t i = 0; i < n_p; ++i) {
        while (std::gcd(root, l_f) != 1) ++root;
        const auto z = zadoff_chu(root, l_f);
        std::copy(z.begin(), z.end(), block.row(i).begin());
        ++root;
    }
    return block;
}

ChannelRealization sample_channel_freq(std::size_t l_f, Rng& rng) {
    ChannelRealization c;
    c.mode = ChannelMode::Frequency;
    c.freq_response.resize(l_f);
    for (auto& h : c.freq_response) h = rng.complex_normal(1.0);
    return c;
}

ChannelRealization channel_from_taps(std::vector<cplx> taps, std::size_t l_f) {
    if (taps.empty() || taps.size() > l_f) {
        throw ConfigError("channel_from_taps: need 1..L_f taps, got " + std::to_string(taps.size()));
    }
    std::vector<cplx> padded(l_f);
    std::copy(taps.begin(), taps.end(), padded.begin());
    ChannelRealization c;
    c.mode = ChannelMode::Taps;
    c.freq_response = fft(padded);
    c.taps = std::move(taps);
    return c;
}

ChannelRealization sample_channel_taps(std::size_t l_t, std::size_t l_f, Rng& rng) {
    std::vector<cplx> taps(l_t);
    for (auto& t : taps) t = rng.complex_normal(1.0 / static_cast<double>(l_t));
    return channel_from_taps(std::move(taps), l_f);
}

ComplexGrid sample_awgn(std::size_t rows, std::size_t cols, double sigma2, Rng& rng) {
    ComplexGrid w(rows, cols);
    for (auto& v : w.values()) v = rng.complex_normal(sigma2);
    return w;
}

ComplexGrid apply_channel_freq(const ComplexGrid& grid, const ChannelRealization& chan, const ComplexGrid& noise) {
    if (chan.freq_response.size() != grid.cols()) {
        throw DimensionError("apply_channel_freq: channel has " + std::to_string(chan.freq_response.size()) +
                             " subcarriers, grid has " + std::to_string(grid.cols()));
    }
    if (noise.rows() != grid.rows() || noise.cols() != grid.cols()) {
        throw DimensionError("apply_channel_freq: noise grid shape differs from signal grid");
    }
    ComplexGrid out(grid.rows(), grid.cols());
    for (std::size_t i = 0; i < grid.rows(); ++i)
        for (std::size_t k = 0; k < grid.cols(); ++k) out(i, k) = chan.freq_response[k] * grid(i, k) + noise(i, k);
    return out;
}

ComplexGrid apply_channel_freq(const ComplexGrid& grid, const ChannelRealization& chan, const NoiseSpec& noise,
                               Rng& rng) {
    if (noise.sigma2 < 0.0) throw ConfigError("apply_channel_freq: negative noise variance");
    return apply_channel_freq(grid, chan, sample_awgn(grid.rows(), grid.cols(), noise.sigma2, rng));
}

ComplexGrid apply_channel_time(const ComplexGrid& grid, const ChannelRealization& chan, std::size_t cp_len,
                               const NoiseSpec& noise, Rng& rng) {
    if (chan.mode != ChannelMode::Taps || chan.taps.empty()) {
        throw ConfigError("apply_channel_time: channel realization has no time-domain taps");
    }
    const std::size_t l_t = chan.taps.size();
    if (cp_len + 1 < l_t) {
        throw ConfigError("apply_channel_time: cp_len (" + std::to_string(cp_len) + ") < L_t - 1 (" +
                          std::to_string(l_t - 1) + ")");
    }
    if (noise.sigma2 < 0.0) throw ConfigError("apply_channel_time: negative noise variance");
    const std::size_t l_f = grid.cols();
    const double time_sigma2 = noise.sigma2 / static_cast<double>(l_f);

    ComplexGrid out(grid.rows(), l_f);
    std::vector<cplx> tx(cp_len + l_f);
    std::vector<cplx> rx(l_f);
    for (std::size_t i = 0; i < grid.rows(); ++i) {
        const auto symbol = ifft(grid.row(i));
        std::copy(symbol.end() - static_cast<std::ptrdiff_t>(cp_len), symbol.end(), tx.begin());
        std::copy(symbol.begin(), symbol.end(), tx.begin() + static_cast<std::ptrdiff_t>(cp_len));
        // Only the samples after the prefix are kept, so the convolution is
        // evaluated there; they depend on at most cp_len preceding samples.
        for (std::size_t n = 0; n < l_f; ++n) {
            const std::size_t t = n + cp_len;
            cplx acc{0.0, 0.0};
            for (std::size_t l = 0; l < l_t; ++l) acc += chan.taps[l] * tx[t - l];
            rx[n] = acc + rng.complex_normal(time_sigma2);
        }
        const auto freq = fft(rx);
        std::copy(freq.begin(), freq.end(), out.row(i).begin());
    }
    return out;
}

ComplexGrid insert_pilots(const ComplexGrid& data, const ComplexGrid& pilots) {
    if (pilots.rows() == 0) throw ConfigError("insert_pilots: at least one pilot symbol is required");
    if (pilots.cols() != data.cols()) {
        throw DimensionError("insert_pilots: pilots span " + std::to_string(pilots.cols()) +
                             " subcarriers, data spans " + std::to_string(data.cols()));
    }
    ComplexGrid frame(pilots.rows() + data.rows(), data.cols());
    std::copy(pilots.values().begin(), pilots.values().end(), frame.values().begin());
    std::copy(data.values().begin(), data.values().end(),
              frame.values().begin() + static_cast<std::ptrdiff_t>(pilots.size()));
    return frame;
}

Frame split_frame(const ComplexGrid& frame, std::size_t n_p) {
    if (n_p == 0 || n_p > frame.rows()) throw ConfigError("split_frame: invalid pilot count");
    const std::size_t cols = frame.cols();
    std::vector<cplx> p(frame.values().begin(), frame.values().begin() + static_cast<std::ptrdiff_t>(n_p * cols));
    std::vector<cplx> d(frame.values().begin() + static_cast<std::ptrdiff_t>(n_p * cols), frame.values().end());
    return {ComplexGrid(n_p, cols, std::move(p)), ComplexGrid(frame.rows() - n_p, cols, std::move(d))};
}

}  // namespace cajscc::phy
