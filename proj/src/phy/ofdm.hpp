#pragma once

#include <cstddef>
#include <vector>

#include "common/rng.hpp"
#include "phy/complex_grid.hpp"

namespace cajscc::phy {

enum class ChannelMode { Frequency, Taps };

struct OfdmConfig {
    std::size_t l_f = 64;     // subcarriers
    std::size_t n_s = 8;      // data OFDM symbols per image
    std::size_t n_p = 2;      // pilot OFDM symbols
    std::size_t cp_len = 16;  // cyclic prefix, samples
    std::size_t l_t = 8;      // time-domain taps (tap mode)
    ChannelMode mode = ChannelMode::Frequency;
    double p_s = 1.0;

    // Throws ConfigError naming the first violated precondition.
    void validate() const;
};

struct ChannelRealization {
    std::vector<cplx> freq_response;  // H[k], k = 0..L_f-1
    std::vector<cplx> taps;           // h_t, empty in frequency mode
    ChannelMode mode = ChannelMode::Frequency;
};

struct NoiseSpec {
    double sigma2 = 0.0;
    double mu_db = 0.0;

    static NoiseSpec from_snr(double mu_db, double p_s = 1.0);
    static NoiseSpec noiseless() { return {0.0, 0.0}; }
};

// sigma^2 = P_s * 10^(-mu/10).
double snr_to_sigma2(double mu_db, double p_s = 1.0);

// Scales the grid so that its mean squared magnitude equals p_s.
ComplexGrid power_normalize(const ComplexGrid& grid, double p_s = 1.0);

// Zadoff-Chu sequence of length n; requires gcd(root, n) == 1.
std::vector<cplx> zadoff_chu(std::size_t root, std::size_t n);

// n_p x l_f pilot preamble. Row i carries the ZC sequence with the i-th root
// coprime to l_f (1, then the next coprime integers).
ComplexGrid pilot_block(std::size_t n_p, std::size_t l_f);

// Independent CN(0,1) gains on every subcarrier.
ChannelRealization sample_channel_freq(std::size_t l_f, Rng& rng);
// l_t iid CN(0, 1/l_t) taps; frequency response is the l_f-point DFT of the
// zero-padded taps.
ChannelRealization sample_channel_taps(std::size_t l_t, std::size_t l_f, Rng& rng);
ChannelRealization channel_from_taps(std::vector<cplx> taps, std::size_t l_f);

// iid CN(0, sigma2) entries.
ComplexGrid sample_awgn(std::size_t rows, std::size_t cols, double sigma2, Rng& rng);

// Y[i,k] = H[k] X[i,k] + W[i,k] with a caller-supplied noise realization.
ComplexGrid apply_channel_freq(const ComplexGrid& grid, const ChannelRealization& chan, const ComplexGrid& noise);
ComplexGrid apply_channel_freq(const ComplexGrid& grid, const ChannelRealization& chan, const NoiseSpec& noise,
                               Rng& rng);

// Per OFDM symbol: IFFT, cyclic prefix, linear convolution with the taps,
// time-domain AWGN of variance sigma2 / L_f (so the post-FFT noise is
// CN(0, sigma2)), CP removal, FFT.
ComplexGrid apply_channel_time(const ComplexGrid& grid, const ChannelRealization& chan, std::size_t cp_len,
                               const NoiseSpec& noise, Rng& rng);

// Prepends the pilot rows to the data rows.
ComplexGrid insert_pilots(const ComplexGrid& data, const ComplexGrid& pilots);

struct Frame {
    ComplexGrid pilots;
    ComplexGrid data;
};
Frame split_frame(const ComplexGrid& frame, std::size_t n_p);

}  // namespace cajscc::phy
