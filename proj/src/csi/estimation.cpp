#include "csi/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"

namespace cajscc::csi {

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Perfect: return "perfect";
        case EstimatorKind::Mmse: return "mmse";
        case EstimatorKind::Ls: return "ls";
    }
    return "unknown";
}

EstimatorKind parse_estimator(const std::string& name) {
    if (name == "perfect") return EstimatorKind::Perfect;
    if (name == "mmse") return EstimatorKind::Mmse;
    if (name == "ls") return EstimatorKind::Ls;
    throw ConfigError("unknown estimator '" + name + "' (expected perfect, mmse or ls)");
}

std::vector<cplx> ls_estimate(const ComplexGrid& rx_pilots, const ComplexGrid& pilots) {
    if (rx_pilots.rows() != pilots.rows() || rx_pilots.cols() != pilots.cols()) {
        throw DimensionError("ls_estimate: received pilots and reference pilots differ in shape");
    }
    if (pilots.rows() == 0) throw EstimationError("ls_estimate: no pilot symbols");
    std::vector<cplx> h(pilots.cols(), cplx{0.0, 0.0});
    for (std::size_t i = 0; i < pilots.rows(); ++i)
        for (std::size_t k = 0; k < pilots.cols(); ++k) {
            if (pilots(i, k) == cplx{0.0, 0.0}) {
                throw EstimationError("ls_estimate: pilot symbol " + std::to_string(i) + " is zero on subcarrier " +
                                      std::to_string(k));
            }
            h[k] += rx_pilots(i, k) / pilots(i, k);
        }
    const double inv = 1.0 / static_cast<double>(pilots.rows());
    for (auto& v : h) v *= inv;
    return h;
}

std::vector<cplx> mmse_estimate(const ComplexGrid& rx_pilots, const ComplexGrid& pilots, double sigma2) {
    if (sigma2 < 0.0) throw EstimationError("mmse_estimate: negative noise variance");
    auto h = ls_estimate(rx_pilots, pilots);
    const double shrink = 1.0 / (1.0 + sigma2 / static_cast<double>(pilots.rows()));
    for (auto& v : h) v *= shrink;
    return h;
}

std::vector<cplx> estimate(EstimatorKind kind, const ComplexGrid& rx_pilots, const ComplexGrid& pilots,
                           double sigma2, const phy::ChannelRealization& truth) {
    switch (kind) {
        case EstimatorKind::Perfect: return truth.freq_response;
        case EstimatorKind::Mmse: return mmse_estimate(rx_pilots, pilots, sigma2);
        case EstimatorKind::Ls: return ls_estimate(rx_pilots, pilots);
    }
    throw ConfigError("estimate: unknown estimator");
}

std::vector<cplx> mmse_equalizer_taps(std::span<const cplx> gains, double sigma2) {
    std::vector<cplx> taps(gains.size());
    for (std::size_t k = 0; k < gains.size(); ++k) {
        const double denom = std::norm(gains[k]) + sigma2;
        if (!(denom > 0.0)) {
            throw EstimationError("mmse_equalize: zero channel gain with zero noise on subcarrier " +
                                  std::to_string(k));
        }
        taps[k] = std::conj(gains[k]) / denom;
    }
    return taps;
}

ComplexGrid mmse_equalize(const ComplexGrid& rx, std::span<const cplx> gains, double sigma2) {
    if (gains.size() != rx.cols()) {
        throw DimensionError("mmse_equalize: " + std::to_string(gains.size()) + " gains for " +
                             std::to_string(rx.cols()) + " subcarriers");
    }
    const auto taps = mmse_equalizer_taps(gains, sigma2);
    ComplexGrid out(rx.rows(), rx.cols());
    for (std::size_t i = 0; i < rx.rows(); ++i)
        for (std::size_t k = 0; k < rx.cols(); ++k) out(i, k) = taps[k] * rx(i, k);
    return out;
}

std::vector<double> CsiVector::flatten() const {
    std::vector<double> v(gains);
    v.push_back(mu_db);
    return v;
}

CsiVector build_csi_vector(std::span<const cplx> gains, double mu_db) {
    CsiVector c;
    c.gains.reserve(gains.size());
    for (const auto& g : gains) c.gains.push_back(std::abs(g));
    c.mu_db = mu_db;
    return c;
}

SubcarrierPermutation SubcarrierPermutation::identity(std::size_t n) {
    SubcarrierPermutation p;
    p.forward.resize(n);
    std::iota(p.forward.begin(), p.forward.end(), 0);
    p.inverse = p.forward;
    return p;
}

SubcarrierPermutation sort_subcarriers(std::span<const cplx> gains) {
    SubcarrierPermutation p = SubcarrierPermutation::identity(gains.size());
    std::stable_sort(p.forward.begin(), p.forward.end(),
                     [&](std::size_t a, std::size_t b) { return std::norm(gains[a]) > std::norm(gains[b]); });
    for (std::size_t m = 0; m < p.forward.size(); ++m) p.inverse[p.forward[m]] = m;
    return p;
}

CsiVector permute(const CsiVector& csi, const SubcarrierPermutation& perm) {
    if (perm.forward.size() != csi.gains.size()) throw DimensionError("permute: permutation length differs from CSI");
    return {perm.apply<double>(csi.gains), csi.mu_db};
}

}  // namespace cajscc::csi
