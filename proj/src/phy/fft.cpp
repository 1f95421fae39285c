#include "phy/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace cajscc::phy {

namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are cached per (size, direction) for the process lifetime.
fftw_plan plan_for(int n, int sign) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, fftw_plan> plans;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(n, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    std::vector<cplx> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
    fftw_plan p = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(in.data()),
                                   reinterpret_cast<fftw_complex*>(out.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans.emplace(key, p);
    return p;
}

std::vector<cplx> transform(std::span<const cplx> x, int sign) {
    std::vector<cplx> in(x.begin(), x.end());
    std::vector<cplx> out(x.size());
    if (x.empty()) return out;
    fftw_execute_dft(plan_for(static_cast<int>(x.size()), sign), reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

}  // namespace

std::vector<cplx> fft(std::span<const cplx> x) { return transform(x, FFTW_FORWARD); }

std::vector<cplx> ifft(std::span<const cplx> x) {
    auto out = transform(x, FFTW_BACKWARD);
    const double inv = 1.0 / static_cast<double>(x.size());
    for (auto& v : out) v *= inv;
    return out;
}

}  // namespace cajscc::phy
