#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace cajscc::phy {

using cplx = std::complex<double>;

// rows x cols block of complex symbols: rows are OFDM symbols, columns are
// subcarriers (or time samples after the IFFT).
class ComplexGrid {
public:
    ComplexGrid() = default;
    ComplexGrid(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols) {}
    ComplexGrid(std::size_t rows, std::size_t cols, std::vector<cplx> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }

    cplx& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    std::span<cplx> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const cplx> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
    std::span<cplx> values() { return values_; }
    std::span<const cplx> values() const { return values_; }

    double squared_norm() const;
    double mean_power() const { return values_.empty() ? 0.0 : squared_norm() / static_cast<double>(size()); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> values_;
};

}  // namespace cajscc::phy
