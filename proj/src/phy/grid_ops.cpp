#include "phy/grid_ops.hpp"

#include <cmath>
#include <string>

#include "common/error.hpp"

namespace cajscc::phy {

using nn::Tensor;

namespace {

struct GridDims {
    std::size_t batch, rows, cols;
    std::size_t item() const { return 2 * rows * cols; }
    std::size_t plane() const { return rows * cols; }
};

GridDims dims_of(const Tensor& t, const char* op) {
    if (t.rank() != 4 || t.dim(1) != 2) {
        throw DimensionError(std::string(op) + ": expected [B, 2, N_s, L_f], got " + nn::shape_str(t.shape()));
    }
    return {t.dim(0), t.dim(2), t.dim(3)};
}

}  // namespace

Tensor grids_to_tensor(std::span<const ComplexGrid> grids) {
    if (grids.empty()) throw DimensionError("grids_to_tensor: empty batch");
    const std::size_t rows = grids[0].rows(), cols = grids[0].cols();
    Tensor t({grids.size(), 2, rows, cols});
    const std::size_t plane = rows * cols;
    for (std::size_t b = 0; b < grids.size(); ++b) {
        if (grids[b].rows() != rows || grids[b].cols() != cols) {
            throw DimensionError("grids_to_tensor: grids differ in shape");
        }
        for (std::size_t i = 0; i < plane; ++i) {
            t[b * 2 * plane + i] = grids[b].values()[i].real();
            t[b * 2 * plane + plane + i] = grids[b].values()[i].imag();
        }
    }
    return t;
}

ComplexGrid tensor_to_grid(const Tensor& t, std::size_t item) {
    const GridDims d = dims_of(t, "tensor_to_grid");
    if (item >= d.batch) throw DimensionError("tensor_to_grid: item out of range");
    ComplexGrid g(d.rows, d.cols);
    const std::size_t base = item * d.item();
    for (std::size_t i = 0; i < d.plane(); ++i) g.values()[i] = {t[base + i], t[base + d.plane() + i]};
    return g;
}

Tensor power_normalize(const Tensor& x, double p_s) {
    const GridDims d = dims_of(x, "power_normalize");
    const std::size_t m = d.item();
    const double symbols = static_cast<double>(d.plane());
    Tensor y(x.shape());
    std::vector<double> norm2(d.batch), factor(d.batch);
    for (std::size_t b = 0; b < d.batch; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += x[b * m + i] * x[b * m + i];
        if (!(s > 0.0)) throw NumericError("power_normalize: batch item " + std::to_string(b) + " is all zeros");
        norm2[b] = s;
        factor[b] = std::sqrt(p_s * symbols / s);
        for (std::size_t i = 0; i < m; ++i) y[b * m + i] = factor[b] * x[b * m + i];
    }
    if (nn::needs_tape({&x})) {
        y.set_requires_grad(true);
        nn::Tape::active()->record([x, y, d, m, norm2, factor]() {
            if (!y.has_grad()) return;
            auto gy = y.grad();
            auto gx = x.ensure_grad();
            // y = k x with k = sqrt(P N / |x|^2):  dx = k (g - x (x.g) / |x|^2).
            for (std::size_t b = 0; b < d.batch; ++b) {
                double dot = 0.0;
                for (std::size_t i = 0; i < m; ++i) dot += x[b * m + i] * gy[b * m + i];
                for (std::size_t i = 0; i < m; ++i) {
                    gx[b * m + i] += factor[b] * (gy[b * m + i] - x[b * m + i] * dot / norm2[b]);
                }
            }
        });
    }
    return y;
}

Tensor scale_subcarriers(const Tensor& x, std::span<const std::vector<cplx>> coeffs) {
    const GridDims d = dims_of(x, "scale_subcarriers");
    if (coeffs.size() != d.batch) throw DimensionError("scale_subcarriers: one coefficient vector per item required");
    for (const auto& c : coeffs) {
        if (c.size() != d.cols) {
            throw DimensionError("scale_subcarriers: coefficient vector has " + std::to_string(c.size()) +
                                 " entries, grid has " + std::to_string(d.cols) + " subcarriers");
        }
    }
    std::vector<std::vector<cplx>> a(coeffs.begin(), coeffs.end());
    Tensor y(x.shape());
    const std::size_t plane = d.plane();
    for (std::size_t b = 0; b < d.batch; ++b) {
        const std::size_t base = b * d.item();
        for (std::size_t r = 0; r < d.rows; ++r)
            for (std::size_t k = 0; k < d.cols; ++k) {
                const std::size_t i = r * d.cols + k;
                const cplx v = a[b][k] * cplx(x[base + i], x[base + plane + i]);
                y[base + i] = v.real();
                y[base + plane + i] = v.imag();
            }
    }
    if (nn::needs_tape({&x})) {
        y.set_requires_grad(true);
        nn::Tape::active()->record([x, y, d, a = std::move(a)]() {
            if (!y.has_grad()) return;
            auto gy = y.grad();
            auto gx = x.ensure_grad();
            const std::size_t plane = d.plane();
            for (std::size_t b = 0; b < d.batch; ++b) {
                const std::size_t base = b * d.item();
                for (std::size_t r = 0; r < d.rows; ++r)
                    for (std::size_t k = 0; k < d.cols; ++k) {
                        const std::size_t i = r * d.cols + k;
                        const double ar = a[b][k].real(), ai = a[b][k].imag();
                        const double gr = gy[base + i], gi = gy[base + plane + i];
                        gx[base + i] += ar * gr + ai * gi;
                        gx[base + plane + i] += -ai * gr + ar * gi;
                    }
            }
        });
    }
    return y;
}

Tensor gather_subcarriers(const Tensor& x, std::span<const std::vector<std::size_t>> index) {
    const GridDims d = dims_of(x, "gather_subcarriers");
    if (index.size() != d.batch) throw DimensionError("gather_subcarriers: one index map per item required");
    for (const auto& m : index) {
        if (m.size() != d.cols) throw DimensionError("gather_subcarriers: index map length differs from L_f");
        for (auto k : m)
            if (k >= d.cols) throw DimensionError("gather_subcarriers: index out of range");
    }
    std::vector<std::vector<std::size_t>> idx(index.begin(), index.end());
    Tensor y(x.shape());
    const std::size_t rows = 2 * d.rows;
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t base = b * d.item() + r * d.cols;
            for (std::size_t k = 0; k < d.cols; ++k) y[base + k] = x[base + idx[b][k]];
        }
    if (nn::needs_tape({&x})) {
        y.set_requires_grad(true);
        nn::Tape::active()->record([x, y, d, rows, idx = std::move(idx)]() {
            if (!y.has_grad()) return;
            auto gy = y.grad();
            auto gx = x.ensure_grad();
            for (std::size_t b = 0; b < d.batch; ++b)
                for (std::size_t r = 0; r < rows; ++r) {
                    const std::size_t base = b * d.item() + r * d.cols;
                    for (std::size_t k = 0; k < d.cols; ++k) gx[base + idx[b][k]] += gy[base + k];
                }
        });
    }
    return y;
}

}  // namespace cajscc::phy
