#include "tensor/ops.hpp"

#include <cblas.h>

#include <cmath>
#include <string>

#include "common/error.hpp"

namespace cajscc::nn {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw DimensionError(msg);
}

void accumulate(const Tensor& t, std::span<const double> g) {
    auto dst = t.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

// Row-major C (m x n) = alpha * op(A) * op(B) + beta * C.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const double* a,
          const double* b, double beta, double* c) {
    const int lda = static_cast<int>(trans_a ? m : k);
    const int ldb = static_cast<int>(trans_b ? k : n);
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
                static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), 1.0, a, lda, b, ldb, beta, c,
                static_cast<int>(n));
}

struct Patch {
    std::size_t channels, in_h, in_w, kernel, stride, padding, out_h, out_w;
    std::size_t rows() const { return channels * kernel * kernel; }
    std::size_t cols() const { return out_h * out_w; }
};

// cols[(c*k+ki)*k+kj][oh*out_w+ow] = image[c][oh*s-p+ki][ow*s-p+kj] (zero outside).
void im2col(const Patch& p, const double* image, double* cols) {
    for (std::size_t c = 0; c < p.channels; ++c) {
        for (std::size_t ki = 0; ki < p.kernel; ++ki) {
            for (std::size_t kj = 0; kj < p.kernel; ++kj) {
                double* row = cols + ((c * p.kernel + ki) * p.kernel + kj) * p.cols();
                for (std::size_t oh = 0; oh < p.out_h; ++oh) {
                    const long ih = static_cast<long>(oh * p.stride + ki) - static_cast<long>(p.padding);
                    for (std::size_t ow = 0; ow < p.out_w; ++ow) {
                        const long iw = static_cast<long>(ow * p.stride + kj) - static_cast<long>(p.padding);
                        const bool inside = ih >= 0 && iw >= 0 && ih < static_cast<long>(p.in_h) &&
                                            iw < static_cast<long>(p.in_w);
                        row[oh * p.out_w + ow] =
                            inside ? image[(c * p.in_h + static_cast<std::size_t>(ih)) * p.in_w +
                                           static_cast<std::size_t>(iw)]
                                   : 0.0;
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-adds columns back into the image.
void col2im(const Patch& p, const double* cols, double* image) {
    for (std::size_t c = 0; c < p.channels; ++c) {
        for (std::size_t ki = 0; ki < p.kernel; ++ki) {
            for (std::size_t kj = 0; kj < p.kernel; ++kj) {
                const double* row = cols + ((c * p.kernel + ki) * p.kernel + kj) * p.cols();
                for (std::size_t oh = 0; oh < p.out_h; ++oh) {
                    const long ih = static_cast<long>(oh * p.stride + ki) - static_cast<long>(p.padding);
                    if (ih < 0 || ih >= static_cast<long>(p.in_h)) continue;
                    for (std::size_t ow = 0; ow < p.out_w; ++ow) {
                        const long iw = static_cast<long>(ow * p.stride + kj) - static_cast<long>(p.padding);
                        if (iw < 0 || iw >= static_cast<long>(p.in_w)) continue;
                        image[(c * p.in_h + static_cast<std::size_t>(ih)) * p.in_w + static_cast<std::size_t>(iw)] +=
                            row[oh * p.out_w + ow];
                    }
                }
            }
        }
    }
}

// Promotes an unbatched [C,H,W] map to [1,C,H,W].
struct Batched {
    Tensor t;
    bool squeezed;
};

Batched as_batched(const Tensor& x, const char* op) {
    if (x.rank() == 4) return {x, false};
    require(x.rank() == 3, std::string(op) + ": expected [C,H,W] or [N,C,H,W], got " + shape_str(x.shape()));
    return {reshape(x, {1, x.dim(0), x.dim(1), x.dim(2)}), true};
}

Tensor unbatch(const Tensor& y, bool squeezed) {
    return squeezed ? reshape(y, {y.dim(1), y.dim(2), y.dim(3)}) : y;
}

}  // namespace

void BatchNormState::seed_identity() {
    std::fill(running_mean.data().begin(), running_mean.data().end(), 0.0);
    std::fill(running_var.data().begin(), running_var.data().end(), 1.0);
    initialized = true;
}

Tensor fully_connected(const Tensor& x, const Tensor& weights, const Tensor& bias) {
    require(weights.rank() == 2, "fully_connected: weights must be [n_out, n_in], got " + shape_str(weights.shape()));
    const std::size_t n_out = weights.dim(0);
    const std::size_t n_in = weights.dim(1);
    require(x.rank() == 1 || x.rank() == 2, "fully_connected: input must be [n_in] or [N, n_in]");
    const bool batched = x.rank() == 2;
    const std::size_t n = batched ? x.dim(0) : 1;
    const std::size_t x_in = batched ? x.dim(1) : x.dim(0);
    require(x_in == n_in, "fully_connected: input axis " + std::to_string(batched ? 1 : 0) + " has size " +
                              std::to_string(x_in) + ", weights expect " + std::to_string(n_in));
    require(bias.rank() == 1 && bias.dim(0) == n_out, "fully_connected: bias axis 0 has size " +
                                                          std::to_string(bias.numel()) + ", expected " +
                                                          std::to_string(n_out));

    Tensor y(batched ? Shape{n, n_out} : Shape{n_out});
    auto yd = y.data();
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < n_out; ++o) yd[r * n_out + o] = bias[o];
    gemm(false, true, n, n_out, n_in, x.data().data(), weights.data().data(), 1.0, yd.data());

    if (needs_tape({&x, &weights, &bias})) {
        y.set_requires_grad(true);
        Tape::active()->record([x, weights, bias, y, n, n_in, n_out]() mutable {
            if (!y.has_grad()) return;
            const double* gy = y.grad().data();
            if (x.requires_grad())
                gemm(false, false, n, n_in, n_out, gy, weights.data().data(), 1.0, x.ensure_grad().data());
            if (weights.requires_grad())
                gemm(true, false, n_out, n_in, n, gy, x.data().data(), 1.0, weights.ensure_grad().data());
            if (bias.requires_grad()) {
                auto gb = bias.ensure_grad();
                for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t o = 0; o < n_out; ++o) gb[o] += gy[r * n_out + o];
            }
        });
    }
    return y;
}

std::size_t conv_output_size(std::size_t in, std::size_t kernel, const ConvGeometry& g) {
    const long span = static_cast<long>(in + 2 * g.padding) - static_cast<long>(kernel);
    if (span < 0 || g.stride == 0) {
        throw ConfigError("conv2d: kernel " + std::to_string(kernel) + " does not fit input " + std::to_string(in) +
                          " with padding " + std::to_string(g.padding));
    }
    return static_cast<std::size_t>(span) / g.stride + 1;
}

std::size_t conv_transpose_output_size(std::size_t in, std::size_t kernel, const ConvGeometry& g) {
    const long out = static_cast<long>((in - 1) * g.stride + kernel + g.output_padding) -
                     static_cast<long>(2 * g.padding);
    if (in == 0 || out <= 0 || g.stride == 0) {
        throw ConfigError("conv_transpose2d: non-positive output size for input " + std::to_string(in));
    }
    if (g.output_padding >= g.stride && g.output_padding >= 1) {
        throw ConfigError("conv_transpose2d: output_padding must be smaller than stride");
    }
    return static_cast<std::size_t>(out);
}

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias, const ConvGeometry& g) {
    const Batched bx = as_batched(input, "conv2d");
    Tensor x = bx.t;
    const bool squeezed = bx.squeezed;
    require(weights.rank() == 4 && weights.dim(2) == weights.dim(3),
            "conv2d: weights must be [C_out, C_in, k, k], got " + shape_str(weights.shape()));
    const std::size_t n = x.dim(0), c_in = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t c_out = weights.dim(0), k = weights.dim(2);
    require(weights.dim(1) == c_in, "conv2d: input axis 1 has " + std::to_string(c_in) + " channels, weights expect " +
                                        std::to_string(weights.dim(1)));
    require(bias.numel() == c_out, "conv2d: bias axis 0 has size " + std::to_string(bias.numel()) + ", expected " +
                                       std::to_string(c_out));
    const Patch p{c_in, h, w, k, g.stride, g.padding, conv_output_size(h, k, g), conv_output_size(w, k, g)};

    Tensor y({n, c_out, p.out_h, p.out_w});
    std::vector<double> cols(p.rows() * p.cols());
    const std::size_t in_sz = c_in * h * w, out_sz = c_out * p.cols();
    for (std::size_t b = 0; b < n; ++b) {
        im2col(p, x.data().data() + b * in_sz, cols.data());
        double* yb = y.data().data() + b * out_sz;
        for (std::size_t o = 0; o < c_out; ++o)
            std::fill(yb + o * p.cols(), yb + (o + 1) * p.cols(), bias[o]);
        gemm(false, false, c_out, p.cols(), p.rows(), weights.data().data(), cols.data(), 1.0, yb);
    }

    if (needs_tape({&x, &weights, &bias})) {
        y.set_requires_grad(true);
        Tape::active()->record([x, weights, bias, y, p, n, c_out, in_sz, out_sz]() mutable {
            if (!y.has_grad()) return;
            std::vector<double> cols(p.rows() * p.cols());
            std::vector<double> dcols(p.rows() * p.cols());
            for (std::size_t b = 0; b < n; ++b) {
                const double* gy = y.grad().data() + b * out_sz;
                if (weights.requires_grad()) {
                    im2col(p, x.data().data() + b * in_sz, cols.data());
                    gemm(false, true, c_out, p.rows(), p.cols(), gy, cols.data(), 1.0,
                         weights.ensure_grad().data());
                }
                if (x.requires_grad()) {
                    gemm(true, false, p.rows(), p.cols(), c_out, weights.data().data(), gy, 0.0, dcols.data());
                    col2im(p, dcols.data(), x.ensure_grad().data() + b * in_sz);
                }
                if (bias.requires_grad()) {
                    auto gb = bias.ensure_grad();
                    for (std::size_t o = 0; o < c_out; ++o)
                        for (std::size_t i = 0; i < p.cols(); ++i) gb[o] += gy[o * p.cols() + i];
                }
            }
        });
    }
    return unbatch(y, squeezed);
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weights, const Tensor& bias, const ConvGeometry& g) {
    const Batched bx = as_batched(input, "conv_transpose2d");
    Tensor x = bx.t;
    const bool squeezed = bx.squeezed;
    require(weights.rank() == 4 && weights.dim(2) == weights.dim(3),
            "conv_transpose2d: weights must be [C_in, C_out, k, k], got " + shape_str(weights.shape()));
    const std::size_t n = x.dim(0), c_in = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t c_out = weights.dim(1), k = weights.dim(2);
    require(weights.dim(0) == c_in, "conv_transpose2d: input axis 1 has " + std::to_string(c_in) +
                                        " channels, weights expect " + std::to_string(weights.dim(0)));
    require(bias.numel() == c_out, "conv_transpose2d: bias axis 0 has size " + std::to_string(bias.numel()) +
                                       ", expected " + std::to_string(c_out));
    const std::size_t out_h = conv_transpose_output_size(h, k, g);
    const std::size_t out_w = conv_transpose_output_size(w, k, g);
    // Geometry of the forward convolution this operation is the adjoint of.
    const Patch p{c_out, out_h, out_w, k, g.stride, g.padding, h, w};
    require(conv_output_size(out_h, k, g) == h && conv_output_size(out_w, k, g) == w,
            "conv_transpose2d: inconsistent geometry");

    Tensor y({n, c_out, out_h, out_w});
    std::vector<double> cols(p.rows() * p.cols());
    const std::size_t in_sz = c_in * h * w, out_sz = c_out * out_h * out_w, plane = out_h * out_w;
    for (std::size_t b = 0; b < n; ++b) {
        gemm(true, false, p.rows(), p.cols(), c_in, weights.data().data(), x.data().data() + b * in_sz, 0.0,
             cols.data());
        double* yb = y.data().data() + b * out_sz;
        col2im(p, cols.data(), yb);
        for (std::size_t o = 0; o < c_out; ++o)
            for (std::size_t i = 0; i < plane; ++i) yb[o * plane + i] += bias[o];
    }

    if (needs_tape({&x, &weights, &bias})) {
        y.set_requires_grad(true);
        Tape::active()->record([x, weights, bias, y, p, n, c_in, c_out, in_sz, out_sz, plane]() mutable {
            if (!y.has_grad()) return;
            std::vector<double> gcols(p.rows() * p.cols());
            for (std::size_t b = 0; b < n; ++b) {
                const double* gy = y.grad().data() + b * out_sz;
                im2col(p, gy, gcols.data());
                if (x.requires_grad())
                    gemm(false, false, c_in, p.cols(), p.rows(), weights.data().data(), gcols.data(), 1.0,
                         x.ensure_grad().data() + b * in_sz);
                if (weights.requires_grad())
                    gemm(false, true, c_in, p.rows(), p.cols(), x.data().data() + b * in_sz, gcols.data(), 1.0,
                         weights.ensure_grad().data());
                if (bias.requires_grad()) {
                    auto gb = bias.ensure_grad();
                    for (std::size_t o = 0; o < c_out; ++o)
                        for (std::size_t i = 0; i < plane; ++i) gb[o] += gy[o * plane + i];
                }
            }
        });
    }
    return unbatch(y, squeezed);
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, Mode mode) {
    require(x.rank() == 4 || x.rank() == 2, "batch_norm: expected [N,C,H,W] or [N,C], got " + shape_str(x.shape()));
    const std::size_t n = x.dim(0), c = x.dim(1);
    const std::size_t plane = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
    require(gamma.numel() == c && beta.numel() == c && state.running_mean.numel() == c,
            "batch_norm: axis 1 has " + std::to_string(c) + " channels, parameters expect " +
                std::to_string(gamma.numel()));
    const double count = static_cast<double>(n * plane);

    std::vector<double> mean(c), inv_std(c);
    if (mode == Mode::Train) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            double s = 0.0;
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t i = 0; i < plane; ++i) s += x[(b * c + ch) * plane + i];
            const double mu = s / count;
            double v = 0.0;
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t i = 0; i < plane; ++i) {
                    const double d = x[(b * c + ch) * plane + i] - mu;
                    v += d * d;
                }
            v /= count;
            mean[ch] = mu;
            inv_std[ch] = 1.0 / std::sqrt(v + state.eps);
            const double unbiased = count > 1.0 ? v * count / (count - 1.0) : v;
            if (!state.initialized) {
                state.running_mean[ch] = 0.0;
                state.running_var[ch] = 1.0;
            }
            state.running_mean[ch] = (1.0 - state.momentum) * state.running_mean[ch] + state.momentum * mu;
            state.running_var[ch] = (1.0 - state.momentum) * state.running_var[ch] + state.momentum * unbiased;
        }
        state.initialized = true;
    } else {
        if (!state.initialized) {
            throw TrainingError("batch_norm: eval mode requested before running statistics were initialized");
        }
        for (std::size_t ch = 0; ch < c; ++ch) {
            mean[ch] = state.running_mean[ch];
            inv_std[ch] = 1.0 / std::sqrt(state.running_var[ch] + state.eps);
        }
    }

    Tensor y(x.shape());
    Tensor xhat(x.shape());
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < plane; ++i) {
                const std::size_t idx = (b * c + ch) * plane + i;
                xhat[idx] = (x[idx] - mean[ch]) * inv_std[ch];
                y[idx] = gamma[ch] * xhat[idx] + beta[ch];
            }

    if (needs_tape({&x, &gamma, &beta})) {
        y.set_requires_grad(true);
        Tape::active()->record([x, gamma, beta, y, xhat, inv_std, n, c, plane, count, mode]() mutable {
            if (!y.has_grad()) return;
            auto gy = y.grad();
            for (std::size_t ch = 0; ch < c; ++ch) {
                double sum_g = 0.0, sum_gx = 0.0;
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t i = 0; i < plane; ++i) {
                        const std::size_t idx = (b * c + ch) * plane + i;
                        sum_g += gy[idx];
                        sum_gx += gy[idx] * xhat[idx];
                    }
                if (gamma.requires_grad()) gamma.ensure_grad()[ch] += sum_gx;
                if (beta.requires_grad()) beta.ensure_grad()[ch] += sum_g;
                if (!x.requires_grad()) continue;
                auto gx = x.ensure_grad();
                const double k = gamma[ch] * inv_std[ch];
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t i = 0; i < plane; ++i) {
                        const std::size_t idx = (b * c + ch) * plane + i;
                        if (mode == Mode::Train) {
                            gx[idx] += k * (gy[idx] - sum_g / count - xhat[idx] * sum_gx / count);
                        } else {
                            gx[idx] += k * gy[idx];
                        }
                    }
            }
        });
    }
    return y;
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
    require(slope.numel() == 1, "prelu: slope must be a single scalar, got " + shape_str(slope.shape()));
    const double a = slope[0];
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) y[i] = x[i] >= 0.0 ? x[i] : a * x[i];
    if (needs_tape({&x, &slope})) {
        y.set_requires_grad(true);
        Tape::active()->record([x, slope, y, a]() mutable {
            if (!y.has_grad()) return;
            auto gy = y.grad();
            if (x.requires_grad()) {
                auto gx = x.ensure_grad();
                for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += x[i] >= 0.0 ? gy[i] : a * gy[i];
            }
            if (slope.requires_grad()) {
                double s = 0.0;
                for (std::size_t i = 0; i < gy.size(); ++i)
                    if (x[i] < 0.0) s += gy[i] * x[i];
                slope.ensure_grad()[0] += s;
            }
        });
    }
    return y;
}

Tensor sigmoid(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    if (needs_tape({&x})) {
        y.set_requires_grad(true);
        Tape::active()->record([x, y]() mutable {
            if (!y.has_grad()) return;
            auto gy = y.grad();
            auto gx = x.ensure_grad();
            for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * y[i] * (1.0 - y[i]);
        });
    }
    return y;
}

Tensor avg_pool_channelwise(const Tensor& input) {
    const Batched bx = as_batched(input, "avg_pool_channelwise");
    Tensor x = bx.t;
    const bool squeezed = bx.squeezed;
    const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
    Tensor y({n, c});
    for (std::size_t r = 0; r < n * c; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += x[r * plane + i];
        y[r] = s / static_cast<double>(plane);
    }
    if (needs_tape({&x})) {
        y.set_requires_grad(true);
        Tape::active()->record([x, y, n, c, plane]() mutable {
            if (!y.has_grad()) return;
            auto gy = y.grad();
            auto gx = x.ensure_grad();
            for (std::size_t r = 0; r < n * c; ++r)
                for (std::size_t i = 0; i < plane; ++i) gx[r * plane + i] += gy[r] / static_cast<double>(plane);
        });
    }
    return squeezed ? reshape(y, {c}) : y;
}

Tensor avg_pool_spatial(const Tensor& input) {
    const Batched bx = as_batched(input, "avg_pool_spatial");
    Tensor x = bx.t;
    const bool squeezed = bx.squeezed;
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3), plane = h * w;
    Tensor y({n, h, w});
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < plane; ++i) {
            double s = 0.0;
            for (std::size_t ch = 0; ch < c; ++ch) s += x[(b * c + ch) * plane + i];
            y[b * plane + i] = s / static_cast<double>(c);
        }
    if (needs_tape({&x})) {
        y.set_requires_grad(true);
        Tape::active()->record([x, y, n, c, plane]() mutable {
            if (!y.has_grad()) return;
            auto gy = y.grad();
            auto gx = x.ensure_grad();
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t ch = 0; ch < c; ++ch)
                    for (std::size_t i = 0; i < plane; ++i)
                        gx[(b * c + ch) * plane + i] += gy[b * plane + i] / static_cast<double>(c);
        });
    }
    return squeezed ? reshape(y, {h, w}) : y;
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
    require(a.rank() == b.rank() && axis < a.rank(), "concat: rank mismatch " + shape_str(a.shape()) + " vs " +
                                                         shape_str(b.shape()) + " on axis " + std::to_string(axis));
    for (std::size_t d = 0; d < a.rank(); ++d) {
        require(d == axis || a.dim(d) == b.dim(d), "concat: axis " + std::to_string(d) + " differs (" +
                                                       std::to_string(a.dim(d)) + " vs " + std::to_string(b.dim(d)) +
                                                       ")");
    }
    std::size_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= a.dim(d);
    const std::size_t a_inner = a.numel() / outer, b_inner = b.numel() / outer;
    Shape shape = a.shape();
    shape[axis] += b.dim(axis);
    Tensor y(shape);
    for (std::size_t o = 0; o < outer; ++o) {
        std::copy_n(a.data().begin() + o * a_inner, a_inner, y.data().begin() + o * (a_inner + b_inner));
        std::copy_n(b.data().begin() + o * b_inner, b_inner, y.data().begin() + o * (a_inner + b_inner) + a_inner);
    }
    if (needs_tape({&a, &b})) {
        y.set_requires_grad(true);
        Tape::active()->record([a, b, y, outer, a_inner, b_inner]() mutable {
            if (!y.has_grad()) return;
            auto gy = y.grad();
            for (std::size_t o = 0; o < outer; ++o) {
                const std::size_t base = o * (a_inner + b_inner);
                if (a.requires_grad()) {
                    auto ga = a.ensure_grad();
                    for (std::size_t i = 0; i < a_inner; ++i) ga[o * a_inner + i] += gy[base + i];
                }
                if (b.requires_grad()) {
                    auto gb = b.ensure_grad();
                    for (std::size_t i = 0; i < b_inner; ++i) gb[o * b_inner + i] += gy[base + a_inner + i];
                }
            }
        });
    }
    return y;
}

Tensor elementwise_mul_broadcast(const Tensor& features, const Tensor& mask) {
    require(features.rank() == 3 || features.rank() == 4,
            "elementwise_mul_broadcast: features must be [C,H,W] or [N,C,H,W], got " + shape_str(features.shape()));
    const bool batched = features.rank() == 4;
    const std::size_t off = batched ? 1 : 0;
    const std::size_t n = batched ? features.dim(0) : 1;
    const std::size_t c = features.dim(off), h = features.dim(off + 1), w = features.dim(off + 2);
    const std::size_t plane = h * w;

    bool channel_mask = false;
    if (mask.rank() == features.rank() - 2) {
        require((!batched || mask.dim(0) == n) && mask.dim(off) == c,
                "elementwise_mul_broadcast: channel mask " + shape_str(mask.shape()) + " does not match features " +
                    shape_str(features.shape()));
        channel_mask = true;
    } else if (mask.rank() == features.rank() - 1) {
        require((!batched || mask.dim(0) == n) && mask.dim(off) == h && mask.dim(off + 1) == w,
                "elementwise_mul_broadcast: spatial mask " + shape_str(mask.shape()) + " does not match features " +
                    shape_str(features.shape()));
    } else {
        throw DimensionError("elementwise_mul_broadcast: mask " + shape_str(mask.shape()) +
                             " is neither a channel nor a spatial mask for features " + shape_str(features.shape()));
    }

    auto mask_index = [=](std::size_t b, std::size_t ch, std::size_t i) {
        return channel_mask ? b * c + ch : b * plane + i;
    };

    Tensor y(features.shape());
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < plane; ++i) {
                const std::size_t idx = (b * c + ch) * plane + i;
                y[idx] = features[idx] * mask[mask_index(b, ch, i)];
            }
    if (needs_tape({&features, &mask})) {
        y.set_requires_grad(true);
        Tape::active()->record([features, mask, y, n, c, plane, mask_index]() mutable {
            if (!y.has_grad()) return;
            auto gy = y.grad();
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t ch = 0; ch < c; ++ch)
                    for (std::size_t i = 0; i < plane; ++i) {
                        const std::size_t idx = (b * c + ch) * plane + i;
                        const std::size_t m = mask_index(b, ch, i);
                        if (features.requires_grad()) features.ensure_grad()[idx] += gy[idx] * mask[m];
                        if (mask.requires_grad()) mask.ensure_grad()[m] += gy[idx] * features[idx];
                    }
        });
    }
    return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
    require(shape_numel(shape) == x.numel(),
            "reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    Tensor y(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
    if (needs_tape({&x})) {
        y.set_requires_grad(true);
        Tape::active()->record([x, y]() mutable {
            if (y.has_grad()) accumulate(x, y.grad());
        });
    }
    return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Tensor y(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) y[i] = a[i] + b[i];
    if (needs_tape({&a, &b})) {
        y.set_requires_grad(true);
        Tape::active()->record([a, b, y]() mutable {
            if (!y.has_grad()) return;
            if (a.requires_grad()) accumulate(a, y.grad());
            if (b.requires_grad()) accumulate(b, y.grad());
        });
    }
    return y;
}

Tensor scale(const Tensor& x, double factor) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) y[i] = factor * x[i];
    if (needs_tape({&x})) {
        y.set_requires_grad(true);
        Tape::active()->record([x, y, factor]() mutable {
            if (!y.has_grad()) return;
            auto gy = y.grad();
            auto gx = x.ensure_grad();
            for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += factor * gy[i];
        });
    }
    return y;
}

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    Tensor y = Tensor::scalar(s);
    if (needs_tape({&x})) {
        y.set_requires_grad(true);
        Tape::active()->record([x, y]() mutable {
            if (!y.has_grad()) return;
            const double g = y.grad()[0];
            for (double& v : x.ensure_grad()) v += g;
        });
    }
    return y;
}

Tensor mse_loss(const Tensor& prediction, const Tensor& target) {
    require(prediction.shape() == target.shape(), "mse_loss: shape mismatch " + shape_str(prediction.shape()) +
                                                      " vs " + shape_str(target.shape()));
    const double count = static_cast<double>(prediction.numel());
    double s = 0.0;
    for (std::size_t i = 0; i < prediction.numel(); ++i) {
        const double d = prediction[i] - target[i];
        s += d * d;
    }
    Tensor y = Tensor::scalar(s / count);
    if (needs_tape({&prediction, &target})) {
        y.set_requires_grad(true);
        Tape::active()->record([prediction, target, y, count]() mutable {
            if (!y.has_grad()) return;
            const double g = y.grad()[0];
            for (std::size_t i = 0; i < prediction.numel(); ++i) {
                const double d = 2.0 * (prediction[i] - target[i]) / count * g;
                if (prediction.requires_grad()) prediction.ensure_grad()[i] += d;
                if (target.requires_grad()) target.ensure_grad()[i] -= d;
            }
        });
    }
    return y;
}

}  // namespace cajscc::nn
