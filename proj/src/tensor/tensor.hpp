#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cajscc::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until a backward pass reaches this tensor
    bool requires_grad = false;
};
}  // namespace detail

// Dense row-major array with an optional gradient buffer. Copies are shallow:
// two Tensor values can name the same storage, which is how parameters are
// shared between a model and its optimizer.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, bool requires_grad = false);
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false) { return Tensor(std::move(shape), requires_grad); }
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false) { return full({1}, value, requires_grad); }

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const { return impl_->data.size(); }

    std::span<double> data() { return impl_->data; }
    std::span<const double> data() const { return impl_->data; }
    double& operator[](std::size_t i) { return impl_->data[i]; }
    double operator[](std::size_t i) const { return impl_->data[i]; }
    double item() const;

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool on) const { impl_->requires_grad = on; }

    bool has_grad() const { return !impl_->grad.empty(); }
    // Gradient buffers belong to the shared storage, so they are reachable
    // through const handles (backward closures hold const copies).
    std::span<double> grad() const;
    // Allocates a zeroed gradient buffer if none exists yet.
    std::span<double> ensure_grad() const;
    void zero_grad() const { impl_->grad.clear(); }

    // Same values in fresh storage, detached from any tape.
    Tensor clone() const;
    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
    std::shared_ptr<detail::TensorImpl> impl_;
};

// Ordered record of the backward closures of executed operations. Operations
// record onto the tape that is active on the calling thread; with no active
// tape nothing is recorded and forward passes carry no autodiff overhead.
class Tape {
public:
    using Backward = std::function<void()>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void record(Backward fn) { entries_.push_back(std::move(fn)); }
    std::size_t size() const { return entries_.size(); }
    void clear() { entries_.clear(); }

    // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse order.
    void backward(Tensor& loss);

    static Tape* active();

    // RAII activation of a tape on the current thread.
    class Scope {
    public:
        explicit Scope(Tape& tape);
        ~Scope();
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

    private:
        Tape* previous_;
    };

private:
    std::vector<Backward> entries_;
};

// True when an operation on these inputs must be recorded.
bool needs_tape(std::initializer_list<const Tensor*> inputs);

}  // namespace cajscc::nn
