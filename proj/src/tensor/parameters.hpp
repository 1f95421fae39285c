#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor/tensor.hpp"

namespace cajscc::nn {

// Named learnable tensors plus their Adam moments, and named non-learnable
// buffers (batch-norm running statistics) that travel with checkpoints.
class ParameterSet {
public:
    struct Entry {
        std::string name;
        Tensor value;
        std::vector<double> first_moment;
        std::vector<double> second_moment;
    };
    struct Buffer {
        std::string name;
        Tensor value;
    };

    // Registers a parameter (marked requires_grad) and returns its handle.
    Tensor add(std::string name, Tensor value);
    void add_buffer(std::string name, Tensor value);

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Buffer>& buffers() { return buffers_; }
    const std::vector<Buffer>& buffers() const { return buffers_; }

    const Entry* find(const std::string& name) const;
    std::size_t scalar_count() const;
    std::vector<Tensor> tensors() const;

    void zero_grad();
    std::uint64_t step() const { return step_; }
    void set_step(std::uint64_t s) { step_ = s; }

    // Deep copy of every parameter and buffer value (used for best-epoch
    // snapshots); restore() writes them back in place.
    std::vector<std::vector<double>> snapshot() const;
    void restore(const std::vector<std::vector<double>>& values);

private:
    bool has_name(const std::string& name) const;

    std::vector<Entry> entries_;
    std::vector<Buffer> buffers_;
    std::uint64_t step_ = 0;
};

struct AdamOptions {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One bias-corrected Adam update over every registered parameter. Throws
// TrainingError naming the first parameter without a gradient.
void adam_step(ParameterSet& params, const AdamOptions& options);

}  // namespace cajscc::nn
