#include "tensor/parameters.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace cajscc::nn {

bool ParameterSet::has_name(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    for (const auto& b : buffers_)
        if (b.name == name) return true;
    return false;
}

Tensor ParameterSet::add(std::string name, Tensor value) {
    if (has_name(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    value.set_requires_grad(true);
    const std::size_t n = value.numel();
    entries_.push_back({std::move(name), value, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)});
    return value;
}

void ParameterSet::add_buffer(std::string name, Tensor value) {
    if (has_name(name)) throw ConfigError("duplicate buffer name '" + name + "'");
    buffers_.push_back({std::move(name), std::move(value)});
}

const ParameterSet::Entry* ParameterSet::find(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return &e;
    return nullptr;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
}

std::vector<Tensor> ParameterSet::tensors() const {
    std::vector<Tensor> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.value);
    return out;
}

void ParameterSet::zero_grad() {
    for (auto& e : entries_) e.value.zero_grad();
}

std::vector<std::vector<double>> ParameterSet::snapshot() const {
    std::vector<std::vector<double>> out;
    for (const auto& e : entries_) out.emplace_back(e.value.data().begin(), e.value.data().end());
    for (const auto& b : buffers_) out.emplace_back(b.value.data().begin(), b.value.data().end());
    return out;
}

void ParameterSet::restore(const std::vector<std::vector<double>>& values) {
    if (values.size() != entries_.size() + buffers_.size()) throw ConfigError("snapshot does not match parameter set");
    std::size_t i = 0;
    for (auto& e : entries_) {
        std::copy(values[i].begin(), values[i].end(), e.value.data().begin());
        ++i;
    }
    for (auto& b : buffers_) {
        std::copy(values[i].begin(), values[i].end(), b.value.data().begin());
        ++i;
    }
}

void adam_step(ParameterSet& params, const AdamOptions& o) {
    for (const auto& e : params.entries()) {
        if (!e.value.has_grad()) throw TrainingError("parameter '" + e.name + "' has no gradient");
    }
    const std::uint64_t t = params.step() + 1;
    const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(t));
    for (auto& e : params.entries()) {
        auto g = e.value.grad();
        auto p = e.value.data();
        for (std::size_t i = 0; i < p.size(); ++i) {
            e.first_moment[i] = o.beta1 * e.first_moment[i] + (1.0 - o.beta1) * g[i];
            e.second_moment[i] = o.beta2 * e.second_moment[i] + (1.0 - o.beta2) * g[i] * g[i];
            const double m_hat = e.first_moment[i] / c1;
            const double v_hat = e.second_moment[i] / c2;
            p[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
        }
    }
    params.set_step(t);
}

}  // namespace cajscc::nn
