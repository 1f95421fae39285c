#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "csi/estimation.hpp"
#include "model/model_config.hpp"
#include "phy/ofdm.hpp"
#include "train/trainer.hpp"

namespace cajscc::app {

// Flat dotted key=value configuration. Every key has a default; unknown keys
// are rejected. Lines starting with '#' and blank lines are ignored.
class RunConfig {
public:
    RunConfig();

    static const std::vector<std::string>& keys();

    void load_file(const std::string& path);
    void parse_text(const std::string& text, const std::string& origin = "config");
    void set(const std::string& key, const std::string& value);
    // Parses "key=value".
    void set_assignment(const std::string& assignment);
    const std::string& get(const std::string& key) const;

    // Throws ConfigError naming the first offending key.
    void validate() const;

    // Sorted key=value lines covering every key.
    std::string resolved() const;
    void write_resolved(const std::string& path) const;

    std::uint64_t seed() const;
    phy::OfdmConfig ofdm() const;
    model::ModelConfig model() const;
    train::TrainConfig train() const;
    csi::EstimatorKind estimator() const;

    double get_double(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::size_t> get_size_list(const std::string& key) const;
    std::vector<std::string> get_string_list(const std::string& key) const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace cajscc::app
