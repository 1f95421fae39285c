#pragma once

#include <stdexcept>
#include <string>

namespace cajscc {

// Error categories map one-to-one onto the C API status codes.
enum class ErrorKind {
    Dimension,
    Config,
    Format,
    Io,
    Numeric,
    Training,
    Estimation,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& w) : Error(ErrorKind::Dimension, w) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& w) : Error(ErrorKind::Format, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};
struct TrainingError : Error {
    explicit TrainingError(const std::string& w) : Error(ErrorKind::Training, w) {}
};
struct EstimationError : Error {
    explicit EstimationError(const std::string& w) : Error(ErrorKind::Estimation, w) {}
};

}  // namespace cajscc
