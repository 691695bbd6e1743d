#pragma once

#include <stdexcept>
#include <string>

namespace edenet {

// Error taxonomy shared by the library and the CLI exit-code mapping.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateInputError : NumericError {
    explicit DegenerateInputError(const std::string& msg) : NumericError(msg) {}
};

struct MiningError : std::runtime_error {
    explicit MiningError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace edenet
