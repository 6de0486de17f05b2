#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rdn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or image shapes that do not fit an operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values. Holds every problem found, not just the first.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& problems) {
        std::string out = "invalid configuration:";
        for (const auto& p : problems) {
            out += "\n  - ";
            out += p;
        }
        return out;
    }

    std::vector<std::string> problems_;
};

/// Unreadable, missing, or malformed files and datasets.
class DataError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf encountered in a loss or gradient.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace rdn
