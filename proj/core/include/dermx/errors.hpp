#ifndef DERMX_ERRORS_HPP
#define DERMX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dermx {

// Error categories map 1:1 onto CLI exit codes and the single-line
// machine-parsable "error: category=..." output.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed annotation files, dangling mask references, shape mismatches.
struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dermx

#endif  // DERMX_ERRORS_HPP
