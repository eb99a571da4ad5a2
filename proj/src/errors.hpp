#pragma once

#include <stdexcept>
#include <string>

namespace trca {

/// Error categories; they map 1:1 onto the C API status codes and the
/// CLI exit codes (config = 2, data = 3).
enum class ErrorKind {
    config,
    data,
    io,
    internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorKind::config, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorKind::data, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorKind::io, msg); }
[[noreturn]] inline void throw_internal(const std::string& msg) { throw Error(ErrorKind::internal, msg); }

}  // namespace trca
