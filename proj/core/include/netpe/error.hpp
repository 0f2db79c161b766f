#pragma once

/// @file error.hpp
/// @brief Exception hierarchy shared by every netpe component.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace netpe {

/// Base of all errors raised by the library. `code()` is a stable
/// machine-readable tag used by the CLI error line and the HTTP API.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// A value outside the mathematical domain of an operation (Δ ≤ 0, α ≤ −1, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& message) : Error("domain", message) {}
};

/// Open-loop demand exceeded the service capacity of the simulated core.
class OverloadError : public Error {
public:
    explicit OverloadError(const std::string& message) : Error("overload", message) {}
};

/// Invalid or unknown configuration keys / values. `field` names the offending
/// key as a dotted path (e.g. `sim.nic.mtu`).
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error("config", field.empty() ? message : field + ": " + message),
          field_(std::move(field)), detail_(message) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string field_;
    std::string detail_;
};

/// Parameter estimation failure (rank deficiency, out-of-range estimates).
class FitError : public Error {
public:
    explicit FitError(const std::string& message) : Error("fit", message) {}
};

/// Malformed persisted artifact. `offset` is the byte offset of the record
/// where parsing stopped.
class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string& reason)
        : Error("parse", "at byte " + std::to_string(offset) + ": " + reason),
          offset_(offset), reason_(reason) {}

    std::size_t offset() const noexcept { return offset_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t offset_;
    std::string reason_;
};

/// Artifact written by an incompatible schema version.
class VersionError : public Error {
public:
    explicit VersionError(const std::string& message) : Error("version", message) {}
};

} // namespace netpe
