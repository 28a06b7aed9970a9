#pragma once

#include <stdexcept>
#include <string>

namespace pvvtt {

// Base for every error raised by the library. The CLI maps `IoError` (and its
// subclasses) to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class AggregationError : public Error { using Error::Error; };
class UsageError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class LabelError : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };
class GenerationError : public Error { using Error::Error; };
class AssemblyError : public Error { using Error::Error; };
class DegenerateLevelError : public Error { using Error::Error; };
class UndefinedAucError : public Error { using Error::Error; };
class ConsistencyError : public Error { using Error::Error; };
class UnsupportedVersionError : public Error { using Error::Error; };

// Malformed file content. `location` is a human readable position
// (file path, JSON pointer, byte offset).
class ParseError : public Error {
public:
    ParseError(const std::string& location, const std::string& what)
        : Error(location + ": " + what), location_(location) {}
    const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

class FormatError : public Error { using Error::Error; };

class LengthError : public Error {
public:
    LengthError(std::size_t expected, std::size_t actual, const std::string& what)
        : Error(what + ": expected " + std::to_string(expected) + " bytes, got " +
                std::to_string(actual)),
          expected_(expected), actual_(actual) {}
    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

class NonFiniteLossError : public Error {
public:
    NonFiniteLossError(std::size_t step, std::size_t batch_id)
        : Error("non-finite loss at step " + std::to_string(step) + " (batch " +
                std::to_string(batch_id) + ")"),
          step_(step), batch_id_(batch_id) {}
    std::size_t step() const noexcept { return step_; }
    std::size_t batch_id() const noexcept { return batch_id_; }

private:
    std::size_t step_;
    std::size_t batch_id_;
};

// Filesystem and transport failures. `status` is the HTTP status when one was
// received, 0 otherwise. Retryable failures may be retried by the caller.
class IoError : public Error {
public:
    explicit IoError(const std::string& what, int status = 0, bool retryable = true)
        : Error(what), status_(status), retryable_(retryable) {}
    int status() const noexcept { return status_; }
    bool retryable() const noexcept { return retryable_; }

private:
    int status_;
    bool retryable_;
};

class NetworkDisabledError : public IoError {
public:
    explicit NetworkDisabledError(const std::string& what)
        : IoError("network disabled: " + what, 0, false) {}
};

class EmptyResponseError : public IoError {
public:
    explicit EmptyResponseError(const std::string& what) : IoError(what, 0, false) {}
};

} // namespace pvvtt
