#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mpk {

/// Coarse failure classes. The CLI maps each to a process exit code.
enum class ErrorKind : std::uint8_t {
    config,     // bad parameters or configuration document
    input,      // missing/unreadable/misaligned/mismatched input data
    numerical,  // non-finite loss, degenerate fit, singular system
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class IoError : public InputError {
public:
    IoError(const std::string& path, const std::string& what)
        : InputError(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// Non-finite loss during training; carries the optimizer step that produced it.
class TrainingError : public NumericalError {
public:
    TrainingError(std::uint64_t step, const std::string& what)
        : NumericalError("step " + std::to_string(step) + ": " + what), step_(step) {}
    std::uint64_t step() const noexcept { return step_; }

private:
    std::uint64_t step_;
};

}  // namespace mpk
