#pragma once

#include <stdexcept>
#include <string>

namespace loopflow {

// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Structural problems in a network definition (duplicate ids, unknown pipe
// references, bad geometry, inconsistent loop count, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed input document; message carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// A fluid model was asked to operate outside its validity region
// (e.g. the turbulent-only friction correlation below Re = 4000).
class OutOfRegimeError : public Error {
public:
    using Error::Error;
};

// Missing or inconsistent model configuration (e.g. ventilation pipe
// without discharge coefficient / opening area).
class ConfigError : public Error {
public:
    using Error::Error;
};

// An iterative scheme failed to meet its tolerance; carries the last residual.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& msg, double last_residual)
        : Error(msg), last_residual_(last_residual) {}
    double last_residual() const { return last_residual_; }

private:
    double last_residual_;
};

// A loop whose members all carry zero flow: the correction divisor vanishes.
class DegenerateLoopError : public Error {
public:
    DegenerateLoopError(const std::string& loop_id, const std::string& msg)
        : Error(msg), loop_id_(loop_id) {}
    const std::string& loop_id() const { return loop_id_; }

private:
    std::string loop_id_;
};

// Singular or numerically unusable linear system; carries the pivot magnitude
// that triggered the rejection.
class SingularSystemError : public Error {
public:
    SingularSystemError(const std::string& msg, double pivot)
        : Error(msg), pivot_(pivot) {}
    double pivot() const { return pivot_; }

private:
    double pivot_;
};

}  // namespace loopflow
