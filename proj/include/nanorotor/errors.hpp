#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nanorotor {

/// Base class of everything the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An input violates a documented physical or numerical validity range.
class ValidityError : public Error {
public:
    using Error::Error;
};

/// An integration step produced a non-finite state.
class IntegrationBlowup : public Error {
public:
    explicit IntegrationBlowup(double t)
        : Error("integration blew up (non-finite state) at t = " + std::to_string(t) + " s"), time_(t) {}

    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

/// The field envelope is not negligible at the ends of a trajectory.
class SpanError : public Error {
public:
    using Error::Error;
};

/// Sampling rate is too low for the modulation present in a trajectory.
class AliasingError : public Error {
public:
    using Error::Error;
};

class NormalizationError : public Error {
public:
    using Error::Error;
};

/// Envelope fit failed; carries the residual norm of the last iterate.
class FitError : public Error {
public:
    FitError(const std::string& what, double residual) : Error(what), residual_(residual) {}

    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// A window or grid is too coarse for the requested operation.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// Not enough samples, peaks or maxima to form an estimate.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Configuration parse or validation failure with a location.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::size_t line = 0, std::string field = {})
        : Error(what), line_(line), field_(std::move(field)) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

class CapExceededError : public Error {
public:
    using Error::Error;
};

}  // namespace nanorotor
