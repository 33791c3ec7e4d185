#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace ecfim {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition on sizes, dimensions or argument combinations.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Configuration problem. `path()` is a JSON-pointer style location.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Base class for numerical failures (exit code 3 in the CLI).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function or model.
/// When raised by a model, `parameter_index()` names the offending entry of theta.
class DomainError : public NumericError {
public:
    explicit DomainError(const std::string& what, std::optional<std::size_t> param = std::nullopt)
        : NumericError(what), param_(param) {}
    std::optional<std::size_t> parameter_index() const noexcept { return param_; }

private:
    std::optional<std::size_t> param_;
};

/// Evaluation of a tabulated generator outside its grid.
class ExtrapolationError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Non-integrable generator or non-convergent quadrature.
class DivergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

/// A generator fails its self-test (boundary terms that do not vanish).
class GeneratorValidityError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Finite-difference stencil leaves the model domain.
class BoundaryError : public NumericError {
public:
    explicit BoundaryError(const std::string& what, std::optional<std::size_t> param = std::nullopt)
        : NumericError(what), param_(param) {}
    std::optional<std::size_t> parameter_index() const noexcept { return param_; }

private:
    std::optional<std::size_t> param_;
};

/// Matrix that must be Hermitian positive definite is not.
class DefinitenessError : public NumericError {
public:
    DefinitenessError(const std::string& what, double smallest_eigenvalue)
        : NumericError(what), smallest_(smallest_eigenvalue) {}
    double smallest_eigenvalue() const noexcept { return smallest_; }

private:
    double smallest_;
};

/// Fisher information too ill-conditioned to invert.
class SingularityError : public NumericError {
public:
    SingularityError(const std::string& what, double condition)
        : NumericError(what), condition_(condition) {}
    double condition_estimate() const noexcept { return condition_; }

private:
    double condition_;
};

/// Inverse-CDF sampler could not be built.
class SamplerError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace ecfim
