#pragma once

#include <stdexcept>
#include <string>

namespace cbmorph {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: parameters, configuration, geometry, plan layout.
class InputError : public Error {
public:
    using Error::Error;
};

// A computation that could not be completed for numerical reasons.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

class ParameterError : public InputError {
public:
    using InputError::InputError;
};

class DimensionError : public InputError {
public:
    using InputError::InputError;
};

class GeometryError : public InputError {
public:
    using InputError::InputError;
};

class ConnectivityError : public InputError {
public:
    using InputError::InputError;
};

class DegenerateSpecError : public InputError {
public:
    using InputError::InputError;
};

class InsufficientDataError : public InputError {
public:
    using InputError::InputError;
};

class DuplicateInputError : public InputError {
public:
    using InputError::InputError;
};

class DecompositionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularSystemError : public NumericalError {
public:
    SingularSystemError(const std::string& what, double rcond)
        : NumericalError(what), rcond_(rcond) {}
    double rcond() const noexcept { return rcond_; }

private:
    double rcond_;
};

class DegenerateLabelsError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ReconstructionDefectError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class FitError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace cbmorph
