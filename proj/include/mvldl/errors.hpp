#pragma once

#include <stdexcept>
#include <string>

namespace mvldl {

// Base class for everything thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A file could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

// Matrix/vector dimensions disagree (row counts, view dims, label width).
class ShapeError : public Error {
public:
    using Error::Error;
};

// Data violates an invariant (off-simplex distribution, non-stochastic rows).
class ValidationError : public Error {
public:
    using Error::Error;
};

// A caller-supplied parameter is out of range.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Training could not proceed (no labels, inner solver failed to converge).
class TrainingError : public Error {
public:
    using Error::Error;
};

// Numerical breakdown (non-finite values, indefinite Hessian).
class NumericError : public Error {
public:
    using Error::Error;
};

// A point handed to a feasibility-requiring routine is infeasible.
class FeasibilityError : public Error {
public:
    using Error::Error;
};

}  // namespace mvldl
