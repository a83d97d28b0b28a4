#pragma once

#include <stdexcept>
#include <string>

namespace nrsync {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerology outside mu in {0,1,2,3} / SCS outside {15,30,60,120} kHz.
class UnsupportedNumerology : public Error {
public:
    using Error::Error;
};

/// A value violates a type invariant or an operation precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A scenario cannot be simulated as configured.
class InvalidScenario : public Error {
public:
    using Error::Error;
};

}  // namespace nrsync
