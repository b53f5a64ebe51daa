#pragma once

#include <stdexcept>
#include <string>

namespace blowup {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent input parameters (grid, run, or config document).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A stencil was requested at a node it is not defined on.
class StencilError : public Error {
public:
    using Error::Error;
};

/// The field evolved to a non-finite value.
class NumericalInstabilityError : public Error {
public:
    using Error::Error;
};

/// A fit was asked for with too few usable samples.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// The origin trace is not convex, so no parabola a(t - T)^2 with a > 0 exists.
class NonConvexTraceError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure while writing results.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace blowup
