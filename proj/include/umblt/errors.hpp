#pragma once

#include <stdexcept>
#include <string>

namespace umblt {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A field or grid was used on a domain it does not cover.
class domain_mismatch_error : public Error {
  public:
    using Error::Error;
};

/// Invalid or inconsistent configuration input.
class config_error : public Error {
  public:
    using Error::Error;
};

/// Scattering kernel degenerates to a delta distribution (|g| = 1).
class singular_kernel_error : public Error {
  public:
    using Error::Error;
};

/// A quantity that must be strictly positive was not.
class positivity_error : public Error {
  public:
    using Error::Error;
};

/// Fixed-point iteration failed to reach its tolerance.
class divergence_error : public Error {
  public:
    divergence_error(const std::string& what, int iterations, double residual)
        : Error(what), iterations(iterations), residual(residual) {}

    int iterations;
    double residual;
};

} // namespace umblt
