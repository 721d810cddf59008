#pragma once

#include <stdexcept>
#include <string>

namespace rdanon {

/// Base for every error the library raises. Callers that only need a
/// message can catch std::runtime_error.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unparseable input file, wrong magic or version.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Geometry disagreement between two objects that must line up.
class DimsError : public Error {
public:
  using Error::Error;
};

/// A parameter outside its admissible range.
class RangeError : public Error {
public:
  using Error::Error;
};

/// A latent went non-finite during integration.
class NumericError : public Error {
public:
  using Error::Error;
};

} // namespace rdanon
