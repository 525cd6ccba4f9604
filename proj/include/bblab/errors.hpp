#pragma once

#include <stdexcept>
#include <string>

namespace bblab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// CSV / file format problems, message carries row/column position.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A boundary search could not bracket a sign change, e.g. the probe
// direction runs parallel to the decision boundary.
class BracketError : public Error {
 public:
  explicit BracketError(const std::string& msg, int dimension = -1)
      : Error(msg), dimension(dimension) {}
  int dimension;
};

// Raised by a defense that refuses to answer further queries.
class BlockedError : public Error {
 public:
  using Error::Error;
};

}  // namespace bblab
