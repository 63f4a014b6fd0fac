#ifndef NSADMM_ERRORS_HPP_
#define NSADMM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace nsadmm {

//! Base class of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! A matrix argument is structurally unusable (zero, empty, wrong shape family).
class InvalidMatrix : public Error {
 public:
  using Error::Error;
};

//! An iterative routine failed to converge; carries the iteration count reached.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, long iterations)
      : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
        iterations_(iterations) {}
  long iterations() const noexcept { return iterations_; }

 private:
  long iterations_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class EmptyBatch : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

//! Operation requires exact component means and is finite-sum only.
class UnsupportedMode : public Error {
 public:
  using Error::Error;
};

class InsufficientProbes : public Error {
 public:
  using Error::Error;
};

//! SPIDER recursion attempted past the end of an epoch.
class EpochBoundary : public Error {
 public:
  using Error::Error;
};

class InvalidStep : public Error {
 public:
  using Error::Error;
};

class InvalidTolerance : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EmptyRun : public Error {
 public:
  using Error::Error;
};

class InsufficientHistory : public Error {
 public:
  using Error::Error;
};

class GeneratorError : public Error {
 public:
  using Error::Error;
};

//! Config file rejected; carries the 1-based line number of the offending line.
class ConfigParseError : public Error {
 public:
  ConfigParseError(const std::string& what, long line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ConfigParseError(const std::string& what) : Error(what), line_(0) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nsadmm

#endif  // NSADMM_ERRORS_HPP_
