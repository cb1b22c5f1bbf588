#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfxdma {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, violated preconditions, invalid configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A fluctuation segment with zero covariation was hit by a q <= 0 moment.
class DegenerateSegmentError : public Error {
 public:
  DegenerateSegmentError(std::size_t segment, std::size_t scale, double q)
      : Error("degenerate segment " + std::to_string(segment) +
              (scale ? " at scale " + std::to_string(scale) : std::string{}) +
              ": zero fluctuation with q = " + std::to_string(q)),
        segment_(segment),
        scale_(scale) {}

  std::size_t segment() const noexcept { return segment_; }
  std::size_t scale() const noexcept { return scale_; }

 private:
  std::size_t segment_;
  std::size_t scale_;
};

/// Failure inside one pipeline stage; carries the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace mfxdma
