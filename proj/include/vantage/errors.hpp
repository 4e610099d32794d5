#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vantage {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Rotation angle too close to pi for a unique principal logarithm.
class DegenerateLogarithm : public Error {
 public:
  using Error::Error;
};

/// Geometrically degenerate input (coincident points, zero extent, ...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Too few or collinear correspondences to fix a similarity transform.
class UnderdeterminedInput : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based, or 0 when the location is
/// only known structurally (the message then names it).
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(file + (line ? ":" + std::to_string(line) : std::string()) +
              ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// Mesh violates a structural requirement, e.g. an edge shared by more than
/// two faces.
class InvalidMesh : public Error {
 public:
  InvalidMesh(const std::string& what,
              std::vector<std::pair<int, int>> offending_edges)
      : Error(what), edges_(std::move(offending_edges)) {}

  const std::vector<std::pair<int, int>>& offending_edges() const noexcept {
    return edges_;
  }

 private:
  std::vector<std::pair<int, int>> edges_;
};

}  // namespace vantage
