#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace panelsmc {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Same identifier used for both a shared and a unit-specific parameter,
// or a duplicate within one block.
struct NameClash : Error {
  using Error::Error;
};

// Unit count or unit labels disagree between model pieces.
struct UnitMismatch : Error {
  using Error::Error;
};

// A unit model lacks a required component (rprocess, rinit or dmeasure).
struct MissingComponent : Error {
  using Error::Error;
};

// Malformed parameter key, e.g. "tau[unit3" with no closing bracket.
struct ParseError : Error {
  using Error::Error;
};

struct IndexError : Error {
  using Error::Error;
};

// Lookup of a parameter name that does not exist.
struct NameError : Error {
  using Error::Error;
};

// Value outside the valid domain (nonpositive parameter, bad level, ...).
struct DomainError : Error {
  using Error::Error;
};

// Ragged or dimension-mismatched array input.
struct ShapeError : Error {
  using Error::Error;
};

// Invalid algorithm configuration (e.g. perturbing a parameter with no
// registered transform).
struct ConfigError : Error {
  using Error::Error;
};

// Bad input file: missing columns, unparsable cells.
struct FormatError : Error {
  using Error::Error;
};

// Local quadratic fit around the profile maximizer is not concave.
struct CurvatureError : Error {
  using Error::Error;
};

// A model component produced a non-finite state during simulation.
struct SimulationError : Error {
  SimulationError(const std::string& what, std::size_t unit_index, double time)
      : Error(what), unit(unit_index), at_time(time) {}
  std::size_t unit;
  double at_time;
};

// Non-finite state or weight inside a particle filter.
struct FilterError : Error {
  FilterError(const std::string& what, std::size_t unit_index, std::size_t time_index)
      : Error(what), unit(unit_index), step(time_index) {}
  std::size_t unit;
  std::size_t step;
};

}  // namespace panelsmc
