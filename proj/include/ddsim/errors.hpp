#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ddsim {

/// Argument outside the mathematical domain of a statistics function or bound.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised instead of silently returning infinity.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// A state whose derived densities leave the admissible range at some cell.
class DensityRangeError : public std::runtime_error {
 public:
  DensityRangeError(std::size_t cell, const std::string& what)
      : std::runtime_error("cell " + std::to_string(cell) + ": " + what), cell_(cell) {}

  std::size_t cell() const noexcept { return cell_; }

 private:
  std::size_t cell_;
};

class MeshError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ddsim
