#ifndef TERRAIN_ENERGY_ERRORS_HPP
#define TERRAIN_ENERGY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace terrain_energy {

// Bad input: wrong shapes, non-finite values, violated preconditions.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A world-space query fell outside the sampled area of a heightmap.
class OutOfBoundsError : public std::out_of_range {
 public:
  explicit OutOfBoundsError(const std::string& what) : std::out_of_range(what) {}
};

// No route exists between two cells of a cost map.
class UnreachableError : public std::runtime_error {
 public:
  explicit UnreachableError(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// File could not be read or written, or its contents are malformed.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_ERRORS_HPP
