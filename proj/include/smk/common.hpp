#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace smk {

using Vec3 = Eigen::Vector3d;
using cdouble = std::complex<double>;
using cfloat = std::complex<float>;

namespace constants {
inline constexpr double mu0 = 4.0e-7 * std::numbers::pi;  // T·m/A
inline constexpr double k_boltzmann = 1.380649e-23;       // J/K
}  // namespace constants

/// Raised for invalid user configuration (bad spec values, unknown options).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed or inconsistent data (corrupt files, dim mismatch, solver failure).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Spatial grid extent in (z, y, x) order, row-major with x fastest.
struct Shape3 {
  std::size_t nz = 1;
  std::size_t ny = 1;
  std::size_t nx = 1;

  std::size_t size() const { return nz * ny * nx; }
  std::size_t operator[](int axis) const { return axis == 0 ? nz : axis == 1 ? ny : nx; }
  std::size_t& operator[](int axis) { return axis == 0 ? nz : axis == 1 ? ny : nx; }
  std::size_t index(std::size_t z, std::size_t y, std::size_t x) const { return (z * ny + y) * nx + x; }
  /// Number of axes with more than one sample.
  int active_axes() const { return int(nz > 1) + int(ny > 1) + int(nx > 1); }
  bool operator==(const Shape3&) const = default;
};

std::string to_string(const Shape3& s);

/// Dense 3D array on a Cartesian grid; 2D images use nz == 1.
template <typename T>
class Volume {
 public:
  Volume() = default;
  explicit Volume(Shape3 shape, T fill = T{}) : shape_(shape), data_(shape.size(), fill) {}
  Volume(Shape3 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) throw DataError("volume data size does not match shape " + to_string(shape_));
  }

  const Shape3& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t z, std::size_t y, std::size_t x) { return data_[shape_.index(z, y, x)]; }
  const T& at(std::size_t z, std::size_t y, std::size_t x) const { return data_[shape_.index(z, y, x)]; }

  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

 private:
  Shape3 shape_{0, 0, 0};
  std::vector<T> data_;
};

using ComplexImage = Volume<cdouble>;
using RealImage = Volume<double>;
using Mask = Volume<std::uint8_t>;

/// Round half to even, the convention used for all grid-size rounding.
double round_half_even(double v);

/// Resolves a worker count: SMK_THREADS overrides `requested`; 0 means hardware concurrency.
int resolve_threads(int requested);

}  // namespace smk
