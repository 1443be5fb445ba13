#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "s2v/error.hpp"

namespace s2v {

using Index3 = std::array<std::size_t, 3>;
using Index2 = std::array<std::size_t, 2>;
using Vec3 = std::array<double, 3>;
using Vec2 = std::array<double, 2>;

namespace detail {

inline void check_spacing(std::span<const double> spacing) {
  for (double s : spacing)
    require(std::isfinite(s) && s > 0.0, "spacing must be finite and strictly positive");
}

inline void check_finite(std::span<const double> data) {
  for (double v : data) require(std::isfinite(v), "image intensities must be finite");
}

}  // namespace detail

/// 3D scalar image with physical spacing in mm/voxel.
///
/// Storage is x-fastest: index = x + nx * (y + ny * z). Voxel (0,0,0) sits at
/// physical (0,0,0); file-level origins are not modelled.
class Volume3 {
 public:
  Volume3() = default;

  Volume3(Index3 dims, Vec3 spacing, double fill = 0.0)
      : Volume3(dims, spacing, std::vector<double>(count(dims), fill)) {}

  Volume3(Index3 dims, Vec3 spacing, std::vector<double> data)
      : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    for (auto n : dims_) require(n > 0, "volume dimensions must be positive");
    detail::check_spacing(spacing_);
    require(data_.size() == count(dims_), "volume data length does not match dimensions");
    detail::check_finite(data_);
  }

  static std::size_t count(const Index3& dims) { return dims[0] * dims[1] * dims[2]; }

  const Index3& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  std::size_t nx() const { return dims_[0]; }
  std::size_t ny() const { return dims_[1]; }
  std::size_t nz() const { return dims_[2]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const double> data() const { return data_; }

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + dims_[0] * (y + dims_[1] * z);
  }

  Index3 coords(std::size_t flat) const {
    const std::size_t x = flat % dims_[0];
    const std::size_t rest = flat / dims_[0];
    return {x, rest % dims_[1], rest / dims_[1]};
  }

  double at(std::size_t x, std::size_t y, std::size_t z) const { return data_[index(x, y, z)]; }

  /// Physical centre of the voxel hull, ((n-1) * s / 2) per axis.
  Vec3 center() const {
    return {(static_cast<double>(dims_[0]) - 1.0) * spacing_[0] / 2.0,
            (static_cast<double>(dims_[1]) - 1.0) * spacing_[1] / 2.0,
            (static_cast<double>(dims_[2]) - 1.0) * spacing_[2] / 2.0};
  }

  friend bool operator==(const Volume3&, const Volume3&) = default;

 private:
  Index3 dims_{0, 0, 0};
  Vec3 spacing_{1.0, 1.0, 1.0};
  std::vector<double> data_;
};

/// 2D scalar image with a per-pixel validity mask.
///
/// Native 2D inputs are valid everywhere. Slices extracted from a volume mark
/// pixels that fell outside the voxel hull as invalid; those carry intensity 0.
class ImageGrid2 {
 public:
  ImageGrid2() = default;

  ImageGrid2(Index2 dims, Vec2 spacing, double fill = 0.0)
      : ImageGrid2(dims, spacing, std::vector<double>(dims[0] * dims[1], fill)) {}

  ImageGrid2(Index2 dims, Vec2 spacing, std::vector<double> data)
      : ImageGrid2(dims, spacing, std::move(data),
                   std::vector<std::uint8_t>(dims[0] * dims[1], 1)) {}

  ImageGrid2(Index2 dims, Vec2 spacing, std::vector<double> data,
             std::vector<std::uint8_t> valid)
      : dims_(dims), spacing_(spacing), data_(std::move(data)), valid_(std::move(valid)) {
    require(dims_[0] > 0 && dims_[1] > 0, "image dimensions must be positive");
    detail::check_spacing(spacing_);
    require(data_.size() == dims_[0] * dims_[1], "image data length does not match dimensions");
    require(valid_.size() == data_.size(), "validity mask length does not match dimensions");
    detail::check_finite(data_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      valid_[i] = valid_[i] ? 1 : 0;
      require(valid_[i] || data_[i] == 0.0, "invalid pixels must carry zero intensity");
    }
  }

  const Index2& dims() const { return dims_; }
  const Vec2& spacing() const { return spacing_; }
  std::size_t width() const { return dims_[0]; }
  std::size_t height() const { return dims_[1]; }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  std::span<const std::uint8_t> validity() const { return valid_; }

  std::size_t index(std::size_t u, std::size_t v) const { return u + dims_[0] * v; }
  double at(std::size_t u, std::size_t v) const { return data_[index(u, v)]; }
  bool valid(std::size_t u, std::size_t v) const { return valid_[index(u, v)] != 0; }

  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
  }

  friend bool operator==(const ImageGrid2&, const ImageGrid2&) = default;

 private:
  Index2 dims_{0, 0};
  Vec2 spacing_{1.0, 1.0};
  std::vector<double> data_;
  std::vector<std::uint8_t> valid_;
};

}  // namespace s2v
