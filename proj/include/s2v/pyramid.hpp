#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "s2v/error.hpp"
#include "s2v/image.hpp"

namespace s2v {

/// Bit set of grid axes. For 2D images x and y stand for u and v.
enum class Axes : unsigned { none = 0, x = 1, y = 2, z = 4, xy = 3, xyz = 7 };

constexpr Axes operator|(Axes a, Axes b) {
  return static_cast<Axes>(static_cast<unsigned>(a) | static_cast<unsigned>(b));
}
constexpr bool has_axis(Axes set, int axis) {
  return (static_cast<unsigned>(set) >> axis) & 1U;
}

/// Binomial approximation of a Gaussian, applied once per halved axis.
inline constexpr std::array<double, 5> kBinomialKernel{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16,
                                                       1.0 / 16};

namespace detail {

// Smooths `data` along `axis` with the edge-clamped binomial kernel and keeps
// the even samples. `dims` is updated to the decimated extent ceil(n/2).
inline std::vector<double> smooth_halve_axis(const std::vector<double>& data, Index3& dims,
                                             int axis) {
  const std::size_t n = dims[axis];
  const std::size_t half = (n + 1) / 2;
  std::array<std::size_t, 3> stride{1, dims[0], dims[0] * dims[1]};
  Index3 out_dims = dims;
  out_dims[axis] = half;
  std::array<std::size_t, 3> out_stride{1, out_dims[0], out_dims[0] * out_dims[1]};

  std::vector<double> out(out_dims[0] * out_dims[1] * out_dims[2]);
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  for (std::size_t z = 0; z < out_dims[2]; ++z) {
    for (std::size_t y = 0; y < out_dims[1]; ++y) {
      for (std::size_t x = 0; x < out_dims[0]; ++x) {
        std::array<std::size_t, 3> p{x, y, z};
        const auto centre = static_cast<std::ptrdiff_t>(2 * p[axis]);
        p[axis] = 0;
        const std::size_t base = p[0] * stride[0] + p[1] * stride[1] + p[2] * stride[2];
        double sum = 0.0;
        for (std::ptrdiff_t k = -2; k <= 2; ++k) {
          const auto i = std::clamp<std::ptrdiff_t>(centre + k, 0, last);
          sum += kBinomialKernel[static_cast<std::size_t>(k + 2)] *
                 data[base + static_cast<std::size_t>(i) * stride[axis]];
        }
        out[x * out_stride[0] + y * out_stride[1] + z * out_stride[2]] = sum;
      }
    }
  }
  dims = out_dims;
  return out;
}

inline std::vector<double> smooth_halve(std::vector<double> data, Index3& dims, Axes axes) {
  for (int axis = 0; axis < 3; ++axis) {
    if (!has_axis(axes, axis)) continue;
    require(dims[axis] >= 2, "cannot halve an axis with extent < 2");
  }
  for (int axis = 0; axis < 3; ++axis)
    if (has_axis(axes, axis)) data = smooth_halve_axis(data, dims, axis);
  return data;
}

}  // namespace detail

inline Volume3 smooth_and_halve(const Volume3& image, Axes axes) {
  Index3 dims = image.dims();
  auto data = detail::smooth_halve({image.data().begin(), image.data().end()}, dims, axes);
  Vec3 spacing = image.spacing();
  for (int axis = 0; axis < 3; ++axis)
    if (has_axis(axes, axis)) spacing[axis] *= 2.0;
  return Volume3(dims, spacing, std::move(data));
}

/// 2D variant. A coarse pixel is valid when the fine pixel it is anchored on
/// was valid; invalid coarse pixels are zeroed.
inline ImageGrid2 smooth_and_halve(const ImageGrid2& image, Axes axes) {
  require(!has_axis(axes, 2), "2D images have no z axis");
  Index3 dims{image.width(), image.height(), 1};
  auto data = detail::smooth_halve({image.data().begin(), image.data().end()}, dims, axes);
  const std::size_t step_u = has_axis(axes, 0) ? 2 : 1;
  const std::size_t step_v = has_axis(axes, 1) ? 2 : 1;
  std::vector<std::uint8_t> valid(data.size());
  for (std::size_t v = 0; v < dims[1]; ++v) {
    for (std::size_t u = 0; u < dims[0]; ++u) {
      const std::size_t i = u + dims[0] * v;
      valid[i] = image.valid(u * step_u, v * step_v) ? 1 : 0;
      if (!valid[i]) data[i] = 0.0;
    }
  }
  Vec2 spacing = image.spacing();
  if (step_u == 2) spacing[0] *= 2.0;
  if (step_v == 2) spacing[1] *= 2.0;
  return ImageGrid2({dims[0], dims[1]}, spacing, std::move(data), std::move(valid));
}

/// Coarse-to-fine stack of images: levels.front() is the coarsest,
/// levels.back() the original.
template <typename Image>
struct Pyramid {
  std::vector<Image> levels;

  std::size_t size() const { return levels.size(); }
  const Image& operator[](std::size_t level) const { return levels[level]; }
  const Image& finest() const { return levels.back(); }
  const Image& coarsest() const { return levels.front(); }
};

/// Builds `num_levels` levels by repeated in-plane halving. Volumes keep their
/// z extent at every level.
template <typename Image>
Pyramid<Image> build_pyramid(const Image& image, std::size_t num_levels) {
  require(num_levels >= 1, "pyramid needs at least one level");
  std::vector<Image> fine_to_coarse{image};
  fine_to_coarse.reserve(num_levels);
  for (std::size_t k = 1; k < num_levels; ++k) {
    const Image& prev = fine_to_coarse.back();
    if (prev.dims()[0] < 2 || prev.dims()[1] < 2)
      throw Error("image too small for a " + std::to_string(num_levels) + "-level pyramid");
    fine_to_coarse.push_back(smooth_and_halve(prev, Axes::xy));
  }
  return Pyramid<Image>{{fine_to_coarse.rbegin(), fine_to_coarse.rend()}};
}

}  // namespace s2v
