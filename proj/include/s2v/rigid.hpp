#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "s2v/error.hpp"
#include "s2v/image.hpp"
#include "s2v/random.hpp"

namespace s2v {

/// Position of each rigid parameter in RigidParams::values.
enum Param : std::size_t { kRx = 0, kRy, kRz, kTx, kTy, kTz, kNumParams };

/// Six rigid parameters: three Euler angles in radians followed by three
/// translations in mm.
struct RigidParams {
  std::array<double, kNumParams> values{};

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  static RigidParams from(std::span<const double> v) {
    require(v.size() == kNumParams, "rigid parameters need exactly 6 values");
    RigidParams p;
    for (std::size_t i = 0; i < kNumParams; ++i) p.values[i] = v[i];
    return p;
  }

  friend bool operator==(const RigidParams&, const RigidParams&) = default;
};

/// Pixel lattice of an extracted slice.
struct SliceGeometry {
  Index2 dims{1, 1};
  Vec2 spacing{1.0, 1.0};

  void validate() const {
    require(dims[0] > 0 && dims[1] > 0, "slice dimensions must be positive");
    detail::check_spacing(spacing);
  }

  static SliceGeometry of(const ImageGrid2& image) { return {image.dims(), image.spacing()}; }
  /// The volume's own x-y lattice.
  static SliceGeometry in_plane(const Volume3& vol) {
    return {{vol.nx(), vol.ny()}, {vol.spacing()[0], vol.spacing()[1]}};
  }
};

using Matrix3 = Eigen::Matrix3d;
using Point3 = Eigen::Vector3d;

/// R = Rz(rz) * Ry(ry) * Rx(rx), right-handed rotations about the volume axes.
inline Matrix3 rotation_matrix(const RigidParams& p) {
  const double cx = std::cos(p[kRx]), sx = std::sin(p[kRx]);
  const double cy = std::cos(p[kRy]), sy = std::sin(p[kRy]);
  const double cz = std::cos(p[kRz]), sz = std::sin(p[kRz]);
  Matrix3 rx, ry, rz;
  rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  return rz * ry * rx;
}

namespace detail {

// Everything needed to map pixel (u, v) to physical space, precomputed once
// per (params, geometry, volume) triple.
struct SliceFrame {
  Matrix3 rotation;
  Point3 anchor;  // volume centre + translation
  double half_u;  // (w - 1) * su / 2
  double half_v;
  double su, sv;

  SliceFrame(const RigidParams& p, const SliceGeometry& g, const Volume3& vol)
      : rotation(rotation_matrix(p)),
        half_u((static_cast<double>(g.dims[0]) - 1.0) * g.spacing[0] / 2.0),
        half_v((static_cast<double>(g.dims[1]) - 1.0) * g.spacing[1] / 2.0),
        su(g.spacing[0]),
        sv(g.spacing[1]) {
    const Vec3 c = vol.center();
    anchor = Point3(c[0] + p[kTx], c[1] + p[kTy], c[2] + p[kTz]);
  }

  Point3 map(double u, double v) const {
    const Point3 q(u * su - half_u, v * sv - half_v, 0.0);
    return rotation * q + anchor;
  }
};

}  // namespace detail

/// Physical position (mm) of slice pixel (u, v). The slice rotates about its
/// own centre, which sits at the volume centre for all-zero parameters.
inline Point3 map_slice_point(const RigidParams& params, const SliceGeometry& geom,
                              const Volume3& vol, double u, double v) {
  return detail::SliceFrame(params, geom, vol).map(u, v);
}

/// Trilinear interpolation at continuous voxel coordinates, or false when the
/// point lies outside [0, n-1] on any axis.
inline bool sample_trilinear(const Volume3& vol, double x, double y, double z, double& out) {
  const double mx = static_cast<double>(vol.nx() - 1);
  const double my = static_cast<double>(vol.ny() - 1);
  const double mz = static_cast<double>(vol.nz() - 1);
  if (!(x >= 0.0 && x <= mx && y >= 0.0 && y <= my && z >= 0.0 && z <= mz)) return false;

  auto split = [](double c, std::size_t n, std::size_t& i0, std::size_t& step, double& f) {
    if (n < 2) {
      i0 = 0;
      step = 0;
      f = 0.0;
      return;
    }
    i0 = std::min(static_cast<std::size_t>(c), n - 2);
    step = 1;
    f = c - static_cast<double>(i0);
  };
  std::size_t x0, y0, z0, dx, dy, dz;
  double fx, fy, fz;
  split(x, vol.nx(), x0, dx, fx);
  split(y, vol.ny(), y0, dy, fy);
  split(z, vol.nz(), z0, dz, fz);
  dy *= vol.nx();
  dz *= vol.nx() * vol.ny();

  const double* d = vol.data().data() + vol.index(x0, y0, z0);
  const double gx = 1.0 - fx, gy = 1.0 - fy, gz = 1.0 - fz;
  const double c00 = gx * d[0] + fx * d[dx];
  const double c10 = gx * d[dy] + fx * d[dy + dx];
  const double c01 = gx * d[dz] + fx * d[dz + dx];
  const double c11 = gx * d[dz + dy] + fx * d[dz + dy + dx];
  const double c0 = gy * c00 + fy * c10;
  const double c1 = gy * c01 + fy * c11;
  out = gz * c0 + fz * c1;
  return true;
}

/// Resamples the slice into caller-owned buffers of size w*h.
inline void resample_slice_into(const Volume3& vol, const RigidParams& params,
                                const SliceGeometry& geom, std::span<double> data,
                                std::span<std::uint8_t> valid) {
  geom.validate();
  require(data.size() == geom.dims[0] * geom.dims[1] && valid.size() == data.size(),
          "slice buffers do not match geometry");
  const detail::SliceFrame frame(params, geom, vol);
  const Vec3& s = vol.spacing();
  const Point3 col_u = frame.rotation.col(0);
  const Point3 col_v = frame.rotation.col(1);
  std::size_t i = 0;
  for (std::size_t v = 0; v < geom.dims[1]; ++v) {
    const double qv = static_cast<double>(v) * frame.sv - frame.half_v;
    const Point3 row = col_v * qv + frame.anchor;
    for (std::size_t u = 0; u < geom.dims[0]; ++u, ++i) {
      const double qu = static_cast<double>(u) * frame.su - frame.half_u;
      const double x = (col_u[0] * qu + row[0]) / s[0];
      const double y = (col_u[1] * qu + row[1]) / s[1];
      const double z = (col_u[2] * qu + row[2]) / s[2];
      double value;
      if (sample_trilinear(vol, x, y, z, value)) {
        data[i] = value;
        valid[i] = 1;
      } else {
        data[i] = 0.0;
        valid[i] = 0;
      }
    }
  }
}

/// Extracts the slice pi[J]: trilinear samples inside the voxel hull, zero and
/// invalid outside it.
inline ImageGrid2 resample_slice(const Volume3& vol, const RigidParams& params,
                                 const SliceGeometry& geom) {
  geom.validate();
  std::vector<double> data(geom.dims[0] * geom.dims[1]);
  std::vector<std::uint8_t> valid(data.size());
  resample_slice_into(vol, params, geom, data, valid);
  return ImageGrid2(geom.dims, geom.spacing, std::move(data), std::move(valid));
}

/// Half-open magnitude range [lo, hi) used to perturb parameters.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Offsets every rotation by +/- U[rot) and every translation by +/- U[trans),
/// sign and magnitude drawn independently per parameter. An empty range
/// (lo == hi) leaves the offset at lo.
inline RigidParams perturb_params(const RigidParams& params, Range rot, Range trans, Rng& rng) {
  for (const Range& r : {rot, trans})
    require(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo >= 0.0 && r.lo <= r.hi,
            "perturbation range must satisfy 0 <= lo <= hi");
  RigidParams out = params;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const Range& r = i < kTx ? rot : trans;
    const double magnitude = uniform(rng, r.lo, r.hi);
    const double sign = (rng() >> 63) ? 1.0 : -1.0;
    out[i] += sign * magnitude;
  }
  return out;
}

/// Componentwise absolute parameter differences.
inline std::array<double, kNumParams> param_error(const RigidParams& a, const RigidParams& b) {
  std::array<double, kNumParams> e{};
  for (std::size_t i = 0; i < kNumParams; ++i) e[i] = std::abs(a[i] - b[i]);
  return e;
}

}  // namespace s2v
