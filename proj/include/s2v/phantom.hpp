#pragma once

// Synthetic beating-heart sequence used in place of cardiac MRI: nested
// ellipsoidal shells whose radii pulse over the cycle, off-axis blobs that
// break rotational symmetry, a smooth texture, and per-frame Gaussian noise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "s2v/error.hpp"
#include "s2v/image.hpp"
#include "s2v/random.hpp"

namespace s2v {

struct PhantomSpec {
  Index3 dims{192, 192, 11};
  Vec3 spacing{1.25, 1.25, 8.0};
  std::size_t num_frames = 20;
  /// Fractional modulation of the shell radii over one cycle.
  double beat_amplitude = 0.08;
  double noise_sigma = 2.0;
  double intensity_min = 0.0;
  double intensity_max = 255.0;
  std::uint64_t seed = 0;

  void validate() const {
    for (auto n : dims) require(n > 0, "phantom dimensions must be positive");
    detail::check_spacing(spacing);
    require(num_frames >= 1, "phantom needs at least one frame");
    require(beat_amplitude >= 0.0 && beat_amplitude < 1.0, "beat amplitude must lie in [0, 1)");
    require(noise_sigma >= 0.0, "noise sigma must be non-negative");
    require(intensity_min < intensity_max, "intensity range is empty");
  }
};

namespace detail {

struct Ellipsoid {
  Vec3 center;  // mm, relative to the volume centre
  Vec3 radii;   // mm

  // Approximate signed distance in mm (negative inside).
  double distance(double x, double y, double z) const {
    const double a = (x - center[0]) / radii[0];
    const double b = (y - center[1]) / radii[1];
    const double c = (z - center[2]) / radii[2];
    const double rho = std::sqrt(a * a + b * b + c * c);
    return (rho - 1.0) * std::min({radii[0], radii[1], radii[2]});
  }
};

// Soft inside indicator with a ~1.5 mm transition.
inline double inside(double signed_distance) {
  return 1.0 / (1.0 + std::exp(signed_distance / 1.5));
}

}  // namespace detail

inline constexpr double kBackgroundIntensity = 30.0;
inline constexpr double kMyocardiumIntensity = 200.0;
inline constexpr double kBloodPoolIntensity = 120.0;
inline constexpr double kBlobIntensity = 240.0;
inline constexpr double kTextureAmplitude = 15.0;

/// Generates the frame sequence. Frame t uses the noise stream derived from
/// (seed, t), so every frame is reproducible on its own.
inline std::vector<Volume3> generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const auto [nx, ny, nz] = spec.dims;
  const Volume3 shape(spec.dims, spec.spacing);
  const Vec3 c = shape.center();
  constexpr double two_pi = 2.0 * std::numbers::pi;

  const detail::Ellipsoid blob{{38.0, -30.0, 10.0}, {14.0, 14.0, 14.0}};
  const detail::Ellipsoid notch{{-22.0, 28.0, -8.0}, {9.0, 12.0, 10.0}};

  std::vector<Volume3> frames;
  frames.reserve(spec.num_frames);
  for (std::size_t t = 0; t < spec.num_frames; ++t) {
    const double phase = two_pi * static_cast<double>(t) / static_cast<double>(spec.num_frames);
    const double beat = 1.0 + spec.beat_amplitude * std::sin(phase);
    const detail::Ellipsoid myocardium{{0.0, 0.0, 0.0}, {55.0 * beat, 45.0 * beat, 28.0 * beat}};
    const detail::Ellipsoid pool{{4.0, -3.0, 0.0}, {38.0 * beat, 29.0 * beat, 19.0 * beat}};

    Rng rng(substream_seed(spec.seed, {0x5048414E544F4DULL, t}));
    std::vector<double> data(Volume3::count(spec.dims));
    std::size_t i = 0;
    for (std::size_t z = 0; z < nz; ++z) {
      const double pz = static_cast<double>(z) * spec.spacing[2] - c[2];
      for (std::size_t y = 0; y < ny; ++y) {
        const double py = static_cast<double>(y) * spec.spacing[1] - c[1];
        for (std::size_t x = 0; x < nx; ++x, ++i) {
          const double px = static_cast<double>(x) * spec.spacing[0] - c[0];
          double v = kBackgroundIntensity;
          v += (kMyocardiumIntensity - kBackgroundIntensity) *
               detail::inside(myocardium.distance(px, py, pz));
          v += (kBloodPoolIntensity - kMyocardiumIntensity) *
               detail::inside(pool.distance(px, py, pz));
          v += (kBlobIntensity - v) * detail::inside(blob.distance(px, py, pz));
          v += (kBackgroundIntensity - v) * detail::inside(notch.distance(px, py, pz));
          v += kTextureAmplitude * std::sin(two_pi * px / 70.0 + 0.3) *
               std::cos(two_pi * py / 55.0) * std::cos(two_pi * pz / 90.0 + 0.5);
          if (spec.noise_sigma > 0.0) v += normal(rng, 0.0, spec.noise_sigma);
          data[i] = std::clamp(v, spec.intensity_min, spec.intensity_max);
        }
      }
    }
    frames.emplace_back(spec.dims, spec.spacing, std::move(data));
  }
  return frames;
}

}  // namespace s2v
