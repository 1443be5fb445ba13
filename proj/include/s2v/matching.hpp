#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "s2v/error.hpp"
#include "s2v/image.hpp"

namespace s2v {

/// Finite stand-in for "no usable overlap".
inline constexpr double kPenalty = 1e30;
/// Below this joint-validity fraction a dissimilarity cost becomes kPenalty.
inline constexpr double kMinValidFraction = 0.25;

enum class Criterion { ssd, sad };

inline std::string_view to_string(Criterion c) { return c == Criterion::ssd ? "ssd" : "sad"; }

inline Criterion parse_criterion(std::string_view name) {
  if (name == "ssd") return Criterion::ssd;
  if (name == "sad") return Criterion::sad;
  throw Error("unknown criterion '" + std::string(name) + "'");
}

struct MatchStats {
  double cost = 0.0;
  double valid_fraction = 0.0;
  std::size_t pixel_count = 0;
};

namespace detail {

// Sum over all pixels; invalid pixels take part with their stored zero.
inline MatchStats compare(std::span<const double> a, std::span<const std::uint8_t> av,
                          std::span<const double> b, std::span<const std::uint8_t> bv,
                          Criterion criterion) {
  require(a.size() == b.size() && av.size() == a.size() && bv.size() == b.size(),
          "image dimensions differ");
  double cost = 0.0;
  std::size_t joint = 0;
  if (criterion == Criterion::ssd) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      cost += d * d;
      joint += static_cast<std::size_t>(av[i] & bv[i]);
    }
  } else {
    for (std::size_t i = 0; i < a.size(); ++i) {
      cost += std::abs(a[i] - b[i]);
      joint += static_cast<std::size_t>(av[i] & bv[i]);
    }
  }
  MatchStats stats;
  stats.pixel_count = a.size();
  stats.valid_fraction = static_cast<double>(joint) / static_cast<double>(a.size());
  stats.cost = stats.valid_fraction < kMinValidFraction ? kPenalty : cost;
  return stats;
}

inline void check_same_dims(const ImageGrid2& a, const ImageGrid2& b) {
  if (a.dims() != b.dims())
    throw Error("image dimensions differ: " + std::to_string(a.width()) + "x" +
                std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                std::to_string(b.height()));
}

}  // namespace detail

/// Sum of squared differences.
inline MatchStats ssd(const ImageGrid2& a, const ImageGrid2& b) {
  detail::check_same_dims(a, b);
  return detail::compare(a.data(), a.validity(), b.data(), b.validity(), Criterion::ssd);
}

/// Sum of absolute differences.
inline MatchStats sad(const ImageGrid2& a, const ImageGrid2& b) {
  detail::check_same_dims(a, b);
  return detail::compare(a.data(), a.validity(), b.data(), b.validity(), Criterion::sad);
}

inline MatchStats evaluate(Criterion criterion, const ImageGrid2& a, const ImageGrid2& b) {
  return criterion == Criterion::ssd ? ssd(a, b) : sad(a, b);
}

/// Mean absolute difference over jointly valid pixels. Validation metric only.
inline double mad(const ImageGrid2& a, const ImageGrid2& b) {
  detail::check_same_dims(a, b);
  double sum = 0.0;
  std::size_t n = 0;
  const auto ad = a.data(), bd = b.data();
  const auto av = a.validity(), bv = b.validity();
  for (std::size_t i = 0; i < ad.size(); ++i) {
    if (av[i] && bv[i]) {
      sum += std::abs(ad[i] - bd[i]);
      ++n;
    }
  }
  if (n == 0) throw Error("mad: images share no valid pixel");
  return sum / static_cast<double>(n);
}

}  // namespace s2v
