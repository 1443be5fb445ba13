#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "s2v/image.hpp"
#include "s2v/matching.hpp"
#include "s2v/rigid.hpp"

namespace s2v {

/// Criterion value of a candidate transform: M(I, pi[J]).
///
/// Keeps a scratch slice buffer between calls, so one instance must not be
/// shared across threads. Results are identical to
/// evaluate(criterion, fixed, resample_slice(volume, params, geometry)).
class SliceCost {
 public:
  SliceCost(const ImageGrid2& image, const Volume3& volume, Criterion criterion)
      : image_(&image),
        volume_(&volume),
        geometry_(SliceGeometry::of(image)),
        criterion_(criterion),
        data_(image.size()),
        valid_(image.size()) {}

  MatchStats stats(const RigidParams& params) {
    ++evaluations_;
    resample_slice_into(*volume_, params, geometry_, data_, valid_);
    return detail::compare(image_->data(), image_->validity(), data_, valid_, criterion_);
  }

  double operator()(const RigidParams& params) { return stats(params).cost; }

  const ImageGrid2& image() const { return *image_; }
  const Volume3& volume() const { return *volume_; }
  const SliceGeometry& geometry() const { return geometry_; }
  Criterion criterion() const { return criterion_; }
  std::size_t evaluations() const { return evaluations_; }

 private:
  const ImageGrid2* image_;
  const Volume3* volume_;
  SliceGeometry geometry_;
  Criterion criterion_;
  std::vector<double> data_;
  std::vector<std::uint8_t> valid_;
  std::size_t evaluations_ = 0;
};

}  // namespace s2v
