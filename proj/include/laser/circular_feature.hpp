/*
 * Copyright 2026 The laserloc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "laser/geometry.hpp"

namespace laser {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Mask = std::vector<unsigned char>;

/// Ring of V direction-binned D-dimensional segments. Segment a covers the
/// planar field of view [2*pi*a/V, 2*pi*(a+1)/V); segments 0 and V-1 are
/// neighbours. Invalid segments carry no data and are held at zero.
class CircularFeature {
 public:
  CircularFeature() = default;

  CircularFeature(Matrix segments, Mask valid) : segments_(std::move(segments)), valid_(std::move(valid)) {
    if (segments_.rows() == 0 || segments_.cols() == 0) {
      throw std::invalid_argument("CircularFeature: V and D must be positive");
    }
    if (valid_.size() != static_cast<std::size_t>(segments_.rows())) {
      throw std::invalid_argument("CircularFeature: mask length " + std::to_string(valid_.size()) +
                                  " != V " + std::to_string(segments_.rows()));
    }
    for (std::size_t a = 0; a < valid_.size(); ++a) {
      if (!valid_[a]) segments_.row(static_cast<Eigen::Index>(a)).setZero();
    }
  }

  // Fully valid feature.
  explicit CircularFeature(Matrix segments)
      : segments_(std::move(segments)), valid_(static_cast<std::size_t>(segments_.rows()), 1) {
    if (segments_.rows() == 0 || segments_.cols() == 0) {
      throw std::invalid_argument("CircularFeature: V and D must be positive");
    }
  }

  std::size_t V() const { return static_cast<std::size_t>(segments_.rows()); }
  std::size_t D() const { return static_cast<std::size_t>(segments_.cols()); }
  const Matrix& segments() const { return segments_; }
  const Mask& valid() const { return valid_; }
  bool valid(std::size_t a) const { return valid_[a] != 0; }
  auto segment(std::size_t a) const { return segments_.row(static_cast<Eigen::Index>(a)); }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (unsigned char v : valid_) n += v ? 1 : 0;
    return n;
  }

  friend bool operator==(const CircularFeature& a, const CircularFeature& b) {
    return a.valid_ == b.valid_ && a.segments_.rows() == b.segments_.rows() &&
           a.segments_.cols() == b.segments_.cols() && a.segments_ == b.segments_;
  }

 private:
  Matrix segments_;
  Mask valid_;
};

// Cosine with the zero-norm convention: anything against a zero vector is 0.
template <typename A, typename B>
double cosine(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

inline void check_same_shape(const CircularFeature& a, const CircularFeature& b) {
  if (a.V() != b.V() || a.D() != b.D()) {
    throw std::invalid_argument("circular features differ in shape: (" + std::to_string(a.V()) + "x" +
                                std::to_string(a.D()) + ") vs (" + std::to_string(b.V()) + "x" +
                                std::to_string(b.D()) + ")");
  }
}

/// Mean segment cosine over the jointly valid segments, mapped to [0, 1].
inline double similarity(const CircularFeature& a, const CircularFeature& b) {
  check_same_shape(a, b);
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t s = 0; s < a.V(); ++s) {
    if (!a.valid(s) || !b.valid(s)) continue;
    acc += cosine(a.segment(s), b.segment(s));
    ++n;
  }
  if (n == 0) throw std::invalid_argument("similarity: features share no valid segment");
  return acc / static_cast<double>(2 * n) + 0.5;
}

/// Output segment a is input segment (a + V*theta/2pi) mod V. Fractional
/// shifts blend the two neighbouring segments; a blended segment is valid
/// only when both sources are.
inline CircularFeature rotate(const CircularFeature& f, double theta) {
  const long V = static_cast<long>(f.V());
  const double shift = wrap_angle(theta) * static_cast<double>(V) / kTwoPi;
  const auto [whole, frac] = split_index(shift);
  Matrix out(f.V(), f.D());
  Mask valid(f.V(), 0);
  for (long a = 0; a < V; ++a) {
    const long i0 = wrap_index(a + whole, V);
    if (frac == 0.0) {
      out.row(a) = f.segments().row(i0);
      valid[a] = f.valid()[i0];
      continue;
    }
    const long i1 = wrap_index(i0 + 1, V);
    out.row(a) = (1.0 - frac) * f.segments().row(i0) + frac * f.segments().row(i1);
    valid[a] = f.valid()[i0] && f.valid()[i1];
  }
  return {std::move(out), std::move(valid)};
}

/// Mean of the unit-normalized valid segments. Zero-norm valid segments add
/// nothing but still count in the denominator.
inline Vector context(const CircularFeature& f) {
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(f.D()));
  std::size_t n = 0;
  bool any_nonzero = false;
  for (std::size_t a = 0; a < f.V(); ++a) {
    if (!f.valid(a)) continue;
    ++n;
    const double norm = f.segment(a).norm();
    if (norm == 0.0) continue;
    acc += f.segment(a).transpose() / norm;
    any_nonzero = true;
  }
  if (!any_nonzero) throw std::invalid_argument("context: no valid segment with nonzero norm");
  return acc / static_cast<double>(n);
}

/// Invalidates segments whose angular midpoint falls outside the half-open
/// window [center - fov/2, center + fov/2).
inline CircularFeature mask_fov(const CircularFeature& f, double center, double fov) {
  if (!(fov > 0.0) || fov > kTwoPi + 1e-12) throw std::invalid_argument("mask_fov: fov must be in (0, 2pi]");
  const double V = static_cast<double>(f.V());
  const double seg = kTwoPi / V;
  const double start = (center - 0.5 * fov) / seg;  // in segment units
  const double width = fov / seg;
  Mask valid = f.valid();
  for (std::size_t a = 0; a < f.V(); ++a) {
    double u = std::fmod(static_cast<double>(a) + 0.5 - start, V);
    if (u < 0.0) u += V;
    const double r = std::round(u);
    if (std::fabs(u - r) < kIndexSnap) u = r == V ? 0.0 : r;
    if (!(u < width - kIndexSnap)) valid[a] = 0;
  }
  return {f.segments(), std::move(valid)};
}

}  // namespace laser
