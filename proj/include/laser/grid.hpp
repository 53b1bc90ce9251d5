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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "laser/geometry.hpp"

namespace laser {

/// Dense nx x ny array, x-major. Cell (i, j) is column i, row j.
template <typename T>
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(std::size_t nx, std::size_t ny, T fill = T{}) : nx_(nx), ny_(ny), data_(nx * ny, fill) {}

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * ny_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * ny_ + j]; }

  T& at_flat(std::size_t k) { return data_[k]; }
  const T& at_flat(std::size_t k) const { return data_[k]; }

  bool in_bounds(long i, long j) const {
    return i >= 0 && j >= 0 && static_cast<std::size_t>(i) < nx_ && static_cast<std::size_t>(j) < ny_;
  }

  const std::vector<T>& data() const { return data_; }

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<T> data_;
};

/// Uniform lattice of cell centers covering a bounding box.
struct GridSpec {
  Vec2 origin{0.0, 0.0};  // lower-left corner of cell (0, 0)
  double cell = 0.1;
  std::size_t nx = 0;
  std::size_t ny = 0;

  static GridSpec covering(const BoundingBox& box, double cell) {
    if (!(cell > 0.0)) throw std::invalid_argument("grid cell must be positive");
    GridSpec g;
    g.origin = box.min;
    g.cell = cell;
    g.nx = static_cast<std::size_t>(std::max(1.0, std::ceil(box.width() / cell - kIndexSnap)));
    g.ny = static_cast<std::size_t>(std::max(1.0, std::ceil(box.height() / cell - kIndexSnap)));
    return g;
  }

  Vec2 center(std::size_t i, std::size_t j) const {
    return origin + Vec2((static_cast<double>(i) + 0.5) * cell, (static_cast<double>(j) + 0.5) * cell);
  }

  std::size_t cells() const { return nx * ny; }
};

/// Runs fn(k) for k in [0, n) on `threads` workers with a static split.
/// Each k must only write its own output slot.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t k = t; k < n; k += threads) fn(k);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace laser
