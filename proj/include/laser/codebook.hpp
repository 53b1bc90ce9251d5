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
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "laser/circular_feature.hpp"
#include "laser/floormap.hpp"

namespace laser {

// How map points pick their codebook row.
enum class ClassAssignment : std::uint8_t {
  per_semantic,  // one shared codebook pair per semantic label
  per_point,     // one codebook pair per map point
};

/// Rendering codebooks. For every class there is a G x D bank indexed by
/// incident angle and an H x D bank indexed by ray distance.
struct CodebookSet {
  std::size_t G = 32;
  std::size_t H = 32;
  std::size_t V = 16;
  std::size_t D = 128;
  double d_max = 10.0;
  ClassAssignment assignment = ClassAssignment::per_semantic;
  std::vector<Matrix> angle_codes;  // [class] G x D
  std::vector<Matrix> dist_codes;   // [class] H x D

  std::size_t num_classes() const { return angle_codes.size(); }

  std::size_t class_of(std::size_t point_index, const MapPoint& p) const {
    return assignment == ClassAssignment::per_semantic ? static_cast<std::size_t>(p.s) : point_index;
  }

  // Flat parameter row of a code, as used by training: per class, G angle
  // rows followed by H distance rows.
  std::size_t angle_row(std::size_t c, std::size_t k) const { return c * (G + H) + k; }
  std::size_t dist_row(std::size_t c, std::size_t j) const { return c * (G + H) + G + j; }
  std::size_t num_rows() const { return num_classes() * (G + H); }

  void validate() const {
    if (G < 1 || H < 1 || V < 1 || D < 1) throw std::invalid_argument("CodebookSet: G, H, V, D must be >= 1");
    if (!(d_max > 0.0)) throw std::invalid_argument("CodebookSet: d_max must be positive");
    if (angle_codes.size() != dist_codes.size() || angle_codes.empty()) {
      throw std::invalid_argument("CodebookSet: need matching, non-empty angle and distance banks");
    }
    for (std::size_t c = 0; c < angle_codes.size(); ++c) {
      if (static_cast<std::size_t>(angle_codes[c].rows()) != G || static_cast<std::size_t>(angle_codes[c].cols()) != D ||
          static_cast<std::size_t>(dist_codes[c].rows()) != H || static_cast<std::size_t>(dist_codes[c].cols()) != D) {
        throw std::invalid_argument("CodebookSet: class " + std::to_string(c) + " has mismatched bank shape");
      }
    }
  }

  /// All codes stacked into one (classes * (G + H)) x D matrix.
  Matrix stacked() const {
    Matrix p(static_cast<Eigen::Index>(num_rows()), static_cast<Eigen::Index>(D));
    for (std::size_t c = 0; c < num_classes(); ++c) {
      p.middleRows(static_cast<Eigen::Index>(angle_row(c, 0)), static_cast<Eigen::Index>(G)) = angle_codes[c];
      p.middleRows(static_cast<Eigen::Index>(dist_row(c, 0)), static_cast<Eigen::Index>(H)) = dist_codes[c];
    }
    return p;
  }

  void unstack(const Matrix& p) {
    for (std::size_t c = 0; c < num_classes(); ++c) {
      angle_codes[c] = p.middleRows(static_cast<Eigen::Index>(angle_row(c, 0)), static_cast<Eigen::Index>(G));
      dist_codes[c] = p.middleRows(static_cast<Eigen::Index>(dist_row(c, 0)), static_cast<Eigen::Index>(H));
    }
  }

  friend bool operator==(const CodebookSet& a, const CodebookSet& b) {
    if (a.G != b.G || a.H != b.H || a.V != b.V || a.D != b.D || a.d_max != b.d_max ||
        a.num_classes() != b.num_classes() || a.assignment != b.assignment) {
      return false;
    }
    for (std::size_t c = 0; c < a.num_classes(); ++c) {
      if (a.angle_codes[c] != b.angle_codes[c] || a.dist_codes[c] != b.dist_codes[c]) return false;
    }
    return true;
  }
};

/// I.i.d. normal codes with standard deviation 1/sqrt(D), so code norms sit
/// near 1.
inline CodebookSet init_codebooks(std::size_t G, std::size_t H, std::size_t V, std::size_t D, std::size_t classes,
                                  double d_max, std::uint64_t seed,
                                  ClassAssignment assignment = ClassAssignment::per_semantic) {
  CodebookSet cb;
  cb.G = G;
  cb.H = H;
  cb.V = V;
  cb.D = D;
  cb.d_max = d_max;
  cb.assignment = assignment;
  if (classes == 0) throw std::invalid_argument("init_codebooks: need at least one class");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(D)));
  auto fill = [&](std::size_t rows) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(D));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
    return m;
  };
  for (std::size_t c = 0; c < classes; ++c) {
    cb.angle_codes.push_back(fill(G));
    cb.dist_codes.push_back(fill(H));
  }
  cb.validate();
  return cb;
}

inline constexpr char kCodebookMagic[6] = {'L', 'S', 'R', 'C', 'B', '1'};

inline std::size_t codebook_file_size(std::size_t G, std::size_t H, std::size_t D, std::size_t classes) {
  return sizeof(kCodebookMagic) + 5 * sizeof(std::uint32_t) + sizeof(double) + classes * (G + H) * D * sizeof(double);
}

namespace detail {

template <typename T>
void write_le(std::ostream& os, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw std::runtime_error("codebook file truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace detail

/// Binary layout: "LSRCB1", uint32 G, H, V, D, classes, float64 d_max, then
/// per class the G x D angle codes and H x D distance codes, row-major
/// float64, all little-endian.
inline void write_codebooks(std::ostream& os, const CodebookSet& cb) {
  cb.validate();
  os.write(kCodebookMagic, sizeof(kCodebookMagic));
  for (std::size_t v : {cb.G, cb.H, cb.V, cb.D, cb.num_classes()}) detail::write_le(os, static_cast<std::uint32_t>(v));
  detail::write_le(os, cb.d_max);
  for (std::size_t c = 0; c < cb.num_classes(); ++c) {
    for (const Matrix* m : {&cb.angle_codes[c], &cb.dist_codes[c]}) {
      for (Eigen::Index i = 0; i < m->rows(); ++i)
        for (Eigen::Index j = 0; j < m->cols(); ++j) detail::write_le(os, (*m)(i, j));
    }
  }
}

inline CodebookSet read_codebooks(std::istream& is) {
  char magic[sizeof(kCodebookMagic)];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kCodebookMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a codebook file (bad magic)");
  }
  CodebookSet cb;
  cb.G = detail::read_le<std::uint32_t>(is);
  cb.H = detail::read_le<std::uint32_t>(is);
  cb.V = detail::read_le<std::uint32_t>(is);
  cb.D = detail::read_le<std::uint32_t>(is);
  const std::size_t classes = detail::read_le<std::uint32_t>(is);
  cb.d_max = detail::read_le<double>(is);
  cb.assignment = classes == kNumSemantics ? ClassAssignment::per_semantic : ClassAssignment::per_point;
  for (std::size_t c = 0; c < classes; ++c) {
    Matrix a(static_cast<Eigen::Index>(cb.G), static_cast<Eigen::Index>(cb.D));
    Matrix h(static_cast<Eigen::Index>(cb.H), static_cast<Eigen::Index>(cb.D));
    for (Matrix* m : {&a, &h}) {
      for (Eigen::Index i = 0; i < m->rows(); ++i)
        for (Eigen::Index j = 0; j < m->cols(); ++j) (*m)(i, j) = detail::read_le<double>(is);
    }
    cb.angle_codes.push_back(std::move(a));
    cb.dist_codes.push_back(std::move(h));
  }
  cb.validate();
  return cb;
}

inline void save_codebooks(const std::string& path, const CodebookSet& cb) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_codebooks(os, cb);
}

inline CodebookSet load_codebooks(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_codebooks(is);
}

}  // namespace laser
