// include/specsal/matrix.hpp
//
// Copyright 2026  The Specsal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "specsal/common.hpp"

namespace specsal {

// Dense row-major matrix. All F x T maps, masks and spectrograms in the
// toolkit share this layout (row = frequency bin, column = frame).
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Mat() = default;
  Mat(int r, int c, T fill = T{}) : rows(r), cols(c), data(std::size_t(r) * c, fill) {}

  T& operator()(int r, int c) { return data[std::size_t(r) * cols + c]; }
  const T& operator()(int r, int c) const { return data[std::size_t(r) * cols + c]; }

  T* row(int r) { return data.data() + std::size_t(r) * cols; }
  const T* row(int r) const { return data.data() + std::size_t(r) * cols; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  bool same_shape(const Mat& other) const {
    return rows == other.rows && cols == other.cols;
  }

  void fill(T v) { data.assign(data.size(), v); }

  bool operator==(const Mat& other) const {
    return rows == other.rows && cols == other.cols && data == other.data;
  }
};

using MatF = Mat<float>;
using MatD = Mat<double>;
using MatB = Mat<std::uint8_t>;
using MatC = Mat<std::complex<double>>;

inline MatF to_float(const MatD& m) {
  MatF out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.size(); ++i) out.data[i] = float(m.data[i]);
  return out;
}

inline MatD to_double(const MatF& m) {
  MatD out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.size(); ++i) out.data[i] = double(m.data[i]);
  return out;
}

template <typename T>
inline void require_same_shape(const Mat<T>& a, const Mat<T>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DataError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows) +
                    "x" + std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                    std::to_string(b.cols) + ")");
  }
}

}  // namespace specsal
