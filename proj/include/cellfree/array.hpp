#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cellfree {

using cplx = std::complex<double>;

/// Dense row-major 2-D array. Used for (k, f) grids and per-AP K x F slices.
template <typename T>
class Array2 {
 public:
  Array2() = default;
  Array2(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> flat() & { return data_; }
  std::span<const T> flat() const& { return data_; }
  void flat() && = delete;

  bool same_shape(const Array2& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  friend bool operator==(const Array2&, const Array2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Dense row-major 3-D array indexed (i, j, l).
template <typename T>
class Array3 {
 public:
  Array3() = default;
  Array3(std::size_t d0, std::size_t d1, std::size_t d2, T fill = T{})
      : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2, fill) {}

  std::size_t dim0() const { return d0_; }
  std::size_t dim1() const { return d1_; }
  std::size_t dim2() const { return d2_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j, std::size_t l) {
    return data_[(i * d1_ + j) * d2_ + l];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t l) const {
    return data_[(i * d1_ + j) * d2_ + l];
  }

  std::span<T> flat() & { return data_; }
  std::span<const T> flat() const& { return data_; }
  void flat() && = delete;

  bool same_shape(const Array3& o) const {
    return d0_ == o.d0_ && d1_ == o.d1_ && d2_ == o.d2_;
  }

  friend bool operator==(const Array3&, const Array3&) = default;

 private:
  std::size_t d0_ = 0;
  std::size_t d1_ = 0;
  std::size_t d2_ = 0;
  std::vector<T> data_;
};

using ComplexMatrix = Array2<cplx>;
using RealMatrix = Array2<double>;
using ComplexTensor3 = Array3<cplx>;

template <typename Container>
double squared_norm(const Container& a) {
  double s = 0.0;
  for (const auto& x : a.flat()) s += std::norm(x);
  return s;
}

template <typename Container>
double frobenius_distance(const Container& a, const Container& b) {
  if (a.size() != b.size()) throw std::invalid_argument("frobenius_distance: shape mismatch");
  auto fa = a.flat();
  auto fb = b.flat();
  double s = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) s += std::norm(fa[i] - fb[i]);
  return std::sqrt(s);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace cellfree
