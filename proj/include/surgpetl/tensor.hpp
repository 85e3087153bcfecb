#pragma once

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "surgpetl/errors.hpp"

namespace surgpetl {

/// Dense row-major tensor of doubles with value semantics. All model math
/// runs in double precision so finite-difference checks are meaningful.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(numel_of(shape_)), 0.0);
  }
  Tensor(std::vector<int64_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != numel_of(shape_))
      throw ShapeError("tensor data size does not match shape");
  }

  static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int64_t> shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  double& at(int64_t i, int64_t j) { return data_[static_cast<size_t>(i * dim(1) + j)]; }
  double at(int64_t i, int64_t j) const { return data_[static_cast<size_t>(i * dim(1) + j)]; }
  double& at(int64_t i, int64_t j, int64_t k) {
    return data_[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
  }
  double at(int64_t i, int64_t j, int64_t k) const {
    return data_[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
  }
  double& at(int64_t i, int64_t j, int64_t k, int64_t l) {
    return data_[static_cast<size_t>(((i * dim(1) + j) * dim(2) + k) * dim(3) + l)];
  }
  double at(int64_t i, int64_t j, int64_t k, int64_t l) const {
    return data_[static_cast<size_t>(((i * dim(1) + j) * dim(2) + k) * dim(3) + l)];
  }

  /// Same data, new shape; element count must match.
  Tensor reshaped(std::vector<int64_t> shape) const {
    if (numel_of(shape) != numel()) throw ShapeError("reshape changes element count");
    return Tensor(std::move(shape), data_);
  }

  Tensor& operator+=(const Tensor& o) {
    check_same_shape(o);
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    check_same_shape(o);
    for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(Tensor a, double s) { return a *= s; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  static int64_t numel_of(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
  }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

 private:
  void check_same_shape(const Tensor& o) const {
    if (shape_ != o.shape_)
      throw ShapeError("shape mismatch: " + shape_str() + " vs " + o.shape_str());
  }

  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

using EigenMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using EigenConstMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// C = A(m,k) * B(k,n), treating tensors as 2D with the given dims.
inline void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  EigenConstMap ma(a, m, k), mb(b, k, n);
  EigenMap mc(c, m, n);
  mc.noalias() = ma * mb;
}

/// C += A^T(m,k)^T... i.e. C(k,n) += A(m,k)^T * B(m,n).
inline void matmul_tn_acc(const double* a, const double* b, double* c, int64_t m, int64_t k,
                          int64_t n) {
  EigenConstMap ma(a, m, k), mb(b, m, n);
  EigenMap mc(c, k, n);
  mc.noalias() += ma.transpose() * mb;
}

/// C = A(m,k) * B(n,k)^T.
inline void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t k,
                      int64_t n) {
  EigenConstMap ma(a, m, k), mb(b, n, k);
  EigenMap mc(c, m, n);
  mc.noalias() = ma * mb.transpose();
}

/// Swap the first two axes of a 3D tensor: (A,B,D) -> (B,A,D).
inline Tensor transpose01(const Tensor& x) {
  if (x.ndim() != 3) throw ShapeError("transpose01 expects a 3D tensor, got " + x.shape_str());
  const int64_t a = x.dim(0), b = x.dim(1), d = x.dim(2);
  Tensor out({b, a, d});
  for (int64_t i = 0; i < a; ++i)
    for (int64_t j = 0; j < b; ++j)
      for (int64_t k = 0; k < d; ++k) out.at(j, i, k) = x.at(i, j, k);
  return out;
}

}  // namespace surgpetl
