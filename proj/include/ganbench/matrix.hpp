#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ganbench {

/// Raised when operand shapes do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles. Rows are samples, columns dimensions.
class Matrix2D {
 public:
  Matrix2D() = default;
  Matrix2D(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix2D(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw ShapeError("Matrix2D: data length != rows*cols");
  }
  Matrix2D(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("Matrix2D: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix2D scalar(double v) { return Matrix2D(1, 1, v); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Matrix2D& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_string() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix2D&, const Matrix2D&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
inline Eigen::Map<RowMajor> as_eigen(Matrix2D& m) {
  return {m.data(), Eigen::Index(m.rows()), Eigen::Index(m.cols())};
}
inline Eigen::Map<const RowMajor> as_eigen(const Matrix2D& m) {
  return {m.data(), Eigen::Index(m.rows()), Eigen::Index(m.cols())};
}
}  // namespace detail

/// a * b
inline Matrix2D matmul(const Matrix2D& a, const Matrix2D& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + a.shape_string() + " * " + b.shape_string());
  Matrix2D out(a.rows(), b.cols());
  if (a.rows() && b.cols() && a.cols()) detail::as_eigen(out).noalias() = detail::as_eigen(a) * detail::as_eigen(b);
  return out;
}

/// a * b^T
inline Matrix2D matmul_bt(const Matrix2D& a, const Matrix2D& b) {
  if (a.cols() != b.cols())
    throw ShapeError("matmul_bt: " + a.shape_string() + " * " + b.shape_string() + "^T");
  Matrix2D out(a.rows(), b.rows());
  if (a.rows() && b.rows() && a.cols())
    detail::as_eigen(out).noalias() = detail::as_eigen(a) * detail::as_eigen(b).transpose();
  return out;
}

/// a^T * b
inline Matrix2D matmul_at(const Matrix2D& a, const Matrix2D& b) {
  if (a.rows() != b.rows())
    throw ShapeError("matmul_at: " + a.shape_string() + "^T * " + b.shape_string());
  Matrix2D out(a.cols(), b.cols());
  if (a.cols() && b.cols() && a.rows())
    detail::as_eigen(out).noalias() = detail::as_eigen(a).transpose() * detail::as_eigen(b);
  return out;
}

inline Matrix2D transpose(const Matrix2D& a) {
  Matrix2D out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

/// Rows of `m` selected by `idx`, in order.
inline Matrix2D gather_rows(const Matrix2D& m, std::span<const std::size_t> idx) {
  Matrix2D out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = m.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

/// Horizontal concatenation [a | b].
inline Matrix2D hconcat(const Matrix2D& a, const Matrix2D& b) {
  if (a.rows() != b.rows()) throw ShapeError("hconcat: row mismatch");
  Matrix2D out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy(a.row(r).begin(), a.row(r).end(), out.row(r).begin());
    std::copy(b.row(r).begin(), b.row(r).end(), out.row(r).begin() + long(a.cols()));
  }
  return out;
}

inline std::vector<double> column_means(const Matrix2D& m) {
  std::vector<double> mu(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) mu[c] += m(r, c);
  for (auto& v : mu) v /= double(m.rows());
  return mu;
}

/// Population standard deviation per column.
inline std::vector<double> column_stddevs(const Matrix2D& m) {
  auto mu = column_means(m);
  std::vector<double> sd(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      double d = m(r, c) - mu[c];
      sd[c] += d * d;
    }
  for (auto& v : sd) v = std::sqrt(v / double(m.rows()));
  return sd;
}

}  // namespace ganbench
