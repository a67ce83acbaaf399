#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "w2c/error.hpp"

namespace w2c {

/// Dense row-major matrix of doubles. Vectors are 1 x c matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  void fill(double value);

  Matrix transpose() const;

  /// Exact element-wise equality (bitwise for non-NaN values).
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// dot(a,b) / (|a| |b|). Throws DegenerateInputError on a zero-norm input.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Row-wise layer normalization with affine gain/bias, epsilon 1e-5.
Matrix layer_norm(const Matrix& x, std::span<const double> gain, std::span<const double> bias);

inline constexpr double kLayerNormEps = 1e-5;

double sigmoid(double x);

/// Rounds every entry to the nearest float. Checkpoints store f32, so
/// trained artifacts are snapped before they leave a training loop.
void snap_to_float(Matrix& m);

}  // namespace w2c
