#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace antidote::numerics {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  /// Row-wise literal, e.g. Matrix{{1, 2}, {3, 4}}.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  Matrix transpose() const;
  /// Rows of `this` followed by rows of `below`; column counts must agree.
  Matrix vstack(const Matrix& below) const;
  Matrix select_rows(std::span<const std::size_t> indices) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

double frobenius_norm(const Matrix& a);
double squared_distance(std::span<const double> a, std::span<const double> b);
bool all_finite(const Matrix& a);

struct EigenPairs {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column j pairs with values[j]
};

enum class EigenMethod {
  TridiagonalQl,                // Householder reduction then implicit QL
  TridiagonalInverseIteration,  // QL eigenvalues, inverse iteration for the wanted vectors only
  CyclicJacobi,
};

struct EigenOptions {
  EigenMethod method = EigenMethod::TridiagonalQl;
  double symmetry_tolerance = 1e-10;
  int max_sweeps = 100;       // Jacobi sweeps
  int max_ql_iterations = 60;  // per eigenvalue
};

/// The `want` smallest eigenpairs of a symmetric matrix.
EigenPairs sym_eig(const Matrix& a, std::size_t want, const EigenOptions& options = {});

/// Lower-triangular Cholesky factor; throws when a non-positive pivot appears.
Matrix cholesky(const Matrix& a);

/// Solves A X = B for symmetric positive-definite A.
Matrix solve_spd(const Matrix& a, const Matrix& b);

struct PcaFit {
  std::vector<double> mean;  // column means removed before projecting
  Matrix basis;              // d x d_out, orthonormal columns in descending variance order
  Matrix projected;          // n x d_out
};

PcaFit pca_fit(const Matrix& x, std::size_t d_out);

/// Projects the column-centered rows of X onto its top `d_out` principal directions.
inline Matrix pca(const Matrix& x, std::size_t d_out) { return pca_fit(x, d_out).projected; }

}  // namespace antidote::numerics
