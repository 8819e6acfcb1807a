#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ftfer {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void fill(double value);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// out = a * b
void multiply(const Matrix& a, const Matrix& b, Matrix& out);

// out += a^T * b using only the listed rows of a and b
void accumulate_at_b(const Matrix& a, const Matrix& b, std::span<const std::size_t> rows,
                     Matrix& out);

// out.row(r) = a.row(r) * b^T for every listed row r; other rows untouched
void multiply_bt_rows(const Matrix& a, const Matrix& b, std::span<const std::size_t> rows,
                      Matrix& out);

// every row of m += bias (a 1 x cols matrix)
void add_row_broadcast(Matrix& m, const Matrix& bias);

// out (1 x cols) += sum of the listed rows of m
void accumulate_column_sums(const Matrix& m, std::span<const std::size_t> rows, Matrix& out);

double squared_norm(const Matrix& m);

std::vector<std::size_t> iota_rows(std::size_t n);

}  // namespace ftfer
