#include "ftfer/matrix.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ftfer/error.hpp"
#include "ftfer/simd.hpp"

namespace ftfer {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(std::string("matrix shape mismatch: ") + what);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double value)
    : rows_(rows), cols_(cols), data_(rows * cols, value) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void multiply(const Matrix& a, const Matrix& b, Matrix& out) {
  require(a.cols() == b.rows(), "multiply inner dimension");
  if (out.rows() != a.rows() || out.cols() != b.cols()) out = Matrix(a.rows(), b.cols());
  else out.fill(0.0);
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* dst = out.row(i).data();
    const auto src = a.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double s = src[p];
      if (s != 0.0) k.axpy(s, b.row(p).data(), dst, b.cols());
    }
  }
}

void accumulate_at_b(const Matrix& a, const Matrix& b, std::span<const std::size_t> rows,
                     Matrix& out) {
  require(a.rows() == b.rows(), "accumulate_at_b row count");
  require(out.rows() == a.cols() && out.cols() == b.cols(), "accumulate_at_b output");
  const auto& k = simd::kernels();
  for (std::size_t r : rows) {
    const auto arow = a.row(r);
    const double* brow = b.row(r).data();
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double s = arow[p];
      if (s != 0.0) k.axpy(s, brow, out.row(p).data(), b.cols());
    }
  }
}

void multiply_bt_rows(const Matrix& a, const Matrix& b, std::span<const std::size_t> rows,
                      Matrix& out) {
  require(a.cols() == b.cols(), "multiply_bt inner dimension");
  require(out.rows() == a.rows() && out.cols() == b.rows(), "multiply_bt output");
  const auto& k = simd::kernels();
  for (std::size_t r : rows) {
    const double* arow = a.row(r).data();
    auto dst = out.row(r);
    for (std::size_t j = 0; j < b.rows(); ++j) dst[j] = k.dot(arow, b.row(j).data(), a.cols());
  }
}

void add_row_broadcast(Matrix& m, const Matrix& bias) {
  require(bias.rows() == 1 && bias.cols() == m.cols(), "bias shape");
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < m.rows(); ++i) k.axpy(1.0, bias.values().data(), m.row(i).data(), m.cols());
}

void accumulate_column_sums(const Matrix& m, std::span<const std::size_t> rows, Matrix& out) {
  require(out.rows() == 1 && out.cols() == m.cols(), "column sum output");
  const auto& k = simd::kernels();
  for (std::size_t r : rows) k.axpy(1.0, m.row(r).data(), out.values().data(), m.cols());
}

double squared_norm(const Matrix& m) {
  return simd::kernels().dot(m.values().data(), m.values().data(), m.size());
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace ftfer
