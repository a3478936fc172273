#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace textwalk {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Four running sums let the compiler vectorize without reassociating.
inline double dot(std::span<const double> a, std::span<const double> b) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// out += m * x
inline void gemv_add(const Matrix& m, std::span<const double> x, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] += dot(m.row(r), x);
}

// out += m^T * y
inline void gemv_t_add(const Matrix& m, std::span<const double> y, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    auto mr = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += mr[c] * yr;
  }
}

// m += y x^T
inline void outer_add(Matrix& m, std::span<const double> y, std::span<const double> x) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    auto mr = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) mr[c] += yr * x[c];
  }
}

// Gradient buffer for one parameter tensor. Rows are marked as touched so the
// optimizer updates only parameters that received a gradient.
struct TensorGrad {
  Matrix value;
  std::vector<std::uint8_t> touched;
  std::vector<std::uint32_t> touched_rows;

  explicit TensorGrad(std::size_t rows = 0, std::size_t cols = 0)
      : value(rows, cols), touched(rows, 0) {}
  std::span<double> touch(std::size_t row) {
    if (!touched[row]) {
      touched[row] = 1;
      touched_rows.push_back(static_cast<std::uint32_t>(row));
    }
    return value.row(row);
  }
  void touch_all() {
    for (std::size_t r = 0; r < value.rows(); ++r) touch(r);
  }
  void clear();
};

}  // namespace textwalk
