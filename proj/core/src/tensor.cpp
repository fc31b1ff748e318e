#include "evit/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "evit/error.hpp"

namespace evit {

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorCode::ShapeMismatch,
                "value count " + std::to_string(values_.size()) + " does not match " +
                    std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Tensor2D Tensor2D::identity(std::size_t n) {
  Tensor2D t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

void Tensor2D::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor2D::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor2D Tensor2D::transposed() const {
  Tensor2D out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

Tensor2D& Tensor2D::operator+=(const Tensor2D& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_) {
    throw Error(ErrorCode::ShapeMismatch, "elementwise add");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Tensor2D& Tensor2D::operator*=(double s) {
  for (auto& v : values_) v *= s;
  return *this;
}

double max_abs_diff(const Tensor2D& a, const Tensor2D& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "max_abs_diff");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace evit
