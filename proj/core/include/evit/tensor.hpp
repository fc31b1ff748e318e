#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evit {

// Dense row-major matrix of doubles. Zero-row tensors are valid and show up
// whenever a patch set is empty.
class Tensor2D {
 public:
  Tensor2D() = default;
  Tensor2D(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Tensor2D identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  void fill(double v);
  bool all_finite() const noexcept;
  Tensor2D transposed() const;

  Tensor2D& operator+=(const Tensor2D& other);
  Tensor2D& operator*=(double s);

  friend bool operator==(const Tensor2D&, const Tensor2D&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// max |a-b| over all entries; shapes must agree.
double max_abs_diff(const Tensor2D& a, const Tensor2D& b);

}  // namespace evit
