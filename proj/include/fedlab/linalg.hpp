#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fedlab {

using DenseVec = std::vector<double>;

/// Row-major dense matrix of doubles.
class DenseMat {
 public:
  DenseMat() = default;
  DenseMat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMat(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  static DenseMat identity(std::size_t n);

  friend bool operator==(const DenseMat&, const DenseMat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
bool all_finite(std::span<const double> a);
bool is_zero(std::span<const double> a);

/// Cosine similarity clamped to [-1, 1].
/// Throws DomainError on a zero-norm operand and ShapeError on a length mismatch.
double cosine_sim(std::span<const double> a, std::span<const double> b);

// y = M x
DenseVec matvec(const DenseMat& m, std::span<const double> x);
// y = M^T x
DenseVec matvec_transposed(const DenseMat& m, std::span<const double> x);

// y += s * x
void axpy(double s, std::span<const double> x, std::span<double> y);

}  // namespace fedlab
