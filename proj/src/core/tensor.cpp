#include "ufda/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ufda/core/error.hpp"

namespace ufda {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw DimensionError("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_numel(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(values.begin(), values.end()) {
  if (static_cast<int64_t>(data_.size()) != shape_numel(shape_)) {
    throw DimensionError("tensor of shape " + shape_str(shape_) + " given " + std::to_string(data_.size()) +
                         " values");
  }
}

Tensor Tensor::matrix(int64_t rows, int64_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

int64_t Tensor::dim(int64_t i) const {
  if (i < 0 || i >= rank()) throw DimensionError("dim " + std::to_string(i) + " out of range for " + shape_str(shape_));
  return shape_[static_cast<size_t>(i)];
}

int64_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("expected rank-2 tensor, got " + shape_str(shape_));
  return shape_[1];
}

std::span<const double> Tensor::row(int64_t r) const {
  const auto c = cols();
  return std::span<const double>(data_).subspan(static_cast<size_t>(r * c), static_cast<size_t>(c));
}

std::span<double> Tensor::row(int64_t r) {
  const auto c = cols();
  return std::span<double>(data_).subspan(static_cast<size_t>(r * c), static_cast<size_t>(c));
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel()) {
    throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape_));
  return data_[0];
}

}  // namespace ufda
