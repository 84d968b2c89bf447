#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace ufda {

using Shape = std::vector<int64_t>;

// Every buffer starts on a cache line. Eigen peels unaligned leading elements
// off its vectorized reductions, so with the default 16-byte heap alignment
// the summation order (and the last bits of the result) would depend on where
// malloc happened to place a tensor.
template <typename T>
struct CacheAlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  CacheAlignedAllocator() = default;
  template <typename U>
  CacheAlignedAllocator(const CacheAlignedAllocator<U>&) {}
  T* allocate(size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, size_t) { ::operator delete(p, kAlign); }
  template <typename U>
  bool operator==(const CacheAlignedAllocator<U>&) const { return true; }
};

using Storage = std::vector<double, CacheAlignedAllocator<double>>;

std::string shape_str(const Shape& shape);
int64_t shape_numel(const Shape& shape);

// Dense row-major array of doubles. Rank-2 tensors are [rows, cols]; image
// batches are [N, C, H, W].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor matrix(int64_t rows, int64_t cols, std::initializer_list<double> values);
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

  const Shape& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(int64_t i) const;
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  // Rank-2 accessors.
  int64_t rows() const { return dim(0); }
  int64_t cols() const;
  double& at(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * cols() + c)]; }
  double at(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * cols() + c)]; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  Storage& storage() { return data_; }
  const Storage& storage() const { return data_; }

  std::span<const double> row(int64_t r) const;
  std::span<double> row(int64_t r);

  Tensor reshaped(Shape shape) const;
  void fill(double v);
  bool all_finite() const;
  double item() const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  Storage data_;
};

}  // namespace ufda
