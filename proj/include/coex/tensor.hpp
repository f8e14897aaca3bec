#pragma once

#include <cstddef>
#include <new>
#include <string>
#include <vector>

namespace coex::nd {

long long shape_size(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

// 64-byte-aligned allocator. Keeping every tensor buffer on the same alignment
// makes vectorized kernels traverse every buffer identically, so results are
// bitwise reproducible regardless of where the heap happens to place them.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlign = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(kAlign)));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t(kAlign)); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

using AlignedVec = std::vector<double, AlignedAllocator<double>>;

// Dense row-major tensor of 64-bit reals. All computation in this project is
// double precision; shapes are explicit and there is no broadcasting.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);  // zero-filled
  Tensor(std::vector<int> shape, const std::vector<double>& data);

  static Tensor scalar(double v);
  static Tensor filled(std::vector<int> shape, double v);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  std::string shape_str() const { return shape_to_string(shape_); }
  double item() const;  // value of a scalar (size-1) tensor
  void fill(double v);

 private:
  std::vector<int> shape_;
  AlignedVec data_;
};

}  // namespace coex::nd
