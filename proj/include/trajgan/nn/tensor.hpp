#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace trajgan::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string to_string(const Shape& shape);

// Dense row-major array. The gradient slot is empty until enable_grad().
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* ptr() noexcept { return data_.data(); }
  const T* ptr() const noexcept { return data_.data(); }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  bool has_grad() const noexcept { return !data_.empty() && grad_.size() == data_.size(); }
  void enable_grad() { grad_.assign(data_.size(), T{0}); }
  void zero_grad();
  std::span<T> grad() noexcept { return grad_; }
  std::span<const T> grad() const noexcept { return grad_; }

  // Same data under a new shape of equal size.
  Tensor reshaped(Shape shape) const;
  void reshape(Shape shape);

  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

 private:
  Shape shape_;
  std::vector<T> data_;
  std::vector<T> grad_;
};

// Throws NumericError naming `where` if any element is NaN or infinite.
template <typename T>
void ensure_finite(std::span<const T> values, const char* where);

template <typename T>
void ensure_finite(const Tensor<T>& t, const char* where) {
  ensure_finite<T>(t.data(), where);
}

}  // namespace trajgan::nn
