#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pixelgame/error.hpp"

namespace pixelgame {

struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  std::size_t sample() const noexcept { return static_cast<std::size_t>(c) * h * w; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

/// Dense NCHW tensor.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0}) : shape_(shape), data_(shape.count(), fill) {}

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }

  T* sample(int n) noexcept { return data_.data() + n * shape_.sample(); }
  const T* sample(int n) const noexcept { return data_.data() + n * shape_.sample(); }
  T* channel(int n, int c) noexcept { return sample(n) + c * shape_.plane(); }
  const T* channel(int n, int c) const noexcept { return sample(n) + c * shape_.plane(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }
  T& at(int n, int c, int y, int x) noexcept {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  const T& at(int n, int c, int y, int x) const noexcept {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  Tensor& operator+=(const Tensor& other) {
    if (!(shape_ == other.shape_)) {
      fail(ErrorKind::Dimension, "tensor add: " + to_string(shape_) + " vs " + to_string(other.shape_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

/// A trainable tensor and its accumulated gradient.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string name, Shape shape) : name(std::move(name)), value(shape), grad(shape) {}
  void zero_grad() { grad.fill(T{0}); }
};

}  // namespace pixelgame
