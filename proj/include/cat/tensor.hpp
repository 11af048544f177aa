/* Copyright 2026 The CAT Codec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cat {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles with an optional gradient buffer of the
// same length. The gradient buffer is allocated lazily by the first backward
// pass that reaches the tensor.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Value of a single-element tensor.
  double item() const;

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on) { requires_grad_ = on; }

  bool has_grad() const { return !grad_.empty(); }
  std::span<double> grad();
  std::span<const double> grad() const { return grad_; }
  void zero_grad();
  void drop_grad() { grad_.clear(); }

  // Same shape and data, no gradient.
  Tensor detached() const { return Tensor(shape_, data_); }
  // Reinterprets the data under a new shape of equal size.
  void reshape(Shape shape);

 private:
  Shape shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
  bool requires_grad_ = false;
};

using TensorPtr = std::shared_ptr<Tensor>;

inline TensorPtr make_tensor(Tensor t) { return std::make_shared<Tensor>(std::move(t)); }
inline TensorPtr make_leaf(Tensor t, bool requires_grad) {
  t.set_requires_grad(requires_grad);
  return std::make_shared<Tensor>(std::move(t));
}

// Record of executed differentiable operations. Each op pushes a closure that
// propagates its output gradient into its inputs; backward() replays them in
// exact reverse order. An inference tape records nothing.
class Tape {
 public:
  enum class Mode { kRecord, kInference };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::kRecord; }

  void record(std::string op, std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded closure in reverse.
  // Gradients accumulate into existing buffers. Clears the tape afterwards.
  void backward(Tensor& loss);

  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> op_names() const;
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    std::string op;
    std::function<void()> backward;
  };
  Mode mode_;
  std::vector<Entry> entries_;
};

}  // namespace cat
