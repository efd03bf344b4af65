#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyntta {

using Array = Eigen::ArrayXf;
using Shape = std::vector<int>;

// Bad arguments or violated preconditions. CLI maps these to exit code 1.
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or diverging numerics. CLI maps these to exit code 2.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense float32 array with a shape and an optional gradient slot. This is
// the currency of every numeric routine in the library; layout is flat
// row-major over `shape`.
struct Tensor {
  Shape shape;
  Array data;
  bool requires_grad = false;
  std::optional<Array> grad;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(Array::Zero(numel(shape))) {}
  Tensor(Shape s, Array d);

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor full(Shape s, float v);
  static Tensor scalar(float v);
  static Tensor from(Shape s, std::initializer_list<float> values);

  int64_t size() const { return data.size(); }
  void ensure_grad();
  void zero_grad();
};

bool all_finite(const Array& a);
void check_finite(const Array& a, const std::string& where);
void check_finite(const Tensor& t, const std::string& where);

}  // namespace dyntta
