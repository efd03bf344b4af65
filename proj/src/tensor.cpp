#include "dyntta/tensor.hpp"

#include <sstream>

namespace dyntta {

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) {
    require(d > 0, "shape dimensions must be positive, got " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape s, Array d) : shape(std::move(s)), data(std::move(d)) {
  require(numel(shape) == data.size(),
          "tensor data length does not match shape " + shape_str(shape));
}

Tensor Tensor::full(Shape s, float v) {
  Tensor t;
  t.shape = std::move(s);
  t.data = Array::Constant(numel(t.shape), v);
  return t;
}

Tensor Tensor::scalar(float v) { return full({1}, v); }

Tensor Tensor::from(Shape s, std::initializer_list<float> values) {
  Tensor t;
  t.shape = std::move(s);
  require(numel(t.shape) == static_cast<int64_t>(values.size()),
          "initializer length does not match shape " + shape_str(t.shape));
  t.data = Array(values.size());
  int64_t i = 0;
  for (float v : values) t.data[i++] = v;
  return t;
}

void Tensor::ensure_grad() {
  if (!grad || grad->size() != data.size()) grad = Array::Zero(data.size());
}

void Tensor::zero_grad() {
  if (grad) grad->setZero();
}

bool all_finite(const Array& a) { return a.allFinite(); }

void check_finite(const Array& a, const std::string& where) {
  if (!a.allFinite()) throw NumericError("non-finite values in " + where);
}

void check_finite(const Tensor& t, const std::string& where) { check_finite(t.data, where); }

}  // namespace dyntta
