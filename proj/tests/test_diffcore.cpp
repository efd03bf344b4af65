#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dyntta/grad_check.hpp"
#include "dyntta/grad_suite.hpp"
#include "dyntta/ops.hpp"
#include "dyntta/imgproc.hpp"
#include "dyntta/rng.hpp"
#include "dyntta/tape.hpp"

#include <cmath>

using namespace dyntta;

namespace {

Tensor random_tensor(Shape shape, uint64_t seed, float lo = -1.0f, float hi = 1.0f,
                     bool requires_grad = true) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t.data[i] = rng.uniform(lo, hi);
  t.requires_grad = requires_grad;
  return t;
}

}  // namespace

TEST_CASE("softmax examples") {
  Tape t;
  SUBCASE("all zeros is uniform") {
    Var y = ops::softmax(t, t.constant(Tensor::from({3}, {0, 0, 0})));
    for (int i = 0; i < 3; ++i) CHECK(t.value(y).data[i] == doctest::Approx(1.0 / 3).epsilon(1e-6));
  }
  SUBCASE("max subtraction avoids overflow") {
    Var y = ops::softmax(t, t.constant(Tensor::from({3}, {1000, 0, 0})));
    CHECK(t.value(y).data.allFinite());
    CHECK(t.value(y).data[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(t.value(y).data[1] == doctest::Approx(0.0).epsilon(1e-5));
  }
  SUBCASE("reference values") {
    // long-double oracle for softmax([1,2,3])
    long double e1 = expl(1.0L), e2 = expl(2.0L), e3 = expl(3.0L);
    long double s = e1 + e2 + e3;
    Var y = ops::softmax(t, t.constant(Tensor::from({3}, {1, 2, 3})));
    CHECK(std::abs(t.value(y).data[0] - static_cast<double>(e1 / s)) < 1e-4);
    CHECK(std::abs(t.value(y).data[1] - static_cast<double>(e2 / s)) < 1e-4);
    CHECK(std::abs(t.value(y).data[2] - static_cast<double>(e3 / s)) < 1e-4);
    CHECK(t.value(y).data[0] == doctest::Approx(0.09003).epsilon(1e-3));
    CHECK(t.value(y).data[1] == doctest::Approx(0.24473).epsilon(1e-3));
    CHECK(t.value(y).data[2] == doctest::Approx(0.66524).epsilon(1e-3));
  }
  SUBCASE("empty input rejected") {
    CHECK_THROWS_AS(Tensor({0}), ContractError);  // zero-length shapes are invalid outright
  }
}

TEST_CASE("softmax sums to one for large magnitude inputs") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Tensor v = random_tensor({50}, seed, -1e4f, 1e4f, false);
    Tape t;
    Var y = ops::softmax(t, t.constant(v));
    const Array& out = t.value(y).data;
    CHECK((out > 0.0f).all());
    CHECK(std::abs(out.cast<double>().sum() - 1.0) < 1e-6);
  }
}

TEST_CASE("cross entropy examples") {
  Tape t;
  SUBCASE("uniform logits give ln(C)") {
    Var l = t.constant(Tensor::full({10}, 0.4f));
    Var loss = ops::cross_entropy(t, l, 3);
    CHECK(t.value(loss).data[0] == doctest::Approx(std::log(10.0)).epsilon(1e-6));
  }
  SUBCASE("saturated correct class gives ~0") {
    Tensor l({10});
    l.data[2] = 1e6f;
    Var loss = ops::cross_entropy(t, t.constant(l), 2);
    CHECK(t.value(loss).data[0] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(t.value(loss).data[0] >= 0.0f);
  }
  SUBCASE("reference value") {
    // -log softmax([1,2,3])[0], long-double oracle
    long double s = expl(1.0L) + expl(2.0L) + expl(3.0L);
    long double expected = -logl(expl(1.0L) / s);
    Var loss = ops::cross_entropy(t, t.constant(Tensor::from({3}, {1, 2, 3})), 0);
    CHECK(std::abs(t.value(loss).data[0] - static_cast<double>(expected)) < 1e-4);
    CHECK(t.value(loss).data[0] == doctest::Approx(2.40761).epsilon(1e-4));
  }
  SUBCASE("label out of range") {
    Var l = t.constant(Tensor::full({10}, 0.0f));
    CHECK_THROWS_AS(ops::cross_entropy(t, l, 10), ContractError);
    CHECK_THROWS_AS(ops::cross_entropy(t, l, -1), ContractError);
  }
}

TEST_CASE("fan-out accumulates both paths") {
  // z = x*y1 + x*y2; dz/dx = y1 + y2 (hand-computed two-path graph)
  Tensor x = Tensor::from({2}, {2, 3});
  x.requires_grad = true;
  Tape t;
  Var xv = t.leaf(x);
  Var y1 = t.constant(Tensor::from({2}, {5, 7}));
  Var y2 = t.constant(Tensor::from({2}, {11, 13}));
  Var z = ops::add(t, ops::mul(t, xv, y1), ops::mul(t, xv, y2));
  Var s = ops::project(t, z, Array::Ones(2));
  t.backward(s);
  CHECK(t.grad(xv)[0] == doctest::Approx(16.0));
  CHECK(t.grad(xv)[1] == doctest::Approx(20.0));
}

TEST_CASE("identical seeds give bitwise identical gradients") {
  auto run = [] {
    Tensor x = random_tensor({4, 8, 8}, 99);
    Tape t;
    Var xv = t.leaf(x);
    Var y = ops::relu(t, ops::affine(t, xv, 1.7f, -0.3f));
    Var s = ops::project(t, ops::gaussian3(t, y), Array::LinSpaced(4 * 64, -1.0f, 1.0f));
    t.backward(s);
    return std::vector<float>(t.grad(xv).data(), t.grad(xv).data() + t.grad(xv).size());
  };
  auto a = run();
  auto b = run();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

TEST_CASE("grad_check identity is exact") {
  auto report = grad_check(
      "identity", [](Tape& t, std::span<const Var> in) { return in[0]; },
      {random_tensor({6}, 1)}, 1e-2f, 1);
  CHECK(report.max_rel_err() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("grad_check softmax-of-linear on an 8-vector") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Tensor x = random_tensor({8}, seed, -0.5f, 0.5f);
    Tensor w = random_tensor({8, 8}, seed + 100, -0.5f, 0.5f, false);
    Tensor b = random_tensor({8}, seed + 200, -0.3f, 0.3f, false);
    auto report = grad_check(
        "softmax(linear)",
        [](Tape& t, std::span<const Var> in) {
          return ops::softmax(t, ops::linear(t, in[0], in[1], in[2]));
        },
        {x, w, b}, 1e-2f, seed);
    CHECK(report.max_rel_err() < 1e-3f);
  }
}

TEST_CASE("gradient suite passes on two seeds") {
  GradSuiteReport report = run_gradient_suite(2, 17);
  for (const auto& e : report.entries) {
    INFO(e.name, " err=", e.max_rel_err, " tol=", e.tolerance);
    CHECK(e.pass);
  }
}

TEST_CASE("equalize passes gradient straight through") {
  Tensor x = random_tensor({3, 4, 4}, 31, 0, 1);
  Tape t;
  Var xv = t.leaf(x);
  Var y = ops::equalize(t, xv);
  t.backward(y, Array::Ones(48));
  CHECK((t.grad(xv) == 1.0f).all());
}

TEST_CASE("grad_check rotate at 5 degrees on a 16x16 image") {
  Tensor img = smooth_test_image(3, 16, 16, 123);
  Tensor deg = Tensor::scalar(5.0f);
  deg.requires_grad = true;
  Array proj = positive_projection(3 * 16 * 16, 123);
  auto report = grad_check(
      "rotate@5deg",
      [](Tape& t, std::span<const Var> in) { return ops::rotate(t, in[0], in[1]); }, {img, deg},
      1e-2f, 7, -1, &proj);
  CHECK(report.max_rel_err() < 5e-3f);
}

TEST_CASE("blend_images gradient and exact selection") {
  Tensor w = Tensor::from({3}, {1, 0, 0});
  std::vector<Tensor> imgs = {random_tensor({3, 4, 4}, 1, 0, 1, false),
                              random_tensor({3, 4, 4}, 2, 0, 1, false),
                              random_tensor({3, 4, 4}, 3, 0, 1, false)};
  Tape t;
  std::vector<Var> vars;
  for (auto& im : imgs) vars.push_back(t.constant(im));
  Var y = ops::blend_images(t, vars, t.constant(w));
  // selecting the first image is bitwise exact
  CHECK((t.value(y).data == imgs[0].data).all());

  Tensor wg = random_tensor({3}, 4, 0.1f, 0.9f);
  auto report = grad_check(
      "blend_images",
      [](Tape& t, std::span<const Var> in) {
        std::vector<Var> im = {in[0], in[1], in[2]};
        return ops::blend_images(t, im, in[3]);
      },
      {random_tensor({3, 4, 4}, 5, 0, 1), random_tensor({3, 4, 4}, 6, 0, 1),
       random_tensor({3, 4, 4}, 7, 0, 1), wg},
      1e-2f, 11);
  CHECK(report.max_rel_err() < 1e-3f);
}

TEST_CASE("backward rejects non-scalar roots and invalid eps") {
  Tape t;
  Var x = t.leaf(random_tensor({4}, 1));
  CHECK_THROWS_AS(t.backward(x), ContractError);
  CHECK_THROWS_AS(grad_check(
                      "x", [](Tape& t, std::span<const Var> in) { return in[0]; },
                      {random_tensor({2}, 2)}, 0.5f, 0),
                  ContractError);
}
