#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "gradcheck.hpp"
#include "jointnlu/error.hpp"
#include "jointnlu/ops.hpp"

using namespace jointnlu;
using jointnlu::testing::random_tensor;

namespace {

Tensor identity(std::size_t n) {
  auto t = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.mutable_values()[i * n + i] = 1.0;
  return t;
}

std::vector<double> to_vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST_CASE("matmul by identity returns the operand") {
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto a = random_tensor({3, k}, k, 1.0, false);
    CHECK(to_vec(matmul(identity(3), a)) == to_vec(a));
  }
}

TEST_CASE("matmul hand example and shape error naming both shapes") {
  const auto a = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  const auto b = Tensor::from_values({2, 1}, {5, 6});
  CHECK(to_vec(matmul(a, b)) == std::vector<double>{17, 39});
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2, 3]") != std::string::npos);
    CHECK(msg.find("and") != std::string::npos);
  }
}

TEST_CASE("add of zeros is the identity") {
  const auto x = random_tensor({3, 4}, 1, 1.0, false);
  CHECK(to_vec(add(x, Tensor::zeros({3, 4}))) == to_vec(x));
  CHECK(to_vec(add(x, Tensor::zeros({4}))) == to_vec(x));
  CHECK_THROWS_AS(add(x, Tensor::zeros({3})), ShapeError);
}

TEST_CASE("linear computes x W^T + b") {
  const auto x = Tensor::from_values({1, 2}, {1, 2});
  const auto w = Tensor::from_values({3, 2}, {1, 0, 0, 1, 1, 1});
  const auto b = Tensor::from_values({3}, {0.5, 0, -1});
  CHECK(to_vec(linear(x, w, b)) == std::vector<double>{1.5, 2, 2});
}

TEST_CASE("transpose, reshape, concat, slice, gather_rows forward values") {
  const auto m = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(to_vec(transpose(m)) == std::vector<double>{1, 4, 2, 5, 3, 6});
  CHECK(reshape(m, {3, 2}).shape() == Shape{3, 2});
  CHECK_THROWS_AS(reshape(m, {4, 2}), ShapeError);
  const std::vector<Tensor> parts{m, m};
  CHECK(concat(parts, 0).shape() == Shape{4, 3});
  CHECK(to_vec(concat(parts, 1)) == std::vector<double>{1, 2, 3, 1, 2, 3, 4, 5, 6, 4, 5, 6});
  CHECK(to_vec(slice(m, 1, 1, 3)) == std::vector<double>{2, 3, 5, 6});
  CHECK_THROWS_AS(slice(m, 0, 1, 3), ShapeError);
  const std::vector<std::size_t> rows{1, 1, 0};
  CHECK(to_vec(gather_rows(m, rows)) == std::vector<double>{4, 5, 6, 4, 5, 6, 1, 2, 3});
}

TEST_CASE("softmax of zeros is uniform") {
  const auto p = softmax(Tensor::zeros({4}), 0);
  for (double v : p.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("softmax is stable for huge logits") {
  const auto p = softmax(Tensor::from_values({2}, {1000, 0}), 0);
  CHECK(std::abs(p.at(0) - 1.0) < 1e-12);
  CHECK(p.at(1) < 1e-12);
  CHECK(std::isfinite(log_softmax(Tensor::from_values({2}, {1000, 0}), 0).at(1)));
}

TEST_CASE("softmax rows and columns sum to one") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = random_tensor({3, 5}, seed, 10.0, false);
    const auto rows = softmax(x, 1);
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < 5; ++c) s += rows.at(r, c);
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
    const auto cols = softmax(x, 0);
    for (std::size_t c = 0; c < 5; ++c) {
      double s = 0;
      for (std::size_t r = 0; r < 3; ++r) s += cols.at(r, c);
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("cross_entropy examples") {
  for (std::size_t k : {2, 3, 7}) {
    CHECK(cross_entropy(Tensor::zeros({k}), 0).item() == doctest::Approx(std::log(double(k))));
  }
  CHECK(cross_entropy(Tensor::from_values({2}, {30, -30}), 0).item() < 1e-12);
  CHECK_THROWS_AS(cross_entropy(Tensor::zeros({3}), 3), DataError);
}

TEST_CASE("cross_entropy gradient is softmax minus one-hot") {
  auto x = Tensor::from_values({3}, {0.2, -1.0, 2.0}, true);
  cross_entropy(x, 1).backward();
  const auto p = softmax(x.detach(), 0);
  CHECK(x.grad()[0] == doctest::Approx(p.at(0)));
  CHECK(x.grad()[1] == doctest::Approx(p.at(1) - 1.0));
  CHECK(x.grad()[2] == doctest::Approx(p.at(2)));
}

TEST_CASE("layer_norm normalises and handles constant rows") {
  const auto ones = Tensor::full({5}, 1.0), zeros = Tensor::zeros({5});
  const auto c = layer_norm(Tensor::full({2, 5}, 3.0), ones, zeros, 1e-12);
  for (double v : c.values()) CHECK(v == 0.0);
  const auto y = layer_norm(random_tensor({3, 5}, 4, 3.0, false), ones, zeros, 1e-12);
  for (std::size_t r = 0; r < 3; ++r) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 5; ++i) m += y.at(r, i) / 5;
    for (std::size_t i = 0; i < 5; ++i) v += (y.at(r, i) - m) * (y.at(r, i) - m) / 5;
    CHECK(std::abs(m) < 1e-12);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(layer_norm(c, ones, zeros, 0.0), ConfigError);
}

TEST_CASE("gelu uses the erf form") {
  const auto y = gelu(Tensor::from_values({3}, {-1, 0, 2}));
  CHECK(y.at(0) == doctest::Approx(-0.15865525393145707));
  CHECK(y.at(1) == 0.0);
  CHECK(y.at(2) == doctest::Approx(1.9544997361036416));
}

TEST_CASE("dropout is the identity at inference and inverted in training") {
  std::mt19937_64 rng(5);
  const auto x = random_tensor({50, 40}, 6, 1.0, false);
  CHECK(to_vec(dropout(x, 0.1, false, rng)) == to_vec(x));
  const auto y = dropout(x, 0.25, true, rng);
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (y.values()[i] == 0.0) {
      ++dropped;
    } else {
      CHECK(y.values()[i] == doctest::Approx(x.values()[i] / 0.75));
    }
  }
  CHECK(double(dropped) / double(x.numel()) == doctest::Approx(0.25).epsilon(0.2));
  CHECK_THROWS_AS(dropout(x, 1.0, true, rng), ConfigError);
}

TEST_CASE("embedding_lookup gathers rows and rejects bad ids") {
  const auto table = Tensor::from_values({3, 2}, {0, 1, 10, 11, 20, 21});
  const std::vector<int> ids{2, 0, 2};
  CHECK(to_vec(embedding_lookup(table, ids)) == std::vector<double>{20, 21, 0, 1, 20, 21});
  const std::vector<int> bad{3};
  CHECK_THROWS_AS(embedding_lookup(table, bad), DataError);
  const std::vector<int> negative{-1};
  CHECK_THROWS_AS(embedding_lookup(table, negative), DataError);
}

TEST_CASE("sum and mean") {
  const auto x = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  CHECK(sum(x).item() == 10.0);
  CHECK(mean(x).item() == 2.5);
}
