#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "e2m/error.hpp"
#include "e2m/synthetic.hpp"
#include "e2m/tensor.hpp"
#include "gen.hpp"

using namespace e2m;

TEST_CASE("shape rejects empty and zero dims") {
  CHECK_THROWS_AS(Shape(std::vector<std::size_t>{}), DomainError);
  CHECK_THROWS_AS(Shape({2, 0}), DomainError);
  Shape s({2, 3, 4});
  CHECK(s.order() == 3);
  CHECK(*s.cardinality() == 24);
}

TEST_CASE("check_index names feature and value") {
  Shape s({2, 3});
  CHECK(s.contains({1, 2}));
  CHECK_FALSE(s.contains({1, 3}));
  CHECK_FALSE(s.contains({1}));
  try {
    s.check_index({1, 5});
    FAIL("expected an error");
  } catch (const DomainError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("feature 1") != std::string::npos);
    CHECK(msg.find('5') != std::string::npos);
  }
}

TEST_CASE("linear index round trip") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Shape s = gen::shape(rng, 5, 5);
    const auto card = *s.cardinality();
    for (std::uint64_t k = 0; k < card; k += 1 + card / 17) CHECK(s.linear_index(s.unravel(k)) == k);
  }
  CHECK(Shape({2, 3}).linear_index({1, 0}) == 3);
}

TEST_CASE("cardinality overflow is reported and log cardinality stays finite") {
  Shape big(std::vector<std::size_t>(30, 1000));
  CHECK_FALSE(big.cardinality().has_value());
  CHECK(log_cardinality(big) == doctest::Approx(30 * std::log(1000.0)));
  CHECK(log_cardinality(Shape({2, 2})) == doctest::Approx(std::log(4.0)));
  CHECK(log_cardinality(Shape({8, 8, 8, 8, 8})) == doctest::Approx(5 * std::log(8.0)));
}

TEST_CASE("mushroom-scale shape has a finite log cardinality") {
  // 22 features with a product of about 4.88e13 cells.
  Shape s({4, 6, 4, 10, 2, 9, 2, 2, 12, 2, 4, 4, 9, 9, 4, 3, 5, 9, 6, 7, 1, 1});
  CHECK(*s.cardinality() == 48759924326400ull);
  const double lc = log_cardinality(s);
  CHECK(std::isfinite(lc));
  CHECK(lc == doctest::Approx(std::log(4.88e13)).epsilon(1e-4));
}

TEST_CASE("build_empirical counts and normalizes") {
  Shape s({2, 2});
  std::vector<MultiIndex> samples{{0, 0}, {0, 0}, {1, 1}, {0, 1}};
  auto t = build_empirical(samples, s);
  CHECK(t.nnz() == 3);
  CHECK(t.sample_count() == 4);
  CHECK(t.weight({0, 0}) == 0.5);
  CHECK(t.weight({1, 1}) == 0.25);
  CHECK(t.weight({0, 1}) == 0.25);
  CHECK(t.weight({1, 0}) == 0.0);
  // entries sorted lexicographically
  CHECK(t.entries()[0].index == MultiIndex{0, 0});
  CHECK(t.entries()[1].index == MultiIndex{0, 1});
  CHECK(t.entries()[2].index == MultiIndex{1, 1});
}

TEST_CASE("build_empirical degenerate and error cases") {
  std::vector<MultiIndex> same(7, MultiIndex{0});
  auto t = build_empirical(same, Shape({3}));
  CHECK(t.nnz() == 1);
  CHECK(t.weight({0}) == 1.0);
  CHECK_THROWS_AS(build_empirical(std::vector<MultiIndex>{}, Shape({3})), DomainError);
  CHECK_THROWS_AS(build_empirical(std::vector<MultiIndex>{{3}}, Shape({3})), DomainError);
}

TEST_CASE("property: build_empirical sums to one and ignores sample order") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Shape s = gen::shape(rng, 4, 5);
    auto samples = gen::samples(rng, s, gen::uniform_int(rng, 1, 60));
    const auto a = build_empirical(samples, s);
    CHECK(a.total_weight() == doctest::Approx(1.0).epsilon(1e-12));
    std::shuffle(samples.begin(), samples.end(), rng);
    const auto b = build_empirical(samples, s);
    REQUIRE(a.nnz() == b.nnz());
    for (std::size_t n = 0; n < a.nnz(); ++n) {
      CHECK(a.entries()[n].index == b.entries()[n].index);
      CHECK(a.entries()[n].weight == b.entries()[n].weight);
    }
  }
}

TEST_CASE("half-moon samples build a valid empirical tensor") {
  MoonsSpec spec;
  spec.seed = 4;
  const auto moons = make_moons(spec);
  const auto t = build_empirical(moons.samples, moons.shape);
  CHECK(moons.shape == Shape({90, 90, 2}));
  CHECK(t.total_weight() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.nnz() <= 5000);
}

TEST_CASE("normalize_dense") {
  auto a = normalize_dense(DenseTensor(Shape({2}), {2.0, 2.0}));
  CHECK(a.values()[0] == 0.5);
  CHECK(a.values()[1] == 0.5);
  auto b = normalize_dense(DenseTensor(Shape({3}), {1.0, 0.0, 3.0}));
  CHECK(b.values()[0] == 0.25);
  CHECK(b.values()[1] == 0.0);
  CHECK(b.values()[2] == 0.75);
  CHECK_THROWS_AS(normalize_dense(DenseTensor(Shape({2}), {0.0, 0.0})), DomainError);
  CHECK_THROWS_AS(DenseTensor(Shape({2}), {1.0, -1.0}), DomainError);
  CHECK_THROWS_AS(DenseTensor(Shape({2}), {1.0}), DomainError);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(16);
  for (auto& x : v) x = u(rng);
  auto c = normalize_dense(DenseTensor(Shape({4, 4}), v));
  CHECK(c.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("empirical_from_dense keeps positive cells") {
  auto t = empirical_from_dense(DenseTensor(Shape({2, 2}), {1.0, 0.0, 0.0, 3.0}));
  CHECK(t.nnz() == 2);
  CHECK(t.weight({0, 0}) == 0.25);
  CHECK(t.weight({1, 1}) == 0.75);
}
