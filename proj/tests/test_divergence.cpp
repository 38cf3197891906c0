#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "e2m/divergence.hpp"
#include "e2m/error.hpp"
#include "gen.hpp"
#include "oracles.hpp"

using namespace e2m;

namespace {

EmpiricalTensor two_cell() { return build_empirical(std::vector<MultiIndex>{{0}, {1}}, Shape({2})); }

}  // namespace

TEST_CASE("alpha must lie in (0, 1]") {
  CHECK_THROWS_AS(Alpha{0.0}, DomainError);
  CHECK_THROWS_AS(Alpha{1.5}, DomainError);
  CHECK_THROWS_AS(Alpha{std::nan("")}, DomainError);
  CHECK(Alpha{1.0}.is_kl());
  CHECK_FALSE(Alpha{0.5}.is_kl());
}

TEST_CASE("alpha divergence hand values") {
  const auto t = two_cell();
  const std::vector<double> p{0.25, 0.75};
  CHECK(alpha_divergence(t, p, Alpha{0.5}) == doctest::Approx(4 * (1 - (std::sqrt(0.125) + std::sqrt(0.375)))));
  CHECK(std::abs(alpha_divergence(t, p, Alpha{0.5}) - 0.13629) < 1e-5);
  CHECK(alpha_divergence(t, p, Alpha{1.0}) == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)));
  const std::vector<double> same{0.5, 0.5};
  CHECK(std::abs(alpha_divergence(t, same, Alpha{0.5})) < 1e-15);
}

TEST_CASE("objective hand values") {
  const auto t = two_cell();
  const std::vector<double> p{0.25, 0.75};
  // -2 log(sqrt(0.125) + sqrt(0.375)) = 0.0693364...; rounding the overlap
  // to 0.96593 first gives 0.069331.
  const double exact = -2.0 * std::log(std::sqrt(0.125) + std::sqrt(0.375));
  CHECK(std::abs(objective_L(t, p, Alpha{0.5}) - exact) < 1e-12);
  CHECK(std::abs(objective_L(t, p, Alpha{0.5}) - 0.069331) < 1e-5);
  CHECK(objective_L(t, p, Alpha{1.0}) == doctest::Approx(-0.5 * std::log(0.25) - 0.5 * std::log(0.75)));
  CHECK(std::abs(objective_L(t, p, Alpha{1.0}) - 0.83700) < 2e-5);
  const std::vector<double> same{0.5, 0.5};
  CHECK(std::abs(objective_L(t, same, Alpha{0.5})) < 1e-15);
}

TEST_CASE("zero model mass on the support is a domain error") {
  const auto t = two_cell();
  const std::vector<double> p{0.0, 1.0};
  CHECK_THROWS_AS(alpha_divergence(t, p, Alpha{0.5}), DomainError);
  CHECK_THROWS_AS(objective_L(t, p, Alpha{0.5}), DomainError);
  CHECK_THROWS_WITH_AS(objective_L(t, p, Alpha{1.0}), doctest::Contains("zero mass"), DomainError);
}

TEST_CASE("cross entropy") {
  const std::vector<double> w1{1.0}, l1{0.0};
  CHECK(cross_entropy(w1, l1) == 0.0);
  const std::vector<double> w{0.5, 0.5}, l{std::log(0.25), std::log(0.75)};
  CHECK(std::abs(cross_entropy(w, l) - 0.83700) < 2e-5);
  const std::vector<double> w3{0.15, 0.15};
  CHECK(cross_entropy(w3, l) == doctest::Approx(0.3 * cross_entropy(w, l)));
}

TEST_CASE("log_sum_exp is stable") {
  const std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
  const std::vector<double> none;
  CHECK(log_sum_exp(none) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("negative log likelihood") {
  const std::vector<MultiIndex> samples{{0, 0}, {1, 0}, {0, 1}};
  const auto uniform = [](const MultiIndex&) { return 0.25; };
  const auto r = negative_log_likelihood(uniform, samples);
  CHECK(r.total == doctest::Approx(3 * std::log(4.0)));
  CHECK(r.mean == doctest::Approx(std::log(4.0)));
  const auto zero = [](const MultiIndex& i) { return i[0] == 1 ? 0.0 : 0.5; };
  CHECK_THROWS_WITH_AS(negative_log_likelihood(zero, samples), doctest::Contains("sample 1"), DomainError);
}

TEST_CASE("property: divergence matches the dense defining sum and vanishes at T = P") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Shape s = gen::shape(rng, 3, 4);
    const auto t = build_empirical(gen::samples(rng, s, gen::uniform_int(rng, 1, 30)), s);
    const auto p = oracle::random_simplex(*s.cardinality(), rng);
    std::vector<double> tv(p.size()), on_support;
    for (const auto& e : t.entries()) {
      tv[s.linear_index(e.index)] = e.weight;
      on_support.push_back(p[s.linear_index(e.index)]);
    }
    const double alpha = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    for (double a : {alpha, 1.0}) {
      const double expected = oracle::alpha_divergence_dense(tv, p, a);
      CHECK(alpha_divergence(t, on_support, Alpha{a}) == doctest::Approx(expected).epsilon(1e-9).scale(1.0));
      CHECK(alpha_divergence(t, on_support, Alpha{a}) >= -1e-12);
    }
    std::vector<double> own;
    for (const auto& e : t.entries()) own.push_back(e.weight);
    CHECK(std::abs(alpha_divergence(t, own, Alpha{alpha})) < 1e-12);
    // The objective is a monotone transform of the divergence for a < 1.
    const double d = alpha_divergence(t, on_support, Alpha{alpha});
    const double l = objective_L(t, on_support, Alpha{alpha});
    if (alpha < 1.0)
      CHECK(l == doctest::Approx(std::log(1 - alpha * (1 - alpha) * d) / (alpha - 1)).epsilon(1e-9));
  }
}

TEST_CASE("objective near alpha = 1 approaches KL, which is the cross-entropy minus the entropy") {
  // The trace at alpha = 1 reports cross-entropy; the limit of the
  // alpha < 1 objective is the KL divergence, so they differ by H(T).
  std::mt19937_64 rng(8);
  const Shape s({3, 3});
  const auto t = build_empirical(gen::samples(rng, s, 25), s);
  std::vector<double> p;
  const auto dense = oracle::random_simplex(9, rng);
  double entropy = 0.0;
  for (const auto& e : t.entries()) {
    p.push_back(dense[s.linear_index(e.index)]);
    entropy -= e.weight * std::log(e.weight);
  }
  const double near = objective_L(t, p, Alpha{1.0 - 1e-7});
  const double ce = objective_L(t, p, Alpha{1.0});
  CHECK(near == doctest::Approx(ce - entropy).epsilon(1e-5));
}
