#include <cmath>
#include <random>

#include "doctest.h"
#include "e2m/error.hpp"
#include "e2m/synthetic.hpp"

using namespace e2m;

TEST_CASE("CP truth on 8^5 with background") {
  SyntheticSpec spec;
  spec.shape = Shape({8, 8, 8, 8, 8});
  spec.ranks = {8};
  spec.seed = 1;
  const auto m = synth_lowrank(spec);
  CHECK(m.weights == std::vector<double>{0.9, 0.1});
  const auto dense = materialize_dense(m);
  CHECK(std::abs(dense.sum() - 1.0) < 1e-10);
  double lowest = 1.0;
  for (double v : dense.values()) lowest = std::min(lowest, v);
  CHECK(lowest >= 0.1 * std::pow(8.0, -5) * (1 - 1e-12));
  CHECK(std::get<CPComponent>(m.components[0]).rank() == 8);
}

TEST_CASE("TT and Tucker truths are normalized") {
  SyntheticSpec tt{ComponentKind::TT, Shape({4, 4, 4, 4}), {4, 4, 4}, 0.1, 2};
  CHECK(std::abs(materialize_dense(synth_lowrank(tt)).sum() - 1.0) < 1e-10);
  SyntheticSpec tk{ComponentKind::Tucker, Shape({3, 3, 3}), {2, 2, 2}, 0.0, 2};
  const auto m = synth_lowrank(tk);
  CHECK(m.size() == 1);
  CHECK(std::abs(materialize_dense(m).sum() - 1.0) < 1e-10);
}

TEST_CASE("full background weight gives a uniform sampler") {
  SyntheticSpec spec{ComponentKind::CP, Shape({3, 3}), {2}, 1.0, 5};
  const auto m = synth_lowrank(spec);
  REQUIRE(m.size() == 1);
  CHECK(kind_of(m.components[0]) == ComponentKind::Background);
  const DenseSampler sampler(m);
  const auto draws = sampler.draw(90000, 1);
  std::vector<double> counts(9, 0.0);
  for (const auto& idx : draws) counts[Shape({3, 3}).linear_index(idx)] += 1.0;
  for (double c : counts) CHECK(std::abs(c / 90000 - 1.0 / 9) < 0.006);
}

TEST_CASE("bad specs") {
  CHECK_THROWS_AS(synth_lowrank({ComponentKind::CP, Shape({3, 3}), {2}, 1.5, 0}), DomainError);
  CHECK_THROWS_AS(synth_lowrank({ComponentKind::Background, Shape({3, 3}), {}, 0.1, 0}), DomainError);
  CHECK_THROWS_AS(synth_lowrank({ComponentKind::TT, Shape({3, 3}), {2, 2}, 0.1, 0}), DomainError);
  SyntheticSpec huge{ComponentKind::CP, Shape({100, 100, 101}), {2}, 0.1, 0};
  CHECK_THROWS_AS(DenseSampler(synth_lowrank(huge)), DomainError);
}

TEST_CASE("sampler is deterministic and matches its distribution") {
  SyntheticSpec spec{ComponentKind::CP, Shape({4, 4}), {2}, 0.1, 9};
  const auto m = synth_lowrank(spec);
  const auto dense = materialize_dense(m);
  const DenseSampler sampler(dense);
  CHECK(sampler.draw(100, 3) == sampler.draw(100, 3));
  const std::size_t n = 1000000;
  const auto draws = sampler.draw(n, 4);
  std::vector<double> freq(16, 0.0);
  for (const auto& idx : draws) freq[spec.shape.linear_index(idx)] += 1.0 / n;
  double worst = 0.0;
  for (std::size_t k = 0; k < 16; ++k) worst = std::max(worst, std::abs(freq[k] - dense.values()[k]));
  CHECK(worst < 0.005);
}

TEST_CASE("zero cells are never drawn") {
  const DenseTensor d(Shape({4}), {0.0, 0.5, 0.0, 0.5});
  const DenseSampler sampler(d);
  for (const auto& idx : sampler.draw(2000, 1)) CHECK((idx[0] == 1 || idx[0] == 3));
}

TEST_CASE("moons") {
  MoonsSpec spec;
  spec.grid = 30;
  spec.samples = 2000;
  spec.outliers = 25;
  spec.flipped = 25;
  spec.seed = 3;
  const auto a = make_moons(spec);
  CHECK(a.shape == Shape({30, 30, 2}));
  CHECK(a.samples.size() == 2025);
  CHECK(a.outliers.size() == 25);
  for (const auto& o : a.outliers) CHECK(in_corner_region(o, 30));
  std::size_t clean_in_corner = 0;
  for (std::size_t k = 0; k < 2000; ++k) clean_in_corner += in_corner_region(a.samples[k], 30);
  CHECK(clean_in_corner <= 2);
  const auto b = make_moons(spec);
  CHECK(a.samples == b.samples);
  CHECK(corner_width(90) == 20);
}
