#include <cmath>
#include <random>

#include "doctest.h"
#include "e2m/data_io.hpp"
#include "e2m/error.hpp"
#include "e2m/synthetic.hpp"
#include "e2m/tasks.hpp"
#include "gen.hpp"

using namespace e2m;

namespace {

// CP model whose rank-one terms are point masses on the empirical support,
// i.e. exactly the empirical distribution.
MixtureModel empirical_model(const EmpiricalTensor& t) {
  const Shape& s = t.shape();
  const auto R = static_cast<Eigen::Index>(t.nnz());
  CPComponent cp;
  for (std::size_t d = 0; d < s.order(); ++d) cp.factors.push_back(Eigen::MatrixXd::Zero(s.dim(d), R));
  for (Eigen::Index r = 0; r < R; ++r) {
    const auto& e = t.entries()[r];
    for (std::size_t d = 0; d < s.order(); ++d) cp.factors[d](e.index[d], r) = d == 0 ? e.weight : 1.0;
  }
  return {s, {cp}, {1.0}};
}

MixtureModel two_class(double p0, double p1) {
  CPComponent cp;
  cp.factors.push_back(Eigen::MatrixXd::Ones(1, 1));
  cp.factors.push_back((Eigen::MatrixXd(2, 1) << p0, p1).finished());
  return {Shape({1, 2}), {cp}, {1.0}};
}

CellReport cell(double alpha, double valid_nll, double valid_acc, double test_nll) {
  CellReport c;
  c.cell.alpha = alpha;
  c.valid_nll = {valid_nll, 0.0};
  c.valid_accuracy = {valid_acc, 0.0};
  c.test_nll = {test_nll, 0.0};
  return c;
}

}  // namespace

TEST_CASE("density evaluation") {
  const Shape s({2, 2});
  const MixtureModel uniform{s, {BackgroundComponent{s}}, {1.0}};
  const std::vector<MultiIndex> four{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  CHECK(evaluate_density(uniform, four).total == doctest::Approx(4 * std::log(4.0)));

  std::mt19937_64 rng(61);
  const Shape big({3, 4, 2});
  const auto samples = gen::samples(rng, big, 40);
  const auto t = build_empirical(samples, big);
  double entropy = 0.0;
  for (const auto& e : t.entries()) entropy -= e.weight * std::log(e.weight);
  CHECK(evaluate_density(empirical_model(t), samples).total == doctest::Approx(40 * entropy));

  const std::vector<MultiIndex> unseen{{2, 3, 1}};
  if (t.weight(unseen[0]) == 0.0) CHECK_THROWS_AS(evaluate_density(empirical_model(t), unseen), DomainError);
  const std::vector<MultiIndex> out_of_range{{3, 0, 0}};
  CHECK_THROWS_AS(evaluate_density(uniform, out_of_range), DomainError);
}

TEST_CASE("property: density totals are additive and finite with background") {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 30; ++trial) {
    const Shape s = gen::shape(rng, 4, 4);
    std::vector<ComponentSpec> specs{gen::spec(rng, gen::kind(rng, false), s, 3), {ComponentKind::Background, {}}};
    const auto m = init_mixture(s, specs, trial);
    const auto a = gen::samples(rng, s, 15), b = gen::samples(rng, s, 9);
    auto ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const double total = evaluate_density(m, ab).total;
    CHECK(std::isfinite(total));
    CHECK(total == doctest::Approx(evaluate_density(m, a).total + evaluate_density(m, b).total));
  }
}

TEST_CASE("classification rule") {
  const std::vector<std::size_t> f{0};
  CHECK(classify(two_class(0.25, 0.75), f) == 1);
  CHECK(classify(two_class(0.5, 0.5), f) == 0);
  const Shape s({3, 4});
  const MixtureModel bg{s, {BackgroundComponent{s}}, {1.0}};
  for (std::size_t i = 0; i < 3; ++i) CHECK(classify(bg, std::vector<std::size_t>{i}) == 0);
  CHECK_THROWS_AS(classify(bg, std::vector<std::size_t>{0, 1}), DomainError);
}

TEST_CASE("property: classification ignores positive rescaling of class slices") {
  std::mt19937_64 rng(63);
  for (int trial = 0; trial < 40; ++trial) {
    const Shape s = gen::shape(rng, 4, 4, 2);
    const auto spec = gen::spec(rng, ComponentKind::CP, s, 3);
    auto cp = std::get<CPComponent>(init_component(ComponentKind::CP, s, spec.ranks, rng));
    const MixtureModel a{s, {cp}, {1.0}};
    const double scale = std::uniform_real_distribution<double>(0.01, 100.0)(rng);
    for (auto& f : cp.factors) f *= std::pow(scale, 1.0 / s.order());
    const MixtureModel b{s, {cp}, {1.0}};
    for (int k = 0; k < 10; ++k) {
      auto idx = gen::index(rng, s);
      idx.pop_back();
      CHECK(classify(a, idx) == classify(b, idx));
    }
    const auto labeled = gen::samples(rng, s, 20);
    const double acc = accuracy(a, labeled);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }
}

TEST_CASE("rank candidates respect the budget") {
  const Shape s({4, 4, 4, 3, 3, 3, 4});
  const auto cp = rank_candidates(ComponentKind::CP, s, 840, 8);
  // 25 parameters per CP rank, so R_max = 33
  CHECK(cp == std::vector<std::size_t>{4, 8, 12, 17, 21, 25, 29, 33});
  for (auto r : cp) CHECK(parameter_count(equal_rank_spec(ComponentKind::CP, s, r), s) <= 840);
  CHECK(rank_candidates(ComponentKind::CP, s, 75, 8) == std::vector<std::size_t>{1, 2, 3});
  CHECK(rank_candidates(ComponentKind::CP, s, 10, 8).empty());
  const auto tt = rank_candidates(ComponentKind::TT, s, 840, 8);
  // 17 r^2 + 8 r parameters, so R_max = 6 and rounding duplicates collapse
  CHECK(tt == std::vector<std::size_t>{1, 2, 3, 4, 5, 6});
  for (auto r : tt) CHECK(parameter_count(equal_rank_spec(ComponentKind::TT, s, r), s) <= 840);
  const auto tk = rank_candidates(ComponentKind::Tucker, s, 100000, 8);
  for (auto r : tk) CHECK(std::pow(static_cast<double>(r), 7) <= 4096);
}

TEST_CASE("grid construction") {
  const Shape s({4, 4, 4});
  GridSpec g;
  g.alphas = {0.5, 1.0};
  g.structures = {ComponentKind::CP};
  const auto pure = build_grid(g, s, 400);
  CHECK(pure.size() == 16);
  CHECK(pure[0].alpha == 0.5);
  CHECK(pure[0].components.back().kind == ComponentKind::Background);

  g.structures = {ComponentKind::CP, ComponentKind::TT};
  g.alphas = {1.0};
  const auto mixed = build_grid(g, s, 400);
  CHECK(mixed.size() <= 25);
  for (const auto& c : mixed) CHECK(parameter_count(c.components, s) <= 400);
  CHECK(mixed.front().components[0].ranks == std::vector<std::size_t>{rank_candidates(ComponentKind::CP, s, 400, 8)[0]});

  g.structures = {ComponentKind::CP};
  g.rank_candidates = {{50}};
  CHECK_THROWS_WITH_AS(build_grid(g, s, 400), doctest::Contains("400"), DomainError);
}

TEST_CASE("selection uses validation only, ties go to alpha near one") {
  const std::vector<CellReport> cells{cell(0.5, 2.0, 0.8, 9.0), cell(1.0, 1.5, 0.7, 99.0)};
  CHECK(select_cell(cells, Metric::NLL) == 1);
  CHECK(select_cell(cells, Metric::Accuracy) == 0);
  const std::vector<CellReport> tie{cell(0.5, 2.0, 0.8, 1.0), cell(0.9, 2.0, 0.8, 5.0), cell(0.15, 2.0, 0.8, 0.1)};
  CHECK(select_cell(tie, Metric::NLL) == 1);
  CHECK(select_cell(tie, Metric::Accuracy) == 1);
}

TEST_CASE("grid search on a small problem") {
  std::mt19937_64 rng(64);
  const Shape s({3, 3, 2});
  const auto data = gen::clustered_samples(rng, s, 300, 3);
  const auto parts = split(data, {0.7, 0.15, 0.15, 1});
  GridSpec g;
  g.alphas = {0.5};
  g.structures = {ComponentKind::CP};
  g.rank_candidates = {{2}};
  g.repeats = 3;
  g.max_iterations = 100;
  const auto single = grid_search(s, parts.train, parts.valid, parts.test, g, Metric::NLL);
  REQUIRE(single.cells.size() == 1);
  CHECK(single.selected == 0);
  CHECK(single.best().runs.size() == 3);
  for (const auto& r : single.best().runs) {
    CHECK(std::isfinite(r.test_nll));
    CHECK(r.test_accuracy >= 0.0);
    CHECK(r.test_accuracy <= 1.0);
  }

  g.alphas = {0.5, 1.0};
  g.rank_candidates = {{1, 2, 3}};
  const auto a = grid_search(s, parts.train, parts.valid, parts.test, g, Metric::NLL);
  // scrambled test data never changes the choice
  auto other_test = gen::samples(rng, s, parts.test.size());
  const auto b = grid_search(s, parts.train, parts.valid, other_test, g, Metric::NLL);
  CHECK(a.selected == b.selected);
  g.jobs = 3;
  const auto c = grid_search(s, parts.train, parts.valid, parts.test, g, Metric::NLL);
  CHECK(report_json(a) == report_json(c));
  const auto table = report_table(a);
  CHECK(std::count(table.begin(), table.end(), '\n') == 1 + 6 * (3 + 2));
}

TEST_CASE("grid search recovers a good CP rank on synthetic data") {
  SyntheticSpec spec{ComponentKind::CP, Shape({8, 8, 8, 8, 8}), {8}, 0.1, 3};
  const auto truth = synth_lowrank(spec);
  const auto samples = DenseSampler(truth).draw(4000, 4);
  const auto parts = split(samples, {0.7, 0.15, 0.15, 5});
  GridSpec g;
  g.structures = {ComponentKind::CP};
  g.rank_candidates = {{2, 4, 8, 16}};
  g.repeats = 5;
  g.max_iterations = 150;
  g.tolerance = 1e-7;
  const auto report = grid_search(spec.shape, parts.train, parts.valid, parts.test, g, Metric::NLL);
  REQUIRE(report.cells.size() == 4);
  const double chosen = report.best().test_nll.mean;
  for (const auto& c : report.cells) CHECK(chosen <= c.test_nll.mean + 0.05);
}
