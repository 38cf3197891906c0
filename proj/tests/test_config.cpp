#include "doctest.h"
#include "e2m/config.hpp"
#include "e2m/error.hpp"

using namespace e2m;

TEST_CASE("fit config with several components") {
  const auto c = parse_fit_config(R"(
# mixture
alpha = 0.75
seed = 12
max_iterations = 300
tolerance = 1e-6
trace_every = 10
tt_stats = enumerate

[component]
kind = cp
ranks = 4

[component]
kind = tt
ranks = 2, 3

[component]
kind = background
)");
  CHECK(c.alpha.value() == 0.75);
  CHECK(c.seed == 12);
  CHECK(c.max_iterations == 300);
  CHECK(c.tolerance == 1e-6);
  CHECK(c.trace_every == 10);
  CHECK(c.tt_stats == TTStatsMethod::Enumerate);
  REQUIRE(c.components.size() == 3);
  CHECK(c.components[0] == ComponentSpec{ComponentKind::CP, {4}});
  CHECK(c.components[1] == ComponentSpec{ComponentKind::TT, {2, 3}});
  CHECK(c.components[2] == ComponentSpec{ComponentKind::Background, {}});
}

TEST_CASE("fit config defaults and errors") {
  const auto c = parse_fit_config("[component]\nkind = bg\n");
  CHECK(c.alpha.value() == 1.0);
  CHECK(c.max_iterations == 1200);
  CHECK(c.tolerance == 1e-8);
  CHECK_THROWS_AS(parse_fit_config("alpha = 0.5\n"), DomainError);
  CHECK_THROWS_AS(parse_fit_config("alpha = 2\n[component]\nkind=bg\n"), DomainError);
  CHECK_THROWS_AS(parse_fit_config("alpah = 0.5\n[component]\nkind=bg\n"), DomainError);
  CHECK_THROWS_AS(parse_fit_config("[component]\nranks = 2\n"), DomainError);
  CHECK_THROWS_AS(parse_fit_config("[component]\nkind = cp\nranks = two\n"), DomainError);
  CHECK_THROWS_AS(parse_fit_config("[model]\nkind = cp\n"), DomainError);
  CHECK_THROWS_WITH_AS(parse_fit_config("just text\n"), doctest::Contains("line 1"), DomainError);
}

TEST_CASE("grid spec") {
  const auto g = parse_grid_spec(R"(
alphas = 0.15, 0.5, 1.0
structures = cp, tt
background = false
tt_ranks = 2, 4
repeats = 3
seed = 7
budget_ratio = 0.25
jobs = 2
)");
  CHECK(g.alphas == std::vector<double>{0.15, 0.5, 1.0});
  CHECK(g.structures == std::vector<ComponentKind>{ComponentKind::CP, ComponentKind::TT});
  CHECK_FALSE(g.background);
  REQUIRE(g.rank_candidates.size() == 2);
  CHECK(g.rank_candidates[0].empty());
  CHECK(g.rank_candidates[1] == std::vector<std::size_t>{2, 4});
  CHECK(g.repeats == 3);
  CHECK(g.seed == 7);
  CHECK(g.budget_ratio == 0.25);
  CHECK(g.jobs == 2);
  CHECK_THROWS_AS(parse_grid_spec("structures = background\n"), DomainError);
  CHECK_THROWS_AS(parse_grid_spec("structures = cp\ntucker_ranks = 2\n"), DomainError);
  CHECK_THROWS_AS(parse_grid_spec("alphas = 0\n"), DomainError);
  CHECK_THROWS_AS(parse_grid_spec("repeats = 0\n"), DomainError);
}
