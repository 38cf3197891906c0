#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "e2m/divergence.hpp"
#include "e2m/models.hpp"
#include "e2m/tensor.hpp"

namespace e2m {

/// Total and per-sample negative log-likelihood of samples under m.
NllResult evaluate_density(const MixtureModel& m, std::span<const MultiIndex> samples);

/// argmax_c P(features, c) over the last mode; ties go to the smallest c.
std::size_t classify(const MixtureModel& m, std::span<const std::size_t> features);

/// Fraction of labeled samples (last coordinate = class) classified correctly.
double accuracy(const MixtureModel& m, std::span<const MultiIndex> labeled);

enum class Metric { NLL, Accuracy };
std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);

struct GridSpec {
  std::vector<double> alphas{1.0};
  std::vector<ComponentKind> structures{ComponentKind::CP};  // learned parts of the mixture
  bool background = true;
  // Explicit equal-rank candidates per structure (aligned with structures).
  // Empty means: derive them from the parameter budget.
  std::vector<std::vector<std::size_t>> rank_candidates;
  std::size_t candidates = 8;          // per pure structure
  std::size_t mixture_candidates = 5;  // smallest kept per structure in mixtures
  double budget_ratio = 0.5;           // parameter cap = budget_ratio * N_train
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 1200;
  double tolerance = 1e-8;
  std::size_t jobs = 1;
};

struct GridCell {
  double alpha = 1.0;
  std::vector<ComponentSpec> components;
};

/// Up to count equally spaced ranks R in [1, R_max], where R_max is the
/// largest equal rank whose parameter count stays within budget.
std::vector<std::size_t> rank_candidates(ComponentKind kind, const Shape& shape, std::size_t budget,
                                         std::size_t count);

/// Equal ranks R_1 = ... = R_V expanded for the kind and shape.
ComponentSpec equal_rank_spec(ComponentKind kind, const Shape& shape, std::size_t rank);

/// Every (alpha, rank combination) cell whose mixture stays within the
/// budget. Throws DomainError naming the cap when nothing survives.
std::vector<GridCell> build_grid(const GridSpec& grid, const Shape& shape, std::size_t budget);

struct RunScore {
  std::uint64_t seed = 0;
  double valid_nll = 0.0;  // per-sample mean
  double valid_accuracy = 0.0;
  double test_nll = 0.0;
  double test_accuracy = 0.0;
  std::size_t iterations = 0;
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
};

struct CellReport {
  GridCell cell;
  std::vector<RunScore> runs;
  Summary valid_nll, valid_accuracy, test_nll, test_accuracy;
};

struct EvalReport {
  Metric metric = Metric::NLL;
  std::size_t budget = 0;
  std::vector<CellReport> cells;  // in grid order
  std::size_t selected = 0;

  const CellReport& best() const { return cells.at(selected); }
};

/// Mean and sample standard deviation; sd is zero for fewer than two values.
Summary summarize(std::span<const double> values);

/// Fits every cell and seed on train, scores on valid and test, and selects
/// the cell with the best mean validation metric. Ties go to alpha closer to
/// one, then to the earlier cell. Test scores never influence selection.
EvalReport grid_search(const Shape& shape, std::span<const MultiIndex> train,
                       std::span<const MultiIndex> valid, std::span<const MultiIndex> test,
                       const GridSpec& grid, Metric metric);

/// Index of the selected cell given per-cell mean validation scores.
std::size_t select_cell(std::span<const CellReport> cells, Metric metric);

std::string report_json(const EvalReport& report);
/// One row per cell and seed plus one aggregate row per cell.
std::string report_table(const EvalReport& report, char delimiter = '\t');

}  // namespace e2m
