#include "e2m/tasks.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "e2m/error.hpp"
#include "e2m/fit.hpp"
#include "json.hpp"

namespace e2m {

NllResult evaluate_density(const MixtureModel& m, std::span<const MultiIndex> samples) {
  for (std::size_t n = 0; n < samples.size(); ++n) {
    if (!m.shape.contains(samples[n])) {
      try {
        m.shape.check_index(samples[n]);
      } catch (const DomainError& e) {
        throw DomainError("sample " + std::to_string(n) + ": " + e.what());
      }
    }
  }
  return negative_log_likelihood([&m](const MultiIndex& idx) { return evaluate(m, idx); }, samples);
}

std::size_t classify(const MixtureModel& m, std::span<const std::size_t> features) {
  const std::size_t order = m.shape.order();
  if (features.size() + 1 != order)
    throw DomainError("classify expects " + std::to_string(order - 1) + " features, got " +
                      std::to_string(features.size()));
  MultiIndex idx(features.begin(), features.end());
  idx.push_back(0);
  m.shape.check_index(idx);
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t c = 0; c < m.shape.dim(order - 1); ++c) {
    idx.back() = c;
    const double v = evaluate(m, idx);
    if (v > best_value) {
      best_value = v;
      best = c;
    }
  }
  return best;
}

double accuracy(const MixtureModel& m, std::span<const MultiIndex> labeled) {
  if (labeled.empty()) throw DomainError("accuracy needs at least one labeled sample");
  std::size_t correct = 0;
  for (const auto& idx : labeled) {
    if (idx.size() != m.shape.order())
      throw DomainError("labeled sample has " + std::to_string(idx.size()) + " coordinates, expected " +
                        std::to_string(m.shape.order()));
    const std::span<const std::size_t> features(idx.data(), idx.size() - 1);
    if (classify(m, features) == idx.back()) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labeled.size());
}

std::string_view to_string(Metric metric) { return metric == Metric::NLL ? "nll" : "accuracy"; }

Metric parse_metric(std::string_view name) {
  if (name == "nll") return Metric::NLL;
  if (name == "accuracy") return Metric::Accuracy;
  throw DomainError("unknown metric '" + std::string(name) + "' (expected nll or accuracy)");
}

ComponentSpec equal_rank_spec(ComponentKind kind, const Shape& shape, std::size_t rank) {
  switch (kind) {
    case ComponentKind::CP:
      return {kind, {rank}};
    case ComponentKind::Tucker:
      return {kind, std::vector<std::size_t>(shape.order(), rank)};
    case ComponentKind::TT:
      return {kind, std::vector<std::size_t>(shape.order() - 1, rank)};
    case ComponentKind::Background:
      break;
  }
  return {ComponentKind::Background, {}};
}

namespace {

bool admissible(const ComponentSpec& spec, const Shape& shape, std::size_t budget) {
  try {
    validate_spec(spec, shape);
  } catch (const DomainError&) {
    return false;
  }
  return parameter_count(spec, shape) <= budget;
}

}  // namespace

std::vector<std::size_t> rank_candidates(ComponentKind kind, const Shape& shape, std::size_t budget,
                                         std::size_t count) {
  if (kind == ComponentKind::Background) throw DomainError("background has no rank");
  if (count == 0) return {};
  // A one-mode TT has no bonds, so its parameter count does not grow.
  if (kind == ComponentKind::TT && shape.order() == 1)
    return admissible(equal_rank_spec(kind, shape, 1), shape, budget) ? std::vector<std::size_t>{1}
                                                                      : std::vector<std::size_t>{};
  std::size_t r_max = 0;
  while (admissible(equal_rank_spec(kind, shape, r_max + 1), shape, budget)) ++r_max;
  std::vector<std::size_t> out;
  if (r_max <= count) {
    for (std::size_t r = 1; r <= r_max; ++r) out.push_back(r);
    return out;
  }
  for (std::size_t j = 1; j <= count; ++j) {
    const auto r = static_cast<std::size_t>(
        std::llround(static_cast<double>(r_max) * static_cast<double>(j) / static_cast<double>(count)));
    if (out.empty() || out.back() != r) out.push_back(std::max<std::size_t>(r, 1));
  }
  return out;
}

std::vector<GridCell> build_grid(const GridSpec& grid, const Shape& shape, std::size_t budget) {
  if (grid.alphas.empty()) throw DomainError("grid has no alphas");
  if (grid.structures.empty()) throw DomainError("grid has no structures");
  if (!grid.rank_candidates.empty() && grid.rank_candidates.size() != grid.structures.size())
    throw DomainError("rank candidate lists do not match the structures");
  const bool mixture = grid.structures.size() > 1;

  std::vector<std::vector<std::size_t>> per_structure;
  for (std::size_t s = 0; s < grid.structures.size(); ++s) {
    std::vector<std::size_t> ranks;
    if (!grid.rank_candidates.empty() && !grid.rank_candidates[s].empty()) {
      ranks = grid.rank_candidates[s];
      std::sort(ranks.begin(), ranks.end());
      ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
    } else {
      ranks = rank_candidates(grid.structures[s], shape, budget, grid.candidates);
    }
    if (mixture && ranks.size() > grid.mixture_candidates) ranks.resize(grid.mixture_candidates);
    per_structure.push_back(std::move(ranks));
  }

  std::vector<std::vector<ComponentSpec>> combos{{}};
  for (std::size_t s = 0; s < grid.structures.size(); ++s) {
    std::vector<std::vector<ComponentSpec>> next;
    for (const auto& prefix : combos) {
      for (std::size_t r : per_structure[s]) {
        auto specs = prefix;
        specs.push_back(equal_rank_spec(grid.structures[s], shape, r));
        next.push_back(std::move(specs));
      }
    }
    combos = std::move(next);
  }

  std::vector<GridCell> cells;
  for (double alpha : grid.alphas) {
    Alpha{alpha};
    for (auto specs : combos) {
      if (grid.background) specs.push_back({ComponentKind::Background, {}});
      bool ok = true;
      for (const auto& spec : specs) ok = ok && admissible(spec, shape, budget);
      if (!ok || parameter_count(specs, shape) > budget) continue;
      cells.push_back({alpha, std::move(specs)});
    }
  }
  if (cells.empty())
    throw DomainError("no grid cell fits the parameter cap of " + std::to_string(budget));
  return cells;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return s;
}

namespace {

double mean_nll_or_inf(const MixtureModel& m, std::span<const MultiIndex> samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    return evaluate_density(m, samples).mean;
  } catch (const DomainError&) {
    return std::numeric_limits<double>::infinity();
  }
}

double accuracy_or_nan(const MixtureModel& m, std::span<const MultiIndex> samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  return accuracy(m, samples);
}

RunScore run_cell(const EmpiricalTensor& t, const GridCell& cell, std::uint64_t seed, const GridSpec& grid,
                  std::span<const MultiIndex> valid, std::span<const MultiIndex> test) {
  FitConfig config;
  config.alpha = Alpha{cell.alpha};
  config.components = cell.components;
  config.max_iterations = grid.max_iterations;
  config.tolerance = grid.tolerance;
  config.seed = seed;
  const bool single_tt = cell.components.size() == 1 && cell.components[0].kind == ComponentKind::TT;
  const FitResult result = single_tt ? fit_tt_scalable(t, config) : fit(t, config);
  RunScore score;
  score.seed = seed;
  score.iterations = result.trace.iterations();
  score.valid_nll = mean_nll_or_inf(result.model, valid);
  score.test_nll = mean_nll_or_inf(result.model, test);
  score.valid_accuracy = accuracy_or_nan(result.model, valid);
  score.test_accuracy = accuracy_or_nan(result.model, test);
  return score;
}

double validation_score(const CellReport& c, Metric metric) {
  return metric == Metric::NLL ? c.valid_nll.mean : c.valid_accuracy.mean;
}

}  // namespace

std::size_t select_cell(std::span<const CellReport> cells, Metric metric) {
  if (cells.empty()) throw DomainError("no cells to select from");
  const auto better = [metric](double a, double b) { return metric == Metric::NLL ? a < b : a > b; };
  std::size_t best = 0;
  for (std::size_t k = 1; k < cells.size(); ++k) {
    const double s = validation_score(cells[k], metric);
    const double b = validation_score(cells[best], metric);
    if (std::isnan(s)) continue;
    if (std::isnan(b) || better(s, b)) {
      best = k;
    } else if (s == b && std::abs(cells[k].cell.alpha - 1.0) < std::abs(cells[best].cell.alpha - 1.0)) {
      best = k;
    }
  }
  return best;
}

EvalReport grid_search(const Shape& shape, std::span<const MultiIndex> train, std::span<const MultiIndex> valid,
                       std::span<const MultiIndex> test, const GridSpec& grid, Metric metric) {
  if (train.empty()) throw DomainError("grid search needs training samples");
  if (valid.empty()) throw DomainError("grid search needs validation samples");
  if (grid.repeats == 0) throw DomainError("repeats must be at least 1");
  if (!(grid.budget_ratio > 0.0)) throw DomainError("budget ratio must be positive");
  for (const auto* part : {&train, &valid, &test})
    for (const auto& idx : *part) shape.check_index(idx);

  EvalReport report;
  report.metric = metric;
  report.budget = static_cast<std::size_t>(std::floor(grid.budget_ratio * static_cast<double>(train.size())));
  const auto cells = build_grid(grid, shape, report.budget);
  const EmpiricalTensor t = build_empirical(train, shape);

  const std::size_t tasks = cells.size() * grid.repeats;
  std::vector<RunScore> scores(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < tasks; k = next++) {
      const std::size_t c = k / grid.repeats, rep = k % grid.repeats;
      try {
        scores[k] = run_cell(t, cells[c], grid.seed + rep, grid, valid, test);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(grid.jobs, 1, tasks);
  std::vector<std::thread> threads;
  for (std::size_t j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& th : threads) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellReport cell{cells[c], {}, {}, {}, {}, {}};
    std::vector<double> vn, va, tn, ta;
    for (std::size_t rep = 0; rep < grid.repeats; ++rep) {
      const auto& s = scores[c * grid.repeats + rep];
      cell.runs.push_back(s);
      vn.push_back(s.valid_nll);
      va.push_back(s.valid_accuracy);
      tn.push_back(s.test_nll);
      ta.push_back(s.test_accuracy);
    }
    cell.valid_nll = summarize(vn);
    cell.valid_accuracy = summarize(va);
    cell.test_nll = summarize(tn);
    cell.test_accuracy = summarize(ta);
    report.cells.push_back(std::move(cell));
  }
  report.selected = select_cell(report.cells, metric);
  return report;
}

namespace {

std::string describe(const std::vector<ComponentSpec>& specs) {
  std::string out;
  for (const auto& spec : specs) {
    if (!out.empty()) out += '+';
    out += to_string(spec.kind);
    if (spec.kind == ComponentKind::Background) continue;
    out += '(';
    for (std::size_t k = 0; k < spec.ranks.size(); ++k) out += (k ? "," : "") + std::to_string(spec.ranks[k]);
    out += ')';
  }
  return out;
}

nlohmann::json summary_json(const Summary& s) { return {{"mean", s.mean}, {"sd", s.sd}}; }

std::string number(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::string report_json(const EvalReport& report) {
  using nlohmann::json;
  json cells = json::array();
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    const auto& cell = report.cells[c];
    json comps = json::array();
    for (const auto& spec : cell.cell.components)
      comps.push_back({{"kind", std::string(to_string(spec.kind))}, {"ranks", spec.ranks}});
    json runs = json::array();
    for (const auto& r : cell.runs)
      runs.push_back({{"seed", r.seed},
                      {"valid_nll", r.valid_nll},
                      {"valid_accuracy", r.valid_accuracy},
                      {"test_nll", r.test_nll},
                      {"test_accuracy", r.test_accuracy},
                      {"iterations", r.iterations}});
    cells.push_back({{"index", c},
                     {"alpha", cell.cell.alpha},
                     {"components", comps},
                     {"label", describe(cell.cell.components)},
                     {"runs", runs},
                     {"valid_nll", summary_json(cell.valid_nll)},
                     {"valid_accuracy", summary_json(cell.valid_accuracy)},
                     {"test_nll", summary_json(cell.test_nll)},
                     {"test_accuracy", summary_json(cell.test_accuracy)}});
  }
  const auto& best = report.best();
  json doc{{"metric", std::string(to_string(report.metric))},
           {"parameter_cap", report.budget},
           {"selected", report.selected},
           {"best",
            {{"alpha", best.cell.alpha},
             {"label", describe(best.cell.components)},
             {"test_nll", summary_json(best.test_nll)},
             {"test_accuracy", summary_json(best.test_accuracy)}}},
           {"cells", cells}};
  return doc.dump(1) + "\n";
}

std::string report_table(const EvalReport& report, char delimiter) {
  std::ostringstream out;
  const char d = delimiter;
  out << "cell" << d << "alpha" << d << "components" << d << "seed" << d << "valid_nll" << d << "valid_accuracy"
      << d << "test_nll" << d << "test_accuracy" << d << "iterations" << d << "selected\n";
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    const auto& cell = report.cells[c];
    const std::string head = std::to_string(c) + d + number(cell.cell.alpha) + d + describe(cell.cell.components);
    const std::string sel = c == report.selected ? "1" : "0";
    for (const auto& r : cell.runs)
      out << head << d << r.seed << d << number(r.valid_nll) << d << number(r.valid_accuracy) << d
          << number(r.test_nll) << d << number(r.test_accuracy) << d << r.iterations << d << sel << '\n';
    out << head << d << "mean" << d << number(cell.valid_nll.mean) << d << number(cell.valid_accuracy.mean) << d
        << number(cell.test_nll.mean) << d << number(cell.test_accuracy.mean) << d << "" << d << sel << '\n';
    out << head << d << "sd" << d << number(cell.valid_nll.sd) << d << number(cell.valid_accuracy.sd) << d
        << number(cell.test_nll.sd) << d << number(cell.test_accuracy.sd) << d << "" << d << sel << '\n';
  }
  return out.str();
}

}  // namespace e2m
