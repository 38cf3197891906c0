#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "e2m/config.hpp"
#include "e2m/data_io.hpp"
#include "e2m/error.hpp"
#include "e2m/fit.hpp"
#include "e2m/synthetic.hpp"
#include "e2m/tasks.hpp"

namespace {

using namespace e2m;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t k = 0; k < xs.size(); ++k) out += (k ? "," : "") + num(xs[k]);
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "expected a comma separated list of non-negative integers");
    }
  }
  if (out.empty()) throw CLI::ValidationError(flag, "empty list");
  return out;
}

struct CsvFlags {
  bool header = false;
  char delimiter = ',';

  void add(CLI::App* cmd) {
    cmd->add_flag("--header", header, "First row holds feature names");
    cmd->add_option("--delimiter", delimiter, "Field separator");
  }
  CsvOptions options() const { return {header, delimiter}; }
};

void print_fit(const FitResult& result) {
  std::cout << "objective=" << num(result.trace.records.back().objective) << '\n'
            << "iterations=" << result.trace.iterations() << '\n'
            << "stop=" << (result.trace.reason ? to_string(*result.trace.reason) : "none") << '\n'
            << "weights=" << join(result.model.weights) << '\n';
  for (const auto& note : result.trace.notes) std::cerr << "note: " << note << '\n';
}

FitResult run_fit(const EmpiricalTensor& t, const FitConfig& config) {
  const bool single_tt = config.components.size() == 1 && config.components[0].kind == ComponentKind::TT;
  return single_tt && config.tt_stats == TTStatsMethod::Cumulant ? fit_tt_scalable(t, config) : fit(t, config);
}

// Rows of a file in model coordinates; numeric codes when the model has no schema.
std::vector<MultiIndex> read_rows(const std::string& path, const LoadedModel& loaded, const CsvFlags& csv,
                                  bool allow_missing_last) {
  const CategoricalSchema schema = loaded.schema ? *loaded.schema : numeric_schema(loaded.model.shape);
  return encode_csv(path, schema, csv.options(), allow_missing_last);
}

int cmd_fit(const std::string& data, const std::string& config_path, const std::string& out_model,
            const std::string& out_trace, const CsvFlags& csv) {
  const FitConfig config = load_fit_config(config_path);
  const CsvData loaded = load_csv(data, csv.options());
  const Shape shape = loaded.schema.shape();
  config.validate(shape);
  const EmpiricalTensor t = build_empirical(loaded.samples, shape);
  const FitResult result = run_fit(t, config);
  if (!out_model.empty()) save_model(out_model, result.model, &loaded.schema);
  if (!out_trace.empty()) write_trace(out_trace, result.trace, config.trace_every);
  std::cout << "samples=" << loaded.samples.size() << '\n' << "support=" << t.nnz() << '\n';
  print_fit(result);
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data, const CsvFlags& csv) {
  const LoadedModel loaded = load_model(model_path);
  const auto rows = read_rows(data, loaded, csv, false);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    if (evaluate(loaded.model, rows[n]) > 0.0) continue;
    std::string values;
    for (std::size_t d = 0; d < rows[n].size(); ++d) {
      if (d) values += ',';
      values += loaded.schema ? loaded.schema->category(d, rows[n][d]) : std::to_string(rows[n][d]);
    }
    throw DomainError("data row " + std::to_string(n + 1) + " (" + values + ") has zero model mass");
  }
  const NllResult nll = evaluate_density(loaded.model, rows);
  std::cout << "samples=" << rows.size() << '\n'
            << "nll_total=" << num(nll.total) << '\n'
            << "nll_mean=" << num(nll.mean) << '\n';
  return 0;
}

int cmd_classify(const std::string& model_path, const std::string& data, const std::string& out,
                 const CsvFlags& csv) {
  const LoadedModel loaded = load_model(model_path);
  const auto rows = read_rows(data, loaded, csv, true);
  const std::size_t order = loaded.model.shape.order();
  const bool labeled = !rows.empty() && rows.front().size() == order;
  std::ostringstream predictions;
  std::size_t correct = 0;
  for (const auto& row : rows) {
    const std::span<const std::size_t> features(row.data(), order - 1);
    const std::size_t c = classify(loaded.model, features);
    if (labeled && c == row.back()) ++correct;
    predictions << (loaded.schema ? loaded.schema->category(order - 1, c) : std::to_string(c)) << '\n';
  }
  if (out.empty()) {
    std::cout << predictions.str();
  } else {
    std::ofstream f(out);
    if (!f) throw DomainError("cannot write '" + out + "'");
    f << predictions.str();
  }
  std::cout << "samples=" << rows.size() << '\n';
  if (labeled) std::cout << "accuracy=" << num(static_cast<double>(correct) / static_cast<double>(rows.size())) << '\n';
  return 0;
}

int cmd_synth(const std::string& kind, const std::string& shape_text, const std::string& rank_text, double bg,
              std::uint64_t seed, std::size_t n, const std::string& out, const std::string& out_true) {
  SyntheticSpec spec;
  spec.kind = parse_component_kind(kind);
  spec.shape = Shape(parse_sizes(shape_text, "--shape"));
  spec.ranks = parse_sizes(rank_text, "--rank");
  if (spec.kind == ComponentKind::TT && spec.ranks.size() == 1 && spec.shape.order() > 2)
    spec.ranks.assign(spec.shape.order() - 1, spec.ranks[0]);
  if (spec.kind == ComponentKind::Tucker && spec.ranks.size() == 1)
    spec.ranks.assign(spec.shape.order(), spec.ranks[0]);
  spec.background_weight = bg;
  spec.seed = seed;
  const MixtureModel truth = synth_lowrank(spec);
  const DenseSampler sampler(truth);
  const auto samples = sampler.draw(n, seed + 1);
  write_csv(out, samples);
  if (!out_true.empty()) save_model(out_true, truth);
  std::cout << "samples=" << samples.size() << '\n' << "weights=" << join(truth.weights) << '\n';
  return 0;
}

int cmd_grid(const std::string& train, const std::string& valid, const std::string& test,
             const std::string& grid_path, const std::string& metric, const std::string& out_report,
             const std::string& out_table, std::size_t jobs, const CsvFlags& csv) {
  GridSpec grid = load_grid_spec(grid_path);
  if (jobs > 0) grid.jobs = jobs;
  const Metric m = parse_metric(metric);
  CategoricalSchema schema;
  const std::vector<std::string> paths{train, valid, test};
  const auto parts = load_csv_set(paths, csv.options(), schema);
  const EvalReport report = grid_search(schema.shape(), parts[0], parts[1], parts[2], grid, m);
  if (!out_report.empty()) {
    std::ofstream f(out_report);
    if (!f) throw DomainError("cannot write '" + out_report + "'");
    f << report_json(report);
  }
  if (!out_table.empty()) {
    std::ofstream f(out_table);
    if (!f) throw DomainError("cannot write '" + out_table + "'");
    f << report_table(report);
  }
  const auto& best = report.best();
  std::cout << "cells=" << report.cells.size() << '\n'
            << "parameter_cap=" << report.budget << '\n'
            << "selected=" << report.selected << '\n'
            << "alpha=" << num(best.cell.alpha) << '\n'
            << "valid_" << to_string(m) << "=" << num(m == Metric::NLL ? best.valid_nll.mean : best.valid_accuracy.mean)
            << '\n'
            << "test_nll_mean=" << num(best.test_nll.mean) << '\n'
            << "test_nll_sd=" << num(best.test_nll.sd) << '\n'
            << "test_accuracy_mean=" << num(best.test_accuracy.mean) << '\n'
            << "test_accuracy_sd=" << num(best.test_accuracy.sd) << '\n';
  return 0;
}

int cmd_reconstruct(const std::string& dense, const std::string& config_path, const std::string& out_trace,
                    const std::string& out_model) {
  const FitConfig config = load_fit_config(config_path);
  const DenseTensor grid = load_dense_grid(dense);
  config.validate(grid.shape());
  const EmpiricalTensor t = empirical_from_dense(normalize_dense(grid));
  const FitResult result = run_fit(t, config);
  if (!out_trace.empty()) write_trace(out_trace, result.trace, config.trace_every);
  if (!out_model.empty()) save_model(out_model, result.model);
  std::cout << "support=" << t.nnz() << '\n';
  print_fit(result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank mixture density estimation with alpha-divergence EM"};
  app.require_subcommand(1, 1);
  int status = 0;

  CsvFlags fit_csv, eval_csv, classify_csv, grid_csv;
  std::string data, config, out_model, out_trace, model, out, out_true, dense;
  std::string kind, shape, rank, train, valid, test, grid, metric = "nll", out_report, out_table;
  double bg = 0.10;
  std::uint64_t seed = 0;
  std::size_t n = 0, jobs = 0;

  auto* fit_cmd = app.add_subcommand("fit", "Fit a mixture to a categorical CSV");
  fit_cmd->add_option("--data", data, "Sample CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--config", config, "Fit configuration")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--out-model", out_model, "Model output");
  fit_cmd->add_option("--out-trace", out_trace, "Trace output");
  fit_csv.add(fit_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Negative log-likelihood of samples");
  eval_cmd->add_option("--model", model, "Model file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", data, "Sample CSV")->required()->check(CLI::ExistingFile);
  eval_csv.add(eval_cmd);

  auto* classify_cmd = app.add_subcommand("classify", "Predict the last feature");
  classify_cmd->add_option("--model", model, "Model file")->required()->check(CLI::ExistingFile);
  classify_cmd->add_option("--data", data, "Feature or labeled CSV")->required()->check(CLI::ExistingFile);
  classify_cmd->add_option("--out", out, "Prediction output (default: standard output)");
  classify_csv.add(classify_cmd);

  auto* synth_cmd = app.add_subcommand("synth", "Sample from a random low-rank truth");
  synth_cmd->add_option("--kind", kind, "cp, tt or tucker")->required();
  synth_cmd->add_option("--shape", shape, "Comma separated dims")->required();
  synth_cmd->add_option("--rank", rank, "Rank or comma separated ranks")->required();
  synth_cmd->add_option("--bg", bg, "Background weight")->capture_default_str();
  synth_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--n", n, "Number of samples")->required();
  synth_cmd->add_option("--out", out, "Sample CSV output")->required();
  synth_cmd->add_option("--out-true", out_true, "True model output");

  auto* grid_cmd = app.add_subcommand("grid", "Rank and alpha grid search");
  grid_cmd->add_option("--train", train, "Training CSV")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--valid", valid, "Validation CSV")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--test", test, "Test CSV")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--grid", grid, "Grid file")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--metric", metric, "nll or accuracy")
      ->check(CLI::IsMember({"nll", "accuracy"}))
      ->capture_default_str();
  grid_cmd->add_option("--out-report", out_report, "JSON report output");
  grid_cmd->add_option("--out-table", out_table, "Tab separated report output");
  grid_cmd->add_option("--jobs", jobs, "Parallel fits (overrides the grid file)");
  grid_csv.add(grid_cmd);

  auto* rec_cmd = app.add_subcommand("reconstruct", "Fit a dense nonnegative grid");
  rec_cmd->add_option("--dense", dense, "Dense grid file")->required()->check(CLI::ExistingFile);
  rec_cmd->add_option("--config", config, "Fit configuration")->required()->check(CLI::ExistingFile);
  rec_cmd->add_option("--out-trace", out_trace, "Trace output");
  rec_cmd->add_option("--out-model", out_model, "Model output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 1;
  }

  try {
    if (*fit_cmd) status = cmd_fit(data, config, out_model, out_trace, fit_csv);
    else if (*eval_cmd) status = cmd_eval(model, data, eval_csv);
    else if (*classify_cmd) status = cmd_classify(model, data, out, classify_csv);
    else if (*synth_cmd) status = cmd_synth(kind, shape, rank, bg, seed, n, out, out_true);
    else if (*grid_cmd) status = cmd_grid(train, valid, test, grid, metric, out_report, out_table, jobs, grid_csv);
    else if (*rec_cmd) status = cmd_reconstruct(dense, config, out_trace, out_model);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return status;
}
