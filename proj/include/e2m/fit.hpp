#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "e2m/divergence.hpp"
#include "e2m/manybody.hpp"
#include "e2m/models.hpp"
#include "e2m/tensor.hpp"

namespace e2m {

struct FitConfig {
  Alpha alpha{1.0};
  std::vector<ComponentSpec> components;
  std::size_t max_iterations = 1200;
  double tolerance = 1e-8;  // on |L_t - L_{t-1}|
  std::uint64_t seed = 0;
  std::size_t trace_every = 1;  // record spacing when traces are written out
  TTStatsMethod tt_stats = TTStatsMethod::Cumulant;
  double monotonicity_slack = 1e-9;

  /// Throws DomainError on an invalid configuration for the given shape.
  void validate(const Shape& shape) const;
};

enum class StopReason { Tolerance, MaxIterations };
std::string_view to_string(StopReason reason);

struct TraceRecord {
  std::size_t iteration = 0;
  double objective = 0.0;
  std::vector<double> weights;
  double elapsed_seconds = 0.0;
};

/// One record per iteration, starting with the initial model at iteration 0.
struct FitTrace {
  std::vector<TraceRecord> records;
  std::optional<StopReason> reason;
  std::vector<std::string> notes;  // dead-rank resets and similar events

  std::vector<double> objectives() const;
  std::size_t iterations() const { return records.empty() ? 0 : records.size() - 1; }
};

struct StopDecision {
  bool stop = false;
  std::optional<StopReason> reason;
};

/// Stop when |L_t - L_{t-1}| < tolerance (checked first) or t >= max_iterations.
StopDecision should_stop(const FitTrace& trace, const FitConfig& config);

/// What an observer sees after each iteration: the model produced by the
/// M-step and the E-step it was computed from. Both are null/absent for the
/// initial model at iteration 0.
struct IterationView {
  std::size_t iteration = 0;
  const MixtureModel& model;
  const EStep* estep = nullptr;
  double objective = 0.0;
};

using IterationObserver = std::function<void(const IterationView&)>;

struct FitResult {
  MixtureModel model;
  FitTrace trace;
};

/// E2M loop for an arbitrary mixture. Throws InternalError when the
/// objective increases by more than config.monotonicity_slack or is NaN.
FitResult fit(const EmpiricalTensor& t, const FitConfig& config, const IterationObserver& observer = {});

/// Same, starting from a given model instead of a random initialization.
FitResult fit_from(const EmpiricalTensor& t, MixtureModel initial, const FitConfig& config,
                   const IterationObserver& observer = {});

/// Dedicated single-TT loop: prefix/suffix cumulants per observed sample and
/// direct core updates, O(D N R^2) per iteration. A config of one TT plus
/// a Background is handed to fit() with cumulant statistics.
FitResult fit_tt_scalable(const EmpiricalTensor& t, const FitConfig& config,
                          const IterationObserver& observer = {});

}  // namespace e2m
