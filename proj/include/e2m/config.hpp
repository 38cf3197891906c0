#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "e2m/fit.hpp"
#include "e2m/tasks.hpp"

namespace e2m {

/// Flat "key = value" text with optional [section] headers. '#' starts a
/// comment. Keys before the first header belong to an unnamed section.
struct KeyValueSection {
  std::string name;
  std::size_t line = 0;
  std::vector<std::pair<std::string, std::string>> entries;
};

std::vector<KeyValueSection> parse_key_value(std::string_view text);

/// Top level: alpha, seed, max_iterations, tolerance, trace_every, tt_stats.
/// Each [component] section: kind and (except background) ranks.
FitConfig parse_fit_config(std::string_view text);
FitConfig load_fit_config(const std::string& path);

/// Keys: alphas, structures, background, <kind>_ranks, candidates,
/// mixture_candidates, budget_ratio, repeats, seed, max_iterations,
/// tolerance, jobs.
GridSpec parse_grid_spec(std::string_view text);
GridSpec load_grid_spec(const std::string& path);

std::string read_text_file(const std::string& path);

}  // namespace e2m
