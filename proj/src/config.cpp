#include "e2m/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "e2m/error.hpp"

namespace e2m {
namespace {

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double x = std::stod(value, &used);
    if (used == value.size()) return x;
  } catch (const std::exception&) {
  }
  throw DomainError("key '" + key + "': expected a number, got '" + value + "'");
}

std::size_t to_size(const std::string& key, const std::string& value) {
  std::size_t x = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, x);
  if (ec != std::errc() || ptr != end)
    throw DomainError("key '" + key + "': expected a non-negative integer, got '" + value + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t x = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, x);
  if (ec != std::errc() || ptr != end)
    throw DomainError("key '" + key + "': expected a non-negative integer, got '" + value + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "no" || value == "0") return false;
  throw DomainError("key '" + key + "': expected true or false, got '" + value + "'");
}

std::vector<std::size_t> to_size_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(value)) out.push_back(to_size(key, item));
  return out;
}

ComponentSpec parse_component_section(const KeyValueSection& section) {
  ComponentSpec spec;
  bool have_kind = false;
  for (const auto& [key, value] : section.entries) {
    if (key == "kind") {
      spec.kind = parse_component_kind(value);
      have_kind = true;
    } else if (key == "ranks" || key == "rank") {
      spec.ranks = to_size_list(key, value);
    } else {
      throw DomainError("unknown key '" + key + "' in [component] at line " +
                        std::to_string(section.line));
    }
  }
  if (!have_kind)
    throw DomainError("[component] at line " + std::to_string(section.line) + " has no kind");
  return spec;
}

}  // namespace

std::vector<KeyValueSection> parse_key_value(std::string_view text) {
  std::vector<KeyValueSection> sections(1);
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw DomainError("line " + std::to_string(line_no) + ": unterminated section header");
      sections.push_back({trim(std::string_view(line).substr(1, line.size() - 2)), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DomainError("line " + std::to_string(line_no) + ": expected key = value");
    auto key = trim(std::string_view(line).substr(0, eq));
    auto value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw DomainError("line " + std::to_string(line_no) + ": empty key");
    sections.back().entries.emplace_back(std::move(key), std::move(value));
  }
  return sections;
}

FitConfig parse_fit_config(std::string_view text) {
  FitConfig config;
  const auto sections = parse_key_value(text);
  for (const auto& [key, value] : sections.front().entries) {
    if (key == "alpha") {
      config.alpha = Alpha{to_double(key, value)};
    } else if (key == "seed") {
      config.seed = to_u64(key, value);
    } else if (key == "max_iterations") {
      config.max_iterations = to_size(key, value);
    } else if (key == "tolerance") {
      config.tolerance = to_double(key, value);
    } else if (key == "trace_every") {
      config.trace_every = to_size(key, value);
    } else if (key == "tt_stats") {
      if (value == "cumulant") config.tt_stats = TTStatsMethod::Cumulant;
      else if (value == "enumerate") config.tt_stats = TTStatsMethod::Enumerate;
      else throw DomainError("tt_stats must be cumulant or enumerate, got '" + value + "'");
    } else {
      throw DomainError("unknown configuration key '" + key + "'");
    }
  }
  for (std::size_t s = 1; s < sections.size(); ++s) {
    if (sections[s].name != "component")
      throw DomainError("unknown section [" + sections[s].name + "] at line " +
                        std::to_string(sections[s].line));
    config.components.push_back(parse_component_section(sections[s]));
  }
  if (config.components.empty()) throw DomainError("configuration has no [component] section");
  return config;
}

GridSpec parse_grid_spec(std::string_view text) {
  GridSpec grid;
  const auto sections = parse_key_value(text);
  if (sections.size() > 1)
    throw DomainError("grid files take no sections, found [" + sections[1].name + "]");
  std::vector<std::pair<ComponentKind, std::vector<std::size_t>>> explicit_ranks;
  for (const auto& [key, value] : sections.front().entries) {
    if (key == "alphas") {
      grid.alphas.clear();
      for (const auto& item : split_list(value)) grid.alphas.push_back(Alpha{to_double(key, item)}.value());
    } else if (key == "structures") {
      grid.structures.clear();
      for (const auto& item : split_list(value)) {
        const auto kind = parse_component_kind(item);
        if (kind == ComponentKind::Background)
          throw DomainError("use 'background = true' instead of listing background as a structure");
        grid.structures.push_back(kind);
      }
    } else if (key == "background") {
      grid.background = to_bool(key, value);
    } else if (key.size() > 6 && key.ends_with("_ranks")) {
      explicit_ranks.emplace_back(parse_component_kind(key.substr(0, key.size() - 6)),
                                  to_size_list(key, value));
    } else if (key == "candidates") {
      grid.candidates = to_size(key, value);
    } else if (key == "mixture_candidates") {
      grid.mixture_candidates = to_size(key, value);
    } else if (key == "budget_ratio") {
      grid.budget_ratio = to_double(key, value);
    } else if (key == "repeats") {
      grid.repeats = to_size(key, value);
    } else if (key == "seed") {
      grid.seed = to_u64(key, value);
    } else if (key == "max_iterations") {
      grid.max_iterations = to_size(key, value);
    } else if (key == "tolerance") {
      grid.tolerance = to_double(key, value);
    } else if (key == "jobs") {
      grid.jobs = to_size(key, value);
    } else {
      throw DomainError("unknown grid key '" + key + "'");
    }
  }
  if (grid.alphas.empty()) throw DomainError("grid has no alphas");
  if (grid.structures.empty()) throw DomainError("grid has no structures");
  if (grid.repeats == 0) throw DomainError("repeats must be at least 1");
  if (!(grid.budget_ratio > 0.0)) throw DomainError("budget_ratio must be positive");
  if (!explicit_ranks.empty()) {
    grid.rank_candidates.assign(grid.structures.size(), {});
    for (const auto& [kind, ranks] : explicit_ranks) {
      bool used = false;
      for (std::size_t s = 0; s < grid.structures.size(); ++s) {
        if (grid.structures[s] == kind) {
          grid.rank_candidates[s] = ranks;
          used = true;
        }
      }
      if (!used)
        throw DomainError("ranks given for " + std::string(to_string(kind)) +
                          " which is not among the structures");
    }
  }
  return grid;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

FitConfig load_fit_config(const std::string& path) { return parse_fit_config(read_text_file(path)); }

GridSpec load_grid_spec(const std::string& path) { return parse_grid_spec(read_text_file(path)); }

}  // namespace e2m
