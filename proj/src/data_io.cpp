#include "e2m/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "e2m/error.hpp"
#include "json.hpp"

namespace e2m {

using nlohmann::json;

CategoricalSchema::CategoricalSchema(std::vector<Feature> features) : features_(std::move(features)) {
  if (features_.empty()) throw DomainError("schema has no features");
  for (const auto& f : features_) {
    if (f.categories.empty()) throw DomainError("feature '" + f.name + "' has no categories");
    std::vector<std::string> sorted = f.categories;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw DomainError("feature '" + f.name + "' has duplicate categories");
  }
}

Shape CategoricalSchema::shape() const {
  std::vector<std::size_t> dims;
  for (const auto& f : features_) dims.push_back(f.categories.size());
  return Shape(std::move(dims));
}

std::optional<std::size_t> CategoricalSchema::code(std::size_t feature, const std::string& category) const {
  const auto& cats = features_.at(feature).categories;
  const auto it = std::find(cats.begin(), cats.end(), category);
  if (it == cats.end()) return std::nullopt;
  return static_cast<std::size_t>(it - cats.begin());
}

const std::string& CategoricalSchema::category(std::size_t feature, std::size_t code) const {
  return features_.at(feature).categories.at(code);
}

CategoricalSchema numeric_schema(const Shape& shape) {
  std::vector<Feature> features;
  for (std::size_t d = 0; d < shape.order(); ++d) {
    Feature f{"x" + std::to_string(d), {}};
    for (std::size_t i = 0; i < shape.dim(d); ++i) f.categories.push_back(std::to_string(i));
    features.push_back(std::move(f));
  }
  return CategoricalSchema(std::move(features));
}

namespace {

std::string trim(const std::string& s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

// Splits one line; double quotes group a cell and "" escapes a quote.
std::vector<std::string> split_row(const std::string& line, char delimiter, std::size_t row) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cell += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  if (quoted) throw DomainError("row " + std::to_string(row) + ": unterminated quote");
  cells.push_back(trim(cell));
  return cells;
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_numbers;  // 1-based line numbers
};

RawCsv read_raw(std::istream& in, const CsvOptions& options) {
  RawCsv raw;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = options.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_row(line, options.delimiter, line_no);
    if (header_pending) {
      raw.header = std::move(cells);
      header_pending = false;
      continue;
    }
    raw.rows.push_back(std::move(cells));
    raw.row_numbers.push_back(line_no);
  }
  if (raw.rows.empty()) throw DomainError("CSV input has no data rows");
  return raw;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open '" + path + "'");
  return in;
}

}  // namespace

namespace {

struct SchemaBuilder {
  std::vector<Feature> features;
  std::vector<std::unordered_map<std::string, std::size_t>> codes;

  void start(const RawCsv& raw) {
    const std::size_t width = raw.header.empty() ? raw.rows.front().size() : raw.header.size();
    features.resize(width);
    codes.resize(width);
    for (std::size_t d = 0; d < width; ++d)
      features[d].name = raw.header.empty() ? "x" + std::to_string(d) : raw.header[d];
  }

  std::vector<MultiIndex> encode(const RawCsv& raw, const std::string& source) {
    if (features.empty()) start(raw);
    const std::size_t width = features.size();
    std::vector<MultiIndex> samples;
    samples.reserve(raw.rows.size());
    for (std::size_t n = 0; n < raw.rows.size(); ++n) {
      const auto& cells = raw.rows[n];
      const auto row = source + "row " + std::to_string(raw.row_numbers[n]);
      if (cells.size() != width)
        throw DomainError(row + ": expected " + std::to_string(width) + " columns, found " +
                          std::to_string(cells.size()));
      MultiIndex idx(width);
      for (std::size_t d = 0; d < width; ++d) {
        if (cells[d].empty()) throw DomainError(row + ": empty cell in column " + std::to_string(d + 1));
        const auto [it, inserted] = codes[d].try_emplace(cells[d], features[d].categories.size());
        if (inserted) features[d].categories.push_back(cells[d]);
        idx[d] = it->second;
      }
      samples.push_back(std::move(idx));
    }
    return samples;
  }
};

}  // namespace

CsvData parse_csv(std::istream& in, const CsvOptions& options) {
  SchemaBuilder builder;
  CsvData data;
  data.samples = builder.encode(read_raw(in, options), "");
  data.schema = CategoricalSchema(std::move(builder.features));
  return data;
}

std::vector<std::vector<MultiIndex>> load_csv_set(std::span<const std::string> paths, const CsvOptions& options,
                                                  CategoricalSchema& schema) {
  SchemaBuilder builder;
  std::vector<std::vector<MultiIndex>> out;
  for (const auto& path : paths) {
    auto in = open_in(path);
    out.push_back(builder.encode(read_raw(in, options), path + ": "));
  }
  if (out.empty()) throw DomainError("no CSV files given");
  schema = CategoricalSchema(std::move(builder.features));
  return out;
}

CsvData load_csv(const std::string& path, const CsvOptions& options) {
  auto in = open_in(path);
  return parse_csv(in, options);
}

std::vector<MultiIndex> encode_csv(const std::string& path, const CategoricalSchema& schema,
                                   const CsvOptions& options, bool allow_missing_last) {
  auto in = open_in(path);
  const RawCsv raw = read_raw(in, options);
  const std::size_t width = schema.order();
  std::vector<MultiIndex> out;
  out.reserve(raw.rows.size());
  std::optional<std::size_t> row_width;
  for (std::size_t n = 0; n < raw.rows.size(); ++n) {
    const auto& cells = raw.rows[n];
    const auto row = std::to_string(raw.row_numbers[n]);
    const bool ok = cells.size() == width || (allow_missing_last && cells.size() + 1 == width);
    if (!ok)
      throw DomainError("row " + row + ": expected " + std::to_string(width) + " columns, found " +
                        std::to_string(cells.size()));
    if (row_width && *row_width != cells.size())
      throw DomainError("row " + row + ": column count differs from earlier rows");
    row_width = cells.size();
    MultiIndex idx(cells.size());
    for (std::size_t d = 0; d < cells.size(); ++d) {
      if (cells[d].empty())
        throw DomainError("row " + row + ": empty cell in column " + std::to_string(d + 1));
      const auto code = schema.code(d, cells[d]);
      if (!code)
        throw DomainError("row " + row + ": unknown category '" + cells[d] + "' in column " +
                          std::to_string(d + 1));
      idx[d] = *code;
    }
    out.push_back(std::move(idx));
  }
  return out;
}

void write_csv(std::ostream& out, std::span<const MultiIndex> samples, const CategoricalSchema* schema,
               const CsvOptions& options) {
  const auto needs_quotes = [&](const std::string& s) {
    return s.find(options.delimiter) != std::string::npos || s.find('"') != std::string::npos ||
           s != trim(s);
  };
  const auto put = [&](const std::string& s) {
    if (!needs_quotes(s)) {
      out << s;
      return;
    }
    out << '"';
    for (char c : s) out << (c == '"' ? std::string("\"\"") : std::string(1, c));
    out << '"';
  };
  if (options.has_header && schema) {
    for (std::size_t d = 0; d < schema->order(); ++d) {
      if (d) out << options.delimiter;
      put(schema->features()[d].name);
    }
    out << '\n';
  }
  for (const auto& idx : samples) {
    for (std::size_t d = 0; d < idx.size(); ++d) {
      if (d) out << options.delimiter;
      if (schema) put(schema->category(d, idx[d]));
      else out << idx[d];
    }
    out << '\n';
  }
}

void write_csv(const std::string& path, std::span<const MultiIndex> samples, const CategoricalSchema* schema,
               const CsvOptions& options) {
  auto out = open_out(path);
  write_csv(out, samples, schema, options);
}

Split split(std::span<const MultiIndex> samples, const SplitSpec& spec) {
  const std::size_t n = samples.size();
  if (n < 3) throw DomainError("split needs at least 3 samples, got " + std::to_string(n));
  if (!(spec.train > 0 && spec.valid > 0 && spec.test > 0) ||
      std::abs(spec.train + spec.valid + spec.test - 1.0) > 1e-12)
    throw DomainError("split fractions must be positive and sum to 1");
  const auto count = [n](double f) {
    return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9));
  };
  const std::size_t n_train = count(spec.train);
  const std::size_t n_valid = count(spec.valid);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  Split out;
  for (std::size_t k = 0; k < n; ++k) {
    auto& dst = k < n_train ? out.train : (k < n_train + n_valid ? out.valid : out.test);
    dst.push_back(samples[order[k]]);
  }
  return out;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw DomainError(what + ": expected a nonempty matrix");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw DomainError(what + ": ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw DomainError(what + ": non-numeric entry");
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

json component_to_json(const Component& c) {
  json out;
  out["kind"] = std::string(to_string(kind_of(c)));
  out["ranks"] = spec_of(c).ranks;
  std::visit(
      [&](const auto& comp) {
        using T = std::decay_t<decltype(comp)>;
        if constexpr (std::is_same_v<T, CPComponent>) {
          json factors = json::array();
          for (const auto& a : comp.factors) factors.push_back(matrix_to_json(a));
          out["factors"] = std::move(factors);
        } else if constexpr (std::is_same_v<T, TuckerComponent>) {
          out["core"] = comp.core;
          json factors = json::array();
          for (const auto& a : comp.factors) factors.push_back(matrix_to_json(a));
          out["factors"] = std::move(factors);
        } else if constexpr (std::is_same_v<T, TTComponent>) {
          json cores = json::array();
          for (const auto& core : comp.cores) {
            json slices = json::array();
            for (const auto& slice : core) slices.push_back(matrix_to_json(slice));
            cores.push_back(std::move(slices));
          }
          out["cores"] = std::move(cores);
        }
      },
      c);
  return out;
}

Component component_from_json(const json& j, const Shape& shape, std::size_t k) {
  const std::string where = "component " + std::to_string(k);
  if (!j.is_object() || !j.contains("kind")) throw DomainError(where + ": missing kind");
  const auto kind = parse_component_kind(j.at("kind").get<std::string>());
  const auto read_factors = [&](const json& arr) {
    if (!arr.is_array()) throw DomainError(where + ": factors must be an array");
    std::vector<Eigen::MatrixXd> factors;
    for (std::size_t d = 0; d < arr.size(); ++d)
      factors.push_back(matrix_from_json(arr[d], where + " factor " + std::to_string(d)));
    return factors;
  };
  Component c;
  switch (kind) {
    case ComponentKind::CP:
      c = CPComponent{read_factors(j.at("factors"))};
      break;
    case ComponentKind::Tucker: {
      TuckerComponent t;
      t.ranks = j.at("ranks").get<std::vector<std::size_t>>();
      t.core = j.at("core").get<std::vector<double>>();
      t.factors = read_factors(j.at("factors"));
      c = std::move(t);
      break;
    }
    case ComponentKind::TT: {
      TTComponent t;
      const auto& cores = j.at("cores");
      if (!cores.is_array()) throw DomainError(where + ": cores must be an array");
      for (std::size_t d = 0; d < cores.size(); ++d) {
        std::vector<Eigen::MatrixXd> slices;
        for (std::size_t i = 0; i < cores[d].size(); ++i)
          slices.push_back(matrix_from_json(cores[d][i], where + " core " + std::to_string(d)));
        t.cores.push_back(std::move(slices));
      }
      c = std::move(t);
      break;
    }
    case ComponentKind::Background:
      c = BackgroundComponent{shape};
      break;
  }
  validate_component(c, shape);
  if (j.contains("ranks") && spec_of(c).ranks != j.at("ranks").get<std::vector<std::size_t>>())
    throw DomainError(where + ": ranks do not match the stored values");
  const double mass = total_mass(c);
  if (std::abs(mass - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg << where << ": mass " << mass << " is not 1";
    throw DomainError(msg.str());
  }
  return c;
}

}  // namespace

std::string model_to_json(const MixtureModel& m, const CategoricalSchema* schema) {
  json doc;
  doc["format"] = "e2m-model";
  doc["version"] = 1;
  doc["shape"] = m.shape.dims();
  doc["weights"] = m.weights;
  json comps = json::array();
  for (const auto& c : m.components) comps.push_back(component_to_json(c));
  doc["components"] = std::move(comps);
  if (schema) {
    json features = json::array();
    for (const auto& f : schema->features()) features.push_back({{"name", f.name}, {"categories", f.categories}});
    doc["schema"] = std::move(features);
  }
  return doc.dump(1) + "\n";
}

LoadedModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DomainError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.value("format", std::string()) != "e2m-model") throw DomainError("not an e2m-model file");
    const int version = doc.value("version", 0);
    if (version != 1) throw DomainError("unsupported model version " + std::to_string(version));
    LoadedModel out;
    out.model.shape = Shape(doc.at("shape").get<std::vector<std::size_t>>());
    out.model.weights = doc.at("weights").get<std::vector<double>>();
    const auto& comps = doc.at("components");
    for (std::size_t k = 0; k < comps.size(); ++k)
      out.model.components.push_back(component_from_json(comps[k], out.model.shape, k));
    if (out.model.components.empty()) throw DomainError("model has no components");
    if (out.model.weights.size() != out.model.components.size())
      throw DomainError("model has " + std::to_string(out.model.components.size()) + " components but " +
                        std::to_string(out.model.weights.size()) + " weights");
    double sum = 0.0;
    for (double w : out.model.weights) {
      if (!std::isfinite(w) || w < 0.0) throw DomainError("weights must be finite and nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "weights sum " << sum;
      throw DomainError(msg.str());
    }
    if (doc.contains("schema")) {
      std::vector<Feature> features;
      for (const auto& f : doc.at("schema"))
        features.push_back({f.at("name").get<std::string>(), f.at("categories").get<std::vector<std::string>>()});
      CategoricalSchema schema(std::move(features));
      if (schema.shape() != out.model.shape) throw DomainError("schema does not match the model shape");
      out.schema = std::move(schema);
    }
    return out;
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::string& path, const MixtureModel& m, const CategoricalSchema* schema) {
  auto out = open_out(path);
  out << model_to_json(m, schema);
}

LoadedModel load_model(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

void write_trace(std::ostream& out, const FitTrace& trace, std::size_t every) {
  if (every == 0) every = 1;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    if (k % every != 0 && k + 1 != trace.records.size()) continue;
    const auto& r = trace.records[k];
    json line{{"iteration", r.iteration},
              {"objective", r.objective},
              {"weights", r.weights},
              {"elapsed_seconds", r.elapsed_seconds}};
    out << line.dump() << '\n';
  }
}

void write_trace(const std::string& path, const FitTrace& trace, std::size_t every) {
  auto out = open_out(path);
  write_trace(out, trace, every);
}

std::vector<TraceRecord> read_trace(const std::string& path) {
  auto in = open_in(path);
  std::vector<TraceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      records.push_back({j.at("iteration").get<std::size_t>(), j.at("objective").get<double>(),
                         j.at("weights").get<std::vector<double>>(), j.at("elapsed_seconds").get<double>()});
    } catch (const json::exception& e) {
      throw DomainError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

DenseTensor parse_dense_grid(std::istream& in) {
  std::string line;
  std::vector<std::size_t> dims;
  while (dims.empty() && std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream header(line);
    long long d = 0;
    while (header >> d) {
      if (d <= 0) throw DomainError("dense grid: shape entries must be positive");
      dims.push_back(static_cast<std::size_t>(d));
    }
    if (!header.eof()) throw DomainError("dense grid: malformed shape line");
  }
  if (dims.empty()) throw DomainError("dense grid: missing shape line");
  Shape shape(dims);
  const auto card = shape.cardinality();
  if (!card || *card > kMaxDenseCardinality) throw DomainError("dense grid: shape too large");
  std::vector<double> values;
  values.reserve(*card);
  std::string token;
  while (in >> token) {
    if (token.front() == '#') {
      std::getline(in, token);
      continue;
    }
    std::replace(token.begin(), token.end(), ',', ' ');
    std::istringstream parts(token);
    std::string part;
    while (parts >> part) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(part, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != part.size()) throw DomainError("dense grid: bad number '" + part + "'");
      values.push_back(v);
    }
  }
  if (values.size() != *card)
    throw DomainError("dense grid: expected " + std::to_string(*card) + " values, found " +
                      std::to_string(values.size()));
  return DenseTensor(std::move(shape), std::move(values));
}

DenseTensor load_dense_grid(const std::string& path) {
  auto in = open_in(path);
  return parse_dense_grid(in);
}

}  // namespace e2m
