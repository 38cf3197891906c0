#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "e2m/fit.hpp"
#include "e2m/models.hpp"
#include "e2m/tensor.hpp"

namespace e2m {

struct Feature {
  std::string name;
  std::vector<std::string> categories;  // index = category code
};

class CategoricalSchema {
 public:
  CategoricalSchema() = default;
  /// Throws DomainError on empty or duplicated category lists.
  explicit CategoricalSchema(std::vector<Feature> features);

  const std::vector<Feature>& features() const { return features_; }
  std::size_t order() const { return features_.size(); }
  Shape shape() const;
  /// By convention the class mode is the last one.
  std::size_t target_feature() const { return features_.size() - 1; }

  std::optional<std::size_t> code(std::size_t feature, const std::string& category) const;
  const std::string& category(std::size_t feature, std::size_t code) const;

 private:
  std::vector<Feature> features_;
};

struct CsvOptions {
  bool has_header = false;
  char delimiter = ',';
};

struct CsvData {
  std::vector<MultiIndex> samples;
  CategoricalSchema schema;
};

/// Categories are coded in order of first appearance. Ragged rows, empty
/// cells and empty files are rejected with the offending row number.
CsvData load_csv(const std::string& path, const CsvOptions& options = {});
CsvData parse_csv(std::istream& in, const CsvOptions& options = {});

/// Several files coded with one shared schema (first appearance across the
/// files in the given order), e.g. train/valid/test splits.
std::vector<std::vector<MultiIndex>> load_csv_set(std::span<const std::string> paths, const CsvOptions& options,
                                                  CategoricalSchema& schema);

/// Encodes rows with an existing schema; an unknown category is an error
/// naming the row and column. With allow_missing_last every row may omit
/// the last feature (classification input).
std::vector<MultiIndex> encode_csv(const std::string& path, const CategoricalSchema& schema,
                                   const CsvOptions& options = {}, bool allow_missing_last = false);

/// Writes category names (or plain codes without a schema).
void write_csv(const std::string& path, std::span<const MultiIndex> samples,
               const CategoricalSchema* schema = nullptr, const CsvOptions& options = {});
void write_csv(std::ostream& out, std::span<const MultiIndex> samples,
               const CategoricalSchema* schema = nullptr, const CsvOptions& options = {});

/// Schema whose categories are the decimal codes 0..I_d-1.
CategoricalSchema numeric_schema(const Shape& shape);

struct SplitSpec {
  double train = 0.70;
  double valid = 0.15;
  double test = 0.15;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<MultiIndex> train, valid, test;
};

/// Shuffled partition with sizes floor(train*N), floor(valid*N), remainder.
Split split(std::span<const MultiIndex> samples, const SplitSpec& spec);

/// Versioned JSON document ("format": "e2m-model", "version": 1).
std::string model_to_json(const MixtureModel& m, const CategoricalSchema* schema = nullptr);
struct LoadedModel {
  MixtureModel model;
  std::optional<CategoricalSchema> schema;
};
LoadedModel model_from_json(const std::string& text);
void save_model(const std::string& path, const MixtureModel& m, const CategoricalSchema* schema = nullptr);
LoadedModel load_model(const std::string& path);

/// One JSON object per line: iteration, objective, weights, elapsed_seconds.
/// Keeps every every-th record plus the last one.
void write_trace(std::ostream& out, const FitTrace& trace, std::size_t every = 1);
void write_trace(const std::string& path, const FitTrace& trace, std::size_t every = 1);
std::vector<TraceRecord> read_trace(const std::string& path);

/// First non-comment line: the shape (whitespace or comma separated);
/// then prod(shape) nonnegative numbers in row-major order.
DenseTensor load_dense_grid(const std::string& path);
DenseTensor parse_dense_grid(std::istream& in);

}  // namespace e2m
