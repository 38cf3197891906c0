#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace e2m {

/// Zero-based coordinates (i_1, ..., i_D) into a categorical tensor.
using MultiIndex = std::vector<std::size_t>;

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& idx) const noexcept;
};

/// Category counts (I_1, ..., I_D) of a D-way tensor.
class Shape {
 public:
  Shape() = default;
  /// Throws DomainError when dims is empty or contains a zero.
  explicit Shape(std::vector<std::size_t> dims);

  std::size_t order() const { return dims_.size(); }
  std::size_t dim(std::size_t d) const { return dims_[d]; }
  const std::vector<std::size_t>& dims() const { return dims_; }

  /// Product of dims when it fits in 64 bits.
  std::optional<std::uint64_t> cardinality() const;

  bool contains(const MultiIndex& idx) const;
  /// Throws DomainError naming the offending feature and value.
  void check_index(const MultiIndex& idx) const;

  /// Row-major (last mode fastest). Requires cardinality() to exist.
  std::uint64_t linear_index(const MultiIndex& idx) const;
  MultiIndex unravel(std::uint64_t linear) const;

  bool operator==(const Shape&) const = default;

 private:
  std::vector<std::size_t> dims_;
};

/// log |Omega_I| = sum_d log I_d, finite even when the product overflows.
double log_cardinality(const Shape& shape);

/// Dense nonnegative tensor, row-major.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double at(const MultiIndex& idx) const;
  double& at(const MultiIndex& idx);
  double sum() const;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// Rescales a nonnegative tensor to unit sum.
DenseTensor normalize_dense(const DenseTensor& t);

struct Entry {
  MultiIndex index;
  double weight;
};

/// Normalized sparse count tensor over the observed support. Entries are
/// kept in lexicographic index order so that every reduction over the
/// support is reproducible.
class EmpiricalTensor {
 public:
  const Shape& shape() const { return shape_; }
  std::span<const Entry> entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  std::size_t sample_count() const { return sample_count_; }

  double total_weight() const;
  /// Weight at idx, zero when idx is not in the support.
  double weight(const MultiIndex& idx) const;

  friend EmpiricalTensor build_empirical(std::span<const MultiIndex> samples,
                                         const Shape& shape);
  friend EmpiricalTensor empirical_from_dense(const DenseTensor& t);

 private:
  Shape shape_;
  std::vector<Entry> entries_;
  std::size_t sample_count_ = 0;
};

/// Counts duplicate samples and normalizes by N.
EmpiricalTensor build_empirical(std::span<const MultiIndex> samples, const Shape& shape);

/// Support of the positive entries of a dense tensor, normalized to unit
/// mass. sample_count is set to the number of positive entries.
EmpiricalTensor empirical_from_dense(const DenseTensor& t);

}  // namespace e2m
