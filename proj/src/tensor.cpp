#include "e2m/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "e2m/error.hpp"

namespace e2m {

std::size_t MultiIndexHash::operator()(const MultiIndex& idx) const noexcept {
  // FNV-1a over the coordinates.
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t c : idx) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw DomainError("shape must have at least one mode");
  for (std::size_t d = 0; d < dims_.size(); ++d) {
    if (dims_[d] == 0) {
      std::ostringstream os;
      os << "shape mode " << d << " has zero categories";
      throw DomainError(os.str());
    }
  }
}

std::optional<std::uint64_t> Shape::cardinality() const {
  std::uint64_t n = 1;
  for (std::size_t dim : dims_) {
    if (n > std::numeric_limits<std::uint64_t>::max() / dim) return std::nullopt;
    n *= dim;
  }
  return n;
}

bool Shape::contains(const MultiIndex& idx) const {
  if (idx.size() != dims_.size()) return false;
  for (std::size_t d = 0; d < dims_.size(); ++d)
    if (idx[d] >= dims_[d]) return false;
  return true;
}

void Shape::check_index(const MultiIndex& idx) const {
  if (idx.size() != dims_.size()) {
    std::ostringstream os;
    os << "index has " << idx.size() << " coordinates, shape has " << dims_.size()
       << " modes";
    throw DomainError(os.str());
  }
  for (std::size_t d = 0; d < dims_.size(); ++d) {
    if (idx[d] >= dims_[d]) {
      std::ostringstream os;
      os << "feature " << d << " value " << idx[d] << " out of range [0, " << dims_[d]
         << ")";
      throw DomainError(os.str());
    }
  }
}

std::uint64_t Shape::linear_index(const MultiIndex& idx) const {
  std::uint64_t lin = 0;
  for (std::size_t d = 0; d < dims_.size(); ++d) lin = lin * dims_[d] + idx[d];
  return lin;
}

MultiIndex Shape::unravel(std::uint64_t linear) const {
  MultiIndex idx(dims_.size());
  for (std::size_t d = dims_.size(); d-- > 0;) {
    idx[d] = static_cast<std::size_t>(linear % dims_[d]);
    linear /= dims_[d];
  }
  return idx;
}

double log_cardinality(const Shape& shape) {
  double s = 0.0;
  for (std::size_t dim : shape.dims()) s += std::log(static_cast<double>(dim));
  return s;
}

namespace {

std::size_t checked_size(const Shape& shape) {
  auto card = shape.cardinality();
  if (!card || *card > static_cast<std::uint64_t>(std::numeric_limits<std::size_t>::max()))
    throw DomainError("dense tensor cardinality overflows");
  return static_cast<std::size_t>(*card);
}

}  // namespace

DenseTensor::DenseTensor(Shape shape)
    : shape_(std::move(shape)), values_(checked_size(shape_), 0.0) {}

DenseTensor::DenseTensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != checked_size(shape_)) {
    std::ostringstream os;
    os << "dense tensor has " << values_.size() << " values, shape needs "
       << checked_size(shape_);
    throw DomainError(os.str());
  }
  for (double v : values_)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw DomainError("dense tensor values must be finite and nonnegative");
}

double DenseTensor::at(const MultiIndex& idx) const {
  return values_[static_cast<std::size_t>(shape_.linear_index(idx))];
}

double& DenseTensor::at(const MultiIndex& idx) {
  return values_[static_cast<std::size_t>(shape_.linear_index(idx))];
}

double DenseTensor::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

DenseTensor normalize_dense(const DenseTensor& t) {
  const double total = t.sum();
  if (!(total > 0.0)) throw DomainError("cannot normalize an all-zero tensor");
  std::vector<double> out(t.values().begin(), t.values().end());
  for (double& v : out) v /= total;
  return DenseTensor(t.shape(), std::move(out));
}

double EmpiricalTensor::total_weight() const {
  double s = 0.0;
  for (const Entry& e : entries_) s += e.weight;
  return s;
}

double EmpiricalTensor::weight(const MultiIndex& idx) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), idx,
                             [](const Entry& e, const MultiIndex& key) { return e.index < key; });
  if (it != entries_.end() && it->index == idx) return it->weight;
  return 0.0;
}

EmpiricalTensor build_empirical(std::span<const MultiIndex> samples, const Shape& shape) {
  if (samples.empty()) throw DomainError("cannot build an empirical tensor from zero samples");
  std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> counts;
  for (const MultiIndex& s : samples) {
    shape.check_index(s);
    ++counts[s];
  }
  EmpiricalTensor t;
  t.shape_ = shape;
  t.sample_count_ = samples.size();
  t.entries_.reserve(counts.size());
  const double n = static_cast<double>(samples.size());
  for (auto& [idx, count] : counts) t.entries_.push_back({idx, static_cast<double>(count) / n});
  std::sort(t.entries_.begin(), t.entries_.end(),
            [](const Entry& a, const Entry& b) { return a.index < b.index; });
  return t;
}

EmpiricalTensor empirical_from_dense(const DenseTensor& t) {
  const DenseTensor normalized = normalize_dense(t);
  EmpiricalTensor out;
  out.shape_ = t.shape();
  auto values = normalized.values();
  for (std::size_t lin = 0; lin < values.size(); ++lin) {
    if (values[lin] > 0.0) out.entries_.push_back({t.shape().unravel(lin), values[lin]});
  }
  // Row-major enumeration is already lexicographic.
  out.sample_count_ = out.entries_.size();
  return out;
}

}  // namespace e2m
