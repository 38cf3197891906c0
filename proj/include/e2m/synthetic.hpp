#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "e2m/models.hpp"
#include "e2m/tensor.hpp"

namespace e2m {

struct SyntheticSpec {
  ComponentKind kind = ComponentKind::CP;  // CP, TT or Tucker
  Shape shape;
  std::vector<std::size_t> ranks;
  double background_weight = 0.10;
  std::uint64_t seed = 0;
};

/// Low-rank truth with factor entries |N(0,1)|, normalized, mixed with a
/// Background at background_weight. A weight of 0 or 1 drops the unused
/// component.
MixtureModel synth_lowrank(const SyntheticSpec& spec);

/// Inverse-CDF sampler over a dense nonnegative tensor.
class DenseSampler {
 public:
  /// Throws DomainError when the tensor has no mass.
  explicit DenseSampler(const DenseTensor& t);
  /// Materializes m first; guarded by kMaxDenseCardinality.
  explicit DenseSampler(const MixtureModel& m);

  MultiIndex draw(std::mt19937_64& rng) const;
  std::vector<MultiIndex> draw(std::size_t n, std::uint64_t seed) const;
  const Shape& shape() const { return shape_; }

 private:
  Shape shape_;
  std::vector<double> cumulative_;
};

/// Two interleaved half circles as in scikit-learn's make_moons, binned on
/// a grid x grid lattice, with a class label as the third mode.
struct MoonsSpec {
  std::size_t samples = 5000;
  double noise = 0.07;
  std::size_t grid = 90;
  std::size_t flipped = 0;   // labels flipped on randomly chosen samples
  std::size_t outliers = 0;  // extra samples in the four corner regions
  std::uint64_t seed = 0;
};

struct MoonsData {
  Shape shape;
  std::vector<MultiIndex> samples;   // moons (with flips) followed by outliers
  std::vector<MultiIndex> outliers;  // the injected corner samples
};

MoonsData make_moons(const MoonsSpec& spec);

/// Width of each square corner region, 2/9 of the grid side (at least 1).
std::size_t corner_width(std::size_t grid);
/// True when (x, y) lies in one of the four corner regions.
bool in_corner_region(const MultiIndex& idx, std::size_t grid);

}  // namespace e2m
