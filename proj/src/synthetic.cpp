#include "e2m/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "e2m/error.hpp"

namespace e2m {
namespace {

Eigen::MatrixXd abs_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = std::abs(normal(rng));
  return m;
}

Component draw_component(const SyntheticSpec& spec, std::mt19937_64& rng) {
  const Shape& shape = spec.shape;
  const std::size_t order = shape.order();
  switch (spec.kind) {
    case ComponentKind::CP: {
      CPComponent cp;
      const auto r = static_cast<Eigen::Index>(spec.ranks[0]);
      for (std::size_t d = 0; d < order; ++d) cp.factors.push_back(abs_normal(shape.dim(d), r, rng));
      cp.factors[0] /= total_mass(cp);
      return cp;
    }
    case ComponentKind::Tucker: {
      TuckerComponent t;
      t.ranks = spec.ranks;
      std::size_t core_size = 1;
      for (auto r : t.ranks) core_size *= r;
      std::normal_distribution<double> normal(0.0, 1.0);
      t.core.resize(core_size);
      for (auto& g : t.core) g = std::abs(normal(rng));
      double core_sum = 0.0;
      for (double g : t.core) core_sum += g;
      for (auto& g : t.core) g /= core_sum;
      for (std::size_t d = 0; d < order; ++d) {
        Eigen::MatrixXd a = abs_normal(shape.dim(d), t.ranks[d], rng);
        a.array().rowwise() /= a.colwise().sum().array();
        t.factors.push_back(std::move(a));
      }
      return t;
    }
    case ComponentKind::TT: {
      TTComponent tt;
      std::vector<std::size_t> bonds{1};
      bonds.insert(bonds.end(), spec.ranks.begin(), spec.ranks.end());
      bonds.push_back(1);
      for (std::size_t d = 0; d < order; ++d) {
        std::vector<Eigen::MatrixXd> core;
        for (std::size_t i = 0; i < shape.dim(d); ++i) core.push_back(abs_normal(bonds[d], bonds[d + 1], rng));
        tt.cores.push_back(std::move(core));
      }
      normalize_tt(tt);
      return tt;
    }
    case ComponentKind::Background:
      break;
  }
  throw DomainError("synthetic data needs a low-rank kind, not background");
}

}  // namespace

MixtureModel synth_lowrank(const SyntheticSpec& spec) {
  const double eta = spec.background_weight;
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("background weight must lie in [0, 1]");
  if (spec.kind == ComponentKind::Background) throw DomainError("synthetic data needs a low-rank kind");
  validate_spec({spec.kind, spec.ranks}, spec.shape);

  std::mt19937_64 rng(spec.seed);
  MixtureModel m;
  m.shape = spec.shape;
  if (eta < 1.0) {
    m.components.push_back(draw_component(spec, rng));
    m.weights.push_back(1.0 - eta);
  }
  if (eta > 0.0) {
    m.components.push_back(BackgroundComponent{spec.shape});
    m.weights.push_back(eta);
  }
  return m;
}

DenseSampler::DenseSampler(const DenseTensor& t) : shape_(t.shape()) {
  cumulative_.reserve(t.values().size());
  double acc = 0.0;
  for (double v : t.values()) {
    acc += v;
    cumulative_.push_back(acc);
  }
  if (!(acc > 0.0)) throw DomainError("cannot sample from a tensor with no mass");
}

DenseSampler::DenseSampler(const MixtureModel& m) : DenseSampler(materialize_dense(m)) {}

MultiIndex DenseSampler::draw(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unif(0.0, cumulative_.back());
  const double u = unif(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  // Skip zero-mass cells that share the cumulative value.
  while (it != cumulative_.begin() && *(it - 1) == *it) --it;
  return shape_.unravel(static_cast<std::uint64_t>(it - cumulative_.begin()));
}

std::vector<MultiIndex> DenseSampler::draw(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<MultiIndex> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(draw(rng));
  return out;
}

std::size_t corner_width(std::size_t grid) { return std::max<std::size_t>(1, grid * 2 / 9); }

bool in_corner_region(const MultiIndex& idx, std::size_t grid) {
  const std::size_t c = corner_width(grid);
  const auto edge = [&](std::size_t v) { return v < c || v >= grid - c; };
  return edge(idx[0]) && edge(idx[1]);
}

MoonsData make_moons(const MoonsSpec& spec) {
  if (spec.samples < 2) throw DomainError("make_moons needs at least 2 samples");
  if (spec.grid < 3) throw DomainError("make_moons needs a grid of at least 3");
  if (spec.flipped > spec.samples) throw DomainError("cannot flip more labels than samples");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, spec.noise);
  const std::size_t n_out = spec.samples / 2;
  const std::size_t n_in = spec.samples - n_out;
  const auto angle = [](std::size_t k, std::size_t n) {
    return n == 1 ? 0.0 : std::numbers::pi * static_cast<double>(k) / static_cast<double>(n - 1);
  };
  // Fixed window with room around both moons so the corners stay empty.
  constexpr double x_lo = -1.5, x_hi = 2.5, y_lo = -1.25, y_hi = 1.75;
  const auto bin = [&](double v, double lo, double hi) {
    const double g = static_cast<double>(spec.grid);
    const double b = std::floor((v - lo) / (hi - lo) * g);
    return static_cast<std::size_t>(std::clamp(b, 0.0, g - 1.0));
  };

  MoonsData out;
  out.shape = Shape({spec.grid, spec.grid, 2});
  out.samples.reserve(spec.samples + spec.outliers);
  for (std::size_t k = 0; k < spec.samples; ++k) {
    const bool outer = k < n_out;
    const double t = outer ? angle(k, n_out) : angle(k - n_out, n_in);
    double x = outer ? std::cos(t) : 1.0 - std::cos(t);
    double y = outer ? std::sin(t) : 1.0 - std::sin(t) - 0.5;
    x += normal(rng);
    y += normal(rng);
    out.samples.push_back({bin(x, x_lo, x_hi), bin(y, y_lo, y_hi), outer ? 0u : 1u});
  }

  std::vector<std::size_t> order(spec.samples);
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < spec.flipped; ++k) out.samples[order[k]][2] ^= 1u;

  const std::size_t c = corner_width(spec.grid);
  std::uniform_int_distribution<std::size_t> corner(0, 3), offset(0, c - 1), label(0, 1);
  for (std::size_t k = 0; k < spec.outliers; ++k) {
    const std::size_t which = corner(rng);
    const std::size_t x = offset(rng), y = offset(rng);
    MultiIndex idx{which & 1u ? spec.grid - 1 - x : x, which & 2u ? spec.grid - 1 - y : y, label(rng)};
    out.outliers.push_back(idx);
    out.samples.push_back(std::move(idx));
  }
  return out;
}

}  // namespace e2m
