#include "e2m/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "e2m/error.hpp"

namespace e2m {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t product(std::span<const std::size_t> v) {
  return std::accumulate(v.begin(), v.end(), std::size_t{1}, std::multiplies<>());
}

// Contracts a row-major core (last rank fastest) with one vector per mode.
double contract_core(const std::vector<double>& core, const std::vector<std::size_t>& ranks,
                     const std::vector<Eigen::VectorXd>& vecs) {
  std::vector<double> buf = core;
  std::size_t size = buf.size();
  for (std::size_t d = ranks.size(); d-- > 0;) {
    const std::size_t r = ranks[d];
    const std::size_t outer = size / r;
    for (std::size_t j = 0; j < outer; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < r; ++k) s += buf[j * r + k] * vecs[d][static_cast<Eigen::Index>(k)];
      buf[j] = s;
    }
    size = outer;
  }
  return buf[0];
}

bool all_finite_nonneg(const Eigen::MatrixXd& m) {
  return m.allFinite() && (m.array() >= 0.0).all();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw DomainError(msg);
}

}  // namespace

std::string_view to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::CP: return "cp";
    case ComponentKind::Tucker: return "tucker";
    case ComponentKind::TT: return "tt";
    case ComponentKind::Background: return "background";
  }
  return "unknown";
}

ComponentKind parse_component_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "cp") return ComponentKind::CP;
  if (lower == "tucker") return ComponentKind::Tucker;
  if (lower == "tt" || lower == "train") return ComponentKind::TT;
  if (lower == "background" || lower == "bg") return ComponentKind::Background;
  throw DomainError("unknown component kind '" + std::string(name) + "'");
}

void validate_spec(const ComponentSpec& spec, const Shape& shape) {
  const std::size_t D = shape.order();
  std::ostringstream os;
  os << to_string(spec.kind) << " component: ";
  for (std::size_t r : spec.ranks) require(r >= 1, os.str() + "ranks must be positive");
  switch (spec.kind) {
    case ComponentKind::CP:
      require(spec.ranks.size() == 1, os.str() + "expects exactly one rank");
      break;
    case ComponentKind::Tucker:
      require(spec.ranks.size() == D, os.str() + "expects one rank per mode");
      require(D <= kTuckerMaxOrder, os.str() + "order exceeds the Tucker limit of 8 modes");
      require(product(spec.ranks) <= kTuckerMaxCoreSize,
              os.str() + "core size exceeds the limit of 4096 entries");
      break;
    case ComponentKind::TT:
      require(spec.ranks.size() + 1 == D, os.str() + "expects D-1 ranks");
      break;
    case ComponentKind::Background:
      require(spec.ranks.empty(), os.str() + "takes no ranks");
      break;
  }
}

std::size_t parameter_count(const ComponentSpec& spec, const Shape& shape) {
  const auto& dims = shape.dims();
  switch (spec.kind) {
    case ComponentKind::CP:
      return spec.ranks.at(0) * std::accumulate(dims.begin(), dims.end(), std::size_t{0});
    case ComponentKind::Tucker: {
      std::size_t n = product(spec.ranks);
      for (std::size_t d = 0; d < dims.size(); ++d) n += dims[d] * spec.ranks.at(d);
      return n;
    }
    case ComponentKind::TT: {
      std::size_t n = 0;
      for (std::size_t d = 0; d < dims.size(); ++d) {
        const std::size_t left = d == 0 ? 1 : spec.ranks.at(d - 1);
        const std::size_t right = d + 1 == dims.size() ? 1 : spec.ranks.at(d);
        n += left * dims[d] * right;
      }
      return n;
    }
    case ComponentKind::Background:
      return 0;
  }
  return 0;
}

std::size_t parameter_count(std::span<const ComponentSpec> specs, const Shape& shape) {
  std::size_t n = specs.empty() ? 0 : specs.size() - 1;
  for (const auto& s : specs) n += parameter_count(s, shape);
  return n;
}

std::vector<std::size_t> TTComponent::ranks() const {
  std::vector<std::size_t> r;
  for (std::size_t d = 1; d < cores.size(); ++d) r.push_back(static_cast<std::size_t>(cores[d][0].rows()));
  return r;
}

ComponentKind kind_of(const Component& c) {
  return std::visit(Overloaded{[](const CPComponent&) { return ComponentKind::CP; },
                               [](const TuckerComponent&) { return ComponentKind::Tucker; },
                               [](const TTComponent&) { return ComponentKind::TT; },
                               [](const BackgroundComponent&) { return ComponentKind::Background; }},
                    c);
}

ComponentSpec spec_of(const Component& c) {
  return std::visit(
      Overloaded{[](const CPComponent& cp) { return ComponentSpec{ComponentKind::CP, {cp.rank()}}; },
                 [](const TuckerComponent& t) { return ComponentSpec{ComponentKind::Tucker, t.ranks}; },
                 [](const TTComponent& t) { return ComponentSpec{ComponentKind::TT, t.ranks()}; },
                 [](const BackgroundComponent&) { return ComponentSpec{ComponentKind::Background, {}}; }},
      c);
}

Shape shape_of(const Component& c) {
  return std::visit(Overloaded{[](const CPComponent& cp) {
                                 std::vector<std::size_t> dims;
                                 for (const auto& a : cp.factors) dims.push_back(static_cast<std::size_t>(a.rows()));
                                 return Shape(dims);
                               },
                               [](const TuckerComponent& t) {
                                 std::vector<std::size_t> dims;
                                 for (const auto& a : t.factors) dims.push_back(static_cast<std::size_t>(a.rows()));
                                 return Shape(dims);
                               },
                               [](const TTComponent& t) {
                                 std::vector<std::size_t> dims;
                                 for (const auto& core : t.cores) dims.push_back(core.size());
                                 return Shape(dims);
                               },
                               [](const BackgroundComponent& b) { return b.shape; }},
                    c);
}

double evaluate(const Component& c, const MultiIndex& idx) {
  return std::visit(
      Overloaded{[&](const CPComponent& cp) {
                   const Eigen::Index R = static_cast<Eigen::Index>(cp.rank());
                   double s = 0.0;
                   for (Eigen::Index r = 0; r < R; ++r) {
                     double q = 1.0;
                     for (std::size_t d = 0; d < cp.factors.size(); ++d)
                       q *= cp.factors[d](static_cast<Eigen::Index>(idx[d]), r);
                     s += q;
                   }
                   return s;
                 },
                 [&](const TuckerComponent& t) {
                   std::vector<Eigen::VectorXd> rows(t.factors.size());
                   for (std::size_t d = 0; d < t.factors.size(); ++d)
                     rows[d] = t.factors[d].row(static_cast<Eigen::Index>(idx[d])).transpose();
                   return contract_core(t.core, t.ranks, rows);
                 },
                 [&](const TTComponent& t) {
                   Eigen::RowVectorXd v = t.cores[0][idx[0]].row(0);
                   for (std::size_t d = 1; d < t.cores.size(); ++d) v = v * t.cores[d][idx[d]];
                   return v(0);
                 },
                 [&](const BackgroundComponent& b) { return std::exp(-log_cardinality(b.shape)); }},
      c);
}

double total_mass(const Component& c) {
  return std::visit(
      Overloaded{[](const CPComponent& cp) {
                   Eigen::RowVectorXd prod = Eigen::RowVectorXd::Ones(static_cast<Eigen::Index>(cp.rank()));
                   for (const auto& a : cp.factors) prod = prod.cwiseProduct(a.colwise().sum());
                   return prod.sum();
                 },
                 [](const TuckerComponent& t) {
                   std::vector<Eigen::VectorXd> sums(t.factors.size());
                   for (std::size_t d = 0; d < t.factors.size(); ++d) sums[d] = t.factors[d].colwise().sum().transpose();
                   return contract_core(t.core, t.ranks, sums);
                 },
                 [](const TTComponent& t) {
                   Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
                   for (const auto& core : t.cores) {
                     Eigen::MatrixXd summed = Eigen::MatrixXd::Zero(core[0].rows(), core[0].cols());
                     for (const auto& slice : core) summed += slice;
                     v = v * summed;
                   }
                   return v(0);
                 },
                 [](const BackgroundComponent&) { return 1.0; }},
      c);
}

void validate_component(const Component& c, const Shape& shape) {
  const std::size_t D = shape.order();
  std::visit(
      Overloaded{
          [&](const CPComponent& cp) {
            require(cp.factors.size() == D, "cp component: factor count differs from shape order");
            require(cp.rank() >= 1, "cp component: rank must be positive");
            for (std::size_t d = 0; d < D; ++d) {
              require(static_cast<std::size_t>(cp.factors[d].rows()) == shape.dim(d),
                      "cp component: factor rows differ from shape");
              require(static_cast<std::size_t>(cp.factors[d].cols()) == cp.rank(),
                      "cp component: factors disagree on rank");
              require(all_finite_nonneg(cp.factors[d]), "cp component: factors must be finite and nonnegative");
            }
          },
          [&](const TuckerComponent& t) {
            validate_spec({ComponentKind::Tucker, t.ranks}, shape);
            require(t.factors.size() == D, "tucker component: factor count differs from shape order");
            require(t.core.size() == product(t.ranks), "tucker component: core size differs from ranks");
            for (double g : t.core)
              require(std::isfinite(g) && g >= 0.0, "tucker component: core must be finite and nonnegative");
            for (std::size_t d = 0; d < D; ++d) {
              require(static_cast<std::size_t>(t.factors[d].rows()) == shape.dim(d) &&
                          static_cast<std::size_t>(t.factors[d].cols()) == t.ranks[d],
                      "tucker component: factor dimensions differ from shape and ranks");
              require(all_finite_nonneg(t.factors[d]), "tucker component: factors must be finite and nonnegative");
            }
          },
          [&](const TTComponent& t) {
            require(t.cores.size() == D, "tt component: core count differs from shape order");
            Eigen::Index left = 1;
            for (std::size_t d = 0; d < D; ++d) {
              require(t.cores[d].size() == shape.dim(d), "tt component: core categories differ from shape");
              const Eigen::Index right = t.cores[d][0].cols();
              require(right >= 1, "tt component: ranks must be positive");
              if (d + 1 == D) require(right == 1, "tt component: last core must have trailing rank 1");
              for (const auto& slice : t.cores[d]) {
                require(slice.rows() == left && slice.cols() == right, "tt component: inconsistent core ranks");
                require(all_finite_nonneg(slice), "tt component: cores must be finite and nonnegative");
              }
              left = right;
            }
          },
          [&](const BackgroundComponent& b) {
            require(b.shape == shape, "background component: shape differs from model shape");
          }},
      c);
}

void normalize_tt(TTComponent& tt) {
  const std::size_t D = tt.cores.size();
  Eigen::VectorXd g_prev = Eigen::VectorXd::Ones(1);
  for (std::size_t d = 0; d < D; ++d) {
    auto& core = tt.cores[d];
    const Eigen::Index left = core[0].rows();
    const Eigen::Index right = core[0].cols();
    // Pull the previous normalizers into this core.
    for (auto& slice : core) slice = g_prev.asDiagonal() * slice;
    Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(right);
    for (const auto& slice : core) g += slice.colwise().sum();
    if (d + 1 == D) {
      const double z = g(0);
      if (!(z > 0.0)) throw DomainError("tt component has zero total mass");
      for (auto& slice : core) slice /= z;
      break;
    }
    Eigen::VectorXd next = Eigen::VectorXd::Zero(right);
    for (Eigen::Index b = 0; b < right; ++b) {
      if (g(b) > 0.0) {
        for (auto& slice : core) slice.col(b) /= g(b);
        next(b) = g(b);
      } else {
        const double u = 1.0 / static_cast<double>(left * static_cast<Eigen::Index>(core.size()));
        for (auto& slice : core) slice.col(b).setConstant(u);
      }
    }
    g_prev = next;
  }
}

Component init_component(ComponentKind kind, const Shape& shape, std::span<const std::size_t> ranks,
                         std::mt19937_64& rng) {
  ComponentSpec spec{kind, std::vector<std::size_t>(ranks.begin(), ranks.end())};
  validate_spec(spec, shape);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = unif(rng);
    return m;
  };
  const std::size_t D = shape.order();
  switch (kind) {
    case ComponentKind::CP: {
      CPComponent cp;
      const auto R = static_cast<Eigen::Index>(ranks[0]);
      for (std::size_t d = 0; d < D; ++d) cp.factors.push_back(draw(static_cast<Eigen::Index>(shape.dim(d)), R));
      cp.factors[0] /= total_mass(cp);
      return cp;
    }
    case ComponentKind::Tucker: {
      TuckerComponent t;
      t.ranks = spec.ranks;
      t.core.resize(product(t.ranks));
      for (double& g : t.core) g = unif(rng);
      const double s = std::accumulate(t.core.begin(), t.core.end(), 0.0);
      for (double& g : t.core) g /= s;
      for (std::size_t d = 0; d < D; ++d) {
        Eigen::MatrixXd a = draw(static_cast<Eigen::Index>(shape.dim(d)), static_cast<Eigen::Index>(t.ranks[d]));
        a = a.array().rowwise() / a.colwise().sum().array();
        t.factors.push_back(std::move(a));
      }
      return t;
    }
    case ComponentKind::TT: {
      TTComponent t;
      t.cores.resize(D);
      for (std::size_t d = 0; d < D; ++d) {
        const auto left = static_cast<Eigen::Index>(d == 0 ? 1 : ranks[d - 1]);
        const auto right = static_cast<Eigen::Index>(d + 1 == D ? 1 : ranks[d]);
        for (std::size_t i = 0; i < shape.dim(d); ++i) t.cores[d].push_back(draw(left, right));
      }
      normalize_tt(t);
      return t;
    }
    case ComponentKind::Background:
      return BackgroundComponent{shape};
  }
  throw DomainError("unknown component kind");
}

Component init_component(ComponentKind kind, const Shape& shape, std::span<const std::size_t> ranks,
                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return init_component(kind, shape, ranks, rng);
}

bool MixtureModel::has_background() const {
  for (std::size_t k = 0; k < components.size(); ++k)
    if (kind_of(components[k]) == ComponentKind::Background && weights[k] > 0.0) return true;
  return false;
}

MixtureModel init_mixture(const Shape& shape, std::span<const ComponentSpec> specs, std::uint64_t seed) {
  if (specs.empty()) throw DomainError("a mixture needs at least one component");
  std::mt19937_64 rng(seed);
  MixtureModel m{shape, {}, {}};
  for (const auto& spec : specs) m.components.push_back(init_component(spec.kind, shape, spec.ranks, rng));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  m.weights.resize(specs.size());
  for (double& w : m.weights) w = unif(rng);
  const double s = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
  for (double& w : m.weights) w /= s;
  return m;
}

double evaluate(const MixtureModel& m, const MultiIndex& idx) {
  double p = 0.0;
  for (std::size_t k = 0; k < m.components.size(); ++k) {
    if (m.weights[k] == 0.0) continue;
    p += m.weights[k] * evaluate(m.components[k], idx);
  }
  return p;
}

std::vector<double> evaluate_support(const MixtureModel& m, const EmpiricalTensor& t) {
  std::vector<double> out;
  out.reserve(t.nnz());
  for (const Entry& e : t.entries()) out.push_back(evaluate(m, e.index));
  return out;
}

TTCumulants tt_cumulants(const TTComponent& tt, std::span<const MultiIndex> support) {
  const std::size_t D = tt.cores.size();
  TTCumulants out;
  out.prefix.resize(support.size());
  out.suffix.resize(support.size());
  for (std::size_t n = 0; n < support.size(); ++n) {
    const MultiIndex& idx = support[n];
    auto& pre = out.prefix[n];
    auto& suf = out.suffix[n];
    pre.resize(D + 1);
    suf.resize(D + 1);
    pre[0] = Eigen::RowVectorXd::Ones(1);
    for (std::size_t d = 0; d < D; ++d) pre[d + 1] = pre[d] * tt.cores[d][idx[d]];
    suf[D] = Eigen::VectorXd::Ones(1);
    for (std::size_t d = D; d-- > 0;) suf[d] = tt.cores[d][idx[d]] * suf[d + 1];
  }
  return out;
}

namespace {

template <class Eval>
DenseTensor materialize(const Shape& shape, Eval&& eval) {
  auto card = shape.cardinality();
  if (!card || *card > kMaxDenseCardinality) {
    std::ostringstream os;
    os << "dense materialization limited to " << kMaxDenseCardinality << " cells";
    throw DomainError(os.str());
  }
  DenseTensor out(shape);
  auto values = out.values();
  for (std::uint64_t lin = 0; lin < *card; ++lin) values[lin] = eval(shape.unravel(lin));
  return out;
}

}  // namespace

DenseTensor materialize_dense(const MixtureModel& m) {
  return materialize(m.shape, [&](const MultiIndex& idx) { return evaluate(m, idx); });
}

DenseTensor materialize_dense(const Component& c) {
  return materialize(shape_of(c), [&](const MultiIndex& idx) { return evaluate(c, idx); });
}

}  // namespace e2m
