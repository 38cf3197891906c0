#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "e2m/tensor.hpp"

namespace e2m {

enum class ComponentKind { CP, Tucker, TT, Background };

std::string_view to_string(ComponentKind kind);
/// Accepts cp, tucker, tt, background (also bg). Throws DomainError otherwise.
ComponentKind parse_component_kind(std::string_view name);

/// Structure and ranks of one mixture component. CP takes one rank, Tucker D
/// ranks, TT D-1 ranks, Background none.
struct ComponentSpec {
  ComponentKind kind = ComponentKind::Background;
  std::vector<std::size_t> ranks;

  bool operator==(const ComponentSpec&) const = default;
};

/// Throws DomainError when ranks do not fit the kind and shape.
void validate_spec(const ComponentSpec& spec, const Shape& shape);

/// Free parameters before normalization constraints: CP R*sum I_d, Tucker
/// prod R_d + sum I_d R_d, TT sum R_{d-1} I_d R_d, Background 0.
std::size_t parameter_count(const ComponentSpec& spec, const Shape& shape);
/// Sum over components plus K - 1 mixture weights.
std::size_t parameter_count(std::span<const ComponentSpec> specs, const Shape& shape);

// Tucker components keep a dense core, so order and core size are capped.
inline constexpr std::size_t kTuckerMaxOrder = 8;
inline constexpr std::size_t kTuckerMaxCoreSize = 4096;

/// P_i = sum_r prod_d A^(d)[i_d, r]. factors[d] is I_d x R.
struct CPComponent {
  std::vector<Eigen::MatrixXd> factors;

  std::size_t rank() const { return factors.empty() ? 0 : static_cast<std::size_t>(factors[0].cols()); }
};

/// P_i = sum_r G[r] prod_d A^(d)[i_d, r_d]. The core is stored row-major
/// over (r_1, ..., r_D) with the last rank fastest. After an M-step the core
/// sums to one and every factor column sums to one.
struct TuckerComponent {
  std::vector<std::size_t> ranks;
  std::vector<double> core;
  std::vector<Eigen::MatrixXd> factors;
};

/// Tensor train. cores[d][i] is the R_{d-1} x R_d slice of core d at
/// category i, with R_0 = R_D = 1. Cores are kept in the scaled convention:
/// for d < D each core sums to one over (r_{d-1}, i_d) for every r_d, and the
/// last core sums to one, so the total mass is one by construction.
struct TTComponent {
  std::vector<std::vector<Eigen::MatrixXd>> cores;

  std::vector<std::size_t> ranks() const;  // (R_1, ..., R_{D-1})
};

/// Uniform 1/|Omega_I|.
struct BackgroundComponent {
  Shape shape;
};

using Component = std::variant<CPComponent, TuckerComponent, TTComponent, BackgroundComponent>;

ComponentKind kind_of(const Component& c);
ComponentSpec spec_of(const Component& c);
Shape shape_of(const Component& c);

/// Value of one component at idx. Tucker contracts the core one mode at a
/// time; TT runs the left-to-right vector-matrix chain.
double evaluate(const Component& c, const MultiIndex& idx);

/// sum_i P_i computed structurally (column sums), without enumerating Omega_I.
double total_mass(const Component& c);

/// Throws DomainError on ragged factors, negative or non-finite values, or a
/// mismatch with shape.
void validate_component(const Component& c, const Shape& shape);

/// Rescales a TT in place into the scaled-core convention with total mass 1.
void normalize_tt(TTComponent& tt);

/// Entries drawn i.i.d. uniform on (0, 1) and then normalized.
Component init_component(ComponentKind kind, const Shape& shape,
                         std::span<const std::size_t> ranks, std::mt19937_64& rng);
Component init_component(ComponentKind kind, const Shape& shape,
                         std::span<const std::size_t> ranks, std::uint64_t seed);

/// Convex combination sum_k eta_k P^[k].
struct MixtureModel {
  Shape shape;
  std::vector<Component> components;
  std::vector<double> weights;

  std::size_t size() const { return components.size(); }
  bool has_background() const;
};

/// Components initialized in order from one generator seeded with seed,
/// followed by weights drawn uniform on (0, 1) and normalized.
MixtureModel init_mixture(const Shape& shape, std::span<const ComponentSpec> specs,
                          std::uint64_t seed);

double evaluate(const MixtureModel& m, const MultiIndex& idx);

/// Mixture values on the support of t, in entry order.
std::vector<double> evaluate_support(const MixtureModel& m, const EmpiricalTensor& t);

/// Weight flooring threshold: weights below this are set to zero and the rest
/// renormalized.
inline constexpr double kWeightFloor = 1e-15;

/// Prefix/suffix partial contractions of a TT at each sample.
/// prefix[n][d] has length R_d (prefix[n][0] = [1]); suffix[n][d] has length
/// R_d (suffix[n][D] = [1]). prefix[n][D] = suffix[n][0] = P at sample n.
struct TTCumulants {
  std::vector<std::vector<Eigen::RowVectorXd>> prefix;
  std::vector<std::vector<Eigen::VectorXd>> suffix;
};

TTCumulants tt_cumulants(const TTComponent& tt, std::span<const MultiIndex> support);

// Guard for every operation that enumerates Omega_I.
inline constexpr std::uint64_t kMaxDenseCardinality = 1'000'000;

/// Dense values over all of Omega_I. Throws DomainError above the guard.
DenseTensor materialize_dense(const MixtureModel& m);
DenseTensor materialize_dense(const Component& c);

}  // namespace e2m
