#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Everything here works on dense arrays by brute-force enumeration.

#include <cstdint>
#include <random>
#include <vector>

#include "e2m/divergence.hpp"
#include "e2m/manybody.hpp"
#include "e2m/models.hpp"
#include "e2m/tensor.hpp"

namespace oracle {

using e2m::Component;
using e2m::ComponentSpec;
using e2m::Shape;

// Joint variables (i_1..i_D, hidden ranks...) of one low-rank structure and
// the factors it multiplies. A configuration is a row-major index over all
// variables, observed ones first.
struct FactorGraph {
  std::size_t observed = 0;
  std::vector<std::size_t> sizes;
  std::vector<std::vector<std::size_t>> factors;  // variable ids per factor

  std::size_t configurations() const;
  std::vector<std::size_t> unravel(std::size_t config) const;
  std::size_t factor_size(std::size_t f) const;
  std::size_t factor_offset(std::size_t f, const std::vector<std::size_t>& vars) const;
};

FactorGraph graph_for(const ComponentSpec& spec, const Shape& shape);

// Dense parameter tables, one per factor, laid out over the factor's
// variables in order.
using Params = std::vector<std::vector<double>>;

std::vector<double> q_from_params(const FactorGraph& g, const Params& theta);
Params params_from_component(const Component& c, const FactorGraph& g);

// Random nonnegative M over all configurations, normalized to total mass mu.
std::vector<double> random_m(const FactorGraph& g, std::mt19937_64& rng, double mu, double zero_fraction = 0.0);

// Marginals of a dense M in the layout compute_responsibilities produces.
e2m::ComponentStats stats_from_dense(const ComponentSpec& spec, const Shape& shape, const FactorGraph& g,
                                     const std::vector<double>& m);

// -sum M log Q over the configurations where M > 0.
double cross_entropy(const std::vector<double>& m, const std::vector<double>& q);

// Block-coordinate ascent on sum M log Q subject to sum Q = 1, one factor
// at a time: theta_f = M_f / (mu * K_f), K_f the marginal of the others.
Params block_coordinate_optimum(const FactorGraph& g, const std::vector<double>& m, std::size_t sweeps,
                                std::mt19937_64& rng);

// Multiplicative log-normal jitter of every parameter, then a rescale of
// the first factor so that sum Q = 1 again.
Params perturb(const FactorGraph& g, const Params& theta, double scale, std::mt19937_64& rng);

// Dense responsibilities from their definition (pow, no logs):
// M^[k]_{i r} = T_i^a P_i^-a eta_k Q^[k]_{i r} / sum_j T_j^a P_j^(1-a).
struct DenseEStep {
  std::vector<FactorGraph> graphs;
  std::vector<std::vector<double>> m;  // per component, over its graph
  std::vector<double> masses;
  std::vector<double> w;  // over Omega_I, row-major
};
DenseEStep dense_estep(const e2m::EmpiricalTensor& t, const e2m::MixtureModel& model, double alpha);

// Textbook EM for a latent class (CP) model under KL with lambda_r and
// column-stochastic factors.
struct ClassicalCP {
  Eigen::VectorXd lambda;
  std::vector<Eigen::MatrixXd> factors;
};
ClassicalCP classical_from_cp(const e2m::CPComponent& cp);
ClassicalCP classical_em_step(const e2m::EmpiricalTensor& t, const ClassicalCP& current);

// D_alpha(T || P) from its defining sum over Omega_I with dense inputs.
double alpha_divergence_dense(const std::vector<double>& t, const std::vector<double>& p, double alpha);

// KL(p || q) over dense arrays.
double kl_dense(std::span<const double> p, std::span<const double> q);

// Random dense probability vector of length n.
std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng);

}  // namespace oracle
