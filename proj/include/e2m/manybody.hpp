#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "e2m/divergence.hpp"
#include "e2m/models.hpp"
#include "e2m/tensor.hpp"

namespace e2m {

// Sufficient statistics of the responsibility tensors
//   M^[k]_{i r} = w_i * eta_k * Q^[k]_{i r},
//   w_i = T_i^a P_i^-a / sum_j T_j^a P_j^(1-a),
// accumulated over the observed support only. M itself is never stored.

/// CP: mode[d](i_d, r) = sum over the other modes of M, rank_mass(r) = sum_i M.
struct CPStats {
  std::vector<Eigen::MatrixXd> mode;
  Eigen::VectorXd rank_mass;
  double mass = 0.0;
};

/// Tucker: core(r) = sum_i M (row-major, last rank fastest) and
/// mode[d](i_d, r_d) = sum over the other modes and ranks. The factor
/// denominators are the column sums of mode[d].
struct TuckerStats {
  std::vector<std::size_t> ranks;
  std::vector<double> core;
  std::vector<Eigen::MatrixXd> mode;
  double mass = 0.0;
};

/// TT: numer[d][i_d](r_{d-1}, r_d) = sum of M over everything but
/// (r_{d-1}, i_d, r_d); denom[d](r_d) = sum of M over everything but r_d.
struct TTStats {
  std::vector<std::vector<Eigen::MatrixXd>> numer;
  std::vector<Eigen::VectorXd> denom;
  double mass = 0.0;
};

struct BackgroundStats {
  Shape shape;
  double mass = 0.0;
};

using ComponentStats = std::variant<CPStats, TuckerStats, TTStats, BackgroundStats>;

double mass_of(const ComponentStats& s);

/// Per-sample scalars of the combined E1/E2 step, aligned with t.entries().
struct Responsibilities {
  std::vector<double> model_values;  // P_i
  std::vector<double> scale;         // w_i
  double log_normalizer = 0.0;       // log sum_i T_i^a P_i^(1-a)
};

struct SufficientStats {
  std::vector<ComponentStats> components;
  std::vector<double> masses;  // m_k = sum_{i,r} M^[k]
};

struct EStep {
  Responsibilities resp;
  SufficientStats stats;
};

/// How TT statistics sum over the hidden ranks: prefix/suffix cumulants
/// (O(D R^2) per sample) or explicit enumeration of every rank tuple.
enum class TTStatsMethod { Cumulant, Enumerate };

/// Combined E1+E2 step. Throws DomainError when the model has zero mass on
/// the support and InternalError when a statistic is not finite.
EStep compute_responsibilities(const EmpiricalTensor& t, const MixtureModel& m, Alpha alpha,
                               TTStatsMethod tt_method = TTStatsMethod::Cumulant);

/// Rank slices whose mass falls below this are reinitialized uniformly.
inline constexpr double kDeadRankMass = 1e-15;

// Closed-form many-body M-steps. Each returns a component with total mass 1.
// Dead rank slices are reset and described in *notes when notes is non-null.
CPComponent mstep_cp(const CPStats& s, std::vector<std::string>* notes = nullptr);
TuckerComponent mstep_tucker(const TuckerStats& s, std::vector<std::string>* notes = nullptr);
TTComponent mstep_tt(const TTStats& s, std::vector<std::string>* notes = nullptr);

/// Dispatches on the statistics type. A component whose responsibility mass
/// is exactly zero (its weight was floored) is returned unchanged.
Component mstep(const ComponentStats& s, const Component& previous,
                std::vector<std::string>* notes = nullptr);

/// eta_k = m_k / sum m, with weights below kWeightFloor set to zero and the
/// rest renormalized. Components flagged in `unfloored` (the Background)
/// keep any positive weight so that P stays positive everywhere.
std::vector<double> update_weights(std::span<const double> masses, const std::vector<bool>& unfloored = {});

}  // namespace e2m
