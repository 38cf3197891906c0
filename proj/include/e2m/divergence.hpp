#pragma once

#include <functional>
#include <span>

#include "e2m/tensor.hpp"

namespace e2m {

/// Order of the alpha-divergence, restricted to (0, 1].
class Alpha {
 public:
  /// Throws DomainError outside (0, 1].
  explicit Alpha(double value);
  double value() const { return value_; }
  bool is_kl() const { return value_ == 1.0; }

 private:
  double value_;
};

/// log(sum_n exp(x_n)); -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> x);

// The functions below take model values aligned with t.entries(). Sums run
// over the support of t only; terms with T = 0 vanish for alpha in (0, 1].

/// D_alpha(T || P) = (1 - sum T^a P^(1-a)) / (a (1 - a)); KL(T || P) at a = 1.
double alpha_divergence(const EmpiricalTensor& t, std::span<const double> model_values,
                        Alpha alpha);

/// Renyi-type surrogate log(sum T^a P^(1-a)) / (a - 1). At a = 1 this returns
/// the cross-entropy -sum T log P rather than the limit (which is KL).
double objective_L(const EmpiricalTensor& t, std::span<const double> model_values,
                   Alpha alpha);

/// Same as objective_L but takes log P directly.
double objective_L_from_logs(const EmpiricalTensor& t, std::span<const double> log_model_values,
                             Alpha alpha);

/// -sum_n weights[n] * log_values[n].
double cross_entropy(std::span<const double> weights, std::span<const double> log_values);

struct NllResult {
  double total = 0.0;
  double mean = 0.0;
};

/// -sum_n log P(x_n) and its per-sample mean. Throws DomainError naming the
/// first sample with zero model mass.
NllResult negative_log_likelihood(const std::function<double(const MultiIndex&)>& model,
                                  std::span<const MultiIndex> samples);

}  // namespace e2m
