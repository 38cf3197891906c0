#include "e2m/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "e2m/error.hpp"

namespace e2m {

Alpha::Alpha(double value) : value_(value) {
  if (!(value > 0.0 && value <= 1.0)) {
    std::ostringstream os;
    os << "alpha must lie in (0, 1], got " << value;
    throw DomainError(os.str());
  }
}

double log_sum_exp(std::span<const double> x) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : x) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double v : x) s += std::exp(v - hi);
  return hi + std::log(s);
}

namespace {

std::vector<double> checked_logs(const EmpiricalTensor& t, std::span<const double> model_values) {
  if (model_values.size() != t.nnz())
    throw DomainError("model values do not cover the empirical support");
  std::vector<double> logs(model_values.size());
  auto entries = t.entries();
  for (std::size_t n = 0; n < model_values.size(); ++n) {
    if (!(model_values[n] > 0.0)) {
      std::ostringstream os;
      os << "model assigns zero mass to observed sample (";
      for (std::size_t d = 0; d < entries[n].index.size(); ++d)
        os << (d ? "," : "") << entries[n].index[d];
      os << ")";
      throw DomainError(os.str());
    }
    logs[n] = std::log(model_values[n]);
  }
  return logs;
}

// log sum_i T_i^a P_i^(1-a)
double log_overlap(const EmpiricalTensor& t, std::span<const double> log_p, double a) {
  auto entries = t.entries();
  std::vector<double> terms(entries.size());
  for (std::size_t n = 0; n < entries.size(); ++n)
    terms[n] = a * std::log(entries[n].weight) + (1.0 - a) * log_p[n];
  return log_sum_exp(terms);
}

}  // namespace

double alpha_divergence(const EmpiricalTensor& t, std::span<const double> model_values,
                        Alpha alpha) {
  const auto log_p = checked_logs(t, model_values);
  const double a = alpha.value();
  if (alpha.is_kl()) {
    double kl = 0.0;
    auto entries = t.entries();
    for (std::size_t n = 0; n < entries.size(); ++n)
      kl += entries[n].weight * (std::log(entries[n].weight) - log_p[n]);
    return kl;
  }
  // 1 - exp(s) computed as -expm1(s) keeps precision near the optimum.
  return -std::expm1(log_overlap(t, log_p, a)) / (a * (1.0 - a));
}

double objective_L_from_logs(const EmpiricalTensor& t, std::span<const double> log_p,
                             Alpha alpha) {
  if (log_p.size() != t.nnz()) throw DomainError("model values do not cover the empirical support");
  if (alpha.is_kl()) {
    std::vector<double> weights(t.nnz());
    auto entries = t.entries();
    for (std::size_t n = 0; n < entries.size(); ++n) weights[n] = entries[n].weight;
    return cross_entropy(weights, log_p);
  }
  const double a = alpha.value();
  return log_overlap(t, log_p, a) / (a - 1.0);
}

double objective_L(const EmpiricalTensor& t, std::span<const double> model_values, Alpha alpha) {
  const auto log_p = checked_logs(t, model_values);
  return objective_L_from_logs(t, log_p, alpha);
}

double cross_entropy(std::span<const double> weights, std::span<const double> log_values) {
  if (weights.size() != log_values.size())
    throw DomainError("cross_entropy: weights and log values differ in length");
  double h = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (weights[n] == 0.0) continue;
    h -= weights[n] * log_values[n];
  }
  return h;
}

NllResult negative_log_likelihood(const std::function<double(const MultiIndex&)>& model,
                                  std::span<const MultiIndex> samples) {
  NllResult r;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const double p = model(samples[n]);
    if (!(p > 0.0)) {
      std::ostringstream os;
      os << "model assigns zero mass to sample " << n << " (";
      for (std::size_t d = 0; d < samples[n].size(); ++d)
        os << (d ? "," : "") << samples[n][d];
      os << ")";
      throw DomainError(os.str());
    }
    r.total -= std::log(p);
  }
  if (!samples.empty()) r.mean = r.total / static_cast<double>(samples.size());
  return r;
}

}  // namespace e2m
