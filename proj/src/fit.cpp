#include "e2m/fit.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "e2m/error.hpp"

namespace e2m {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_objective(double previous, double current, std::size_t iteration, const FitConfig& config,
                     const std::vector<double>& weights) {
  if (std::isnan(current) || std::isinf(current)) {
    std::ostringstream os;
    os << "objective is not finite at iteration " << iteration << " (previous " << previous << ", weights";
    for (double w : weights) os << ' ' << w;
    os << ")";
    throw InternalError(os.str());
  }
  if (current > previous + config.monotonicity_slack) {
    std::ostringstream os;
    os.precision(17);
    os << "objective increased at iteration " << iteration << ": " << previous << " -> " << current;
    throw InternalError(os.str());
  }
}

}  // namespace

void FitConfig::validate(const Shape& shape) const {
  if (components.empty()) throw DomainError("fit config needs at least one component");
  if (max_iterations < 1) throw DomainError("max_iterations must be at least 1");
  if (!(tolerance > 0.0)) throw DomainError("tolerance must be positive");
  if (trace_every < 1) throw DomainError("trace_every must be at least 1");
  for (const auto& c : components) validate_spec(c, shape);
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Tolerance: return "tolerance";
    case StopReason::MaxIterations: return "max-iterations";
  }
  return "unknown";
}

std::vector<double> FitTrace::objectives() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.objective);
  return out;
}

StopDecision should_stop(const FitTrace& trace, const FitConfig& config) {
  if (trace.records.size() < 2) return {};
  const std::size_t t = trace.records.size() - 1;
  const double change = trace.records[t].objective - trace.records[t - 1].objective;
  if (std::abs(change) < config.tolerance) return {true, StopReason::Tolerance};
  if (t >= config.max_iterations) return {true, StopReason::MaxIterations};
  return {};
}

FitResult fit_from(const EmpiricalTensor& t, MixtureModel model, const FitConfig& config,
                   const IterationObserver& observer) {
  if (config.max_iterations < 1) throw DomainError("max_iterations must be at least 1");
  if (!(config.tolerance > 0.0)) throw DomainError("tolerance must be positive");
  if (model.components.empty()) throw DomainError("fit needs at least one component");
  if (!(model.shape == t.shape())) throw DomainError("model shape differs from data shape");
  const auto start = Clock::now();
  FitResult result;
  FitTrace& trace = result.trace;

  double objective = objective_L(t, evaluate_support(model, t), config.alpha);
  if (!std::isfinite(objective)) throw InternalError("initial objective is not finite");
  trace.records.push_back({0, objective, model.weights, seconds_since(start)});
  if (observer) observer({0, model, nullptr, objective});

  std::vector<bool> unfloored;
  for (const auto& c : model.components) unfloored.push_back(kind_of(c) == ComponentKind::Background);

  for (std::size_t it = 1;; ++it) {
    const EStep estep = compute_responsibilities(t, model, config.alpha, config.tt_stats);
    MixtureModel next{model.shape, {}, {}};
    next.components.reserve(model.size());
    for (std::size_t k = 0; k < model.size(); ++k)
      next.components.push_back(mstep(estep.stats.components[k], model.components[k], &trace.notes));
    next.weights = update_weights(estep.stats.masses, unfloored);
    model = std::move(next);

    const double previous = objective;
    objective = objective_L(t, evaluate_support(model, t), config.alpha);
    check_objective(previous, objective, it, config, model.weights);
    trace.records.push_back({it, objective, model.weights, seconds_since(start)});
    if (observer) observer({it, model, &estep, objective});

    if (const StopDecision d = should_stop(trace, config); d.stop) {
      trace.reason = d.reason;
      break;
    }
  }
  result.model = std::move(model);
  return result;
}

FitResult fit(const EmpiricalTensor& t, const FitConfig& config, const IterationObserver& observer) {
  config.validate(t.shape());
  return fit_from(t, init_mixture(t.shape(), config.components, config.seed), config, observer);
}

FitResult fit_tt_scalable(const EmpiricalTensor& t, const FitConfig& config, const IterationObserver& observer) {
  config.validate(t.shape());
  const auto& specs = config.components;
  std::size_t tt_count = 0, bg_count = 0;
  for (const auto& s : specs) {
    if (s.kind == ComponentKind::TT) ++tt_count;
    if (s.kind == ComponentKind::Background) ++bg_count;
  }
  if (tt_count != 1 || tt_count + bg_count != specs.size() || bg_count > 1)
    throw DomainError("fit_tt_scalable expects one TT component, optionally with one background");
  if (bg_count == 1) {
    FitConfig generic = config;
    generic.tt_stats = TTStatsMethod::Cumulant;
    return fit(t, generic, observer);
  }

  const auto start = Clock::now();
  MixtureModel model = init_mixture(t.shape(), specs, config.seed);
  TTComponent tt = std::get<TTComponent>(model.components[0]);

  const std::size_t D = t.shape().order();
  auto entries = t.entries();
  const std::size_t N = entries.size();
  const double a = config.alpha.value();

  // Prefix vectors of every sample live in one flat buffer: block d of a
  // sample holds G^(->d), of length R_d (R_0 = R_D = 1).
  std::vector<std::size_t> width(D + 1), offset(D + 2, 0);
  {
    const auto ranks = tt.ranks();
    for (std::size_t d = 0; d <= D; ++d) width[d] = (d == 0 || d == D) ? 1 : ranks[d - 1];
    for (std::size_t d = 0; d <= D; ++d) offset[d + 1] = offset[d] + width[d];
  }
  const std::size_t stride = offset[D + 1];
  std::vector<double> prefix(N * stride);
  std::vector<double> log_p(N), terms(N), values(N);
  Eigen::VectorXd suffix_next, suffix_cur;

  FitResult result;
  FitTrace& trace = result.trace;
  EStep last;  // responsibilities that produced the current cores
  double objective = 0.0;

  for (std::size_t it = 0;; ++it) {
    // Forward pass: prefixes and P on the support.
    for (std::size_t n = 0; n < N; ++n) {
      double* base = prefix.data() + n * stride;
      base[0] = 1.0;
      for (std::size_t d = 0; d < D; ++d) {
        Eigen::Map<const Eigen::RowVectorXd> left(base + offset[d], static_cast<Eigen::Index>(width[d]));
        Eigen::Map<Eigen::RowVectorXd> right(base + offset[d + 1], static_cast<Eigen::Index>(width[d + 1]));
        right.noalias() = left * tt.cores[d][entries[n].index[d]];
      }
      const double p = base[offset[D]];
      if (!(p > 0.0)) throw DomainError("model assigns zero mass to an observed sample");
      log_p[n] = std::log(p);
      values[n] = p;
    }

    const double previous = objective;
    objective = objective_L_from_logs(t, log_p, config.alpha);
    if (it > 0) check_objective(previous, objective, it, config, {1.0});
    model.components[0] = tt;
    trace.records.push_back({it, objective, {1.0}, seconds_since(start)});
    if (observer) observer({it, model, it > 0 ? &last : nullptr, objective});
    if (const StopDecision d = should_stop(trace, config); d.stop) {
      trace.reason = d.reason;
      break;
    }

    // Combined E1/E2 scalars.
    for (std::size_t n = 0; n < N; ++n) terms[n] = a * std::log(entries[n].weight) + (1.0 - a) * log_p[n];
    const double log_z = log_sum_exp(terms);
    last.resp.log_normalizer = log_z;
    last.resp.model_values = values;
    last.resp.scale.resize(N);
    for (std::size_t n = 0; n < N; ++n)
      last.resp.scale[n] = std::exp(a * (std::log(entries[n].weight) - log_p[n]) - log_z);

    // Backward pass: suffixes and core numerators/denominators.
    TTStats stats;
    for (std::size_t d = 0; d < D; ++d) {
      std::vector<Eigen::MatrixXd> slices;
      for (const auto& g : tt.cores[d]) slices.push_back(Eigen::MatrixXd::Zero(g.rows(), g.cols()));
      stats.numer.push_back(std::move(slices));
      stats.denom.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width[d + 1])));
    }
    for (std::size_t n = 0; n < N; ++n) {
      const double c = last.resp.scale[n];
      const double* base = prefix.data() + n * stride;
      suffix_next = Eigen::VectorXd::Ones(1);
      for (std::size_t d = D; d-- > 0;) {
        const std::size_t i = entries[n].index[d];
        const Eigen::MatrixXd& g = tt.cores[d][i];
        Eigen::Map<const Eigen::RowVectorXd> left(base + offset[d], static_cast<Eigen::Index>(width[d]));
        Eigen::Map<const Eigen::RowVectorXd> right(base + offset[d + 1], static_cast<Eigen::Index>(width[d + 1]));
        stats.numer[d][i].noalias() += c * (left.transpose() * suffix_next.transpose()).cwiseProduct(g);
        stats.denom[d] += c * right.transpose().cwiseProduct(suffix_next);
        suffix_cur.noalias() = g * suffix_next;
        std::swap(suffix_cur, suffix_next);
      }
    }
    stats.mass = stats.denom[D - 1](0);
    for (const auto& den : stats.denom)
      if (!den.allFinite()) throw InternalError("non-finite tt statistics");
    tt = mstep_tt(stats, &trace.notes);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace e2m
