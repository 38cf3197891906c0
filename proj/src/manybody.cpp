#include "e2m/manybody.hpp"

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

CPStats empty_stats(const CPComponent& cp) {
  CPStats s;
  const auto R = static_cast<Eigen::Index>(cp.rank());
  for (const auto& a : cp.factors) s.mode.push_back(Eigen::MatrixXd::Zero(a.rows(), R));
  s.rank_mass = Eigen::VectorXd::Zero(R);
  return s;
}

TuckerStats empty_stats(const TuckerComponent& t) {
  TuckerStats s;
  s.ranks = t.ranks;
  s.core.assign(t.core.size(), 0.0);
  for (const auto& a : t.factors) s.mode.push_back(Eigen::MatrixXd::Zero(a.rows(), a.cols()));
  return s;
}

TTStats empty_stats(const TTComponent& t) {
  TTStats s;
  for (const auto& core : t.cores) {
    std::vector<Eigen::MatrixXd> slices;
    for (const auto& g : core) slices.push_back(Eigen::MatrixXd::Zero(g.rows(), g.cols()));
    s.denom.push_back(Eigen::VectorXd::Zero(core[0].cols()));
    s.numer.push_back(std::move(slices));
  }
  return s;
}

void accumulate_cp(const CPComponent& cp, const MultiIndex& idx, double c, CPStats& s) {
  Eigen::RowVectorXd q = Eigen::RowVectorXd::Constant(static_cast<Eigen::Index>(cp.rank()), c);
  for (std::size_t d = 0; d < cp.factors.size(); ++d)
    q = q.cwiseProduct(cp.factors[d].row(static_cast<Eigen::Index>(idx[d])));
  for (std::size_t d = 0; d < cp.factors.size(); ++d) s.mode[d].row(static_cast<Eigen::Index>(idx[d])) += q;
  s.rank_mass += q.transpose();
}

// Enumerates the core per sample; cost O(D prod R_d).
void accumulate_tucker(const TuckerComponent& t, const MultiIndex& idx, double c, TuckerStats& s,
                       std::vector<Eigen::VectorXd>& scratch) {
  const std::size_t D = t.ranks.size();
  for (std::size_t d = 0; d < D; ++d) scratch[d].setZero();
  std::vector<std::size_t> r(D, 0);
  for (std::size_t flat = 0; flat < t.core.size(); ++flat) {
    double q = c * t.core[flat];
    for (std::size_t d = 0; d < D && q != 0.0; ++d)
      q *= t.factors[d](static_cast<Eigen::Index>(idx[d]), static_cast<Eigen::Index>(r[d]));
    s.core[flat] += q;
    for (std::size_t d = 0; d < D; ++d) scratch[d](static_cast<Eigen::Index>(r[d])) += q;
    for (std::size_t d = D; d-- > 0;) {
      if (++r[d] < t.ranks[d]) break;
      r[d] = 0;
    }
  }
  for (std::size_t d = 0; d < D; ++d)
    s.mode[d].row(static_cast<Eigen::Index>(idx[d])) += scratch[d].transpose();
}

void accumulate_tt_cumulant(const TTComponent& t, const MultiIndex& idx, double c, TTStats& s,
                            std::vector<Eigen::RowVectorXd>& pre, std::vector<Eigen::VectorXd>& suf) {
  const std::size_t D = t.cores.size();
  pre[0] = Eigen::RowVectorXd::Ones(1);
  for (std::size_t d = 0; d < D; ++d) pre[d + 1] = pre[d] * t.cores[d][idx[d]];
  suf[D] = Eigen::VectorXd::Ones(1);
  for (std::size_t d = D; d-- > 0;) suf[d] = t.cores[d][idx[d]] * suf[d + 1];
  for (std::size_t d = 0; d < D; ++d) {
    const Eigen::MatrixXd& g = t.cores[d][idx[d]];
    s.numer[d][idx[d]].noalias() += c * (pre[d].transpose() * suf[d + 1].transpose()).cwiseProduct(g);
    s.denom[d] += c * pre[d + 1].transpose().cwiseProduct(suf[d + 1]);
  }
}

// Sums Q over every rank tuple (r_1, ..., r_{D-1}) explicitly.
void accumulate_tt_enumerate(const TTComponent& t, const MultiIndex& idx, double c, TTStats& s) {
  const std::size_t D = t.cores.size();
  const auto ranks = t.ranks();
  std::vector<std::size_t> r(ranks.size(), 0);
  auto left = [&](std::size_t d) -> Eigen::Index { return d == 0 ? 0 : static_cast<Eigen::Index>(r[d - 1]); };
  auto right = [&](std::size_t d) -> Eigen::Index { return d + 1 == D ? 0 : static_cast<Eigen::Index>(r[d]); };
  while (true) {
    double q = c;
    for (std::size_t d = 0; d < D; ++d) q *= t.cores[d][idx[d]](left(d), right(d));
    for (std::size_t d = 0; d < D; ++d) {
      s.numer[d][idx[d]](left(d), right(d)) += q;
      s.denom[d](right(d)) += q;
    }
    bool done = true;
    for (std::size_t d = ranks.size(); d-- > 0;) {
      if (++r[d] < ranks[d]) {
        done = false;
        break;
      }
      r[d] = 0;
    }
    if (done) return;
  }
}

bool finite(const ComponentStats& s) {
  return std::visit(Overloaded{[](const CPStats& c) {
                                 bool ok = c.rank_mass.allFinite();
                                 for (const auto& m : c.mode) ok = ok && m.allFinite();
                                 return ok;
                               },
                               [](const TuckerStats& t) {
                                 bool ok = true;
                                 for (double v : t.core) ok = ok && std::isfinite(v);
                                 for (const auto& m : t.mode) ok = ok && m.allFinite();
                                 return ok;
                               },
                               [](const TTStats& t) {
                                 bool ok = true;
                                 for (const auto& d : t.denom) ok = ok && d.allFinite();
                                 for (const auto& core : t.numer)
                                   for (const auto& m : core) ok = ok && m.allFinite();
                                 return ok;
                               },
                               [](const BackgroundStats& b) { return std::isfinite(b.mass); }},
                    s);
}

std::string describe(const MultiIndex& idx) {
  std::ostringstream os;
  os << "(";
  for (std::size_t d = 0; d < idx.size(); ++d) os << (d ? "," : "") << idx[d];
  os << ")";
  return os.str();
}

}  // namespace

double mass_of(const ComponentStats& s) {
  return std::visit([](const auto& x) { return x.mass; }, s);
}

EStep compute_responsibilities(const EmpiricalTensor& t, const MixtureModel& m, Alpha alpha,
                               TTStatsMethod tt_method) {
  const double a = alpha.value();
  auto entries = t.entries();
  const std::size_t N = entries.size();

  EStep out;
  Responsibilities& resp = out.resp;
  resp.model_values.resize(N);
  resp.scale.resize(N);
  std::vector<double> log_p(N), terms(N);
  for (std::size_t n = 0; n < N; ++n) {
    const double p = evaluate(m, entries[n].index);
    if (!(p > 0.0))
      throw DomainError("model assigns zero mass to observed sample " + describe(entries[n].index));
    resp.model_values[n] = p;
    log_p[n] = std::log(p);
    terms[n] = a * std::log(entries[n].weight) + (1.0 - a) * log_p[n];
  }
  resp.log_normalizer = log_sum_exp(terms);
  for (std::size_t n = 0; n < N; ++n)
    resp.scale[n] = std::exp(a * (std::log(entries[n].weight) - log_p[n]) - resp.log_normalizer);

  const std::size_t D = t.shape().order();
  std::vector<Eigen::RowVectorXd> pre(D + 1);
  std::vector<Eigen::VectorXd> suf(D + 1);

  for (std::size_t k = 0; k < m.size(); ++k) {
    const double eta = m.weights[k];
    ComponentStats stats = std::visit(
        Overloaded{
            [&](const CPComponent& cp) -> ComponentStats {
              CPStats s = empty_stats(cp);
              if (eta > 0.0)
                for (std::size_t n = 0; n < N; ++n) accumulate_cp(cp, entries[n].index, resp.scale[n] * eta, s);
              s.mass = s.rank_mass.sum();
              return s;
            },
            [&](const TuckerComponent& tk) -> ComponentStats {
              TuckerStats s = empty_stats(tk);
              std::vector<Eigen::VectorXd> scratch;
              for (std::size_t r : tk.ranks) scratch.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r)));
              if (eta > 0.0)
                for (std::size_t n = 0; n < N; ++n)
                  accumulate_tucker(tk, entries[n].index, resp.scale[n] * eta, s, scratch);
              s.mass = std::accumulate(s.core.begin(), s.core.end(), 0.0);
              return s;
            },
            [&](const TTComponent& tt) -> ComponentStats {
              TTStats s = empty_stats(tt);
              if (eta > 0.0) {
                for (std::size_t n = 0; n < N; ++n) {
                  const double c = resp.scale[n] * eta;
                  if (tt_method == TTStatsMethod::Cumulant)
                    accumulate_tt_cumulant(tt, entries[n].index, c, s, pre, suf);
                  else
                    accumulate_tt_enumerate(tt, entries[n].index, c, s);
                }
              }
              s.mass = s.denom.back()(0);
              return s;
            },
            [&](const BackgroundComponent& bg) -> ComponentStats {
              BackgroundStats s{bg.shape, 0.0};
              if (eta > 0.0) {
                const double value = std::exp(-log_cardinality(bg.shape));
                for (std::size_t n = 0; n < N; ++n) s.mass += resp.scale[n] * eta * value;
              }
              return s;
            }},
        m.components[k]);
    if (!finite(stats)) {
      std::ostringstream os;
      os << "non-finite sufficient statistics for component " << k << " ("
         << to_string(kind_of(m.components[k])) << ")";
      throw InternalError(os.str());
    }
    out.stats.masses.push_back(mass_of(stats));
    out.stats.components.push_back(std::move(stats));
  }
  return out;
}

CPComponent mstep_cp(const CPStats& s, std::vector<std::string>* notes) {
  const std::size_t D = s.mode.size();
  const Eigen::Index R = s.rank_mass.size();
  const double mu = s.rank_mass.sum();
  if (!(mu > 0.0)) throw InternalError("cp M-step with zero responsibility mass");
  CPComponent cp;
  cp.factors.resize(D);
  for (std::size_t d = 0; d < D; ++d) cp.factors[d].resize(s.mode[d].rows(), R);
  const double inv_d = 1.0 / static_cast<double>(D);
  bool reset = false;
  for (Eigen::Index r = 0; r < R; ++r) {
    const double sr = s.rank_mass(r);
    if (sr < kDeadRankMass) {
      reset = true;
      for (std::size_t d = 0; d < D; ++d) {
        const double rows = static_cast<double>(s.mode[d].rows());
        cp.factors[d].col(r).setConstant((d == 0 ? 1e-12 : 1.0) / rows);
      }
      if (notes) {
        std::ostringstream os;
        os << "cp rank " << r << " has mass " << sr << "; reinitialized";
        notes->push_back(os.str());
      }
      continue;
    }
    const double denom = std::pow(mu, inv_d) * std::pow(sr, 1.0 - inv_d);
    for (std::size_t d = 0; d < D; ++d) cp.factors[d].col(r) = s.mode[d].col(r) / denom;
  }
  if (reset) cp.factors[0] /= total_mass(cp);
  return cp;
}

TuckerComponent mstep_tucker(const TuckerStats& s, std::vector<std::string>* notes) {
  const double mu = std::accumulate(s.core.begin(), s.core.end(), 0.0);
  if (!(mu > 0.0)) throw InternalError("tucker M-step with zero responsibility mass");
  TuckerComponent t;
  t.ranks = s.ranks;
  t.core.resize(s.core.size());
  for (std::size_t j = 0; j < s.core.size(); ++j) t.core[j] = s.core[j] / mu;
  for (std::size_t d = 0; d < s.mode.size(); ++d) {
    Eigen::MatrixXd a = s.mode[d];
    for (Eigen::Index r = 0; r < a.cols(); ++r) {
      const double col = s.mode[d].col(r).sum();
      if (col < kDeadRankMass) {
        a.col(r).setConstant(1.0 / static_cast<double>(a.rows()));
        if (notes) {
          std::ostringstream os;
          os << "tucker mode " << d << " rank " << r << " has mass " << col << "; reinitialized";
          notes->push_back(os.str());
        }
      } else {
        a.col(r) /= col;
      }
    }
    t.factors.push_back(std::move(a));
  }
  return t;
}

TTComponent mstep_tt(const TTStats& s, std::vector<std::string>* notes) {
  if (!(s.mass > 0.0)) throw InternalError("tt M-step with zero responsibility mass");
  TTComponent t;
  const std::size_t D = s.numer.size();
  t.cores.resize(D);
  for (std::size_t d = 0; d < D; ++d) {
    t.cores[d] = s.numer[d];
    const Eigen::Index left = s.numer[d][0].rows();
    const auto categories = static_cast<double>(s.numer[d].size());
    for (Eigen::Index b = 0; b < s.denom[d].size(); ++b) {
      const double den = s.denom[d](b);
      if (den < kDeadRankMass) {
        const double u = 1.0 / (static_cast<double>(left) * categories);
        for (auto& slice : t.cores[d]) slice.col(b).setConstant(u);
        if (notes) {
          std::ostringstream os;
          os << "tt core " << d << " rank " << b << " has mass " << den << "; reinitialized";
          notes->push_back(os.str());
        }
      } else {
        for (auto& slice : t.cores[d]) slice.col(b) /= den;
      }
    }
  }
  return t;
}

Component mstep(const ComponentStats& s, const Component& previous, std::vector<std::string>* notes) {
  if (mass_of(s) == 0.0) return previous;
  return std::visit(Overloaded{[&](const CPStats& x) -> Component { return mstep_cp(x, notes); },
                               [&](const TuckerStats& x) -> Component { return mstep_tucker(x, notes); },
                               [&](const TTStats& x) -> Component { return mstep_tt(x, notes); },
                               [&](const BackgroundStats& x) -> Component { return BackgroundComponent{x.shape}; }},
                    s);
}

std::vector<double> update_weights(std::span<const double> masses, const std::vector<bool>& unfloored) {
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total))
    throw InternalError("mixture weight update with zero total responsibility mass");
  std::vector<double> eta(masses.size());
  for (std::size_t k = 0; k < masses.size(); ++k) eta[k] = masses[k] / total;
  for (std::size_t k = 0; k < eta.size(); ++k)
    if (eta[k] < kWeightFloor && !(k < unfloored.size() && unfloored[k])) eta[k] = 0.0;
  const double kept = std::accumulate(eta.begin(), eta.end(), 0.0);
  for (double& e : eta) e /= kept;
  return eta;
}

}  // namespace e2m
