// Dynamic-programming engine for the conditional likelihood ratios: the
// psi factors, L-matrix recursions with per-step max rescaling, Lambda
// ratios against a reference state, forward-backward posteriors, and a
// path-enumeration oracle.
//
// All quantities are ratios, so each L step stores a normalized matrix
// (max entry exactly 1) plus an accumulated log scale factor that cancels
// wherever it matters.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "hmmfdr/hmm.hpp"
#include "hmmfdr/matrix.hpp"
#include "hmmfdr/models.hpp"
#include "hmmfdr/util.hpp"

namespace hmmfdr {

// ln psi_t(eps, c) = ln f(phi(Z_t, theta_{eta_t}(eps)), theta_c(eps)).
inline double psi(const InteractionModel& model, const Trajectory& traj, int t,
                  double epsilon, int c) {
  const double x = model.phi(traj.z_at(t), model.theta(traj.eta_at(t), epsilon));
  const double lp = model.log_density(x, model.theta(c, epsilon));
  if (!std::isfinite(lp))
    throw Error("NonFiniteDensity",
                "log density not finite at t = " + std::to_string(t));
  return lp;
}

// Table of ln psi_t(eps, c) over the trajectory window; the engine kernels
// consume this so tests can perturb psi values directly.
struct PsiTable {
  int m = 0;
  int n = 0;
  int num_states = 0;
  std::vector<double> lp;  // row t + m, column c

  double at(int t, int c) const {
    return lp[static_cast<std::size_t>(t + m) * num_states + c];
  }
  double& at(int t, int c) {
    return lp[static_cast<std::size_t>(t + m) * num_states + c];
  }
  double max_at(int t) const {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < num_states; ++c) mx = std::max(mx, at(t, c));
    return mx;
  }
};

inline PsiTable build_psi_table(const ValidatedSpec& vs, const InteractionModel& model,
                                const Trajectory& traj, double epsilon) {
  PsiTable table;
  table.m = traj.m;
  table.n = traj.n;
  table.num_states = vs.num_states();
  table.lp.resize(static_cast<std::size_t>(traj.length()) * vs.num_states());
  for (int t = -traj.m; t <= traj.n; ++t)
    for (int c = 0; c < vs.num_states(); ++c)
      table.at(t, c) = psi(model, traj, t, epsilon, c);
  return table;
}

// Marginal laws over the trajectory window, anchored at its left edge.
inline std::vector<std::vector<double>> trajectory_marginals(const ValidatedSpec& vs,
                                                             int m, int n) {
  return marginals(vs, m, n);
}

struct ScaledMatrix {
  double log_scale = 0.0;
  Matrix mat;  // nonnegative, max entry exactly 1 after each rescale
};

// L_0, L_{+-1}, ..., L_{+-n} along one direction from index 0.
struct LMatrixSequence {
  int direction = +1;  // +1 forward, -1 backward
  std::vector<ScaledMatrix> seq;

  const ScaledMatrix& at(int n) const { return seq[static_cast<std::size_t>(n)]; }
  int max_n() const { return static_cast<int>(seq.size()) - 1; }
};

namespace detail {

inline ScaledMatrix l_step(const ScaledMatrix& prev, const Matrix& kernel,
                           const PsiTable& psi_table, int t_next) {
  const int k = kernel.rows();
  const double shift = psi_table.max_at(t_next);
  Matrix next(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      double s = 0.0;
      for (int e = 0; e < k; ++e) s += prev.mat(a, e) * kernel(e, b);
      next(a, b) = s * std::exp(psi_table.at(t_next, b) - shift);
    }
  const double mx = next.max_abs();
  if (!(mx > 0.0))
    throw Error("DegenerateDenominator", "L matrix vanished during recursion");
  for (double& v : next.data()) v /= mx;
  return {prev.log_scale + shift + std::log(mx), std::move(next)};
}

}  // namespace detail

// Forward recursion L_{n,ab} = psi_n(eps,b) sum_e L_{n-1,ae} P_{n-1,n}(e,b).
inline LMatrixSequence forward_l(const ValidatedSpec& vs, const PsiTable& psi_table,
                                 int n_max) {
  if (n_max > psi_table.n)
    throw Error("IndexOutOfWindow", "forward_l beyond trajectory window");
  LMatrixSequence out;
  out.direction = +1;
  out.seq.push_back({0.0, Matrix::identity(vs.num_states())});
  for (int n = 1; n <= n_max; ++n)
    out.seq.push_back(detail::l_step(out.seq.back(), vs.spec().transition_at(n - 1),
                                     psi_table, n));
  return out;
}

// Backward recursion with reverse-conditional kernels derived from the
// marginal laws (for stationary binary chains these equal Q).
inline LMatrixSequence backward_l(const ValidatedSpec& vs, const PsiTable& psi_table,
                                  int m_max) {
  if (m_max > psi_table.m)
    throw Error("IndexOutOfWindow", "backward_l beyond trajectory window");
  const auto laws = trajectory_marginals(vs, psi_table.m, 0);
  LMatrixSequence out;
  out.direction = -1;
  out.seq.push_back({0.0, Matrix::identity(vs.num_states())});
  for (int s = 1; s <= m_max; ++s) {
    const Matrix b = reverse_kernel(vs, laws[static_cast<std::size_t>(psi_table.m - s)], -s);
    out.seq.push_back(detail::l_step(out.seq.back(), b, psi_table, -s));
  }
  return out;
}

// Lambda_{n,a} = sum_b L_{n,ab} / sum_b L_{n,ref b}; scale factors cancel.
inline double lambda_ratio(const LMatrixSequence& lseq, int n, int a, int ref = 0) {
  const Matrix& mat = lseq.at(n).mat;
  double num = 0.0, den = 0.0;
  for (int b = 0; b < mat.cols(); ++b) {
    num += mat(a, b);
    den += mat(ref, b);
  }
  if (!(den > 0.0)) throw Error("DegenerateDenominator", "Lambda denominator vanished");
  return num / den;
}

inline double log_lambda_ratio(const LMatrixSequence& lseq, int n, int a, int ref = 0) {
  return std::log(lambda_ratio(lseq, n, a, ref));
}

// Binary log ratio lambda_n = ln Lambda_{n,1} (reference state 0), the
// finite-window form of r(eps); direction -1 gives the backward analogue.
inline double binary_log_ratio(const ValidatedSpec& vs, const PsiTable& psi_table,
                               int n, int direction = +1) {
  const LMatrixSequence l = direction > 0 ? forward_l(vs, psi_table, n)
                                          : backward_l(vs, psi_table, n);
  return log_lambda_ratio(l, n, 1, 0);
}

struct PosteriorResult {
  int m = 0;
  int n = 0;
  double epsilon = 0.0;
  std::vector<std::vector<double>> post;  // per index t + m, per state
  std::vector<double> rho;
  std::vector<double> log_flr;
  std::vector<double> log_llr;

  int idx(int t) const { return t + m; }
  const std::vector<double>& post_at(int t) const {
    return post[static_cast<std::size_t>(idx(t))];
  }
  double rho_at(int t) const { return rho[static_cast<std::size_t>(idx(t))]; }
  double log_flr_at(int t) const { return log_flr[static_cast<std::size_t>(idx(t))]; }
  double log_llr_at(int t) const { return log_llr[static_cast<std::size_t>(idx(t))]; }
};

namespace detail {

inline void normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  for (double& x : v) x /= s;
}

inline void fill_ratio_fields(const ValidatedSpec& vs, const PsiTable& psi_table,
                              const std::vector<std::vector<double>>& laws,
                              int law_offset, PosteriorResult& res) {
  const int k = vs.num_states();
  for (int t = -res.m; t <= res.n; ++t) {
    const auto& p = res.post[static_cast<std::size_t>(res.idx(t))];
    double h1 = 0.0, h0 = 0.0;
    for (int a = 0; a < k; ++a) (vs.spec().is_h1[a] ? h1 : h0) += p[a];
    const double rho = h1 / h0;
    res.rho[static_cast<std::size_t>(res.idx(t))] = rho;
    res.log_flr[static_cast<std::size_t>(res.idx(t))] = std::log(rho);

    const auto& law = laws[static_cast<std::size_t>(t + law_offset)];
    double l1 = -std::numeric_limits<double>::infinity();
    double l0 = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < k; ++a) {
      const double v = std::log(law[a]) + psi_table.at(t, a);
      (vs.spec().is_h1[a] ? l1 : l0) = log_add_exp(vs.spec().is_h1[a] ? l1 : l0, v);
    }
    res.log_llr[static_cast<std::size_t>(res.idx(t))] = l1 - l0;
  }
}

}  // namespace detail

// Forward-backward smoothing over the window [-m, n] of the psi table.
// The chain law is anchored at the table's own left edge, so posteriors on
// nested subwindows are conditionals under one joint law.
inline PosteriorResult posterior_from_table(const ValidatedSpec& vs,
                                            const PsiTable& psi_table, int m, int n) {
  if (m > psi_table.m || n > psi_table.n)
    throw Error("IndexOutOfWindow", "posterior window exceeds trajectory window");
  const int k = vs.num_states();
  const int len = m + n + 1;
  const auto laws = trajectory_marginals(vs, psi_table.m, psi_table.n);

  // Scaled forward filter values into each index.
  std::vector<std::vector<double>> alpha(static_cast<std::size_t>(len),
                                         std::vector<double>(k, 0.0));
  {
    const auto& law0 = laws[static_cast<std::size_t>(psi_table.m - m)];
    const double shift = psi_table.max_at(-m);
    for (int a = 0; a < k; ++a)
      alpha[0][a] = law0[a] * std::exp(psi_table.at(-m, a) - shift);
    detail::normalize(alpha[0]);
  }
  for (int t = -m + 1; t <= n; ++t) {
    const Matrix& q = vs.spec().transition_at(t - 1);
    const double shift = psi_table.max_at(t);
    auto& cur = alpha[static_cast<std::size_t>(t + m)];
    const auto& prev = alpha[static_cast<std::size_t>(t + m - 1)];
    for (int b = 0; b < k; ++b) {
      double s = 0.0;
      for (int a = 0; a < k; ++a) s += prev[a] * q(a, b);
      cur[b] = s * std::exp(psi_table.at(t, b) - shift);
    }
    detail::normalize(cur);
  }

  // Scaled backward values out of each index.
  std::vector<std::vector<double>> beta(static_cast<std::size_t>(len),
                                        std::vector<double>(k, 1.0 / k));
  for (int t = n - 1; t >= -m; --t) {
    const Matrix& q = vs.spec().transition_at(t);
    const double shift = psi_table.max_at(t + 1);
    auto& cur = beta[static_cast<std::size_t>(t + m)];
    const auto& next = beta[static_cast<std::size_t>(t + m + 1)];
    for (int a = 0; a < k; ++a) {
      double s = 0.0;
      for (int b = 0; b < k; ++b)
        s += q(a, b) * std::exp(psi_table.at(t + 1, b) - shift) * next[b];
      cur[a] = s;
    }
    detail::normalize(cur);
  }

  PosteriorResult res;
  res.m = m;
  res.n = n;
  res.post.assign(static_cast<std::size_t>(len), std::vector<double>(k, 0.0));
  res.rho.assign(static_cast<std::size_t>(len), 0.0);
  res.log_flr.assign(static_cast<std::size_t>(len), 0.0);
  res.log_llr.assign(static_cast<std::size_t>(len), 0.0);
  for (int i = 0; i < len; ++i) {
    for (int a = 0; a < k; ++a)
      res.post[static_cast<std::size_t>(i)][a] =
          alpha[static_cast<std::size_t>(i)][a] * beta[static_cast<std::size_t>(i)][a];
    detail::normalize(res.post[static_cast<std::size_t>(i)]);
  }
  detail::fill_ratio_fields(vs, psi_table, laws, psi_table.m, res);
  return res;
}

inline PosteriorResult posterior(const ValidatedSpec& vs, const InteractionModel& model,
                                 const Trajectory& traj, double epsilon, int m, int n) {
  const PsiTable table = build_psi_table(vs, model, traj, epsilon);
  PosteriorResult res = posterior_from_table(vs, table, m, n);
  res.epsilon = epsilon;
  return res;
}

// rho_{0,mn} assembled through psi_0 P_0 Lambda_{-m} Lambda_{n}; used to
// cross-check the smoother against the Lambda decomposition.
inline double rho_via_lambda(const ValidatedSpec& vs, const PsiTable& psi_table,
                             int m, int n) {
  const int k = vs.num_states();
  const auto laws = trajectory_marginals(vs, psi_table.m, 0);
  const auto& law0 = laws.back();
  const LMatrixSequence lf = forward_l(vs, psi_table, n);
  const LMatrixSequence lb = backward_l(vs, psi_table, m);
  const double shift = psi_table.max_at(0);
  double num = 0.0, den = 0.0;
  for (int a = 0; a < k; ++a) {
    const double w = law0[a] * std::exp(psi_table.at(0, a) - shift) *
                     lambda_ratio(lb, m, a) * lambda_ratio(lf, n, a);
    (vs.spec().is_h1[a] ? num : den) += w;
  }
  return num / den;
}

// Exact posterior by summing over all hidden paths in log space.
inline PosteriorResult brute_force_posterior(const ValidatedSpec& vs,
                                             const InteractionModel& model,
                                             const Trajectory& traj, double epsilon,
                                             int m, int n) {
  const int k = vs.num_states();
  const int len = m + n + 1;
  if (len * std::log(static_cast<double>(k)) > 20.0 * std::log(2.0) + 1e-9)
    throw Error("WindowTooLarge", "path enumeration capped at 2^20 states");
  const PsiTable table = build_psi_table(vs, model, traj, epsilon);
  const auto laws = trajectory_marginals(vs, traj.m, traj.n);

  std::vector<int> path(static_cast<std::size_t>(len), 0);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> bucket(static_cast<std::size_t>(len),
                                          std::vector<double>(k, neg_inf));
  while (true) {
    double lw = std::log(laws[static_cast<std::size_t>(traj.m - m)][path[0]]) +
                table.at(-m, path[0]);
    for (int i = 1; i < len; ++i) {
      const int t = i - m;
      const double q = vs.spec().transition_at(t - 1)(path[static_cast<std::size_t>(i - 1)],
                                                      path[static_cast<std::size_t>(i)]);
      if (q == 0.0) {
        lw = neg_inf;
        break;
      }
      lw += std::log(q) + table.at(t, path[static_cast<std::size_t>(i)]);
    }
    if (lw > neg_inf)
      for (int i = 0; i < len; ++i) {
        auto& cell = bucket[static_cast<std::size_t>(i)][path[static_cast<std::size_t>(i)]];
        cell = log_add_exp(cell, lw);
      }
    // odometer increment
    int pos = 0;
    while (pos < len && ++path[static_cast<std::size_t>(pos)] == k) {
      path[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    if (pos == len) break;
  }

  PosteriorResult res;
  res.m = m;
  res.n = n;
  res.epsilon = epsilon;
  res.post.assign(static_cast<std::size_t>(len), std::vector<double>(k, 0.0));
  res.rho.assign(static_cast<std::size_t>(len), 0.0);
  res.log_flr.assign(static_cast<std::size_t>(len), 0.0);
  res.log_llr.assign(static_cast<std::size_t>(len), 0.0);
  for (int i = 0; i < len; ++i) {
    const double total = log_sum_exp(bucket[static_cast<std::size_t>(i)]);
    for (int a = 0; a < k; ++a)
      res.post[static_cast<std::size_t>(i)][a] =
          std::exp(bucket[static_cast<std::size_t>(i)][a] - total);
  }
  detail::fill_ratio_fields(vs, table, laws, traj.m, res);
  return res;
}

struct MartingaleProbe {
  std::vector<double> rho;        // one per schedule entry
  double tail_max_successive = 0.0;
};

// rho_{t,mn} along an increasing window schedule; the tail metric is the
// largest successive jump over the second half of the schedule.
inline MartingaleProbe martingale_convergence_probe(
    const ValidatedSpec& vs, const InteractionModel& model, const Trajectory& traj,
    double epsilon, int t, const std::vector<std::pair<int, int>>& schedule) {
  const PsiTable table = build_psi_table(vs, model, traj, epsilon);
  MartingaleProbe probe;
  for (const auto& [m, n] : schedule) {
    const PosteriorResult res = posterior_from_table(vs, table, m, n);
    probe.rho.push_back(res.rho_at(t));
  }
  for (std::size_t i = probe.rho.size() / 2; i + 1 < probe.rho.size(); ++i)
    probe.tail_max_successive = std::max(
        probe.tail_max_successive, std::abs(probe.rho[i + 1] - probe.rho[i]));
  return probe;
}

}  // namespace hmmfdr
