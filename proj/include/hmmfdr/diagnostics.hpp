// Contraction and stability measurements: the L-ratio spread Delta_n, its
// finite-difference epsilon-derivatives, the fitted geometric rate, the
// kappa = 1 closed-form bound, and the Lambda convergence envelope.
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "hmmfdr/hmm.hpp"
#include "hmmfdr/likelihood.hpp"
#include "hmmfdr/util.hpp"

namespace hmmfdr {

// Delta for a single L matrix: max over (a,b,c,d) of
// | L_{bc}/L_{ac} - L_{bd}/L_{ad} |; scale factors cancel in the ratios.
inline double delta_of(const Matrix& l) {
  const int k = l.rows();
  double mx = 0.0;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      if (a == b) continue;
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (int c = 0; c < k; ++c) {
        const double ratio = l(b, c) / l(a, c);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
      mx = std::max(mx, hi - lo);
    }
  return mx;
}

// Per-pair row-ratio envelope, for the Lemma-4 monotonicity checks.
struct RowRatioEnvelope {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

inline RowRatioEnvelope row_ratio_envelope(const Matrix& l, int a, int b) {
  RowRatioEnvelope e{std::numeric_limits<double>::infinity(), 0.0};
  for (int c = 0; c < l.cols(); ++c) {
    const double ratio = l(b, c) / l(a, c);
    e.min_ratio = std::min(e.min_ratio, ratio);
    e.max_ratio = std::max(e.max_ratio, ratio);
  }
  return e;
}

struct ContractionTrace {
  int kappa = 1;
  std::vector<int> ns;             // n = kappa .. n_max
  std::vector<double> delta;
  std::vector<double> delta_nu1;   // FD in eps, empty unless requested
  std::vector<double> delta_nu2;
  double fitted_rate = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> monotonicity_violations;  // n where delta_n > delta_{n-1} + slack
  // kappa = 1 closed-form bound Delta_n <= alpha gamma^n. With one-step
  // entries in [phi_star, 1 - phi_star], the step contraction factor is
  // 1 - [phi_star/(1-phi_star)]^2 and the base spread is alpha gamma,
  // which makes the bound tight at n = 1 for symmetric chains.
  double bound_alpha = 0.0;        // 1/phi_star - 1
  double bound_gamma = 0.0;        // 1 - [phi_star/(1 - phi_star)]^2
  bool bound_checked = false;
  bool bound_ok = true;
};

namespace detail {

inline std::vector<double> deltas_from(const LMatrixSequence& l, int kappa, int n_max) {
  std::vector<double> out;
  for (int n = kappa; n <= n_max; ++n) out.push_back(delta_of(l.at(n).mat));
  return out;
}

}  // namespace detail

inline ContractionTrace delta_trace(const ValidatedSpec& vs, const InteractionModel& model,
                                    const Trajectory& traj, double epsilon, int n_max,
                                    int direction = +1, bool with_derivs = false,
                                    double fd_h = 1e-4) {
  const auto build = [&](double eps) {
    const PsiTable table = build_psi_table(vs, model, traj, eps);
    return direction > 0 ? forward_l(vs, table, n_max) : backward_l(vs, table, n_max);
  };
  const LMatrixSequence base = build(epsilon);

  ContractionTrace tr;
  tr.kappa = vs.kappa();
  for (int n = vs.kappa(); n <= n_max; ++n) tr.ns.push_back(n);
  tr.delta = detail::deltas_from(base, vs.kappa(), n_max);

  static constexpr double kSlack = 1e-12;
  for (std::size_t i = 1; i < tr.delta.size(); ++i)
    if (tr.delta[i] > tr.delta[i - 1] + kSlack)
      tr.monotonicity_violations.push_back(tr.ns[i]);

  // Geometric rate fit over the tail half, skipping the pre-asymptotic head.
  {
    std::vector<double> xs, ys;
    for (std::size_t i = tr.delta.size() / 2; i < tr.delta.size(); ++i)
      if (tr.delta[i] > 0.0) {
        xs.push_back(static_cast<double>(tr.ns[i]));
        ys.push_back(std::log(tr.delta[i]));
      }
    if (xs.size() >= 2) tr.fitted_rate = ls_slope(xs, ys);
  }

  if (vs.kappa() == 1) {
    tr.bound_checked = true;
    const double ps = vs.phi_star();
    const double ratio = ps / (1.0 - ps);
    tr.bound_alpha = 1.0 / ps - 1.0;
    tr.bound_gamma = 1.0 - ratio * ratio;
    for (std::size_t i = 0; i < tr.delta.size(); ++i)
      if (tr.delta[i] > tr.bound_alpha * std::pow(tr.bound_gamma, tr.ns[i]) + kSlack)
        tr.bound_ok = false;
  }

  if (with_derivs) {
    const LMatrixSequence up = build(epsilon + fd_h);
    const LMatrixSequence dn = build(epsilon - fd_h);
    const int k = vs.num_states();
    for (int n = vs.kappa(); n <= n_max; ++n) {
      // Ratio tensors G(a,b,c) = L_{bc}/L_{ac} at the three eps points;
      // Delta_{n,nu} is the max spread over (c,d) of the differenced tensor.
      double spread1 = 0.0, spread2 = 0.0;
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
          if (a == b) continue;
          double lo1 = std::numeric_limits<double>::infinity(), hi1 = -lo1;
          double lo2 = lo1, hi2 = -lo1;
          for (int c = 0; c < k; ++c) {
            const double g0 = base.at(n).mat(b, c) / base.at(n).mat(a, c);
            const double gp = up.at(n).mat(b, c) / up.at(n).mat(a, c);
            const double gm = dn.at(n).mat(b, c) / dn.at(n).mat(a, c);
            const double g1 = (gp - gm) / (2.0 * fd_h);
            const double g2 = (gp - 2.0 * g0 + gm) / (fd_h * fd_h);
            lo1 = std::min(lo1, g1);
            hi1 = std::max(hi1, g1);
            lo2 = std::min(lo2, g2);
            hi2 = std::max(hi2, g2);
          }
          spread1 = std::max(spread1, hi1 - lo1);
          spread2 = std::max(spread2, hi2 - lo2);
        }
      tr.delta_nu1.push_back(spread1);
      tr.delta_nu2.push_back(spread2);
    }
  }
  return tr;
}

struct LambdaTrace {
  std::vector<int> ns;
  std::vector<std::vector<double>> lambda;    // per n, per state
  std::vector<double> gap_to_last;            // max_a |Lambda_n,a - Lambda_nmax,a|
  bool envelope_ok = true;                    // |L_n - L_s| <= 2 Delta_n + Delta_s
};

inline LambdaTrace lambda_convergence_trace(const ValidatedSpec& vs,
                                            const InteractionModel& model,
                                            const Trajectory& traj, double epsilon,
                                            const std::vector<int>& schedule,
                                            int direction = +1) {
  if (schedule.empty()) return {};
  const int n_max = schedule.back();
  const PsiTable table = build_psi_table(vs, model, traj, epsilon);
  const LMatrixSequence l = direction > 0 ? forward_l(vs, table, n_max)
                                          : backward_l(vs, table, n_max);
  const int k = vs.num_states();
  LambdaTrace tr;
  tr.ns = schedule;
  for (int n : schedule) {
    std::vector<double> row(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a) row[static_cast<std::size_t>(a)] = lambda_ratio(l, n, a);
    tr.lambda.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    double g = 0.0;
    for (int a = 0; a < k; ++a)
      g = std::max(g, std::abs(tr.lambda[i][static_cast<std::size_t>(a)] -
                               tr.lambda.back()[static_cast<std::size_t>(a)]));
    tr.gap_to_last.push_back(g);
  }
  static constexpr double kSlack = 1e-12;
  for (std::size_t i = 0; i < schedule.size(); ++i)
    for (std::size_t j = i + 1; j < schedule.size(); ++j) {
      if (schedule[i] < vs.kappa()) continue;
      const double dn = delta_of(l.at(schedule[i]).mat);
      const double ds = delta_of(l.at(schedule[j]).mat);
      for (int a = 0; a < k; ++a)
        if (std::abs(tr.lambda[i][static_cast<std::size_t>(a)] -
                     tr.lambda[j][static_cast<std::size_t>(a)]) >
            2.0 * dn + ds + kSlack)
          tr.envelope_ok = false;
    }
  return tr;
}

}  // namespace hmmfdr
