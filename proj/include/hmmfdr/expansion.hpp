// Weak-signal derivatives of the log likelihood-ratio correction r(eps)
// for binary chains: analytic first and second derivatives at eps = 0,
// their stationary closed forms, the backward analogue, and the
// expectation identities conditioned on the hidden path.
//
// The finite-truncation forms are exact for the finite-window log ratio
// lambda_T(eps), which is what the finite-difference oracles check.
#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "hmmfdr/hmm.hpp"
#include "hmmfdr/likelihood.hpp"
#include "hmmfdr/models.hpp"
#include "hmmfdr/util.hpp"

namespace hmmfdr {

namespace detail {

inline void require_binary_kappa1(const ValidatedSpec& vs) {
  if (vs.num_states() != 2)
    throw Error("NotBinary", "expansion formulas require a binary state space");
  if (vs.kappa() != 1)
    throw Error("KappaUnsupported", "expansions require kappa = 1");
}

}  // namespace detail

struct DtDerivs {
  double d1 = 0.0;  // d_t'(0)
  double d2 = 0.0;  // d_t''(0)
};

// Evaluates the chain-rule forms of d_t'(0) and d_t''(0) at x = phi(z_t, 0).
inline DtDerivs dt_derivs(const InteractionModel& model, const Trajectory& traj, int t) {
  const NoisePoint& z = traj.z_at(t);
  const double x0 = model.phi(z, 0.0);
  const LambdaPartials p = model.lambda_partials_at_zero(x0);
  const double dd1 = model.theta_d1(1) - model.theta_d1(0);
  const double dd2 = model.theta_d2(1) - model.theta_d2(0);
  const double sq = model.theta_d1(1) * model.theta_d1(1) -
                    model.theta_d1(0) * model.theta_d1(0);
  DtDerivs out;
  out.d1 = dd1 * p.d_theta;
  out.d2 = 2.0 * dd1 * model.theta_d1(traj.eta_at(t)) * p.d_x_theta * model.phi_dv(z, 0.0) +
           sq * p.d_theta2 + dd2 * p.d_theta;
  return out;
}

// ell_t'(0, a) for the reference state a; the eta-dependent term is shared
// between states and cancels in d_t but not in the cross terms u_st.
inline double ell_prime_zero(const InteractionModel& model, const Trajectory& traj,
                             int t, int a) {
  const NoisePoint& z = traj.z_at(t);
  const double x0 = model.phi(z, 0.0);
  const LambdaPartials p = model.lambda_partials_at_zero(x0);
  return p.d_x * model.phi_dv(z, 0.0) * model.theta_d1(traj.eta_at(t)) +
         p.d_theta * model.theta_d1(a);
}

struct ExpansionResult {
  int truncation = 0;
  int direction = +1;  // +1: r through indices 1..T, -1: r-bar through -1..-T
  double r1 = 0.0;
  double r2 = 0.0;
  double tail_bound = 0.0;
  bool second_order = false;
  std::vector<double> d0t;            // D_{0t}, index t-1
  std::vector<double> d1;             // d_t'(0)
  std::vector<double> d2;             // d_t''(0), second order only
  std::vector<double> r2_terms;       // index-t contribution to r2, incl cross terms
  std::vector<std::vector<double>> u; // u[t-1][s-1] for s < t, second order only
};

namespace detail {

// One-step chain matrices along a direction plus everything the Theorem-5
// sums need: cumulative products from 0 and the D coefficients.
struct BinaryChainTerms {
  std::vector<Matrix> p0t;  // P_{0t}, index t-1
  std::vector<double> d0t;

  static BinaryChainTerms from_steps(const std::vector<Matrix>& steps) {
    BinaryChainTerms out;
    Matrix acc = Matrix::identity(2);
    for (const Matrix& s : steps) {
      acc = acc * s;
      out.p0t.push_back(acc);
      out.d0t.push_back(acc(1, 1) - acc(0, 1));
    }
    return out;
  }

};

inline std::vector<Matrix> forward_steps(const ValidatedSpec& vs, int T) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) out.push_back(vs.spec().transition_at(t));
  return out;
}

inline std::vector<Matrix> backward_steps(const ValidatedSpec& vs, int m_anchor, int T) {
  const auto laws = marginals(vs, m_anchor, 0);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(T));
  for (int s = 1; s <= T; ++s)
    out.push_back(reverse_kernel(vs, laws[static_cast<std::size_t>(m_anchor - s)], -s));
  return out;
}

// D_{st} without dividing, for chains whose D factors may vanish.
inline double d_between(const std::vector<Matrix>& steps, int s, int t) {
  double d = 1.0;
  for (int u = s; u < t; ++u) {
    const Matrix& q = steps[static_cast<std::size_t>(u)];
    d *= q(1, 1) - q(0, 1);
  }
  return d;
}

inline double tail_bound_for(const ValidatedSpec& vs, int T, double max_abs_d1) {
  double g;
  if (vs.stationary()) {
    const Matrix& q = vs.spec().transitions[0];
    g = std::abs(1.0 - q(0, 1) - q(1, 0));
  } else {
    g = 1.0 - 2.0 * vs.phi_star();
  }
  if (g >= 1.0) return std::numeric_limits<double>::infinity();
  return max_abs_d1 * std::pow(g, T + 1) / (1.0 - g);
}

inline ExpansionResult expand(const ValidatedSpec& vs, const InteractionModel& model,
                              const Trajectory& traj, int T, int direction,
                              bool second_order) {
  require_binary_kappa1(vs);
  if (T < 1) throw Error("IndexOutOfWindow", "truncation must be >= 1");
  if (second_order && T < 2)
    throw Error("IndexOutOfWindow", "second order needs truncation >= 2");
  if ((direction > 0 && traj.n < T) || (direction < 0 && traj.m < T))
    throw Error("IndexOutOfWindow", "trajectory window shorter than truncation");

  const std::vector<Matrix> steps = direction > 0
                                        ? forward_steps(vs, T)
                                        : backward_steps(vs, traj.m, T);
  const BinaryChainTerms chain = BinaryChainTerms::from_steps(steps);

  ExpansionResult res;
  res.truncation = T;
  res.direction = direction;
  res.second_order = second_order;
  res.d0t = chain.d0t;
  res.d1.resize(static_cast<std::size_t>(T));
  std::vector<double> ell1(static_cast<std::size_t>(T));
  double max_abs_d1 = 0.0;
  for (int t = 1; t <= T; ++t) {
    const int idx = direction * t;
    const DtDerivs d = dt_derivs(model, traj, idx);
    res.d1[static_cast<std::size_t>(t - 1)] = d.d1;
    if (second_order) res.d2.push_back(d.d2);
    ell1[static_cast<std::size_t>(t - 1)] = ell_prime_zero(model, traj, idx, 0);
    max_abs_d1 = std::max(max_abs_d1, std::abs(d.d1));
  }

  for (int t = 1; t <= T; ++t)
    res.r1 += chain.d0t[static_cast<std::size_t>(t - 1)] *
              res.d1[static_cast<std::size_t>(t - 1)];
  res.tail_bound = tail_bound_for(vs, T, max_abs_d1);

  if (!second_order) return res;

  res.u.assign(static_cast<std::size_t>(T), {});
  res.r2_terms.resize(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const Matrix& p0t = chain.p0t[static_cast<std::size_t>(t - 1)];
    const double d0t = chain.d0t[static_cast<std::size_t>(t - 1)];
    const double d1t = res.d1[static_cast<std::size_t>(t - 1)];
    double term = d0t * (res.d2[static_cast<std::size_t>(t - 1)] +
                         (p0t(1, 0) - p0t(0, 1)) * d1t * d1t);
    auto& row = res.u[static_cast<std::size_t>(t - 1)];
    row.resize(static_cast<std::size_t>(t - 1));
    for (int s = 1; s < t; ++s) {
      const Matrix& p0s = chain.p0t[static_cast<std::size_t>(s - 1)];
      const double d0s = chain.d0t[static_cast<std::size_t>(s - 1)];
      const double dst = d_between(steps, s, t);
      const double d1s = res.d1[static_cast<std::size_t>(s - 1)];
      const double l1s = ell1[static_cast<std::size_t>(s - 1)];
      // E_sigma[ell_s'(0, sigma_s) | sigma_0 = 0] = ell_s'(0,0) + P_{0s}(0,1) d_s'(0)
      const double e_ell = l1s + p0s(0, 1) * d1s;
      const double u_st = d0s * (dst * p0s(0, 0) - d0t) * d1s +
                          d0s * dst * l1s - d0t * e_ell;
      row[static_cast<std::size_t>(s - 1)] = u_st;
      term += 2.0 * d1t * u_st;
    }
    res.r2_terms[static_cast<std::size_t>(t - 1)] = term;
    res.r2 += term;
  }
  return res;
}

}  // namespace detail

// Truncation large enough that the geometric |D_{0t}| tail drops below tol:
// |r|^T / (1 - |r|) for stationary chains, the (1 - 2 phi*) floor rate
// otherwise.
inline int suggested_truncation(const ValidatedSpec& vs, double tol = 1e-10) {
  detail::require_binary_kappa1(vs);
  double g;
  if (vs.stationary()) {
    const Matrix& q = vs.spec().transitions[0];
    g = std::abs(1.0 - q(0, 1) - q(1, 0));
  } else {
    g = 1.0 - 2.0 * vs.phi_star();
  }
  if (g <= 0.0) return 2;
  const int T = static_cast<int>(std::ceil(std::log(tol * (1.0 - g)) / std::log(g)));
  return std::max(T, 2);
}

// Central differences at the configured step, falling back to Richardson
// extrapolation when the half-step estimate disagrees by more than ten
// times the target tolerance.
template <typename F>
double fd_first(F&& f, double h, double tol) {
  const double coarse = (f(h) - f(-h)) / (2.0 * h);
  const double fine = (f(0.5 * h) - f(-0.5 * h)) / h;
  if (std::abs(coarse - fine) > 10.0 * tol) return (4.0 * fine - coarse) / 3.0;
  return coarse;
}

template <typename F>
double fd_second(F&& f, double h, double tol) {
  const double mid = f(0.0);
  const double coarse = (f(h) - 2.0 * mid + f(-h)) / (h * h);
  const double fine = (f(0.5 * h) - 2.0 * mid + f(-0.5 * h)) / (0.25 * h * h);
  if (std::abs(coarse - fine) > 10.0 * tol) return (4.0 * fine - coarse) / 3.0;
  return coarse;
}

// r'(0) truncated at T: sum_{t<=T} D_{0t} d_t'(0) with a geometric tail bound.
inline ExpansionResult r_prime(const ValidatedSpec& vs, const InteractionModel& model,
                               const Trajectory& traj, int T) {
  return detail::expand(vs, model, traj, T, +1, false);
}

// r''(0) truncated at T, including the diagonal variance-difference term and
// the cross terms u_st.
inline ExpansionResult r_double_prime(const ValidatedSpec& vs,
                                      const InteractionModel& model,
                                      const Trajectory& traj, int T) {
  return detail::expand(vs, model, traj, T, +1, true);
}

// Same expansions applied to the time-reversed chain and the negative-index
// observations, giving r-bar.
inline ExpansionResult backward_expansion(const ValidatedSpec& vs,
                                          const InteractionModel& model,
                                          const Trajectory& traj, int T) {
  return detail::expand(vs, model, traj, T, -1, true);
}

// Stationary closed forms: D_{0t} = r^t throughout.
inline ExpansionResult stationary_expansion(const BinaryStationarySpec& spec,
                                            const InteractionModel& model,
                                            const Trajectory& traj, int T,
                                            int direction = +1) {
  if (T < 1) throw Error("IndexOutOfWindow", "truncation must be >= 1");
  if ((direction > 0 && traj.n < T) || (direction < 0 && traj.m < T))
    throw Error("IndexOutOfWindow", "trajectory window shorter than truncation");
  const double r = spec.r();
  const double p_gap = spec.p0() - spec.p1();

  ExpansionResult res;
  res.truncation = T;
  res.direction = direction;
  res.second_order = true;
  double max_abs_d1 = 0.0;
  std::vector<double> rpow(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const DtDerivs d = dt_derivs(model, traj, direction * t);
    rpow[static_cast<std::size_t>(t - 1)] = std::pow(r, t);
    res.d0t.push_back(rpow[static_cast<std::size_t>(t - 1)]);
    res.d1.push_back(d.d1);
    res.d2.push_back(d.d2);
    max_abs_d1 = std::max(max_abs_d1, std::abs(d.d1));
  }
  res.r2_terms.resize(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const double rt = rpow[static_cast<std::size_t>(t - 1)];
    const double d1t = res.d1[static_cast<std::size_t>(t - 1)];
    res.r1 += rt * d1t;
    double term = rt * (res.d2[static_cast<std::size_t>(t - 1)] +
                        p_gap * (1.0 - rt) * d1t * d1t);
    double inner = 0.0;
    for (int s = 1; s < t; ++s)
      inner += (1.0 - rpow[static_cast<std::size_t>(s - 1)]) *
               res.d1[static_cast<std::size_t>(s - 1)];
    term += 2.0 * p_gap * rt * d1t * inner;
    res.r2_terms[static_cast<std::size_t>(t - 1)] = term;
    res.r2 += term;
  }
  res.tail_bound = max_abs_d1 * std::pow(std::abs(r), T + 1) /
                   (1.0 - std::abs(r));
  return res;
}

// E[r''(0) | eta] for a known hidden path eta_1..eta_T (Proposition 2).
inline double expected_r2_given_eta(const ValidatedSpec& vs, const InteractionModel& model,
                                    const std::vector<int>& eta_1toT) {
  detail::require_binary_kappa1(vs);
  model.require_expectation_ops();
  const int T = static_cast<int>(eta_1toT.size());
  const detail::BinaryChainTerms chain =
      detail::BinaryChainTerms::from_steps(detail::forward_steps(vs, T));
  double s = 0.0;
  for (int t = 1; t <= T; ++t) {
    const Matrix& p = chain.p0t[static_cast<std::size_t>(t - 1)];
    s += chain.d0t[static_cast<std::size_t>(t - 1)] *
         (2.0 * eta_1toT[static_cast<std::size_t>(t - 1)] - p(1, 1) - p(0, 1));
  }
  return model.var_d0_prime() * s;
}

// E[r''(0) | eta_0] = (2 eta_0 - 1) Var[d_0'(0)] sum_t D_{0t}^2; stationary
// chains use the exact geometric sum r^2 / (1 - r^2).
inline double expected_r2_given_eta0(const ValidatedSpec& vs, const InteractionModel& model,
                                     int eta0, int truncation = 0) {
  detail::require_binary_kappa1(vs);
  model.require_expectation_ops();
  const double sign = 2.0 * eta0 - 1.0;
  if (vs.stationary()) {
    const Matrix& q = vs.spec().transitions[0];
    const double r = 1.0 - q(0, 1) - q(1, 0);
    return sign * model.var_d0_prime() * r * r / (1.0 - r * r);
  }
  if (truncation < 1)
    throw Error("IndexOutOfWindow", "nonstationary form needs a truncation");
  const detail::BinaryChainTerms chain =
      detail::BinaryChainTerms::from_steps(detail::forward_steps(vs, truncation));
  double s = 0.0;
  for (double d : chain.d0t) s += d * d;
  return sign * model.var_d0_prime() * s;
}

// Monte Carlo bracket of E[r'(0) | eta] = 0: eta fixed, noise redrawn.
inline MeanSe expected_r1_given_eta_check(const ValidatedSpec& vs,
                                          const InteractionModel& model,
                                          const Trajectory& eta_template, int T,
                                          long replicates, std::uint64_t seed) {
  detail::require_binary_kappa1(vs);
  model.require_expectation_ops();
  std::vector<double> r1s;
  r1s.reserve(static_cast<std::size_t>(replicates));
  Trajectory traj = eta_template;
  for (long k = 0; k < replicates; ++k) {
    RngStream rng = stream_for_replicate(seed, static_cast<std::uint64_t>(k));
    for (auto& z : traj.z) z = model.sample_noise(rng);
    traj.x = assemble_observations(model, traj.eta, traj.z, traj.epsilon);
    r1s.push_back(r_prime(vs, model, traj, T).r1);
  }
  return mean_and_se(r1s);
}

// Numerical support for the expectation/differentiation interchange of
// Theorem 4 under kappa = 1: per replicate, central differences of
// ln Lambda_{n,a}(eps) at a tight step approximate the analytic derivative;
// their average must match the coarse-step difference of the averaged
// curve up to Monte Carlo error plus the Richardson residual of the
// coarse step.
struct InterchangeCheck {
  double mean_coarse = 0.0;   // FD at step H of the MC average
  double mean_tight = 0.0;    // MC average of per-replicate FD at step h
  double se_paired = 0.0;     // SE of the paired differences
  double fd_residual = 0.0;   // |FD_H - FD_{H/2}| of the average, scaled 4/3
  bool pass(double n_se = 4.0) const {
    return std::abs(mean_coarse - mean_tight) <= n_se * se_paired + fd_residual;
  }
};

inline InterchangeCheck theorem4_interchange_check(
    const ValidatedSpec& vs, const InteractionModel& model, double epsilon, int n,
    int state, long replicates, std::uint64_t seed, double coarse_h = 0.05,
    double tight_h = 1e-4) {
  detail::require_binary_kappa1(vs);
  model.require_expectation_ops();
  std::vector<double> coarse, tight, halfstep;
  coarse.reserve(static_cast<std::size_t>(replicates));
  for (long k = 0; k < replicates; ++k) {
    const Trajectory traj =
        simulate(vs, model, epsilon, 0, n, seed ^ static_cast<std::uint64_t>(k));
    const auto log_lambda = [&](double eps) {
      const PsiTable table = build_psi_table(vs, model, traj, eps);
      const LMatrixSequence l = forward_l(vs, table, n);
      return log_lambda_ratio(l, n, state, 0);
    };
    coarse.push_back((log_lambda(epsilon + coarse_h) - log_lambda(epsilon - coarse_h)) /
                     (2.0 * coarse_h));
    halfstep.push_back(
        (log_lambda(epsilon + 0.5 * coarse_h) - log_lambda(epsilon - 0.5 * coarse_h)) /
        coarse_h);
    tight.push_back((log_lambda(epsilon + tight_h) - log_lambda(epsilon - tight_h)) /
                    (2.0 * tight_h));
  }
  std::vector<double> paired(coarse.size());
  for (std::size_t i = 0; i < coarse.size(); ++i) paired[i] = coarse[i] - tight[i];
  InterchangeCheck out;
  out.mean_coarse = mean_and_se(coarse).mean;
  out.mean_tight = mean_and_se(tight).mean;
  out.se_paired = mean_and_se(paired).se;
  out.fd_residual =
      std::abs(out.mean_coarse - mean_and_se(halfstep).mean) * 4.0 / 3.0;
  return out;
}

}  // namespace hmmfdr
