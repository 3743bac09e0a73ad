// Oracle multiple-testing procedure on posterior q-values: the two-step
// prefix-mean rule, a brute-force optimality oracle, and evaluation
// against the simulated truth.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hmmfdr/util.hpp"

namespace hmmfdr {

struct TestOutcome {
  double alpha = 0.0;
  std::vector<double> q;             // q_i = 1 - p_i
  std::vector<int> rejected;         // ascending indices
  double expected_fdr = 0.0;         // mean q over rejected, 0 if none
  double expected_true_rejections = 0.0;  // R - sum of rejected q
};

namespace detail {

// Core of the two-step rule, shared by the double and scaled-integer
// forms. Feasible(j) decides whether the prefix of length j of the sorted
// q multiset satisfies the FDR constraint. The cut never splits a tie
// group: all equal q values share one fate, and a tie group is included
// only if the prefix through its last element stays feasible (the prefix
// rule alone can overshoot the constraint when a tie straddles the cut).
template <typename Q, typename Feasible>
std::vector<int> prefix_rule(const std::vector<Q>& q, Feasible&& feasible) {
  const int n = static_cast<int>(q.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return q[static_cast<std::size_t>(a)] < q[static_cast<std::size_t>(b)]; });
  int best = 0;
  Q prefix{};
  for (int j = 1; j <= n; ++j) {
    prefix += q[static_cast<std::size_t>(order[static_cast<std::size_t>(j - 1)])];
    const bool tie_boundary =
        j == n || q[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] !=
                      q[static_cast<std::size_t>(order[static_cast<std::size_t>(j - 1)])];
    if (tie_boundary && feasible(prefix, j)) best = j;
  }
  std::vector<int> rejected(order.begin(), order.begin() + best);
  std::sort(rejected.begin(), rejected.end());
  return rejected;
}

}  // namespace detail

// Proposition A.1 procedure: sort q ascending, find the longest feasible
// prefix (mean q <= alpha, boundary included), reject everything at or
// below the cut value.
inline TestOutcome oracle_bh(const std::vector<double>& q, double alpha) {
  for (double v : q)
    if (!(v >= 0.0 && v <= 1.0))
      throw Error("InvalidQ", "q values must lie in [0, 1], got " + format_double(v));
  TestOutcome out;
  out.alpha = alpha;
  out.q = q;
  out.rejected = detail::prefix_rule(
      q, [alpha](double prefix, int j) { return prefix <= alpha * j; });
  double qsum = 0.0;
  for (int i : out.rejected) qsum += q[static_cast<std::size_t>(i)];
  const auto r = static_cast<double>(out.rejected.size());
  out.expected_fdr = out.rejected.empty() ? 0.0 : qsum / r;
  out.expected_true_rejections = r - qsum;
  return out;
}

// Scaled-integer form for exact arithmetic: q_i = q_scaled_i / scale and
// alpha = alpha_scaled / scale, constraint sum q_(i) <= alpha j compared
// as integers.
inline std::vector<int> oracle_bh_rejections_scaled(const std::vector<std::int64_t>& q_scaled,
                                                    std::int64_t alpha_scaled) {
  return detail::prefix_rule(q_scaled, [alpha_scaled](std::int64_t prefix, int j) {
    return prefix <= alpha_scaled * j;
  });
}

struct BruteForceOptimal {
  std::vector<int> best_set;
  double best_objective = 0.0;  // E[R - V | X] = R - sum of rejected q
};

// Exhaustive search over rejection sets maximizing R - sum q subject to
// mean q <= alpha. Ties between sets resolve toward the first found.
inline BruteForceOptimal brute_force_optimal(const std::vector<double>& q, double alpha) {
  const int n = static_cast<int>(q.size());
  if (n > 20) throw Error("TooManyHypotheses", "brute force capped at 20 hypotheses");
  BruteForceOptimal out;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double qsum = 0.0;
    int r = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        qsum += q[static_cast<std::size_t>(i)];
        ++r;
      }
    if (qsum > alpha * r) continue;
    const double objective = r - qsum;
    if (objective > out.best_objective) {
      out.best_objective = objective;
      out.best_set.clear();
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) out.best_set.push_back(i);
    }
  }
  return out;
}

// Integer-domain variant paired with oracle_bh_rejections_scaled.
struct BruteForceOptimalScaled {
  std::vector<int> best_set;
  std::int64_t best_objective_scaled = 0;  // scale * R - sum of scaled q
};

inline BruteForceOptimalScaled brute_force_optimal_scaled(
    const std::vector<std::int64_t>& q_scaled, std::int64_t alpha_scaled,
    std::int64_t scale) {
  const int n = static_cast<int>(q_scaled.size());
  if (n > 20) throw Error("TooManyHypotheses", "brute force capped at 20 hypotheses");
  BruteForceOptimalScaled out;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::int64_t qsum = 0;
    std::int64_t r = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        qsum += q_scaled[static_cast<std::size_t>(i)];
        ++r;
      }
    if (qsum > alpha_scaled * r) continue;
    const std::int64_t objective = scale * r - qsum;
    if (objective > out.best_objective_scaled) {
      out.best_objective_scaled = objective;
      out.best_set.clear();
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) out.best_set.push_back(i);
    }
  }
  return out;
}

struct TruthEval {
  int total_rejections = 0;       // R
  int false_rejections = 0;       // V
  double fdp = 0.0;               // V / (R v 1)
  int true_rejections = 0;        // R - V
};

// Realized counts against the simulated truth. is_false_null[i] marks the
// hypotheses whose hidden state lies in H1 (the null is false).
inline TruthEval evaluate_against_truth(const TestOutcome& outcome,
                                        const std::vector<bool>& is_false_null) {
  TruthEval ev;
  ev.total_rejections = static_cast<int>(outcome.rejected.size());
  for (int i : outcome.rejected)
    if (!is_false_null[static_cast<std::size_t>(i)]) ++ev.false_rejections;
  ev.true_rejections = ev.total_rejections - ev.false_rejections;
  ev.fdp = ev.total_rejections == 0
               ? 0.0
               : static_cast<double>(ev.false_rejections) / ev.total_rejections;
  return ev;
}

}  // namespace hmmfdr
