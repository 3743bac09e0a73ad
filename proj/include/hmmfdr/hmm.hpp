// Hidden signal chain: specification, validation, k-step transitions,
// marginal laws, and trajectory simulation.
//
// Index convention: a run lives on the window [-m, n]. The declared
// initial law is the law of the state at the window's left edge; marginal
// laws at the other indices follow by forward propagation through the
// declared one-step matrices. Time-varying transition maps store matrices
// for a finite index range and reuse the nearest stored matrix outside it;
// output metadata flags both conventions.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hmmfdr/matrix.hpp"
#include "hmmfdr/rng.hpp"
#include "hmmfdr/util.hpp"

namespace hmmfdr {

inline constexpr double kStochasticTol = 1e-12;

// Noise points are at most bivariate (the t-statistic model uses (zeta, s)).
using NoisePoint = std::array<double, 2>;

struct HmmSpec {
  std::vector<std::string> states;   // ordered label set, size K >= 2
  std::vector<bool> is_h1;           // per state: false-null class membership
  std::vector<double> initial;       // law at the window's left edge
  bool time_varying = false;
  std::vector<Matrix> transitions;   // stationary: one matrix; else one per step
  int tv_start = 0;                  // step index of transitions[0] (P_{tv_start, tv_start+1})
  int kappa = 1;
  double phi_star = 0.0;

  int num_states() const { return static_cast<int>(states.size()); }

  // One-step matrix P_{t,t+1}; nearest stored matrix outside the stored range.
  const Matrix& transition_at(int t) const {
    if (!time_varying) return transitions[0];
    const int i = std::clamp(t - tv_start, 0, static_cast<int>(transitions.size()) - 1);
    return transitions[static_cast<std::size_t>(i)];
  }
};

// Two-state stationary reversible chain parameterized by the cross rates.
struct BinaryStationarySpec {
  double p01 = 0.0;
  double p10 = 0.0;

  BinaryStationarySpec(double p01_, double p10_) : p01(p01_), p10(p10_) {
    if (!(p01 > 0.0 && p01 < 1.0 && p10 > 0.0 && p10 < 1.0))
      throw Error("InvalidRate", "p01 and p10 must lie in (0,1)");
  }

  double p0() const { return p10 / (p01 + p10); }
  double p1() const { return p01 / (p01 + p10); }
  double r() const { return 1.0 - p01 - p10; }

  Matrix q() const {
    Matrix m(2, 2);
    m(0, 0) = 1.0 - p01;
    m(0, 1) = p01;
    m(1, 0) = p10;
    m(1, 1) = 1.0 - p10;
    return m;
  }

  // Tightest floor valid at lag 1.
  double tight_phi_star() const {
    return std::min(std::min(p01, p10), std::min(1.0 - p01, 1.0 - p10));
  }

  HmmSpec to_hmm(double phi_star = 0.0) const {
    HmmSpec s;
    s.states = {"0", "1"};
    s.is_h1 = {false, true};
    s.initial = {p0(), p1()};
    s.transitions = {q()};
    s.kappa = 1;
    s.phi_star = phi_star > 0.0 ? phi_star : tight_phi_star();
    return s;
  }
};

namespace detail {

inline void check_stochastic_rows(const Matrix& q, int which) {
  for (int i = 0; i < q.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < q.cols(); ++j) {
      if (q(i, j) < 0.0)
        throw Error("NonStochasticRow",
                    "negative entry in row " + std::to_string(i) +
                        " of transition matrix " + std::to_string(which));
      s += q(i, j);
    }
    if (std::abs(s - 1.0) > kStochasticTol)
      throw Error("NonStochasticRow",
                  "row " + std::to_string(i) + " of transition matrix " +
                      std::to_string(which) + " sums to " + format_double(s));
  }
}

}  // namespace detail

// A spec whose invariants have been checked; engine operations require one.
class ValidatedSpec {
 public:
  const HmmSpec& spec() const { return spec_; }
  int num_states() const { return spec_.num_states(); }
  int kappa() const { return spec_.kappa; }
  double phi_star() const { return spec_.phi_star; }
  double verified_floor() const { return verified_floor_; }
  bool binary() const { return spec_.num_states() == 2; }
  bool stationary() const { return !spec_.time_varying; }

  friend ValidatedSpec validate_spec(HmmSpec spec);

 private:
  explicit ValidatedSpec(HmmSpec spec) : spec_(std::move(spec)) {}
  HmmSpec spec_;
  double verified_floor_ = 0.0;
};

inline ValidatedSpec validate_spec(HmmSpec spec) {
  const int k = spec.num_states();
  if (k < 2) throw Error("InvalidStateSpace", "need at least two states");
  if (static_cast<int>(spec.is_h1.size()) != k ||
      static_cast<int>(spec.initial.size()) != k)
    throw Error("InvalidStateSpace", "field sizes disagree with state count");
  const int n_h1 = static_cast<int>(std::count(spec.is_h1.begin(), spec.is_h1.end(), true));
  if (n_h1 == 0 || n_h1 == k)
    throw Error("EmptyPartitionClass", "both H0 and H1 must be nonempty");

  double isum = 0.0;
  for (double p : spec.initial) {
    if (p <= 0.0) throw Error("InvalidInitialLaw", "initial entries must be strictly positive");
    isum += p;
  }
  if (std::abs(isum - 1.0) > kStochasticTol)
    throw Error("InvalidInitialLaw", "initial law sums to " + format_double(isum));

  if (spec.transitions.empty())
    throw Error("InvalidStateSpace", "no transition matrix given");
  for (std::size_t i = 0; i < spec.transitions.size(); ++i) {
    if (spec.transitions[i].rows() != k || spec.transitions[i].cols() != k)
      throw Error("InvalidStateSpace", "transition matrix has wrong shape");
    detail::check_stochastic_rows(spec.transitions[i], static_cast<int>(i));
  }
  if (spec.kappa < 1) throw Error("InvalidKappa", "kappa must be >= 1");
  if (!(spec.phi_star > 0.0 && spec.phi_star <= 1.0 / k))
    throw Error("InvalidFloor", "phi_star must lie in (0, 1/K]");

  // kappa-step floor. For time-varying maps the products are checked over
  // the stored range extended by kappa on each side (nearest-matrix rule
  // makes everything further out a repeat of an already-checked product).
  ValidatedSpec out(std::move(spec));
  const HmmSpec& s = out.spec_;
  const int lo = s.time_varying ? s.tv_start - s.kappa : 0;
  const int hi = s.time_varying
                     ? s.tv_start + static_cast<int>(s.transitions.size()) + s.kappa
                     : 0;
  double floor = 1.0;
  for (int start = lo; start <= hi; ++start) {
    Matrix p = Matrix::identity(k);
    for (int u = start; u < start + s.kappa; ++u) p = p * s.transition_at(u);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) {
        if (p(a, b) < s.phi_star)
          throw Error("FloorViolation",
                      "P_{" + std::to_string(start) + "," +
                          std::to_string(start + s.kappa) + "}(" + std::to_string(a) +
                          "," + std::to_string(b) + ") = " + format_double(p(a, b)) +
                          " < phi_star");
        floor = std::min(floor, p(a, b));
      }
  }
  out.verified_floor_ = floor;
  return out;
}

inline ValidatedSpec validate_spec(const BinaryStationarySpec& b, double phi_star = 0.0) {
  return validate_spec(b.to_hmm(phi_star));
}

// P_{st} as the ordered product of one-step matrices; P_{ss} = identity.
inline Matrix k_step(const ValidatedSpec& vs, int s, int t) {
  if (s > t) throw Error("IndexOutOfWindow", "k_step requires s <= t");
  Matrix p = Matrix::identity(vs.num_states());
  for (int u = s; u < t; ++u) p = p * vs.spec().transition_at(u);
  return p;
}

// D_{0t} = P_{0t}(1,1) - P_{0t}(0,1); equals r^t for stationary binary chains.
inline double d_coefficient(const BinaryStationarySpec& b, int t) {
  if (t < 1) throw Error("IndexOutOfWindow", "d_coefficient requires t >= 1");
  return std::pow(b.r(), t);
}

// Marginal laws on [-m, n], anchored at the left edge.
inline std::vector<std::vector<double>> marginals(const ValidatedSpec& vs, int m, int n) {
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(m + n + 1));
  out.push_back(vs.spec().initial);
  for (int t = -m; t < n; ++t)
    out.push_back(row_times(out.back(), vs.spec().transition_at(t)));
  return out;
}

// Reverse conditional P(eta_{t-1} = b | eta_t = a) from the marginal at t-1.
inline Matrix reverse_kernel(const ValidatedSpec& vs,
                             const std::vector<double>& marginal_prev, int t_prev) {
  const int k = vs.num_states();
  const Matrix& q = vs.spec().transition_at(t_prev);
  std::vector<double> marginal_next = row_times(marginal_prev, q);
  Matrix b(k, k);
  for (int a = 0; a < k; ++a) {
    if (marginal_next[a] <= 0.0)
      throw Error("DegenerateMarginal", "zero marginal while reversing the chain");
    for (int e = 0; e < k; ++e)
      b(a, e) = marginal_prev[e] * q(e, a) / marginal_next[a];
  }
  return b;
}

// Reverse kernels B_1..B_m for steps 0 -> -1 -> ... -> -m, window [-m, n].
inline std::vector<Matrix> reverse_kernels(const ValidatedSpec& vs, int m) {
  std::vector<std::vector<double>> laws = marginals(vs, m, 0);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(m));
  // B_s reverses the step -s -> -s+1; marginal_prev is the law at -s.
  for (int s = 1; s <= m; ++s)
    out.push_back(reverse_kernel(vs, laws[static_cast<std::size_t>(m - s)], -s));
  return out;
}

struct Trajectory {
  int m = 0;
  int n = 0;
  std::vector<int> eta;         // length m + n + 1, index t + m
  std::vector<NoisePoint> z;
  double epsilon = 0.0;
  std::vector<double> x;

  int length() const { return m + n + 1; }
  int idx(int t) const { return t + m; }
  int eta_at(int t) const { return eta[static_cast<std::size_t>(idx(t))]; }
  const NoisePoint& z_at(int t) const { return z[static_cast<std::size_t>(idx(t))]; }
  double x_at(int t) const { return x[static_cast<std::size_t>(idx(t))]; }
};

namespace detail {

inline int sample_categorical(const std::vector<double>& p, RngStream& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    acc += p[i];
    if (u <= acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

inline int sample_row(const Matrix& q, int row, RngStream& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (int j = 0; j + 1 < q.cols(); ++j) {
    acc += q(row, j);
    if (u <= acc) return j;
  }
  return q.cols() - 1;
}

}  // namespace detail

}  // namespace hmmfdr
