// Noise/signal interaction families: the observation map phi, the signal
// manifestations theta_a, and the observation log-density lambda(x, theta)
// with the partial derivatives the weak-signal expansions consume.
//
// Built-in families:
//   translation: phi(z,v) = z + v,      theta_a(eps) = eps * a
//   scaling:     phi(z,v) = exp(-v) z,  theta_a(eps) = eps * a
//   t-statistic: phi((zeta,s),v) = sqrt(nu) (zeta+v)/s,
//                theta_a(eps) = sqrt(nu+1) a eps, noncentral-t density
//
// Log-densities are fully normalized so absolute-density checks
// (quadrature normalization) work alongside the ratio quantities.
#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>

#include "hmmfdr/hmm.hpp"
#include "hmmfdr/rng.hpp"
#include "hmmfdr/util.hpp"

namespace hmmfdr {

struct LambdaPartials {
  double d_theta = 0.0;    // d lambda / d theta           at (x, 0)
  double d_theta2 = 0.0;   // d^2 lambda / d theta^2       at (x, 0)
  double d_x_theta = 0.0;  // d^2 lambda / dx d theta      at (x, 0)
  double d_x = 0.0;        // d lambda / d x               at (x, 0)
};

class InteractionModel {
 public:
  virtual ~InteractionModel() = default;

  virtual std::string name() const = 0;
  virtual int noise_dim() const = 0;

  virtual double phi(const NoisePoint& z, double v) const = 0;
  virtual double phi_dv(const NoisePoint& z, double v) const = 0;

  // theta families are linear in epsilon for every built-in model, so the
  // first derivative is constant and the second vanishes.
  virtual double theta(int a, double epsilon) const = 0;
  virtual double theta_d1(int a) const = 0;
  virtual double theta_d2(int a) const { (void)a; return 0.0; }

  virtual double log_density(double x, double vartheta) const = 0;
  virtual LambdaPartials lambda_partials_at_zero(double x) const = 0;

  // General-point partials, used by derivative cross-checks.
  virtual double lambda_dx(double x, double vartheta) const = 0;
  virtual double lambda_dtheta(double x, double vartheta) const = 0;

  virtual NoisePoint sample_noise(RngStream& rng) const = 0;
  virtual double fisher_info_at_zero() const = 0;

  // Models whose moment assumptions fail must refuse expectation operations.
  virtual void require_expectation_ops() const {}

  // Var[d_0'(0)] = [theta_1'(0) - theta_0'(0)]^2 J(0).
  double var_d0_prime() const {
    const double dd = theta_d1(1) - theta_d1(0);
    return dd * dd * fisher_info_at_zero();
  }
};

// A univariate noise density h(z) = exp(-V(z)) with analytic derivatives.
// score_variance_* are the model Fisher informations J(0) = Var of the
// score at theta = 0 for the two phi families that consume the potential.
struct Potential {
  std::function<double(double)> v;
  std::function<double(double)> dv;
  std::function<double(double)> d2v;
  std::function<double(RngStream&)> sample;
  double score_variance_translation = 0.0;  // int V'(x)^2 e^{-V(x)} dx
  double score_variance_scaling = 0.0;      // int (1 - x V'(x))^2 e^{-V(x)} dx
};

inline Potential gaussian_potential() {
  Potential p;
  p.v = [](double z) { return 0.5 * z * z + 0.5 * std::log(2.0 * std::numbers::pi); };
  p.dv = [](double z) { return z; };
  p.d2v = [](double) { return 1.0; };
  p.sample = [](RngStream& rng) { return rng.normal(); };
  p.score_variance_translation = 1.0;  // E Z^2
  p.score_variance_scaling = 2.0;      // Var(1 - Z^2) = E Z^4 - 1
  return p;
}

namespace detail {

class TranslationModel final : public InteractionModel {
 public:
  explicit TranslationModel(Potential pot) : pot_(std::move(pot)) {}

  std::string name() const override { return "translation"; }
  int noise_dim() const override { return 1; }

  double phi(const NoisePoint& z, double v) const override { return z[0] + v; }
  double phi_dv(const NoisePoint&, double) const override { return 1.0; }

  double theta(int a, double epsilon) const override { return epsilon * a; }
  double theta_d1(int a) const override { return a; }

  double log_density(double x, double vartheta) const override {
    return -pot_.v(x - vartheta);
  }
  LambdaPartials lambda_partials_at_zero(double x) const override {
    return {pot_.dv(x), -pot_.d2v(x), pot_.d2v(x), -pot_.dv(x)};
  }
  double lambda_dx(double x, double vartheta) const override {
    return -pot_.dv(x - vartheta);
  }
  double lambda_dtheta(double x, double vartheta) const override {
    return pot_.dv(x - vartheta);
  }

  NoisePoint sample_noise(RngStream& rng) const override {
    return {pot_.sample(rng), 0.0};
  }
  double fisher_info_at_zero() const override {
    return pot_.score_variance_translation;
  }

 private:
  Potential pot_;
};

class ScalingModel final : public InteractionModel {
 public:
  explicit ScalingModel(Potential pot) : pot_(std::move(pot)) {}

  std::string name() const override { return "scaling"; }
  int noise_dim() const override { return 1; }

  double phi(const NoisePoint& z, double v) const override {
    return std::exp(-v) * z[0];
  }
  double phi_dv(const NoisePoint& z, double v) const override {
    return -std::exp(-v) * z[0];
  }

  double theta(int a, double epsilon) const override { return epsilon * a; }
  double theta_d1(int a) const override { return a; }

  // f(x, v) = e^v h(e^v x), so lambda(x, v) = v - V(e^v x).
  double log_density(double x, double vartheta) const override {
    return vartheta - pot_.v(std::exp(vartheta) * x);
  }
  LambdaPartials lambda_partials_at_zero(double x) const override {
    const double v1 = pot_.dv(x), v2 = pot_.d2v(x);
    return {1.0 - x * v1, -(x * x * v2 + x * v1), -(x * v2 + v1), -v1};
  }
  double lambda_dx(double x, double vartheta) const override {
    const double e = std::exp(vartheta);
    return -pot_.dv(e * x) * e;
  }
  double lambda_dtheta(double x, double vartheta) const override {
    const double e = std::exp(vartheta);
    return 1.0 - pot_.dv(e * x) * e * x;
  }

  NoisePoint sample_noise(RngStream& rng) const override {
    return {pot_.sample(rng), 0.0};
  }
  double fisher_info_at_zero() const override {
    return pot_.score_variance_scaling;
  }

 private:
  Potential pot_;
};

// Noncentral t density evaluated through its power series in the
// noncentrality parameter, truncated adaptively at relative 1e-14.
class TStatisticModel final : public InteractionModel {
 public:
  explicit TStatisticModel(int nu) : nu_(nu) {
    if (nu < 1) throw Error("DegreesOfFreedomTooSmall", "nu must be >= 1");
    const double half = 0.5 * (nu_ + 1.0);
    log_c_nu_ = 0.5 * nu_ * std::log(static_cast<double>(nu_)) + std::lgamma(half) -
                0.5 * std::log(std::numbers::pi) - std::lgamma(0.5 * nu_);
    c1_ = std::sqrt(2.0) * std::exp(std::lgamma(0.5 * nu_ + 1.0) - std::lgamma(half));
    c2_ = nu_ + 1.0;  // c_{k+2} = (nu + k + 1) c_k with c_0 = 1
  }

  std::string name() const override { return "t_statistic"; }
  int noise_dim() const override { return 2; }
  int nu() const { return nu_; }

  double phi(const NoisePoint& z, double v) const override {
    return std::sqrt(static_cast<double>(nu_)) * (z[0] + v) / z[1];
  }
  double phi_dv(const NoisePoint& z, double) const override {
    return std::sqrt(static_cast<double>(nu_)) / z[1];
  }

  double theta(int a, double epsilon) const override {
    return std::sqrt(nu_ + 1.0) * a * epsilon;
  }
  double theta_d1(int a) const override { return std::sqrt(nu_ + 1.0) * a; }

  double log_density(double x, double vartheta) const override {
    const Series s = series(x, vartheta);
    if (!(s.sum > 0.0) || !std::isfinite(s.sum))
      throw Error("NonFiniteDensity", "noncentral-t series left the positive range");
    return log_t_central(x) - 0.5 * vartheta * vartheta + std::log(s.sum);
  }

  LambdaPartials lambda_partials_at_zero(double x) const override {
    const double g = nu_ + x * x;
    LambdaPartials p;
    p.d_theta = c1_ * x / std::sqrt(g);
    p.d_theta2 = (c2_ - c1_ * c1_) * x * x / g - 1.0;
    p.d_x_theta = c1_ * nu_ / (g * std::sqrt(g));
    p.d_x = -(nu_ + 1.0) * x / g;
    return p;
  }

  double lambda_dx(double x, double vartheta) const override {
    const double g = nu_ + x * x;
    const Series s = series(x, vartheta);
    // d/dx of ln S: the k-weighted series times w'(x)/w(x); at x = 0 only
    // the k = 1 term survives.
    double ds_dx;
    if (x == 0.0) {
      ds_dx = c1_ * vartheta * nu_ / std::pow(g, 1.5);
    } else {
      const double w = x / std::sqrt(g);
      const double dw = nu_ / std::pow(g, 1.5);
      ds_dx = s.ksum * dw / w;
    }
    return -(nu_ + 1.0) * x / g + ds_dx / s.sum;
  }

  double lambda_dtheta(double x, double vartheta) const override {
    const Series s = series(x, vartheta);
    double ds_dt;
    if (vartheta == 0.0) {
      ds_dt = c1_ * x / std::sqrt(nu_ + x * x);
    } else {
      ds_dt = s.ksum / vartheta;
    }
    return -vartheta + ds_dt / s.sum;
  }

  NoisePoint sample_noise(RngStream& rng) const override {
    return {rng.normal(), std::sqrt(rng.chi_square(nu_))};
  }

  // J(0) = c_1^2 E[x^2/(nu + x^2)] = c_1^2 / (nu + 1).
  double fisher_info_at_zero() const override { return c1_ * c1_ / (nu_ + 1.0); }

  void require_expectation_ops() const override {
    // Assumption 5 with q = 2 needs E[S^{-12}] < infinity, hence nu > 12.
    if (nu_ <= 12)
      throw Error("DegreesOfFreedomTooSmall",
                  "expectation operations need nu > 12, got nu = " + std::to_string(nu_));
  }

  double log_t_central(double x) const {
    return log_c_nu_ - 0.5 * (nu_ + 1.0) * std::log(nu_ + x * x);
  }

 private:
  struct Series {
    double sum = 1.0;   // S       = sum_k c_k u^k / k!,  u = w * vartheta
    double ksum = 0.0;  // k-sum   = sum_k k c_k u^k / k!
  };

  Series series(double x, double vartheta) const {
    static constexpr double kRelTol = 1e-14;
    static constexpr int kMaxTerms = 800;
    const double u = x / std::sqrt(nu_ + x * x) * vartheta;
    Series s;
    if (u == 0.0) return s;
    double term_prev2 = 1.0;        // k = 0 term
    double term_prev = c1_ * u;     // k = 1 term
    s.sum += term_prev;
    s.ksum += term_prev;
    for (int k = 2; k < kMaxTerms; ++k) {
      // c_{k} = (nu + k - 1) c_{k-2}; term_k = term_{k-2} (nu+k-1) u^2 / (k(k-1))
      const double term = term_prev2 * (nu_ + k - 1.0) * u * u /
                          (static_cast<double>(k) * (k - 1.0));
      s.sum += term;
      s.ksum += k * term;
      const bool past_peak = std::abs(term) < std::abs(term_prev2);
      term_prev2 = term_prev;
      term_prev = term;
      if (past_peak && std::abs(term) < kRelTol * std::abs(s.sum) &&
          std::abs(term_prev2) < kRelTol * std::abs(s.sum))
        return s;
    }
    throw Error("NonFiniteDensity", "noncentral-t series failed to converge");
  }

  int nu_;
  double log_c_nu_;
  double c1_;
  double c2_;
};

}  // namespace detail

inline std::shared_ptr<const InteractionModel> translation_model(Potential pot) {
  return std::make_shared<detail::TranslationModel>(std::move(pot));
}

inline std::shared_ptr<const InteractionModel> scaling_model(Potential pot) {
  return std::make_shared<detail::ScalingModel>(std::move(pot));
}

inline std::shared_ptr<const InteractionModel> t_statistic_model(int nu) {
  return std::make_shared<detail::TStatisticModel>(nu);
}

// ---------------------------------------------------------------------------
// Trajectory synthesis

inline std::vector<double> assemble_observations(const InteractionModel& model,
                                                 const std::vector<int>& eta,
                                                 const std::vector<NoisePoint>& z,
                                                 double epsilon) {
  std::vector<double> x(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i)
    x[i] = model.phi(z[i], model.theta(eta[i], epsilon));
  return x;
}

// Draw eta from the initial law at the left edge and one-step transitions,
// then iid noise, then assemble x. Identical seed, identical trajectory.
inline Trajectory simulate(const ValidatedSpec& vs, const InteractionModel& model,
                           double epsilon, int m, int n, std::uint64_t seed) {
  Trajectory traj;
  traj.m = m;
  traj.n = n;
  traj.epsilon = epsilon;
  const int len = m + n + 1;
  RngStream rng(seed);
  traj.eta.resize(static_cast<std::size_t>(len));
  traj.eta[0] = detail::sample_categorical(vs.spec().initial, rng);
  for (int t = -m; t < n; ++t)
    traj.eta[static_cast<std::size_t>(traj.idx(t) + 1)] =
        detail::sample_row(vs.spec().transition_at(t), traj.eta[static_cast<std::size_t>(traj.idx(t))], rng);
  traj.z.resize(static_cast<std::size_t>(len));
  for (auto& zt : traj.z) zt = model.sample_noise(rng);
  traj.x = assemble_observations(model, traj.eta, traj.z, epsilon);
  return traj;
}

// Monte Carlo check of the Fisher identity J(0) = E[(d lambda/d theta)^2]
// under x = phi(z, 0).
struct FisherCheck {
  double closed_form = 0.0;
  double mc_estimate = 0.0;
  double std_error = 0.0;
  bool brackets(double n_se = 4.0) const {
    return std::abs(mc_estimate - closed_form) <= n_se * std_error;
  }
};

inline FisherCheck fisher_info_check(const InteractionModel& model, long samples,
                                     std::uint64_t seed) {
  model.require_expectation_ops();
  RngStream rng(seed);
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(samples));
  for (long i = 0; i < samples; ++i) {
    const NoisePoint z = model.sample_noise(rng);
    const double x = model.phi(z, 0.0);
    const double s = model.lambda_partials_at_zero(x).d_theta;
    scores.push_back(s * s);
  }
  const MeanSe ms = mean_and_se(scores);
  return {model.fisher_info_at_zero(), ms.mean, ms.se};
}

// Same bracket for the mixed form E[d^2 lambda/dx dtheta * d phi/dv] = J(0).
inline FisherCheck fisher_mixed_check(const InteractionModel& model, long samples,
                                      std::uint64_t seed) {
  model.require_expectation_ops();
  RngStream rng(seed);
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(samples));
  for (long i = 0; i < samples; ++i) {
    const NoisePoint z = model.sample_noise(rng);
    const double x = model.phi(z, 0.0);
    vals.push_back(model.lambda_partials_at_zero(x).d_x_theta * model.phi_dv(z, 0.0));
  }
  const MeanSe ms = mean_and_se(vals);
  return {model.fisher_info_at_zero(), ms.mean, ms.se};
}

}  // namespace hmmfdr
