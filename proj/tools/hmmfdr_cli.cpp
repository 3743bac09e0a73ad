// hmmfdr: config-driven experiments over the HMM likelihood-ratio engine.
//
// Subcommands: simulate | posterior | expand | test | diagnose | mc-verify.
// Every artifact carries the config hash, seed, and software version, so
// identical configs produce identical files. Exit code 0 iff the requested
// invariant suites pass.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "hmmfdr/hmmfdr.hpp"

namespace fs = std::filesystem;
using namespace hmmfdr;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  bool quiet = false;
  bool seed_override = false;
  std::uint64_t seed = 0;
};

ExperimentConfig load_config(const CliOptions& opt) {
  std::ifstream in(opt.config_path);
  if (!in) throw Error("IoError", "cannot read config " + opt.config_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("ConfigError", std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg = parse_experiment_config(j);
  if (opt.seed_override) cfg.seed = opt.seed;
  return cfg;
}

unsigned thread_cap() {
  unsigned cap = std::thread::hardware_concurrency();
  if (cap == 0) cap = 1;
  if (const char* env = std::getenv("HMMFDR_THREADS")) {
    const long v = std::atol(env);
    if (v >= 1) cap = std::min<unsigned>(cap, static_cast<unsigned>(v));
  }
  return cap;
}

// Runs fn(i) for i in [0, count) across worker threads; results must be
// written to per-index slots so the outcome is independent of thread count.
template <typename Fn>
void parallel_for(long count, Fn&& fn) {
  const unsigned workers = std::min<unsigned>(thread_cap(), static_cast<unsigned>(count));
  if (workers <= 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (long i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

int finish(const std::string& out_dir, const std::string& stem, json summary,
           std::vector<Check> checks, bool quiet) {
  bool all = true;
  json jchecks = json::array();
  for (const Check& c : checks) {
    all = all && c.pass;
    jchecks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    if (!quiet)
      std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
                << (c.detail.empty() ? "" : "  (" + c.detail + ")") << '\n';
  }
  summary["checks"] = jchecks;
  summary["pass"] = all;
  write_json(out_dir + "/" + stem + "_summary.json", summary);
  return all ? 0 : 1;
}

// ---------------------------------------------------------------------------

int run_simulate(const ExperimentConfig& cfg, const CliOptions& opt) {
  const ValidatedSpec vs = validate_spec(cfg.spec);
  const auto model = make_model(cfg);
  const double eps = cfg.epsilon0();
  for (long k = 0; k < cfg.replicates; ++k) {
    const Trajectory traj =
        simulate(vs, *model, eps, cfg.m, cfg.n, cfg.seed ^ static_cast<std::uint64_t>(k));
    const std::string name = cfg.replicates == 1
                                 ? "trajectory.csv"
                                 : "trajectory_r" + std::to_string(k) + ".csv";
    CsvWriter csv(opt.out_dir + "/" + name, {"t", "eta", "z0", "z1", "x"},
                  csv_preamble(cfg));
    for (int t = -cfg.m; t <= cfg.n; ++t) {
      csv.field(t).field(traj.eta_at(t));
      csv.field(traj.z_at(t)[0]).field(traj.z_at(t)[1]);
      csv.field(traj.x_at(t)).end_row();
    }
  }
  write_json(opt.out_dir + "/simulate_metadata.json", run_metadata(cfg, eps));
  if (!opt.quiet) std::cout << "wrote " << cfg.replicates << " trajectory file(s)\n";
  return 0;
}

int run_posterior(const ExperimentConfig& cfg, const CliOptions& opt) {
  const ValidatedSpec vs = validate_spec(cfg.spec);
  const auto model = make_model(cfg);
  const double eps = cfg.epsilon0();
  const Trajectory traj = simulate(vs, *model, eps, cfg.m, cfg.n, cfg.seed);
  const PosteriorResult res = posterior(vs, *model, traj, eps, cfg.m, cfg.n);

  CsvWriter csv(opt.out_dir + "/posterior.csv", [&] {
    std::vector<std::string> h = {"t"};
    for (const auto& s : cfg.spec.states) h.push_back("post_" + s);
    h.insert(h.end(), {"rho", "log_flr", "log_llr"});
    return h;
  }(), csv_preamble(cfg));
  for (int t = -cfg.m; t <= cfg.n; ++t) {
    csv.field(t);
    for (int a = 0; a < vs.num_states(); ++a) csv.field(res.post_at(t)[a]);
    csv.field(res.rho_at(t)).field(res.log_flr_at(t)).field(res.log_llr_at(t));
    csv.end_row();
  }
  write_json(opt.out_dir + "/posterior_metadata.json", run_metadata(cfg, eps));

  std::vector<Check> checks;
  if (!cfg.schedule.empty()) {
    // Window schedule given: exhibit martingale settling of rho_{0,mn}.
    const MartingaleProbe probe =
        martingale_convergence_probe(vs, *model, traj, eps, 0, cfg.schedule);
    CsvWriter mcsv(opt.out_dir + "/martingale.csv", {"m", "n", "rho"},
                   csv_preamble(cfg));
    for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
      mcsv.field(cfg.schedule[i].first).field(cfg.schedule[i].second);
      mcsv.field(probe.rho[i]).end_row();
    }
    double head_max = 0.0;
    for (std::size_t i = 1; i < probe.rho.size() / 2 + 1 && i < probe.rho.size(); ++i)
      head_max = std::max(head_max, std::abs(probe.rho[i] - probe.rho[i - 1]));
    checks.push_back({"martingale_tail_settled",
                      probe.tail_max_successive <=
                          std::max(1e-8, 1e-3 * head_max),
                      "tail max successive " + format_double(probe.tail_max_successive)});
  }
  bool sums_ok = true, rho_ok = true, ratio_ok = true;
  for (int t = -cfg.m; t <= cfg.n; ++t) {
    double s = 0.0, h1 = 0.0;
    for (int a = 0; a < vs.num_states(); ++a) {
      s += res.post_at(t)[a];
      if (cfg.spec.is_h1[static_cast<std::size_t>(a)]) h1 += res.post_at(t)[a];
    }
    sums_ok = sums_ok && std::abs(s - 1.0) <= 1e-12;
    rho_ok = rho_ok && res.rho_at(t) > 0.0 && std::isfinite(res.rho_at(t));
    ratio_ok = ratio_ok && std::abs(res.rho_at(t) - h1 / (s - h1)) <= 1e-10;
  }
  checks.push_back({"posterior_rows_sum_to_one", sums_ok, ""});
  checks.push_back({"rho_strictly_positive_finite", rho_ok, ""});
  checks.push_back({"rho_matches_posterior_ratio", ratio_ok, ""});
  return finish(opt.out_dir, "posterior", run_metadata(cfg, eps), checks, opt.quiet);
}

int run_expand(const ExperimentConfig& cfg, const CliOptions& opt) {
  const ValidatedSpec vs = validate_spec(cfg.spec);
  const auto model = make_model(cfg);
  const int T = cfg.truncation > 0 ? cfg.truncation : suggested_truncation(vs);
  const int m = std::max(cfg.m, T), n = std::max(cfg.n, T);
  const Trajectory traj = simulate(vs, *model, cfg.epsilon0(), m, n, cfg.seed);

  const ExpansionResult fwd = r_double_prime(vs, *model, traj, T);
  const ExpansionResult bwd = backward_expansion(vs, *model, traj, T);

  CsvWriter csv(opt.out_dir + "/expansion.csv",
                {"t", "D0t", "d1", "d2", "cum_r1", "cum_r2"}, csv_preamble(cfg));
  double cum1 = 0.0, cum2 = 0.0;
  for (int t = 1; t <= T; ++t) {
    cum1 += fwd.d0t[static_cast<std::size_t>(t - 1)] * fwd.d1[static_cast<std::size_t>(t - 1)];
    cum2 += fwd.r2_terms[static_cast<std::size_t>(t - 1)];
    csv.field(t).field(fwd.d0t[static_cast<std::size_t>(t - 1)]);
    csv.field(fwd.d1[static_cast<std::size_t>(t - 1)]).field(fwd.d2[static_cast<std::size_t>(t - 1)]);
    csv.field(cum1).field(cum2).end_row();
  }

  // Invariant suite: analytic derivatives against finite differences of the
  // finite-window DP log ratio, and the stationary closed form.
  const auto log_gap = [&](double eps, int direction) {
    const PsiTable table = build_psi_table(vs, *model, traj, eps);
    return binary_log_ratio(vs, table, T, direction);
  };
  std::vector<Check> checks;
  {
    const double tol = std::max(1e-6, 1e-4 * std::abs(fwd.r1));
    const double fd1 = fd_first([&](double e) { return log_gap(e, +1); }, cfg.fd_h1, tol);
    checks.push_back({"r1_matches_fd", std::abs(fd1 - fwd.r1) <= tol,
                      "analytic " + format_double(fwd.r1) + " fd " + format_double(fd1)});
    const double tolb = std::max(1e-6, 1e-4 * std::abs(bwd.r1));
    const double fd1b = fd_first([&](double e) { return log_gap(e, -1); }, cfg.fd_h1, tolb);
    checks.push_back({"r1_bar_matches_fd", std::abs(fd1b - bwd.r1) <= tolb, ""});
  }
  {
    const double tol = std::max(1e-3, 1e-3 * std::abs(fwd.r2));
    const double fd2 = fd_second([&](double e) { return log_gap(e, +1); }, cfg.fd_h2, tol);
    checks.push_back({"r2_matches_fd", std::abs(fd2 - fwd.r2) <= tol,
                      "analytic " + format_double(fwd.r2) + " fd " + format_double(fd2)});
  }
  if (cfg.binary) {
    const ExpansionResult st = stationary_expansion(*cfg.binary, *model, traj, T);
    const bool ok = std::abs(st.r1 - fwd.r1) <= 1e-12 && std::abs(st.r2 - fwd.r2) <= 1e-12;
    checks.push_back({"stationary_matches_general", ok, ""});
  }

  json summary = run_metadata(cfg, cfg.epsilon0());
  summary["r1"] = fwd.r1;
  summary["r2"] = fwd.r2;
  summary["r1_bar"] = bwd.r1;
  summary["r2_bar"] = bwd.r2;
  summary["tail_bound"] = fwd.tail_bound;
  summary["truncation"] = T;
  return finish(opt.out_dir, "expand", summary, checks, opt.quiet);
}

int run_test(const ExperimentConfig& cfg, const CliOptions& opt) {
  const ValidatedSpec vs = validate_spec(cfg.spec);
  const auto model = make_model(cfg);
  const double eps = cfg.epsilon0();
  const int len = cfg.m + cfg.n + 1;

  struct Row {
    TruthEval flr, llr;
    bool same_sets = false;
    bool fdr_ok = false;
    bool q_ok = false;
  };
  std::vector<Row> rows(static_cast<std::size_t>(cfg.replicates));
  parallel_for(cfg.replicates, [&](long k) {
    const Trajectory traj =
        simulate(vs, *model, eps, cfg.m, cfg.n, cfg.seed ^ static_cast<std::uint64_t>(k));
    const PosteriorResult res = posterior(vs, *model, traj, eps, cfg.m, cfg.n);
    std::vector<double> q_flr, q_llr;
    std::vector<bool> truth;
    bool q_ok = true;
    for (int t = -cfg.m; t <= cfg.n; ++t) {
      double h0 = 0.0;
      for (int a = 0; a < vs.num_states(); ++a)
        if (!cfg.spec.is_h1[static_cast<std::size_t>(a)]) h0 += res.post_at(t)[a];
      q_ok = q_ok && h0 >= -1e-12 && h0 <= 1.0 + 1e-12;
      q_flr.push_back(std::clamp(h0, 0.0, 1.0));
      const double rho_local = std::exp(res.log_llr_at(t));
      q_llr.push_back(1.0 / (1.0 + rho_local));
      truth.push_back(cfg.spec.is_h1[static_cast<std::size_t>(traj.eta_at(t))]);
    }
    const TestOutcome flr = oracle_bh(q_flr, cfg.alpha);
    const TestOutcome llr = oracle_bh(q_llr, cfg.alpha);
    Row row;
    row.flr = evaluate_against_truth(flr, truth);
    row.llr = evaluate_against_truth(llr, truth);
    row.same_sets = flr.rejected == llr.rejected;
    row.fdr_ok = (flr.rejected.empty() || flr.expected_fdr <= cfg.alpha + 1e-12) &&
                 (llr.rejected.empty() || llr.expected_fdr <= cfg.alpha + 1e-12);
    row.q_ok = q_ok;
    rows[static_cast<std::size_t>(k)] = row;
  });

  CsvWriter csv(opt.out_dir + "/test.csv",
                {"replicate", "R", "V", "FDP", "true_rejections", "method"},
                csv_preamble(cfg));
  double fdp_flr = 0.0, fdp_llr = 0.0, tr_flr = 0.0, tr_llr = 0.0;
  bool all_same = true, all_fdr = true, all_q = true;
  for (long k = 0; k < cfg.replicates; ++k) {
    const Row& row = rows[static_cast<std::size_t>(k)];
    csv.field(k).field(row.flr.total_rejections).field(row.flr.false_rejections);
    csv.field(row.flr.fdp).field(row.flr.true_rejections).field(std::string("FLR"));
    csv.end_row();
    csv.field(k).field(row.llr.total_rejections).field(row.llr.false_rejections);
    csv.field(row.llr.fdp).field(row.llr.true_rejections).field(std::string("LLR"));
    csv.end_row();
    fdp_flr += row.flr.fdp;
    fdp_llr += row.llr.fdp;
    tr_flr += row.flr.true_rejections;
    tr_llr += row.llr.true_rejections;
    all_same = all_same && row.same_sets;
    all_fdr = all_fdr && row.fdr_ok;
    all_q = all_q && row.q_ok;
  }
  const double reps = static_cast<double>(cfg.replicates);

  std::vector<Check> checks;
  checks.push_back({"q_values_in_unit_interval", all_q, ""});
  checks.push_back({"expected_fdr_within_alpha", all_fdr, ""});
  const bool iid_chain =
      cfg.binary && std::abs(cfg.binary->r()) < 1e-15;
  if (iid_chain)
    checks.push_back({"flr_equals_llr_when_r_zero", all_same, ""});

  json summary = run_metadata(cfg, eps);
  summary["replicates"] = cfg.replicates;
  summary["hypotheses_per_replicate"] = len;
  summary["mean_fdp"] = {{"FLR", fdp_flr / reps}, {"LLR", fdp_llr / reps}};
  summary["mean_true_rejections"] = {{"FLR", tr_flr / reps}, {"LLR", tr_llr / reps}};
  return finish(opt.out_dir, "test", summary, checks, opt.quiet);
}

int run_diagnose(const ExperimentConfig& cfg, const CliOptions& opt) {
  const ValidatedSpec vs = validate_spec(cfg.spec);
  const auto model = make_model(cfg);
  const double eps = cfg.epsilon0();
  const Trajectory traj = simulate(vs, *model, eps, cfg.m, cfg.n, cfg.seed);
  const int n_max = cfg.n;
  const ContractionTrace tr =
      delta_trace(vs, *model, traj, eps, n_max, +1, true, cfg.fd_h2);

  CsvWriter csv(opt.out_dir + "/diagnose.csv",
                {"n", "delta", "delta_nu1", "delta_nu2", "bound"},
                csv_preamble(cfg));
  for (std::size_t i = 0; i < tr.ns.size(); ++i) {
    csv.field(tr.ns[i]).field(tr.delta[i]);
    csv.field(tr.delta_nu1[i]).field(tr.delta_nu2[i]);
    csv.field(tr.bound_checked ? tr.bound_alpha * std::pow(tr.bound_gamma, tr.ns[i])
                               : std::nan(""));
    csv.end_row();
  }

  std::vector<int> schedule;
  for (int n = vs.kappa(); n <= n_max; ++n) schedule.push_back(n);
  const LambdaTrace lt = lambda_convergence_trace(vs, *model, traj, eps, schedule);
  bool lambda_bounds_ok = true;
  if (vs.kappa() == 1) {
    const double lo = vs.phi_star() / (1.0 - vs.phi_star());
    for (const auto& row : lt.lambda)
      for (double v : row)
        lambda_bounds_ok = lambda_bounds_ok && v >= lo - 1e-12 && v <= 1.0 / lo + 1e-12;
  }

  std::vector<Check> checks;
  json sup_gap_json;
  if (cfg.epsilon_grid.size() > 1) {
    // Uniformity probe over the epsilon grid: the Lemma-5 envelope must
    // hold at every grid point; the sup-gap profile itself goes into the
    // summary as plot-ready data.
    std::vector<int> probe_schedule;
    for (int n = vs.kappa(); n <= n_max; n += std::max(1, n_max / 6))
      probe_schedule.push_back(n);
    if (probe_schedule.back() != n_max) probe_schedule.push_back(n_max);
    std::vector<double> sup_gap(probe_schedule.size(), 0.0);
    bool envelope_all = true;
    for (double e : cfg.epsilon_grid) {
      const LambdaTrace t2 = lambda_convergence_trace(vs, *model, traj, e, probe_schedule);
      envelope_all = envelope_all && t2.envelope_ok;
      for (std::size_t i = 0; i < sup_gap.size(); ++i)
        sup_gap[i] = std::max(sup_gap[i], t2.gap_to_last[i]);
    }
    checks.push_back({"lambda_envelope_over_grid", envelope_all, ""});
    sup_gap_json["n"] = probe_schedule;
    sup_gap_json["sup_gap"] = sup_gap;
  }
  checks.push_back({"delta_nonincreasing", tr.monotonicity_violations.empty(), ""});
  if (tr.bound_checked)
    checks.push_back({"delta_within_closed_form_bound", tr.bound_ok, ""});
  checks.push_back({"lambda_envelope", lt.envelope_ok, ""});
  if (vs.kappa() == 1)
    checks.push_back({"lambda_within_floor_bounds", lambda_bounds_ok, ""});

  json summary = run_metadata(cfg, eps);
  if (!sup_gap_json.is_null()) summary["uniformity_probe"] = sup_gap_json;
  summary["fitted_rate"] = tr.fitted_rate;
  summary["bound_rate"] = tr.bound_checked ? std::log(tr.bound_gamma) : std::nan("");
  summary["violations"] = tr.monotonicity_violations;
  return finish(opt.out_dir, "diagnose", summary, checks, opt.quiet);
}

int run_mc_verify(const ExperimentConfig& cfg, const CliOptions& opt) {
  const ValidatedSpec vs = validate_spec(cfg.spec);
  const auto model = make_model(cfg);
  const int T = cfg.truncation > 0 ? cfg.truncation : suggested_truncation(vs);
  std::vector<Check> checks;

  {  // E[r'(0) | eta] = 0
    const Trajectory tmpl = simulate(vs, *model, 0.0, T, T, cfg.seed);
    const MeanSe ms =
        expected_r1_given_eta_check(vs, *model, tmpl, T, cfg.replicates, cfg.seed + 1);
    checks.push_back({"expected_r1_given_eta_zero",
                      std::abs(ms.mean) <= 4.0 * ms.se,
                      "mean " + format_double(ms.mean) + " se " + format_double(ms.se)});
  }

  for (int eta0 = 0; eta0 <= 1; ++eta0) {  // E[r''(0) | eta_0]
    const double truth = expected_r2_given_eta0(vs, *model, eta0);
    std::vector<double> draws(static_cast<std::size_t>(cfg.replicates));
    parallel_for(cfg.replicates, [&](long k) {
      RngStream rng = stream_for_replicate(cfg.seed + 7 + eta0, static_cast<std::uint64_t>(k));
      Trajectory traj;
      traj.m = 0;
      traj.n = T;
      traj.eta.resize(static_cast<std::size_t>(T + 1));
      traj.eta[0] = eta0;
      for (int t = 0; t < T; ++t)
        traj.eta[static_cast<std::size_t>(t + 1)] =
            detail::sample_row(vs.spec().transition_at(t), traj.eta[static_cast<std::size_t>(t)], rng);
      traj.z.resize(static_cast<std::size_t>(T + 1));
      for (auto& z : traj.z) z = model->sample_noise(rng);
      traj.x = assemble_observations(*model, traj.eta, traj.z, 0.0);
      draws[static_cast<std::size_t>(k)] = r_double_prime(vs, *model, traj, T).r2;
    });
    const MeanSe ms = mean_and_se(draws);
    checks.push_back({"expected_r2_given_eta0_" + std::to_string(eta0),
                      std::abs(ms.mean - truth) <= 4.0 * ms.se,
                      "mean " + format_double(ms.mean) + " truth " + format_double(truth)});
  }

  {  // Theorem 4 interchange at the configured epsilon
    const InterchangeCheck ic = theorem4_interchange_check(
        vs, *model, cfg.epsilon0(), std::min(cfg.n, 12), 1,
        std::min<long>(cfg.replicates, 2000), cfg.seed + 99);
    checks.push_back({"theorem4_interchange", ic.pass(),
                      "coarse " + format_double(ic.mean_coarse) + " tight " +
                          format_double(ic.mean_tight)});
  }

  {  // Fisher identities, both routes
    const long samples = std::max<long>(cfg.replicates, 10000);
    const FisherCheck a = fisher_info_check(*model, samples, cfg.seed + 3);
    const FisherCheck b = fisher_mixed_check(*model, samples, cfg.seed + 4);
    checks.push_back({"fisher_score_variance", a.brackets(),
                      "mc " + format_double(a.mc_estimate) + " closed " +
                          format_double(a.closed_form)});
    checks.push_back({"fisher_mixed_identity", b.brackets(),
                      "mc " + format_double(b.mc_estimate) + " closed " +
                          format_double(b.closed_form)});
  }

  json summary = run_metadata(cfg, cfg.epsilon0());
  summary["replicates"] = cfg.replicates;
  return finish(opt.out_dir, "mc_verify", summary, checks, opt.quiet);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hmmfdr: HMM conditional likelihood ratios, weak-signal expansions, "
               "contraction diagnostics, and oracle FDR testing"};
  app.require_subcommand(1);

  CliOptions opt;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_flag("--quiet", opt.quiet, "suppress progress output");
    sub->add_option("--seed", opt.seed, "override config seed")
        ->each([&](const std::string&) { opt.seed_override = true; });
  };

  CLI::App* c_sim = app.add_subcommand("simulate", "write trajectory files");
  CLI::App* c_post = app.add_subcommand("posterior", "posterior probabilities and ratios");
  CLI::App* c_exp = app.add_subcommand("expand", "weak-signal expansion terms");
  CLI::App* c_test = app.add_subcommand("test", "oracle FDR testing over replicates");
  CLI::App* c_diag = app.add_subcommand("diagnose", "contraction diagnostics");
  CLI::App* c_mcv = app.add_subcommand("mc-verify", "Monte Carlo identity brackets");
  for (CLI::App* sub : {c_sim, c_post, c_exp, c_test, c_diag, c_mcv}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig cfg = load_config(opt);
    fs::create_directories(opt.out_dir);
    if (c_sim->parsed()) return run_simulate(cfg, opt);
    if (c_post->parsed()) return run_posterior(cfg, opt);
    if (c_exp->parsed()) return run_expand(cfg, opt);
    if (c_test->parsed()) return run_test(cfg, opt);
    if (c_diag->parsed()) return run_diagnose(cfg, opt);
    if (c_mcv->parsed()) return run_mc_verify(cfg, opt);
  } catch (const Error& e) {
    std::cerr << "error [" << e.kind() << "] in " << opt.config_path << ": "
              << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error in " << opt.config_path << ": " << e.what() << '\n';
    return 2;
  }
  return 2;
}
