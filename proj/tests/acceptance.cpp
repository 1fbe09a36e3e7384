// Acceptance checks, one PASS/FAIL line per criterion.
//
//   acceptance [--only fast|benchmark]
//
// fast: criteria 1-7 and 10. benchmark: 8 and 9 (Fashion-MNIST, needs
// $ARTURO_DATA_ROOT). No flag runs everything.

#include "arturo/baselines.hpp"
#include "arturo/data.hpp"
#include "arturo/harness.hpp"
#include "arturo/model.hpp"
#include "arturo/optimizer.hpp"
#include "arturo/surrogate_filter.hpp"
#include "arturo/trust_region.hpp"
#include "oracles/baseline_trajectories.hpp"
#include "oracles/kalman_dense.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace arturo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double dist(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - y[j]) * (x[j] - y[j]);
  return std::sqrt(s);
}

EtaSolverFn constant_eta(double eta) {
  return [eta](std::span<const double> a, std::span<const double> b,
               const ParameterDistribution& prev, const TrustRegionParams& tr,
               const DualState&) {
    EtaSolution sol;
    sol.eta = eta;
    sol.mu = primal_mean(a, b, prev, eta, tr);
    sol.c_mu = kl_mean_term(sol.mu, prev);
    return sol;
  };
}

// 1 -------------------------------------------------------------------------
Outcome kalman_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(-3.0, 3.0), qd(0.0, 0.1), rd(0.01, 10.0);
  std::uniform_int_distribution<int> len(1, 20);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const double q = qd(rng), r = rd(rng), p0 = 5e-5;
    std::vector<double> mus, gs;
    for (int t = len(rng); t > 0; --t) {
      mus.push_back(u(rng));
      gs.push_back(u(rng));
    }
    auto s = init_state(1, p0);
    for (std::size_t t = 0; t < mus.size(); ++t) {
      filter_update(s, std::span(&mus[t], 1), std::span(&gs[t], 1), q, r);
    }
    const auto ref = oracle::information_filter(p0, q, r, mus, gs);
    const Eigen::Vector2d m(s.a[0], s.b[0]);
    Eigen::Matrix2d P;
    P << s.p11[0], s.p12[0], s.p12[0], s.p22[0];
    worst = std::max(worst, (m - ref.m).norm() / std::max(ref.m.norm(), 1e-300));
    worst = std::max(worst, (P - ref.P).norm() / ref.P.norm());
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 5.0,
          fmt("200 sequences, max rel err %.2e (tol 1e-8), %.3f s (limit 5 s)", worst, secs)};
}

// 2 -------------------------------------------------------------------------
Outcome trust_region_constraint() {
  std::mt19937_64 rng(777);
  std::uniform_int_distribution<std::size_t> nd(1, 100);
  std::uniform_real_distribution<double> ad(0.0, 10.0), bd(-10.0, 10.0), md(-1.0, 1.0),
      ld(std::log(1e-4), 0.0), ed(std::log(1e-3), 0.0), wd(std::log(1e-4), std::log(1e4));
  int ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = nd(rng);
    std::vector<double> a(n), b(n);
    ParameterDistribution prev;
    for (std::size_t j = 0; j < n; ++j) {
      a[j] = ad(rng);
      b[j] = bd(rng);
      prev.mu.push_back(md(rng));
      prev.sigma2.push_back(std::exp(ld(rng)));
    }
    TrustRegionParams tr;
    tr.epsilon = std::exp(ed(rng));
    tr.rho = trial % 4 == 0 ? 0.0 : 0.058657;
    const auto sol = solve_eta(a, b, prev, tr, DualState{std::exp(wd(rng))});
    const double c = kl_mean_term(sol.mu, prev);
    if ((sol.eta == 0.0 && c <= tr.epsilon) || std::abs(c - tr.epsilon) <= 0.1 * tr.epsilon) ++ok;
  }

  // Warm-started trajectory: noisy 100-d quadratic with the default optimizer.
  const auto task = make_quadratic_task(100, 0.1, 10.0, 1.0, 5);
  ArturoConfig cfg;
  auto s = init(100, cfg, std::vector<double>(100, 0.0));
  std::vector<int> iters;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const auto d = step(s, synthetic_grad(task, s.dist.mu, t, 32), cfg);
    if (!d.interior) iters.push_back(d.bisection_iterations);
  }
  double median = -1.0;
  if (!iters.empty()) {
    std::sort(iters.begin(), iters.end());
    const std::size_t k = iters.size();
    median = k % 2 ? iters[k / 2] : 0.5 * (iters[k / 2 - 1] + iters[k / 2]);
  }
  const bool pass = ok == 1000 && !iters.empty() && median <= 6.0;
  return {pass, fmt("%d/1000 instances satisfy the rule; median bisection iterations %.1f "
                    "over %zu constrained steps (limit 6)",
                    ok, median, iters.size())};
}

// 3 -------------------------------------------------------------------------
Outcome structural_invariants() {
  bool sigma_pos = true, eta_indep = true;
  const auto task = make_quadratic_task(20, 0.1, 10.0, 1.0, 9);
  ArturoConfig cfg;
  auto s = init(20, cfg, std::vector<double>(20, 0.1));
  for (std::uint64_t t = 0; t < 300; ++t) {
    const auto g = synthetic_grad(task, s.dist.mu, t, 4);
    std::vector<std::vector<double>> sig;
    for (double eta : {0.1, 1.0, 10.0}) {
      auto probe = s;
      step(probe, g, cfg, constant_eta(eta));
      sig.push_back(probe.dist.sigma2);
    }
    eta_indep = eta_indep && sig[0] == sig[1] && sig[1] == sig[2];
    step(s, g, cfg);
    for (double v : s.dist.sigma2) sigma_pos = sigma_pos && v > 0.0;
  }

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ad(0.1, 10.0), bd(-10.0, 10.0), md(-1.0, 1.0),
      sd(1e-4, 1.0);
  double far_worst = 0.0, newton_worst = 0.0;
  TrustRegionParams flat;
  flat.rho = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 50;
    std::vector<double> a(n), b(n);
    ParameterDistribution prev;
    for (std::size_t j = 0; j < n; ++j) {
      a[j] = ad(rng);
      b[j] = bd(rng);
      prev.mu.push_back(md(rng));
      prev.sigma2.push_back(sd(rng));
    }
    const auto far = primal_mean(a, b, prev, 1e12, flat);
    far_worst = std::max(far_worst, dist(far, prev.mu) / dist(prev.mu, std::vector<double>(n, 0.0)));
    const auto newton = primal_mean(a, b, prev, 0.0, flat);
    for (std::size_t j = 0; j < n; ++j) {
      const double want = -b[j] / a[j];
      newton_worst = std::max(newton_worst, std::abs(newton[j] - want) / std::max(1.0, std::abs(want)));
    }
  }
  return {sigma_pos && eta_indep && far_worst < 1e-6 && newton_worst <= 1e-10,
          fmt("sigma2>0 %s; sigma2 eta-independent %s; far-limit rel move %.1e (tol 1e-6); "
              "newton err %.1e (tol 1e-10)",
              sigma_pos ? "yes" : "no", eta_indep ? "yes" : "no", far_worst, newton_worst)};
}

// 4 -------------------------------------------------------------------------
Outcome quadratic_convergence() {
  const auto t0 = Clock::now();
  std::size_t worst = 0;
  bool all = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto task = make_quadratic_task(10, 0.1, 10.0, 0.0, seed);
    ArturoConfig cfg;
    cfg.epsilon = 0.01;
    auto s = init(10, cfg, std::vector<double>(10, 0.0));
    std::size_t hit = 0;
    for (std::size_t t = 1; t <= 200 && hit == 0; ++t) {
      step(s, synthetic_grad(task, s.dist.mu, t), cfg);
      if (dist(s.dist.mu, task.theta_star) < 1e-3) hit = t;
    }
    all = all && hit > 0;
    worst = std::max(worst, hit);
  }
  const double secs = seconds_since(t0);
  return {all && secs < 1.0,
          fmt("5 tasks reach 1e-3 within %zu steps (limit 200)%s, %.3f s (limit 1 s)", worst,
              all ? "" : " [some did not]", secs)};
}

// 5 -------------------------------------------------------------------------
Outcome noisy_quadratic() {
  constexpr std::size_t kSteps = 2000, kSamples = 32;
  const double lrs[5] = {0.001, 0.003, 0.01, 0.03, 0.1};
  std::vector<double> art(5);
  std::vector<std::vector<double>> sgd(5, std::vector<double>(5));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto task = make_quadratic_task(10, 0.1, 10.0, 1.0, 100 + seed);
    ArturoConfig cfg;
    cfg.epsilon = 0.01;
    auto s = init(10, cfg, std::vector<double>(10, 0.0));
    for (std::uint64_t t = 0; t < kSteps; ++t) {
      step(s, synthetic_grad(task, s.dist.mu, seed * 1000003 + t, kSamples), cfg);
    }
    art[seed] = dist(s.dist.mu, task.theta_star);
    for (int k = 0; k < 5; ++k) {
      BaselineConfig bc;
      bc.learning_rate = lrs[k];
      bc.momentum = 0.0;
      auto bs = init_baseline(10, bc);
      std::vector<double> theta(10, 0.0);
      for (std::uint64_t t = 0; t < kSteps; ++t) {
        sgd_step(bs, theta, synthetic_grad(task, theta, seed * 1000003 + t, kSamples), bc);
      }
      sgd[k][seed] = dist(theta, task.theta_star);
    }
  }
  int best = 0;
  auto mean = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x / static_cast<double>(v.size());
    return m;
  };
  for (int k = 1; k < 5; ++k) {
    if (mean(sgd[k]) < mean(sgd[best])) best = k;
  }
  double worst_ratio = 0.0;
  for (int seed = 0; seed < 5; ++seed) {
    worst_ratio = std::max(worst_ratio, art[seed] / sgd[best][seed]);
  }
  return {worst_ratio <= 1.5,
          fmt("arturo mean dist %.4f; tuned sgd (lr %g) mean dist %.4f; worst per-seed "
              "ratio %.3f (limit 1.5)",
              mean(art), lrs[best], mean(sgd[best]), worst_ratio)};
}

// 6 -------------------------------------------------------------------------
Outcome gradient_check() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const char* spec : {"mlp:784-256-10", "cnn:1x28x28-4-8-10"}) {
    const auto arch = parse_arch(spec);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto m = init_params(arch, seed);
      std::mt19937_64 rng(1000 + seed);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Batch b;
      b.size = 4;
      b.inputs.resize(4 * input_size(arch));
      for (auto& v : b.inputs) v = u(rng);
      for (int i = 0; i < 4; ++i) b.labels.push_back(static_cast<int>(rng() % 10));
      std::uniform_int_distribution<std::size_t> cd(0, m.params.size() - 1);
      std::vector<std::size_t> coords(50);
      for (auto& c : coords) c = cd(rng);
      worst = std::max(worst, fd_check(m, b, coords, 1e-5));
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          fmt("mlp:784-256-10 and cnn:1x28x28-4-8-10, 5 seeds x 50 coords: max rel err %.2e "
              "(tol 1e-4), %.2f s (limit 30 s)",
              worst, secs)};
}

// 7 -------------------------------------------------------------------------
Outcome baseline_oracles() {
  auto traj = [](BaselineConfig cfg, const double (&want)[3][2]) {
    std::vector<double> theta{oracle::kTheta0[0], oracle::kTheta0[1]};
    auto s = init_baseline(2, cfg);
    double err = 0.0;
    for (int t = 0; t < 3; ++t) {
      baseline_step(s, theta, oracle::kGrads[t], cfg);
      for (int j = 0; j < 2; ++j) err = std::max(err, std::abs(theta[j] - want[t][j]));
    }
    return err;
  };
  BaselineConfig sgd;
  sgd.learning_rate = 0.1;
  sgd.momentum = 0.9;
  sgd.weight_decay = oracle::kWeightDecay;
  BaselineConfig adam;
  adam.kind = BaselineKind::adam;
  adam.learning_rate = 0.01;
  adam.weight_decay = oracle::kWeightDecay;
  BaselineConfig adamw = adam;
  adamw.kind = BaselineKind::adamw;
  const double err = std::max({traj(sgd, oracle::kSgd), traj(adam, oracle::kAdam),
                               traj(adamw, oracle::kAdamW)});

  adam.weight_decay = adamw.weight_decay = 0.0;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  std::vector<double> ta(64), tw, g(64);
  for (auto& v : ta) v = nd(rng);
  tw = ta;
  auto sa = init_baseline(64, adam);
  auto sw = init_baseline(64, adamw);
  bool same = true;
  for (int t = 0; t < 100; ++t) {
    for (auto& v : g) v = nd(rng);
    baseline_step(sa, ta, g, adam);
    baseline_step(sw, tw, g, adamw);
    same = same && ta == tw;
  }
  return {err <= 1e-12 && same,
          fmt("max trajectory err %.1e (tol 1e-12); adam == adamw at wd=0: %s", err,
              same ? "bitwise" : "NO")};
}

// 8 / 9 ---------------------------------------------------------------------
fs::path bench_out() {
  return fs::temp_directory_path() / "arturo_acceptance";
}

harness::RunConfig bench_config(const char* file) {
  auto cfg = harness::load_run_config(fs::path(ARTURO_SOURCE_DIR) / "configs/runs" / file);
  cfg.output_dir = bench_out() / cfg.name;
  return cfg;
}

double final_mean_accuracy(const harness::RunResult& r) {
  if (r.summary.epochs.empty() || !r.summary.epochs.back().test_accuracy) return 0.0;
  return r.summary.epochs.back().test_accuracy->mean;
}

Outcome desk_benchmark() {
  const auto t0 = Clock::now();
  const auto art_cfg = bench_config("fmnist_mlp_arturo.ini");
  const auto adam_cfg = bench_config("fmnist_mlp_adam.ini");
  const auto art = harness::run(art_cfg);
  const auto adam = harness::run(adam_cfg);
  const double a = final_mean_accuracy(art), b = final_mean_accuracy(adam);
  const bool complete = art.failures.empty() && adam.failures.empty() &&
                        art.summary.epochs.size() == 5 &&
                        art.summary.epochs.back().test_accuracy->n == 3 &&
                        adam.summary.epochs.back().test_accuracy->n == 3;
  const double secs = seconds_since(t0);
  return {complete && a >= 0.85 && a >= b - 0.005,
          fmt("arturo %.2f%% vs adam %.2f%% mean test accuracy after 5 epochs, 3 seeds "
              "(need >= 85%% and >= adam - 0.5pp), %.0f s",
              100 * a, 100 * b, secs)};
}

Outcome ablation_harness() {
  auto cfg = bench_config("fmnist_mlp_arturo.ini");
  cfg.seeds = {0};
  cfg.arturo.fixed_eta = 1.0;
  std::string detail;
  bool pass = true;
  for (auto mode : {ArturoMode::fixed_eta, ArturoMode::adam_moment_surrogate}) {
    auto c = cfg;
    c.output_dir = bench_out() / ("ablation-" + std::string(mode_name(mode)));
    const auto r = harness::ablation_run(c, mode);
    const auto rows = harness::read_metrics_csv(c.output_dir / "metrics.csv");
    bool ok = r.failures.empty() && rows.size() == cfg.epochs;
    for (const auto& row : rows) {
      ok = ok && row.variant == mode_name(mode) && row.eta_star && row.c_mu &&
           row.bisection_iters && row.clamp_count && row.test_accuracy;
    }
    pass = pass && ok;
    detail += fmt("%s %s (acc %.2f%%); ", std::string(mode_name(mode)).c_str(),
                  ok ? "ok" : "FAILED", 100 * final_mean_accuracy(r));
  }

  const auto task = make_quadratic_task(50, 0.1, 10.0, 1.0, 3);
  bool equal = true;
  for (double eta : {0.1, 1.0, 10.0}) {
    ArturoConfig std_cfg, fix_cfg;
    fix_cfg.mode = ArturoMode::fixed_eta;
    fix_cfg.fixed_eta = eta;
    auto a = init(50, std_cfg, std::vector<double>(50, 0.0));
    auto b = init(50, fix_cfg, std::vector<double>(50, 0.0));
    for (std::uint64_t t = 0; t < 200; ++t) {
      const auto g = synthetic_grad(task, a.dist.mu, t, 8);
      step(a, g, std_cfg, constant_eta(eta));
      step(b, g, fix_cfg);
      equal = equal && a.dist.mu == b.dist.mu && a.dist.sigma2 == b.dist.sigma2;
    }
  }
  pass = pass && equal;
  detail += fmt("forced-eta standard == fixed-eta: %s", equal ? "bitwise" : "NO");
  return {pass, detail};
}

// 10 ------------------------------------------------------------------------
Outcome hparam_fidelity() {
  const auto rep = harness::verify_paper_hparams(harness::default_preset_file());
  std::string detail = fmt("%zu values checked, %zu mismatches", rep.checked,
                           rep.mismatches.size());
  for (const auto& m : rep.mismatches) {
    detail += "; " + m.section + "." + m.key + " expected " + m.expected + " found " + m.found;
  }
  return {rep.ok() && rep.checked > 0, detail};
}

struct Criterion {
  int id;
  const char* group;
  const char* title;
  std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--only fast|benchmark]\n");
      return 2;
    }
  }
  if (!only.empty() && only != "fast" && only != "benchmark") {
    std::fprintf(stderr, "unknown group '%s'\n", only.c_str());
    return 2;
  }

  const std::vector<Criterion> all = {
      {1, "fast", "Kalman oracle equivalence", kalman_oracle},
      {2, "fast", "trust-region constraint", trust_region_constraint},
      {3, "fast", "structural invariants", structural_invariants},
      {4, "fast", "noiseless quadratic convergence", quadratic_convergence},
      {5, "fast", "noisy quadratic vs tuned SGD", noisy_quadratic},
      {6, "fast", "finite-difference gradients", gradient_check},
      {7, "fast", "baseline oracles", baseline_oracles},
      {8, "benchmark", "desk-scale Fashion-MNIST benchmark", desk_benchmark},
      {9, "benchmark", "ablation harness", ablation_harness},
      {10, "fast", "tuned hyperparameter fidelity", hparam_fidelity},
  };

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && only != c.group) continue;
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2d %s: %s -- %s\n", c.id, o.pass ? "PASS" : "FAIL", c.title,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
