#include "arturo/data.hpp"
#include "arturo/errors.hpp"
#include "arturo/harness.hpp"
#include "arturo/kernels.hpp"
#include "arturo/model.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace arturo::harness {

namespace {

struct TaskData {
  bool synthetic = false;
  SyntheticQuadraticTask quad;
  Arch arch;
  Dataset train;
  Dataset test;
};

void truncate(Dataset& d, std::size_t limit) {
  if (limit == 0 || limit >= d.count) return;
  d.count = limit;
  d.pixels.resize(limit * d.sample_size());
  d.labels.resize(limit);
}

TaskData load_task(const RunConfig& cfg) {
  TaskData t;
  if (cfg.task == TaskId::synthetic_quadratic) {
    const SyntheticSpec& s = cfg.synthetic;
    t.synthetic = true;
    t.quad = make_quadratic_task(s.dim, s.d_min, s.d_max, s.noise, s.task_seed);
    if (s.samples == 0 || s.steps_per_epoch == 0) {
      throw std::invalid_argument("synthetic: samples and steps_per_epoch must be >= 1");
    }
    return t;
  }
  t.arch = parse_arch(cfg.model);
  const auto root = resolve_data_root(cfg);
  switch (cfg.task) {
    case TaskId::fashion_mnist:
      t.train = load_fashion_mnist(root / "fashion-mnist", "train");
      t.test = load_fashion_mnist(root / "fashion-mnist", "test");
      break;
    case TaskId::cifar10:
      std::tie(t.train, t.test) = load_cifar_binary(root / "cifar-10-batches-bin", 10);
      break;
    case TaskId::cifar100:
      std::tie(t.train, t.test) = load_cifar_binary(root / "cifar-100-binary", 100);
      break;
    case TaskId::synthetic_quadratic: break;
  }
  if (input_size(t.arch) != t.train.sample_size() ||
      output_size(t.arch) != t.train.num_classes) {
    throw std::invalid_argument("model " + cfg.model + " does not fit task " +
                                std::string(task_name(cfg.task)));
  }
  if (cfg.validation_holdout > 0) {
    if (cfg.validation_holdout >= t.train.count) {
      throw std::invalid_argument("validation_holdout must be smaller than the training split");
    }
    const std::size_t keep = t.train.count - cfg.validation_holdout;
    const std::size_t sz = t.train.sample_size();
    t.test.count = cfg.validation_holdout;
    t.test.pixels.assign(t.train.pixels.begin() + keep * sz, t.train.pixels.end());
    t.test.labels.assign(t.train.labels.begin() + keep, t.train.labels.end());
    truncate(t.train, keep);
  }
  truncate(t.train, cfg.train_limit);
  truncate(t.test, cfg.test_limit);
  return t;
}

std::uint64_t batch_seed(std::uint64_t seed, std::size_t epoch, std::size_t step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch),
                    static_cast<std::uint32_t>(step)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t{out[0]} << 32) | out[1];
}

double accuracy(const ModelState& model, const Dataset& test) {
  constexpr std::size_t kChunk = 1000;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < test.count; start += kChunk) {
    const std::size_t end = std::min(test.count, start + kChunk);
    idx.clear();
    for (std::size_t i = start; i < end; ++i) idx.push_back(i);
    const Batch b = make_batch(test, idx);
    const auto pred = predict(forward_loss(model, b), test.num_classes);
    for (std::size_t i = 0; i < b.size; ++i) correct += pred[i] == b.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(test.count);
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// One optimizer of either family behind a common step().
class Stepper {
 public:
  Stepper(const RunConfig& cfg, std::span<const double> mu0)
      : arturo_(cfg.optimizer == OptimizerId::arturo) {
    const auto milestones = resolve_milestones(cfg);
    if (arturo_) {
      acfg_ = cfg.arturo;
      acfg_.schedule_milestones = milestones;
      astate_ = init(mu0.size(), acfg_, mu0);
    } else {
      bcfg_ = cfg.baseline;
      bcfg_.schedule_milestones = milestones;
      bstate_ = init_baseline(mu0.size(), bcfg_);
      params_.assign(mu0.begin(), mu0.end());
    }
  }

  std::span<const double> params() const {
    return arturo_ ? std::span<const double>(astate_.dist.mu)
                   : std::span<const double>(params_);
  }

  void step(std::span<const double> grad) {
    if (arturo_) {
      const auto d = arturo::step(astate_, grad, acfg_);
      eta_sum_ += d.eta;
      cmu_sum_ += d.c_mu;
      iter_sum_ += d.bisection_iterations;
      clamps_ += static_cast<double>(d.clamp_count);
    } else {
      baseline_step(bstate_, params_, grad, bcfg_);
      if (!all_finite(params_)) {
        throw NonFiniteError("non-finite parameters after update", bstate_.t);
      }
    }
    ++steps_;
  }

  void end_epoch(MetricsRecord& rec) {
    if (arturo_) {
      const double n = static_cast<double>(steps_);
      rec.variant = std::string(mode_name(acfg_.mode));
      rec.eta_star = eta_sum_ / n;
      rec.c_mu = cmu_sum_ / n;
      rec.bisection_iters = iter_sum_ / n;
      rec.clamp_count = clamps_;
      on_epoch_end(astate_, acfg_);
    } else {
      on_epoch_end(bstate_, bcfg_);
    }
    steps_ = 0;
    eta_sum_ = cmu_sum_ = iter_sum_ = clamps_ = 0.0;
  }

 private:
  bool arturo_;
  ArturoConfig acfg_;
  ArturoState astate_;
  BaselineConfig bcfg_;
  BaselineState bstate_;
  std::vector<double> params_;
  std::size_t steps_ = 0;
  double eta_sum_ = 0, cmu_sum_ = 0, iter_sum_ = 0, clamps_ = 0;
};

struct SeedOutcome {
  std::vector<MetricsRecord> records;
  double params_norm = 0.0;
};

SeedOutcome run_seed(const RunConfig& cfg, const TaskData& task,
                     std::uint64_t seed, std::ostream* log,
                     std::size_t& failed_epoch) {
  SeedOutcome out;
  ModelState model;
  std::vector<double> mu0;
  if (task.synthetic) {
    mu0.assign(task.quad.theta_star.size(), 0.0);
  } else {
    model = init_params(task.arch, seed);
    mu0 = model.params;
  }
  Stepper opt(cfg, mu0);
  std::vector<double> grad(mu0.size());
  using clock = std::chrono::steady_clock;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    failed_epoch = epoch;
    const auto t0 = clock::now();
    MetricsRecord rec;
    rec.seed = seed;
    rec.epoch = epoch;
    rec.optimizer = std::string(optimizer_name(cfg.optimizer));
    double loss_sum = 0.0;
    std::size_t loss_n = 0;

    if (task.synthetic) {
      const SyntheticSpec& s = cfg.synthetic;
      for (std::size_t k = 0; k < s.steps_per_epoch; ++k) {
        const auto p = opt.params();
        loss_sum += quadratic_loss(task.quad, p);
        ++loss_n;
        const auto g = synthetic_grad(task.quad, p, batch_seed(seed, epoch, k),
                                      s.samples);
        opt.step(g);
      }
    } else {
      const auto batches =
          minibatches(task.train.count, cfg.batch_size, seed, epoch - 1);
      for (const auto& idx : batches) {
        const Batch b = make_batch(task.train, idx);
        const auto p = opt.params();
        model.params.assign(p.begin(), p.end());
        const double loss = loss_and_gradient(model, b, grad);
        if (!std::isfinite(loss)) {
          throw std::runtime_error("non-finite training loss");
        }
        loss_sum += loss * static_cast<double>(b.size);
        loss_n += b.size;
        opt.step(grad);
      }
    }
    rec.train_loss = loss_sum / static_cast<double>(loss_n);
    opt.end_epoch(rec);

    if (!task.synthetic &&
        (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
      const auto p = opt.params();
      model.params.assign(p.begin(), p.end());
      rec.test_accuracy = accuracy(model, task.test);
    }
    rec.wall_seconds =
        std::chrono::duration<double>(clock::now() - t0).count();
    if (log) {
      *log << cfg.name << " seed " << seed << " epoch " << epoch
           << " loss " << rec.train_loss;
      if (rec.test_accuracy) *log << " acc " << *rec.test_accuracy;
      if (rec.eta_star) *log << " eta " << *rec.eta_star;
      *log << " (" << rec.wall_seconds << " s)\n";
    }
    out.records.push_back(std::move(rec));
  }
  double ss = 0.0;
  for (double v : opt.params()) ss += v * v;
  out.params_norm = std::sqrt(ss);
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

std::map<std::string, std::string> metadata(const RunConfig& cfg) {
  std::map<std::string, std::string> m;
  m["name"] = cfg.name;
  m["task"] = std::string(task_name(cfg.task));
  m["optimizer"] = std::string(optimizer_name(cfg.optimizer));
  m["preset"] = cfg.preset;
  m["variant"] = cfg.optimizer == OptimizerId::arturo
                     ? std::string(mode_name(cfg.arturo.mode))
                     : "";
  m["milestones"] = join(resolve_milestones(cfg));
  m["epochs"] = std::to_string(cfg.epochs);
  m["isa"] = std::string(kernels::isa_name(kernels::active_isa()));
  if (cfg.task == TaskId::synthetic_quadratic) {
    m["model"] = "diagonal-quadratic:" + std::to_string(cfg.synthetic.dim);
    m["steps_per_epoch"] = std::to_string(cfg.synthetic.steps_per_epoch);
  } else {
    m["model"] = cfg.model;
    m["batch_size"] = std::to_string(cfg.batch_size);
    m["normalization"] = "pixel/255";
    m["eval_split"] = cfg.validation_holdout > 0
        ? "train_tail_" + std::to_string(cfg.validation_holdout) : "test";
  }
  std::vector<std::size_t> seeds(cfg.seeds.begin(), cfg.seeds.end());
  m["seeds"] = join(seeds);
  return m;
}

}  // namespace

RunResult run(const RunConfig& cfg, std::ostream* log) {
  if (cfg.optimizer == OptimizerId::arturo) {
    ArturoConfig a = cfg.arturo;
    a.schedule_milestones = resolve_milestones(cfg);
    validate(a);
  } else {
    BaselineConfig b = cfg.baseline;
    b.schedule_milestones = resolve_milestones(cfg);
    validate(b);
  }
  const TaskData task = load_task(cfg);

  RunResult result;
  for (std::uint64_t seed : cfg.seeds) {
    std::size_t epoch = 0;
    try {
      auto outcome = run_seed(cfg, task, seed, log, epoch);
      result.final_params_norm.push_back(outcome.params_norm);
      for (auto& r : outcome.records) result.records.push_back(std::move(r));
    } catch (const NonFiniteError& e) {
      result.failures.push_back({seed, epoch, e.what()});
    } catch (const SolverFailure& e) {
      result.failures.push_back({seed, epoch, e.what()});
    } catch (const InternalConsistencyError& e) {
      result.failures.push_back({seed, epoch, e.what()});
    } catch (const std::runtime_error& e) {
      result.failures.push_back({seed, epoch, e.what()});
    }
    if (log && !result.failures.empty() && result.failures.back().seed == seed) {
      *log << cfg.name << " seed " << seed << " FAILED at epoch " << epoch
           << ": " << result.failures.back().reason << "\n";
    }
  }

  result.summary = summarize(result.records);
  result.summary.failures = result.failures;
  result.summary.metadata = metadata(cfg);

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    write_metrics_csv(cfg.output_dir / "metrics.csv", result.records);
    std::ofstream timing(cfg.output_dir / "timing.csv");
    timing << "seed,epoch,wall_seconds\n";
    for (const auto& r : result.records) {
      timing << r.seed << "," << r.epoch << "," << r.wall_seconds << "\n";
    }
    std::ofstream js(cfg.output_dir / "summary.json");
    js << summary_json(result.summary);
  }
  return result;
}

RunResult ablation_run(RunConfig cfg, ArturoMode variant, std::ostream* log) {
  if (cfg.optimizer != OptimizerId::arturo) {
    throw std::invalid_argument("ablation_run needs the arturo optimizer");
  }
  cfg.arturo.mode = variant;
  return run(cfg, log);
}

}  // namespace arturo::harness
