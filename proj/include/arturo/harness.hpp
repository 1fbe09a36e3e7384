#pragma once
// Experiment runner: (task x optimizer x seed) cells, per-epoch metrics as
// CSV, and a JSON summary with mean and doubled standard error over seeds.

#include "arturo/baselines.hpp"
#include "arturo/optimizer.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace arturo::harness {

enum class TaskId { fashion_mnist, cifar10, cifar100, synthetic_quadratic };
enum class OptimizerId { arturo, sgd, adam, adamw };

std::string_view task_name(TaskId id);
std::string_view optimizer_name(OptimizerId id);
std::optional<TaskId> parse_task(std::string_view name);
std::optional<OptimizerId> parse_optimizer(std::string_view name);
std::optional<ArturoMode> parse_variant(std::string_view name);

struct SyntheticSpec {
  std::size_t dim = 10;
  double d_min = 0.1;
  double d_max = 10.0;
  double noise = 1.0;
  std::size_t samples = 32;  // draws averaged per "mini-batch"
  std::size_t steps_per_epoch = 100;
  std::uint64_t task_seed = 0;
};

struct RunConfig {
  std::string name = "run";
  TaskId task = TaskId::synthetic_quadratic;
  std::string model = "mlp:784-256-10";
  OptimizerId optimizer = OptimizerId::arturo;
  std::string preset;  // tuned-hyperparameter column, empty for none
  ArturoConfig arturo;
  BaselineConfig baseline;
  std::string milestones = "auto";  // "auto", "none" or "e1,e2,..."
  std::size_t epochs = 1;
  std::size_t batch_size = 128;
  std::vector<std::uint64_t> seeds = {0};
  std::size_t eval_every = 1;
  std::size_t train_limit = 0;  // 0 = full split
  std::size_t test_limit = 0;
  // > 0: evaluate on the last N training samples instead of the test split.
  std::size_t validation_holdout = 0;
  std::filesystem::path output_dir;
  std::filesystem::path data_root;  // empty: $ARTURO_DATA_ROOT
  SyntheticSpec synthetic;
};

/// Reads an INI file with [run], [optimizer] and optional [synthetic]
/// sections. When [optimizer] names a preset, the matching section of the
/// preset file supplies values that explicit keys then override. Throws
/// std::invalid_argument on unknown keys or invalid values.
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::filesystem::path& preset_file = {});
RunConfig parse_run_config(const std::string& ini_text,
                           const std::filesystem::path& preset_file = {});

/// Resolved schedule milestones for cfg.milestones and cfg.epochs.
std::vector<std::size_t> resolve_milestones(const RunConfig& cfg);

std::filesystem::path default_preset_file();
std::filesystem::path resolve_data_root(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Metrics

struct MetricsRecord {
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  std::string optimizer;
  std::string variant;  // arturo mode name; empty for baselines
  double train_loss = 0.0;
  std::optional<double> test_accuracy;
  double wall_seconds = 0.0;
  std::optional<double> eta_star;  // epoch means of the step diagnostics
  std::optional<double> c_mu;
  std::optional<double> bisection_iters;
  std::optional<double> clamp_count;  // total over the epoch
};

/// Column order of metrics.csv. Wall-clock time is written to timing.csv so
/// that metrics.csv is bit-reproducible.
inline constexpr std::string_view kMetricsHeader =
    "seed,epoch,optimizer,variant,train_loss,test_accuracy,eta_star,c_mu,"
    "bisection_iters,clamp_count";

std::string to_csv_row(const MetricsRecord& r);
MetricsRecord parse_csv_row(std::string_view line);
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRecord>& rows);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

struct MeanSe {
  double mean = 0.0;
  std::optional<double> two_se;  // 2 * sample sd / sqrt(n); empty for n < 2
  std::size_t n = 0;
};

/// Returns nullopt for an empty sample.
std::optional<MeanSe> mean_two_se(const std::vector<double>& values);

struct EpochSummary {
  std::size_t epoch = 0;
  std::optional<MeanSe> test_accuracy;
  std::optional<MeanSe> train_loss;
  std::optional<MeanSe> eta_star;
};

struct SeedFailure {
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  std::string reason;
};

struct Summary {
  std::vector<EpochSummary> epochs;
  std::vector<std::string> variants;
  std::vector<SeedFailure> failures;
  std::map<std::string, std::string> metadata;
};

Summary summarize(const std::vector<MetricsRecord>& records);
std::string summary_json(const Summary& s);
Summary parse_summary_json(const std::string& text);

// ---------------------------------------------------------------------------
// Running

struct RunResult {
  std::vector<MetricsRecord> records;
  std::vector<SeedFailure> failures;
  Summary summary;
  std::vector<double> final_params_norm;  // per successful seed
};

/// Runs every seed of cfg. Writes metrics.csv, timing.csv and summary.json
/// under cfg.output_dir when it is non-empty. A seed whose loss or gradient
/// turns non-finite is aborted and listed in failures; the grid continues.
RunResult run(const RunConfig& cfg, std::ostream* log = nullptr);

/// run() with the arturo mode forced to variant.
RunResult ablation_run(RunConfig cfg, ArturoMode variant,
                       std::ostream* log = nullptr);

// ---------------------------------------------------------------------------
// Tuned hyperparameter presets

struct HparamMismatch {
  std::string section;
  std::string key;
  std::string expected;
  std::string found;  // "<missing>" when absent
};

struct HparamReport {
  std::size_t checked = 0;
  std::vector<HparamMismatch> mismatches;
  bool ok() const noexcept { return mismatches.empty(); }
};

/// Reference values: section "<optimizer>.<column>" -> key -> value text.
const std::map<std::string, std::map<std::string, std::string>>&
tuned_reference();

/// Compares every reference value against the preset file, numerically exact.
HparamReport verify_paper_hparams(const std::filesystem::path& preset_file);

}  // namespace arturo::harness
