// Command line front end for the benchmark harness.
//
//   arturo_bench run --config configs/runs/fmnist_mlp_arturo.ini --seeds 0,1,2
//   arturo_bench verify-hparams
//   arturo_bench summarize --in runs/fmnist_mlp_arturo

#include "arturo/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace h = arturo::harness;

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const auto v = std::stoull(item, &used);
    if (used != item.size()) throw CLI::ValidationError("--seeds", "bad seed " + item);
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("--seeds", "empty list");
  return out;
}

std::string stat(const std::optional<h::MeanSe>& s, int digits) {
  if (!s) return "-";
  char buf[64];
  if (s->two_se) {
    std::snprintf(buf, sizeof buf, "%.*f +- %.*f", digits, s->mean, digits, *s->two_se);
  } else {
    std::snprintf(buf, sizeof buf, "%.*f", digits, s->mean);
  }
  return buf;
}

void print_summary(const h::Summary& s) {
  std::printf("%-6s %-22s %-22s %s\n", "epoch", "test_accuracy", "train_loss", "eta_star");
  for (const auto& e : s.epochs) {
    std::printf("%-6zu %-22s %-22s %s\n", e.epoch, stat(e.test_accuracy, 4).c_str(),
                stat(e.train_loss, 5).c_str(), stat(e.eta_star, 4).c_str());
  }
  for (const auto& f : s.failures) {
    std::printf("seed %llu failed at epoch %zu: %s\n",
                static_cast<unsigned long long>(f.seed), f.epoch, f.reason.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arturo_bench: trust-region optimizer benchmarks"};
  app.require_subcommand(1);

  std::string config_path, seeds_text, out_dir, variant, preset_file;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "train every seed of a config");
  run->add_option("--config", config_path, "run config (INI)")->required()->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds_text, "comma-separated seeds, overrides the config");
  run->add_option("--out", out_dir, "output directory, overrides the config");
  run->add_option("--variant", variant, "arturo variant")
      ->check(CLI::IsMember({"standard", "fixed-eta", "adam-surrogate"}));
  run->add_option("--presets", preset_file, "tuned hyperparameter file");
  run->add_flag("--quiet", quiet, "no per-epoch log");

  std::string verify_file;
  auto* verify = app.add_subcommand("verify-hparams",
                                    "check the preset file against the published table");
  verify->add_option("--presets", verify_file, "tuned hyperparameter file");

  std::string in_dir;
  auto* summ = app.add_subcommand("summarize", "recompute summary.json from metrics.csv");
  summ->add_option("--in", in_dir, "run output directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      h::RunConfig cfg = h::load_run_config(config_path, preset_file);
      if (!seeds_text.empty()) cfg.seeds = parse_seeds(seeds_text);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (!variant.empty()) {
        if (cfg.optimizer != h::OptimizerId::arturo) {
          std::cerr << "--variant only applies to the arturo optimizer\n";
          return 2;
        }
        cfg.arturo.mode = *h::parse_variant(variant);
      }
      const auto result = h::run(cfg, quiet ? nullptr : &std::cerr);
      print_summary(result.summary);
      if (!cfg.output_dir.empty()) {
        std::cout << "wrote " << (cfg.output_dir / "metrics.csv").string() << "\n";
      }
      return result.failures.empty() ? 0 : 3;
    }
    if (*verify) {
      const auto file = verify_file.empty() ? h::default_preset_file()
                                            : std::filesystem::path(verify_file);
      const auto report = h::verify_paper_hparams(file);
      for (const auto& m : report.mismatches) {
        std::cout << "MISMATCH [" << m.section << "] " << m.key << ": expected "
                  << m.expected << ", found " << m.found << "\n";
      }
      std::cout << report.checked << " values checked, " << report.mismatches.size()
                << " mismatches in " << file.string() << "\n";
      return report.ok() ? 0 : 1;
    }
    if (*summ) {
      const std::filesystem::path dir = in_dir;
      auto summary = h::summarize(h::read_metrics_csv(dir / "metrics.csv"));
      if (std::ifstream old(dir / "summary.json"); old) {
        std::stringstream ss;
        ss << old.rdbuf();
        const auto prev = h::parse_summary_json(ss.str());
        summary.metadata = prev.metadata;
        summary.failures = prev.failures;
      }
      std::ofstream(dir / "summary.json") << h::summary_json(summary);
      print_summary(summary);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
