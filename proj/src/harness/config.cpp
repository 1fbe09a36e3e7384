#include "arturo/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace arturo::harness {

namespace pt = boost::property_tree;

std::string_view task_name(TaskId id) {
  switch (id) {
    case TaskId::fashion_mnist: return "fashion_mnist";
    case TaskId::cifar10: return "cifar10";
    case TaskId::cifar100: return "cifar100";
    case TaskId::synthetic_quadratic: return "synthetic_quadratic";
  }
  return "?";
}

std::string_view optimizer_name(OptimizerId id) {
  switch (id) {
    case OptimizerId::arturo: return "arturo";
    case OptimizerId::sgd: return "sgd";
    case OptimizerId::adam: return "adam";
    case OptimizerId::adamw: return "adamw";
  }
  return "?";
}

std::optional<TaskId> parse_task(std::string_view name) {
  for (TaskId t : {TaskId::fashion_mnist, TaskId::cifar10, TaskId::cifar100,
                   TaskId::synthetic_quadratic}) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

std::optional<OptimizerId> parse_optimizer(std::string_view name) {
  for (OptimizerId o : {OptimizerId::arturo, OptimizerId::sgd,
                        OptimizerId::adam, OptimizerId::adamw}) {
    if (optimizer_name(o) == name) return o;
  }
  return std::nullopt;
}

std::optional<ArturoMode> parse_variant(std::string_view name) {
  for (ArturoMode m : {ArturoMode::standard, ArturoMode::fixed_eta,
                       ArturoMode::adam_moment_surrogate}) {
    if (mode_name(m) == name) return m;
  }
  return std::nullopt;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing "; comment" or "# comment".
std::string clean_value(const std::string& raw) {
  std::string v = raw;
  for (const char* mark : {" ;", "\t;", " #", "\t#"}) {
    const auto p = v.find(mark);
    if (p != std::string::npos) v.erase(p);
  }
  return trim(v);
}

[[noreturn]] void bad(const std::string& key, const std::string& value,
                      const std::string& why) {
  throw std::invalid_argument("config: " + key + " = '" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) bad(key, v, "not a number");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) bad(key, v, "not a non-negative integer");
  return out;
}

std::vector<std::uint64_t> to_uint_list(const std::string& key,
                                        const std::string& v) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) bad(key, v, "empty list element");
    out.push_back(to_uint(key, item));
  }
  if (out.empty()) bad(key, v, "empty list");
  return out;
}

// Optimizer hyperparameters shared by presets and run files.
bool apply_optimizer_key(RunConfig& cfg, const std::string& key,
                         const std::string& v) {
  ArturoConfig& a = cfg.arturo;
  BaselineConfig& b = cfg.baseline;
  const bool is_arturo = cfg.optimizer == OptimizerId::arturo;
  if (key == "weight_decay") {
    (is_arturo ? a.weight_decay : b.weight_decay) = to_double(key, v);
    return true;
  }
  if (is_arturo) {
    if (key == "epsilon") a.epsilon = to_double(key, v);
    else if (key == "rho") a.rho = to_double(key, v);
    else if (key == "nu") a.nu = to_double(key, v);
    else if (key == "lambda") a.lambda_prec = to_double(key, v);
    else if (key == "q") a.q = to_double(key, v);
    else if (key == "r") a.r = to_double(key, v);
    else if (key == "sigma2_init") a.sigma2_init = to_double(key, v);
    else if (key == "p0") a.p0 = to_double(key, v);
    else if (key == "epsilon_decay") a.epsilon_decay_factor = to_double(key, v);
    else if (key == "fixed_eta") a.fixed_eta = to_double(key, v);
    else if (key == "adam_beta1") a.adam_beta1 = to_double(key, v);
    else if (key == "adam_beta2") a.adam_beta2 = to_double(key, v);
    else if (key == "adam_eps") a.adam_eps = to_double(key, v);
    else if (key == "bisection_abs_width") a.bisection.abs_width = to_double(key, v);
    else if (key == "bisection_rel_width") a.bisection.rel_width = to_double(key, v);
    else if (key == "bisection_tolerance") a.bisection.tolerance = to_double(key, v);
    else if (key == "weight_decay_mode") {
      if (v == "decoupled") a.weight_decay_mode = WeightDecayMode::decoupled;
      else if (v == "coupled") a.weight_decay_mode = WeightDecayMode::coupled;
      else bad(key, v, "expected decoupled or coupled");
    } else if (key == "variant") {
      auto m = parse_variant(v);
      if (!m) bad(key, v, "expected standard, fixed-eta or adam-surrogate");
      a.mode = *m;
    } else {
      return false;
    }
    return true;
  }
  if (key == "learning_rate") b.learning_rate = to_double(key, v);
  else if (key == "momentum" && cfg.optimizer == OptimizerId::sgd) b.momentum = to_double(key, v);
  else if (key == "beta1" && cfg.optimizer != OptimizerId::sgd) b.beta1 = to_double(key, v);
  else if (key == "beta2" && cfg.optimizer != OptimizerId::sgd) b.beta2 = to_double(key, v);
  else if (key == "eps" && cfg.optimizer != OptimizerId::sgd) b.adam_eps = to_double(key, v);
  else if (key == "lr_decay") b.lr_decay_factor = to_double(key, v);
  else return false;
  return true;
}

void apply_preset(RunConfig& cfg, const std::filesystem::path& preset_file) {
  const std::filesystem::path file =
      preset_file.empty() ? default_preset_file() : preset_file;
  pt::ptree tree;
  try {
    pt::read_ini(file.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("preset file: ") + e.what());
  }
  const std::string section =
      std::string(optimizer_name(cfg.optimizer)) + "." + cfg.preset;
  const auto node = tree.get_child_optional(pt::ptree::path_type(section, '/'));
  if (!node) {
    throw std::invalid_argument("preset '" + section + "' not found in " +
                                file.string());
  }
  for (const auto& [key, child] : *node) {
    const std::string v = clean_value(child.data());
    if (!apply_optimizer_key(cfg, key, v)) {
      throw std::invalid_argument("preset " + section + ": unknown key " + key);
    }
  }
}

}  // namespace

std::filesystem::path default_preset_file() {
  if (const char* env = std::getenv("ARTURO_PRESET_FILE"); env && *env) {
    return env;
  }
#ifdef ARTURO_DEFAULT_PRESET_FILE
  return ARTURO_DEFAULT_PRESET_FILE;
#else
  return "configs/presets/tuned_hparams.ini";
#endif
}

std::filesystem::path resolve_data_root(const RunConfig& cfg) {
  if (!cfg.data_root.empty()) return cfg.data_root;
  if (const char* env = std::getenv("ARTURO_DATA_ROOT"); env && *env) {
    return env;
  }
  return "data";
}

std::vector<std::size_t> resolve_milestones(const RunConfig& cfg) {
  const std::string& m = cfg.milestones;
  if (m == "auto") return default_milestones(cfg.epochs);
  if (m == "none" || m.empty()) return {};
  std::vector<std::size_t> out;
  for (auto e : to_uint_list("milestones", m)) {
    if (e == 0 || (!out.empty() && e <= out.back())) {
      bad("milestones", m, "must be strictly increasing epochs >= 1");
    }
    out.push_back(static_cast<std::size_t>(e));
  }
  return out;
}

RunConfig parse_run_config(const std::string& ini_text,
                           const std::filesystem::path& preset_file) {
  pt::ptree tree;
  std::istringstream in(ini_text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  for (const auto& [section, _] : tree) {
    if (section != "run" && section != "optimizer" && section != "synthetic") {
      throw std::invalid_argument("config: unknown section [" + section + "]");
    }
  }

  RunConfig cfg;
  if (auto run = tree.get_child_optional("run")) {
    for (const auto& [key, child] : *run) {
      const std::string v = clean_value(child.data());
      if (key == "name") cfg.name = v;
      else if (key == "task") {
        auto t = parse_task(v);
        if (!t) bad(key, v, "unknown task");
        cfg.task = *t;
      } else if (key == "model") cfg.model = v;
      else if (key == "epochs") cfg.epochs = to_uint(key, v);
      else if (key == "batch_size") cfg.batch_size = to_uint(key, v);
      else if (key == "seeds") cfg.seeds = to_uint_list(key, v);
      else if (key == "eval_every") cfg.eval_every = to_uint(key, v);
      else if (key == "train_limit") cfg.train_limit = to_uint(key, v);
      else if (key == "test_limit") cfg.test_limit = to_uint(key, v);
      else if (key == "validation_holdout") cfg.validation_holdout = to_uint(key, v);
      else if (key == "output") cfg.output_dir = v;
      else if (key == "data_root") cfg.data_root = v;
      else if (key == "milestones") cfg.milestones = v;
      else throw std::invalid_argument("config: unknown key run." + key);
    }
  }

  if (auto syn = tree.get_child_optional("synthetic")) {
    SyntheticSpec& s = cfg.synthetic;
    for (const auto& [key, child] : *syn) {
      const std::string v = clean_value(child.data());
      if (key == "dim") s.dim = to_uint(key, v);
      else if (key == "d_min") s.d_min = to_double(key, v);
      else if (key == "d_max") s.d_max = to_double(key, v);
      else if (key == "noise") s.noise = to_double(key, v);
      else if (key == "samples") s.samples = to_uint(key, v);
      else if (key == "steps_per_epoch") s.steps_per_epoch = to_uint(key, v);
      else if (key == "task_seed") s.task_seed = to_uint(key, v);
      else throw std::invalid_argument("config: unknown key synthetic." + key);
    }
  }

  const auto opt = tree.get_child_optional("optimizer");
  if (opt) {
    if (auto name = opt->get_optional<std::string>("name")) {
      const std::string v = clean_value(*name);
      auto o = parse_optimizer(v);
      if (!o) bad("optimizer.name", v, "expected arturo, sgd, adam or adamw");
      cfg.optimizer = *o;
    }
    if (auto preset = opt->get_optional<std::string>("preset")) {
      cfg.preset = clean_value(*preset);
    }
  }
  switch (cfg.optimizer) {
    case OptimizerId::sgd: cfg.baseline.kind = BaselineKind::sgd_momentum; break;
    case OptimizerId::adam: cfg.baseline.kind = BaselineKind::adam; break;
    case OptimizerId::adamw: cfg.baseline.kind = BaselineKind::adamw; break;
    case OptimizerId::arturo: break;
  }
  if (!cfg.preset.empty()) apply_preset(cfg, preset_file);
  if (opt) {
    for (const auto& [key, child] : *opt) {
      if (key == "name" || key == "preset") continue;
      const std::string v = clean_value(child.data());
      if (!apply_optimizer_key(cfg, key, v)) {
        throw std::invalid_argument("config: key optimizer." + key +
                                    " does not apply to " +
                                    std::string(optimizer_name(cfg.optimizer)));
      }
    }
  }

  if (cfg.epochs == 0) bad("epochs", "0", "must be >= 1");
  if (cfg.batch_size == 0) bad("batch_size", "0", "must be >= 1");
  if (cfg.eval_every == 0) bad("eval_every", "0", "must be >= 1");
  resolve_milestones(cfg);  // validates the list
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::filesystem::path& preset_file) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), preset_file);
}

}  // namespace arturo::harness
