#include "arturo/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace arturo::harness {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto p = line.find(',', start);
    out.push_back(line.substr(start, p == std::string_view::npos ? p : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

double parse_d(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::runtime_error("metrics csv: bad number '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t parse_u(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::runtime_error("metrics csv: bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::optional<double> parse_opt(std::string_view s) {
  if (s.empty()) return std::nullopt;
  return parse_d(s);
}

nlohmann::json stat_json(const std::optional<MeanSe>& s) {
  if (!s) return nullptr;
  nlohmann::json j;
  j["mean"] = s->mean;
  j["two_se"] = s->two_se ? nlohmann::json(*s->two_se) : nlohmann::json(nullptr);
  j["n"] = s->n;
  return j;
}

std::optional<MeanSe> stat_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  MeanSe s;
  s.mean = j.at("mean").get<double>();
  if (!j.at("two_se").is_null()) s.two_se = j.at("two_se").get<double>();
  s.n = j.at("n").get<std::size_t>();
  return s;
}

}  // namespace

std::string to_csv_row(const MetricsRecord& r) {
  std::string s = std::to_string(r.seed) + "," + std::to_string(r.epoch) +
                  "," + r.optimizer + "," + r.variant + "," +
                  fmt(r.train_loss) + "," + fmt(r.test_accuracy) + "," +
                  fmt(r.eta_star) + "," + fmt(r.c_mu) + "," +
                  fmt(r.bisection_iters) + "," + fmt(r.clamp_count);
  return s;
}

MetricsRecord parse_csv_row(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto f = split_csv(line);
  if (f.size() != 10) {
    throw std::runtime_error("metrics csv: expected 10 fields, got " +
                             std::to_string(f.size()));
  }
  MetricsRecord r;
  r.seed = parse_u(f[0]);
  r.epoch = static_cast<std::size_t>(parse_u(f[1]));
  r.optimizer = std::string(f[2]);
  r.variant = std::string(f[3]);
  r.train_loss = parse_d(f[4]);
  r.test_accuracy = parse_opt(f[5]);
  r.eta_star = parse_opt(f[6]);
  r.c_mu = parse_opt(f[7]);
  r.bisection_iters = parse_opt(f[8]);
  r.clamp_count = parse_opt(f[9]);
  return r;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRecord>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) out << to_csv_row(r) << '\n';
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty metrics csv");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) {
    throw std::runtime_error("metrics csv: unexpected header '" + line + "'");
  }
  std::vector<MetricsRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_csv_row(line));
  }
  return rows;
}

std::optional<MeanSe> mean_two_se(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  MeanSe s;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.two_se = 2.0 * sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

Summary summarize(const std::vector<MetricsRecord>& records) {
  Summary s;
  std::set<std::size_t> epochs;
  std::set<std::string> variants;
  for (const auto& r : records) {
    epochs.insert(r.epoch);
    variants.insert(r.optimizer + (r.variant.empty() ? "" : ":" + r.variant));
  }
  s.variants.assign(variants.begin(), variants.end());
  for (std::size_t e : epochs) {
    std::vector<double> acc, loss, eta;
    for (const auto& r : records) {
      if (r.epoch != e) continue;
      loss.push_back(r.train_loss);
      if (r.test_accuracy) acc.push_back(*r.test_accuracy);
      if (r.eta_star) eta.push_back(*r.eta_star);
    }
    s.epochs.push_back({e, mean_two_se(acc), mean_two_se(loss), mean_two_se(eta)});
  }
  return s;
}

std::string summary_json(const Summary& s) {
  nlohmann::json j;
  j["variants"] = s.variants;
  j["metadata"] = s.metadata;
  auto& epochs = j["epochs"] = nlohmann::json::array();
  for (const auto& e : s.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"test_accuracy", stat_json(e.test_accuracy)},
                      {"train_loss", stat_json(e.train_loss)},
                      {"eta_star", stat_json(e.eta_star)}});
  }
  auto& failures = j["failures"] = nlohmann::json::array();
  for (const auto& f : s.failures) {
    failures.push_back({{"seed", f.seed}, {"epoch", f.epoch}, {"reason", f.reason}});
  }
  return j.dump(2) + "\n";
}

Summary parse_summary_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Summary s;
  s.variants = j.at("variants").get<std::vector<std::string>>();
  s.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
  for (const auto& e : j.at("epochs")) {
    s.epochs.push_back({e.at("epoch").get<std::size_t>(),
                        stat_from_json(e.at("test_accuracy")),
                        stat_from_json(e.at("train_loss")),
                        stat_from_json(e.at("eta_star"))});
  }
  for (const auto& f : j.at("failures")) {
    s.failures.push_back({f.at("seed").get<std::uint64_t>(),
                          f.at("epoch").get<std::size_t>(),
                          f.at("reason").get<std::string>()});
  }
  return s;
}

}  // namespace arturo::harness
