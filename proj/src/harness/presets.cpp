#include "arturo/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <array>
#include <charconv>
#include <stdexcept>

namespace arturo::harness {

namespace {

constexpr std::array<const char*, 6> kColumns = {
    "fashion_mnist_cnn", "fashion_mnist_resnet18", "cifar10_cnn",
    "cifar10_resnet34",  "cifar100_cnn",           "cifar100_resnet34"};

struct Row {
  const char* optimizer;
  const char* key;
  std::array<const char*, 6> values;
};

// Tuned values per architecture column, as published.
constexpr Row kRows[] = {
    {"arturo", "epsilon", {"0.085675", "0.085675", "0.002787", "0.007133", "0.002787", "0.007234"}},
    {"arturo", "rho", {"0.058657", "0.058657", "0.296786", "1.597354", "0.296786", "1.676770"}},
    {"arturo", "r", {"2.816791", "2.816791", "1.219750", "9.328440", "1.219750", "4.822032"}},
    {"arturo", "q", {"0.017393", "0.017393", "0.002455", "0.089381", "0.002455", "0.009779"}},
    {"arturo", "weight_decay", {"0.000002", "0.000002", "0.000000", "0.000703", "0.000000", "0.000000"}},
    {"sgd", "learning_rate", {"0.071049", "0.137031", "0.017834", "0.056480", "0.017834", "0.067994"}},
    {"sgd", "momentum", {"0.865730", "0.854087", "0.946762", "0.866487", "0.946762", "0.867370"}},
    {"sgd", "weight_decay", {"0.000225", "0.001963", "0.000163", "0.001697", "0.000163", "0.001800"}},
    {"adam", "learning_rate", {"0.001012", "0.045115", "0.001129", "0.006652", "0.001129", "0.001612"}},
    {"adam", "beta1", {"0.945256", "0.907895", "0.851157", "0.890313", "0.851157", "0.864582"}},
    {"adam", "beta2", {"0.990342", "0.999999", "0.998940", "0.999387", "0.998940", "0.999953"}},
    {"adam", "weight_decay", {"0.000000", "0.000002", "0.001090", "0.000447", "0.001090", "0.001941"}},
    {"adamw", "learning_rate", {"0.001004", "0.018744", "0.001129", "0.006652", "0.001129", "0.001245"}},
    {"adamw", "beta1", {"0.922247", "0.862748", "0.851157", "0.890313", "0.851157", "0.858643"}},
    {"adamw", "beta2", {"0.999945", "0.999999", "0.998940", "0.999387", "0.998940", "0.998802"}},
    {"adamw", "weight_decay", {"0.000142", "0.000040", "0.001090", "0.000447", "0.001090", "0.001804"}},
};

std::optional<double> parse_number(std::string s) {
  for (const char* mark : {" ;", "\t;", " #", "\t#"}) {
    if (auto p = s.find(mark); p != std::string::npos) s.erase(p);
  }
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return std::nullopt;
  s = s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  double out = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return out;
}

}  // namespace

const std::map<std::string, std::map<std::string, std::string>>&
tuned_reference() {
  static const auto table = [] {
    std::map<std::string, std::map<std::string, std::string>> t;
    for (const Row& row : kRows) {
      for (std::size_t c = 0; c < kColumns.size(); ++c) {
        t[std::string(row.optimizer) + "." + kColumns[c]][row.key] =
            row.values[c];
      }
    }
    return t;
  }();
  return table;
}

HparamReport verify_paper_hparams(const std::filesystem::path& preset_file) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(preset_file.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::runtime_error(std::string("preset file: ") + e.what());
  }
  HparamReport report;
  for (const auto& [section, keys] : tuned_reference()) {
    const auto node = tree.get_child_optional(pt::ptree::path_type(section, '/'));
    for (const auto& [key, expected] : keys) {
      ++report.checked;
      std::optional<std::string> found;
      if (node) {
        if (auto v = node->get_optional<std::string>(pt::ptree::path_type(key, '/'))) {
          found = *v;
        }
      }
      if (!found) {
        report.mismatches.push_back({section, key, expected, "<missing>"});
        continue;
      }
      const auto want = parse_number(expected);
      const auto got = parse_number(*found);
      if (!got || *got != *want) {
        report.mismatches.push_back({section, key, expected, *found});
      }
    }
  }
  return report;
}

}  // namespace arturo::harness
