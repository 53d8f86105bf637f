// Copyright (c) barrier-blo contributors
#include "barrier_blo_cli/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <barrier_blo/errors.hpp>

namespace bblo::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a real number, got '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key, "expected an integer, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key, "expected true/false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"problem", [&](const std::string&, const std::string& v) { cfg.problem = v; }},
      {"dim", [&](const std::string& k, const std::string& v) { cfg.dim = static_cast<int>(parse_int(k, v)); }},
      {"eps", [&](const std::string& k, const std::string& v) { cfg.solver.eps = parse_double(k, v); cfg.solver.qcqp.eps = cfg.solver.eps; }},
      {"w", [&](const std::string& k, const std::string& v) { cfg.solver.qcqp.w = parse_double(k, v); }},
      {"alpha_b", [&](const std::string& k, const std::string& v) { cfg.solver.qcqp.alpha_b = parse_double(k, v); }},
      {"alpha_ls", [&](const std::string& k, const std::string& v) { cfg.solver.ls.alpha_ls = parse_double(k, v); }},
      {"gamma", [&](const std::string& k, const std::string& v) { cfg.solver.ls.gamma = parse_double(k, v); }},
      {"beta", [&](const std::string& k, const std::string& v) { cfg.solver.ls.beta = parse_double(k, v); }},
      {"t_max", [&](const std::string& k, const std::string& v) { cfg.solver.ls.t_max = parse_double(k, v); }},
      {"max_backtracks", [&](const std::string& k, const std::string& v) { cfg.solver.ls.max_backtracks = static_cast<int>(parse_int(k, v)); }},
      {"max_iter", [&](const std::string& k, const std::string& v) { cfg.solver.max_iter = static_cast<int>(parse_int(k, v)); }},
      {"tol_dz", [&](const std::string& k, const std::string& v) { cfg.solver.tol_dz = parse_double(k, v); }},
      {"record_every", [&](const std::string& k, const std::string& v) { cfg.solver.record_every = static_cast<int>(parse_int(k, v)); }},
      {"seeds",
       [&](const std::string& k, const std::string& v) {
         cfg.seeds.clear();
         for (const auto& item : split_list(v)) {
           cfg.seeds.push_back(static_cast<std::uint64_t>(parse_int(k, item)));
         }
       }},
      {"out_dir", [&](const std::string&, const std::string& v) { cfg.out_dir = v; }},
      {"init", [&](const std::string& k, const std::string& v) { cfg.init = parse_bool(k, v); }},
      {"init_margin", [&](const std::string& k, const std::string& v) { cfg.init_margin = parse_double(k, v); }},
      {"init_budget", [&](const std::string& k, const std::string& v) { cfg.init_budget = static_cast<int>(parse_int(k, v)); }},
      {"z0_scale", [&](const std::string& k, const std::string& v) { cfg.z0_scale = parse_double(k, v); }},
      {"ablation_w",
       [&](const std::string& k, const std::string& v) {
         cfg.ablation_w.clear();
         for (const auto& item : split_list(v)) {
           cfg.ablation_w.push_back(parse_double(k, item));
         }
       }},
      {"num_train", [&](const std::string& k, const std::string& v) { cfg.dhc.num_train = static_cast<int>(parse_int(k, v)); }},
      {"num_val", [&](const std::string& k, const std::string& v) { cfg.dhc.num_val = static_cast<int>(parse_int(k, v)); }},
      {"num_test", [&](const std::string& k, const std::string& v) { cfg.dhc.num_test = static_cast<int>(parse_int(k, v)); }},
      {"feature_dim", [&](const std::string& k, const std::string& v) { cfg.dhc.feature_dim = static_cast<int>(parse_int(k, v)); }},
      {"num_classes", [&](const std::string& k, const std::string& v) { cfg.dhc.num_classes = static_cast<int>(parse_int(k, v)); }},
      {"corruption_rate", [&](const std::string& k, const std::string& v) { cfg.dhc.corruption_rate = parse_double(k, v); }},
      {"reg_coeff", [&](const std::string& k, const std::string& v) { cfg.dhc.reg_coeff = parse_double(k, v); }},
      {"compare_mode", [&](const std::string&, const std::string& v) { cfg.compare_mode = v; }},
      {"aid_inner_steps", [&](const std::string& k, const std::string& v) { cfg.aid_inner_steps = static_cast<int>(parse_int(k, v)); }},
      {"aid_outer_steps", [&](const std::string& k, const std::string& v) { cfg.aid_outer_steps = static_cast<int>(parse_int(k, v)); }},
      {"hypergrad_tol", [&](const std::string& k, const std::string& v) { cfg.hypergrad_tol = parse_double(k, v); }},
      {"gradcheck_points", [&](const std::string& k, const std::string& v) { cfg.gradcheck_points = static_cast<int>(parse_int(k, v)); }},
  };

  std::stringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError(key, "unknown configuration key");
    }
    it->second(key, value);
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config", "cannot open '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void ExperimentConfig::validate() const {
  if (problem != "synthetic" && problem != "quadratic" && problem != "dhc") {
    throw ConfigError("problem", "must be one of synthetic|quadratic|dhc");
  }
  if (dim < 1) throw ConfigError("dim", "must be >= 1");
  solver.validate();
  if (seeds.empty()) throw ConfigError("seeds", "list must be non-empty");
  if (!(init_margin > 0.0 && init_margin < 1.0)) throw ConfigError("init_margin", "must be in (0,1)");
  if (init_budget < 0) throw ConfigError("init_budget", "must be >= 0");
  if (!(z0_scale > 0.0)) throw ConfigError("z0_scale", "must be > 0");
  if (compare_mode != "both" && compare_mode != "baseline-only") {
    throw ConfigError("compare_mode", "must be both|baseline-only");
  }
  if (aid_inner_steps < 0) throw ConfigError("aid_inner_steps", "must be >= 0");
  if (aid_outer_steps < 0) throw ConfigError("aid_outer_steps", "must be >= 0");
  if (!(hypergrad_tol > 0.0)) throw ConfigError("hypergrad_tol", "must be > 0");
  if (gradcheck_points < 1) throw ConfigError("gradcheck_points", "must be >= 1");
  if (problem == "dhc") {
    dhc.validate();
  }
}

}  // namespace bblo::cli
