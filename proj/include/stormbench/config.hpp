#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stormbench/problems.hpp"

namespace stormbench {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Algorithm { StormPlus, SimplifiedStormPlus, Storm, Sgd, AdaGrad, Adam };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::StormPlus: return "storm_plus";
    case Algorithm::SimplifiedStormPlus: return "simplified_storm_plus";
    case Algorithm::Storm: return "storm";
    case Algorithm::Sgd: return "sgd";
    case Algorithm::AdaGrad: return "adagrad";
    case Algorithm::Adam: return "adam";
  }
  return "?";
}

enum class X0Kind { Constant, Gaussian };

// Flat key=value config with [section] headers. Chosen over nested formats
// so configs diff cleanly in experiment logs; the schema is in the README.
struct ExperimentConfig {
  // [problem]
  ProblemKind kind = ProblemKind::SigmoidWell;
  int dim = 1;
  double sigma = 0.0;
  int n = 0;                    // phase retrieval components
  std::uint64_t data_seed = 0;  // phase retrieval data stream
  int batch = 1;

  // [algorithm]
  Algorithm algorithm = Algorithm::StormPlus;
  double lr_scale = 1.0;                          // storm_plus family
  double theta = 0.0, w = 0.0, c = 0.0;           // storm (mandatory)
  double l_hint = 0.0;                            // storm (mandatory)
  double g_hint = 0.0;                            // storm (optional, 0 = unset)
  double lr = 0.0;                                // baselines (mandatory)
  double momentum = 0.0;                          // sgd
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;  // adam
  double adagrad_eps = 1e-10;

  // [run]
  std::int64_t T = 0;  // 0 = unset (sweeps may omit it)
  int repetitions = 1;
  std::uint64_t master_seed = 0;
  std::vector<std::int64_t> t_grid;
  int log_stride = 0;  // 0 = auto: 1 for T <= 1e4, 10 beyond
  X0Kind x0_kind = X0Kind::Gaussian;
  double x0_scale = 1.0;
  int burn_in = 1;
  bool dump_trajectories = false;
  bool show_median = false;  // report per-cell medians alongside means
};

inline int effective_log_stride(const ExperimentConfig& cfg, std::int64_t T) {
  if (cfg.log_stride > 0) return cfg.log_stride;
  return T <= 10000 ? 1 : 10;
}

inline Problem make_problem(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ProblemKind::NoisyQuadratic:
      return Problem::noisy_quadratic(cfg.dim, cfg.sigma);
    case ProblemKind::SigmoidWell:
      return Problem::sigmoid_well(cfg.dim, cfg.sigma);
    case ProblemKind::FiniteSumPhaseRetrieval:
      return Problem::phase_retrieval(cfg.dim, cfg.n, cfg.data_seed, cfg.batch);
    case ProblemKind::DeterministicRosenbrock:
      return Problem::rosenbrock(cfg.dim);
  }
  throw ConfigError("unknown problem kind");
}

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

class KvReader {
 public:
  explicit KvReader(std::string_view text) {
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      const std::size_t hash = line.find_first_of("#;");
      if (hash != std::string::npos) line.erase(hash);
      std::string t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw ConfigError("config line " + std::to_string(line_no) +
                            ": malformed section header");
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      const std::size_t eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": expected key = value");
      const std::string key = section + "." + trim(t.substr(0, eq));
      if (kv_.count(key))
        throw ConfigError("config: duplicate key '" + key + "'");
      kv_[key] = trim(t.substr(eq + 1));
    }
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end())
      throw ConfigError("config: missing mandatory key '" + key + "'");
    consumed_.insert(it->first);
    return it->second;
  }

  std::optional<std::string> get_opt(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    consumed_.insert(it->first);
    return it->second;
  }

  void reject_unknown() const {
    for (const auto& [k, v] : kv_) {
      if (!consumed_.count(k))
        throw ConfigError("config: unknown key '" + k + "'");
    }
  }

 private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> consumed_;
};

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    if (!std::isfinite(d)) throw std::invalid_argument("not finite");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not a finite number: '" +
                      v + "'");
  }
}

inline std::int64_t to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not an integer: '" + v + "'");
  }
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long i = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not an unsigned integer: '" +
                      v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: key '" + key + "' is not a boolean: '" + v + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config_text(std::string_view text) {
  detail::KvReader kv(text);
  ExperimentConfig cfg;

  const std::string kind = kv.get("problem.kind");
  if (kind == "noisy_quadratic") cfg.kind = ProblemKind::NoisyQuadratic;
  else if (kind == "sigmoid_well") cfg.kind = ProblemKind::SigmoidWell;
  else if (kind == "phase_retrieval") cfg.kind = ProblemKind::FiniteSumPhaseRetrieval;
  else if (kind == "rosenbrock") cfg.kind = ProblemKind::DeterministicRosenbrock;
  else throw ConfigError("config: unknown problem.kind '" + kind + "'");

  cfg.dim = static_cast<int>(detail::to_int("problem.dim", kv.get("problem.dim")));
  if (cfg.dim < 1) throw ConfigError("config: problem.dim must be >= 1");

  switch (cfg.kind) {
    case ProblemKind::NoisyQuadratic:
    case ProblemKind::SigmoidWell:
      cfg.sigma = detail::to_double("problem.sigma", kv.get("problem.sigma"));
      if (cfg.sigma < 0.0) throw ConfigError("config: problem.sigma must be >= 0");
      break;
    case ProblemKind::FiniteSumPhaseRetrieval:
      cfg.n = static_cast<int>(detail::to_int("problem.n", kv.get("problem.n")));
      if (cfg.n < 1) throw ConfigError("config: problem.n must be >= 1");
      cfg.data_seed =
          detail::to_uint("problem.data_seed", kv.get("problem.data_seed"));
      if (auto b = kv.get_opt("problem.batch")) {
        cfg.batch = static_cast<int>(detail::to_int("problem.batch", *b));
        if (cfg.batch < 1) throw ConfigError("config: problem.batch must be >= 1");
      }
      break;
    case ProblemKind::DeterministicRosenbrock:
      if (auto s = kv.get_opt("problem.sigma")) {
        if (detail::to_double("problem.sigma", *s) != 0.0)
          throw ConfigError("config: rosenbrock is deterministic; sigma must be 0");
      }
      break;
  }

  const std::string algo = kv.get("algorithm.name");
  if (algo == "storm_plus") cfg.algorithm = Algorithm::StormPlus;
  else if (algo == "simplified_storm_plus") cfg.algorithm = Algorithm::SimplifiedStormPlus;
  else if (algo == "storm") cfg.algorithm = Algorithm::Storm;
  else if (algo == "sgd") cfg.algorithm = Algorithm::Sgd;
  else if (algo == "adagrad") cfg.algorithm = Algorithm::AdaGrad;
  else if (algo == "adam") cfg.algorithm = Algorithm::Adam;
  else throw ConfigError("config: unknown algorithm.name '" + algo + "'");

  switch (cfg.algorithm) {
    case Algorithm::StormPlus:
    case Algorithm::SimplifiedStormPlus:
      if (auto v = kv.get_opt("algorithm.lr_scale")) {
        cfg.lr_scale = detail::to_double("algorithm.lr_scale", *v);
        if (!(cfg.lr_scale > 0.0))
          throw ConfigError("config: algorithm.lr_scale must be > 0");
      }
      break;
    case Algorithm::Storm:
      // No silent defaults: the original schedule is not parameter-free and
      // the tuning burden stays visible in the config.
      cfg.theta = detail::to_double("algorithm.theta", kv.get("algorithm.theta"));
      cfg.w = detail::to_double("algorithm.w", kv.get("algorithm.w"));
      cfg.c = detail::to_double("algorithm.c", kv.get("algorithm.c"));
      cfg.l_hint = detail::to_double("algorithm.l_hint", kv.get("algorithm.l_hint"));
      if (auto v = kv.get_opt("algorithm.g_hint"))
        cfg.g_hint = detail::to_double("algorithm.g_hint", *v);
      if (!(cfg.theta > 0.0) || !(cfg.w > 0.0) || !(cfg.c > 0.0) ||
          !(cfg.l_hint > 0.0))
        throw ConfigError("config: storm requires theta, w, c, l_hint > 0");
      break;
    case Algorithm::Sgd:
      cfg.lr = detail::to_double("algorithm.lr", kv.get("algorithm.lr"));
      if (auto v = kv.get_opt("algorithm.momentum"))
        cfg.momentum = detail::to_double("algorithm.momentum", *v);
      break;
    case Algorithm::AdaGrad:
      cfg.lr = detail::to_double("algorithm.lr", kv.get("algorithm.lr"));
      if (auto v = kv.get_opt("algorithm.eps"))
        cfg.adagrad_eps = detail::to_double("algorithm.eps", *v);
      break;
    case Algorithm::Adam:
      cfg.lr = detail::to_double("algorithm.lr", kv.get("algorithm.lr"));
      if (auto v = kv.get_opt("algorithm.beta1"))
        cfg.beta1 = detail::to_double("algorithm.beta1", *v);
      if (auto v = kv.get_opt("algorithm.beta2"))
        cfg.beta2 = detail::to_double("algorithm.beta2", *v);
      if (auto v = kv.get_opt("algorithm.eps"))
        cfg.eps = detail::to_double("algorithm.eps", *v);
      break;
  }
  if ((cfg.algorithm == Algorithm::Sgd || cfg.algorithm == Algorithm::AdaGrad ||
       cfg.algorithm == Algorithm::Adam) &&
      !(cfg.lr > 0.0))
    throw ConfigError("config: algorithm.lr must be > 0");

  if (auto v = kv.get_opt("run.T")) {
    cfg.T = detail::to_int("run.T", *v);
    if (cfg.T < 1) throw ConfigError("config: run.T must be >= 1");
  }
  cfg.repetitions = static_cast<int>(
      detail::to_int("run.repetitions", kv.get("run.repetitions")));
  if (cfg.repetitions < 1)
    throw ConfigError("config: run.repetitions must be >= 1");
  cfg.master_seed = detail::to_uint("run.master_seed", kv.get("run.master_seed"));

  if (auto v = kv.get_opt("run.t_grid")) {
    std::istringstream in(*v);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      const std::string t = detail::trim(tok);
      if (t.empty()) throw ConfigError("config: run.t_grid has an empty entry");
      cfg.t_grid.push_back(detail::to_int("run.t_grid", t));
    }
    for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
      if (cfg.t_grid[i] < 1)
        throw ConfigError("config: run.t_grid entries must be >= 1");
      if (i > 0 && cfg.t_grid[i] <= cfg.t_grid[i - 1])
        throw ConfigError("config: run.t_grid must be strictly increasing");
    }
  }
  if (cfg.T == 0 && cfg.t_grid.empty())
    throw ConfigError("config: need run.T or run.t_grid");

  if (auto v = kv.get_opt("run.log_stride")) {
    cfg.log_stride = static_cast<int>(detail::to_int("run.log_stride", *v));
    if (cfg.log_stride < 1)
      throw ConfigError("config: run.log_stride must be >= 1");
  }
  if (auto v = kv.get_opt("run.x0_kind")) {
    if (*v == "constant") cfg.x0_kind = X0Kind::Constant;
    else if (*v == "gaussian") cfg.x0_kind = X0Kind::Gaussian;
    else throw ConfigError("config: run.x0_kind must be constant or gaussian");
  }
  if (auto v = kv.get_opt("run.x0_scale"))
    cfg.x0_scale = detail::to_double("run.x0_scale", *v);
  if (auto v = kv.get_opt("run.burn_in")) {
    cfg.burn_in = static_cast<int>(detail::to_int("run.burn_in", *v));
    if (cfg.burn_in < 0) throw ConfigError("config: run.burn_in must be >= 0");
  }
  if (auto v = kv.get_opt("run.dump_trajectories"))
    cfg.dump_trajectories = detail::to_bool("run.dump_trajectories", *v);
  if (auto v = kv.get_opt("run.show_median"))
    cfg.show_median = detail::to_bool("run.show_median", *v);

  kv.reject_unknown();
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// Canonical text form: every field in a fixed order, numbers at full
// precision. Equal configs produce equal strings regardless of the source
// file's formatting, and the hash below is taken over this form.
inline std::string canonical_config_string(const ExperimentConfig& cfg) {
  char num[64];
  std::string out;
  auto put = [&out](std::string_view k, const std::string& v) {
    out.append(k);
    out.push_back('=');
    out.append(v);
    out.push_back('\n');
  };
  auto fmt_d = [&num](double v) {
    std::snprintf(num, sizeof(num), "%.17g", v);
    return std::string(num);
  };
  auto fmt_i = [&num](long long v) {
    std::snprintf(num, sizeof(num), "%lld", v);
    return std::string(num);
  };
  auto fmt_u = [&num](unsigned long long v) {
    std::snprintf(num, sizeof(num), "%llu", v);
    return std::string(num);
  };

  switch (cfg.kind) {
    case ProblemKind::NoisyQuadratic: put("problem.kind", "noisy_quadratic"); break;
    case ProblemKind::SigmoidWell: put("problem.kind", "sigmoid_well"); break;
    case ProblemKind::FiniteSumPhaseRetrieval: put("problem.kind", "phase_retrieval"); break;
    case ProblemKind::DeterministicRosenbrock: put("problem.kind", "rosenbrock"); break;
  }
  put("problem.dim", fmt_i(cfg.dim));
  put("problem.sigma", fmt_d(cfg.sigma));
  put("problem.n", fmt_i(cfg.n));
  put("problem.data_seed", fmt_u(cfg.data_seed));
  put("problem.batch", fmt_i(cfg.batch));
  put("algorithm.name", to_string(cfg.algorithm));
  put("algorithm.lr_scale", fmt_d(cfg.lr_scale));
  put("algorithm.theta", fmt_d(cfg.theta));
  put("algorithm.w", fmt_d(cfg.w));
  put("algorithm.c", fmt_d(cfg.c));
  put("algorithm.l_hint", fmt_d(cfg.l_hint));
  put("algorithm.g_hint", fmt_d(cfg.g_hint));
  put("algorithm.lr", fmt_d(cfg.lr));
  put("algorithm.momentum", fmt_d(cfg.momentum));
  put("algorithm.beta1", fmt_d(cfg.beta1));
  put("algorithm.beta2", fmt_d(cfg.beta2));
  put("algorithm.eps", fmt_d(cfg.eps));
  put("algorithm.adagrad_eps", fmt_d(cfg.adagrad_eps));
  put("run.T", fmt_i(cfg.T));
  put("run.repetitions", fmt_i(cfg.repetitions));
  put("run.master_seed", fmt_u(cfg.master_seed));
  std::string grid;
  for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
    if (i) grid.push_back(',');
    grid += fmt_i(cfg.t_grid[i]);
  }
  put("run.t_grid", grid);
  put("run.log_stride", fmt_i(cfg.log_stride));
  put("run.x0_kind", cfg.x0_kind == X0Kind::Constant ? "constant" : "gaussian");
  put("run.x0_scale", fmt_d(cfg.x0_scale));
  put("run.burn_in", fmt_i(cfg.burn_in));
  put("run.dump_trajectories", cfg.dump_trajectories ? "true" : "false");
  put("run.show_median", cfg.show_median ? "true" : "false");
  return out;
}

// FNV-1a 64 over the canonical form, as a 16-hex-digit id.
inline std::string config_hash(const ExperimentConfig& cfg) {
  const std::string s = canonical_config_string(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace stormbench
