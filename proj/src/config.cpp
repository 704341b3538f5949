#include "blindconv/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "blindconv/errors.hpp"

namespace blindconv {

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = {
      {"run.command", ValueType::kString, "deconvolve"},
      {"run.seed", ValueType::kU64, "1"},
      {"run.out", ValueType::kString, "out"},
      {"run.threads", ValueType::kInt, "0"},
      {"run.trace", ValueType::kBool, "false"},
      {"run.formats", ValueType::kString, "csv,pgm"},

      {"problem.L", ValueType::kInt, "512"},
      {"problem.K", ValueType::kInt, "25"},
      {"problem.N", ValueType::kInt, "25"},
      {"problem.b_kind", ValueType::kString, "identity-first"},
      {"problem.c_kind", ValueType::kString, "gaussian-code"},
      {"problem.observation", ValueType::kString, ""},
      {"problem.delta", ValueType::kDouble, "0"},

      {"solver.r", ValueType::kInt, "2"},
      {"solver.penalty_init", ValueType::kDouble, "10"},
      {"solver.penalty_growth", ValueType::kDouble, "10"},
      {"solver.residual_improvement", ValueType::kDouble, "0.25"},
      {"solver.inner_tolerance", ValueType::kDouble, "1e-08"},
      {"solver.max_outer_iters", ValueType::kInt, "50"},
      {"solver.max_inner_iters", ValueType::kInt, "1000"},
      {"solver.lbfgs_memory", ValueType::kInt, "10"},
      {"solver.rank_deficiency_tol", ValueType::kDouble, "0.001"},
      {"solver.equality_tol", ValueType::kDouble, "1e-06"},
      {"solver.slack_tol", ValueType::kDouble, "0.05"},

      {"phase.L", ValueType::kInt, "512"},
      {"phase.k_values", ValueType::kSizeList, "25,50,75,100,125,150,175,200"},
      {"phase.n_values", ValueType::kSizeList, "25,50,75,100,125,150,175,200"},
      {"phase.trials", ValueType::kInt, "25"},
      {"phase.b_kind", ValueType::kString, "identity-first"},
      {"phase.c_kind", ValueType::kString, "gaussian-code"},
      {"phase.threshold", ValueType::kDouble, "0.02"},

      {"noise.L", ValueType::kInt, "512"},
      {"noise.K", ValueType::kInt, "62"},
      {"noise.N", ValueType::kInt, "125"},
      {"noise.snr_db", ValueType::kDoubleList, "10,20,30,40,50"},
      {"noise.trials", ValueType::kInt, "25"},
      {"noise.b_kind", ValueType::kString, "identity-random-subset"},
      {"noise.c_kind", ValueType::kString, "gaussian-code"},

      {"oversample.K", ValueType::kInt, "25"},
      {"oversample.N", ValueType::kInt, "25"},
      {"oversample.lengths", ValueType::kSizeList, "75,100,150,200"},
      {"oversample.snr_db", ValueType::kDouble, "20"},
      {"oversample.trials", ValueType::kInt, "25"},
      {"oversample.b_kind", ValueType::kString, "identity-random-subset"},
      {"oversample.c_kind", ValueType::kString, "gaussian-code"},

      {"channel.L", ValueType::kInt, "512"},
      {"channel.N", ValueType::kInt, "100"},
      {"channel.delay_support", ValueType::kSizeList, "0,7,14,21,28,35,42,49,56,63,70,77,84,91,98,105,112,119,126,133"},
      {"channel.snr_db", ValueType::kDouble, "inf"},
      {"channel.trials", ValueType::kInt, "20"},

      {"deblur.image", ValueType::kString, ""},
      {"deblur.image_size", ValueType::kInt, "64"},
      {"deblur.kernel_side", ValueType::kInt, "3"},
      {"deblur.support", ValueType::kString, "oracle"},
      {"deblur.energy", ValueType::kDouble, "0.999"},
      {"deblur.N", ValueType::kInt, "0"},
      {"deblur.delta_rel", ValueType::kDouble, "0.015"},

      {"theory.seeds", ValueType::kInt, "20"},
      {"theory.samples", ValueType::kInt, "100000"},
      {"theory.alpha", ValueType::kDouble, "1"},
  };
  return schema;
}

namespace {

const KeySpec* find_key(const std::string& key) {
  for (const auto& s : config_schema()) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE && !std::isnan(out);
}

bool parse_ll(const std::string& s, long long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtoll(s.c_str(), &end, 10);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  if (s.empty() || s[0] == '-') return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtoull(s.c_str(), &end, 10);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

bool valid(ValueType type, const std::string& v) {
  switch (type) {
    case ValueType::kString: return true;
    case ValueType::kInt: {
      long long x = 0;
      return parse_ll(v, x);
    }
    case ValueType::kU64: {
      std::uint64_t x = 0;
      return parse_u64(v, x);
    }
    case ValueType::kDouble: {
      double x = 0;
      return parse_double(v, x);
    }
    case ValueType::kBool: return v == "true" || v == "false" || v == "1" || v == "0";
    case ValueType::kSizeList:
      if (v.empty()) return true;
      for (const auto& item : split_list(v)) {
        std::uint64_t x = 0;
        if (!parse_u64(item, x)) return false;
      }
      return true;
    case ValueType::kDoubleList:
      if (v.empty()) return true;
      for (const auto& item : split_list(v)) {
        double x = 0;
        if (!parse_double(item, x)) return false;
      }
      return true;
  }
  return false;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& s : config_schema()) values_[s.key] = s.default_value;
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", lineno);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", lineno);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("missing key", lineno);
    const std::string full = section.empty() || key.find('.') != std::string::npos ? key : section + "." + key;
    cfg.set(full, trim(line.substr(eq + 1)), lineno);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::set(const std::string& key, const std::string& value, int line) {
  const KeySpec* spec = find_key(key);
  if (spec == nullptr) throw ConfigError("unknown key '" + key + "'", line);
  if (!valid(spec->type, value)) throw ConfigError("invalid value '" + value + "' for " + key, line);
  values_[key] = value;
}

void RunConfig::apply_overrides(const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("override must look like key=value: " + a);
    set(trim(a.substr(0, eq)), trim(a.substr(eq + 1)));
  }
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  std::string section;
  bool first = true;
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section || first) {
      if (!first) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
      first = false;
    }
    os << key.substr(dot + 1) << " = " << value << '\n';
  }
  return os.str();
}

std::string RunConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::string& RunConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
  long long v = 0;
  if (!parse_ll(raw(key), v)) throw ConfigError(key + " is not an integer");
  return v;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  std::uint64_t v = 0;
  if (!parse_u64(raw(key), v)) throw ConfigError(key + " is not an unsigned integer");
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  double v = 0;
  if (!parse_double(raw(key), v)) throw ConfigError(key + " is not a number");
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = raw(key);
  return v == "true" || v == "1";
}

std::vector<std::size_t> RunConfig::get_size_list(const std::string& key) const {
  std::vector<std::size_t> out;
  const std::string& v = raw(key);
  if (v.empty()) return out;
  for (const auto& item : split_list(v)) {
    std::uint64_t x = 0;
    if (!parse_u64(item, x)) throw ConfigError(key + " is not a list of unsigned integers");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  const std::string& v = raw(key);
  if (v.empty()) return out;
  for (const auto& item : split_list(v)) {
    double x = 0;
    if (!parse_double(item, x)) throw ConfigError(key + " is not a list of numbers");
    out.push_back(x);
  }
  return out;
}

SolverOptions RunConfig::solver_options() const {
  SolverOptions o;
  o.r = static_cast<int>(get_int("solver.r"));
  o.penalty_init = get_double("solver.penalty_init");
  o.penalty_growth = get_double("solver.penalty_growth");
  o.residual_improvement = get_double("solver.residual_improvement");
  o.inner_tolerance = get_double("solver.inner_tolerance");
  o.max_outer_iters = static_cast<int>(get_int("solver.max_outer_iters"));
  o.max_inner_iters = static_cast<int>(get_int("solver.max_inner_iters"));
  o.lbfgs_memory = static_cast<int>(get_int("solver.lbfgs_memory"));
  o.rank_deficiency_tol = get_double("solver.rank_deficiency_tol");
  o.equality_tol = get_double("solver.equality_tol");
  o.slack_tol = get_double("solver.slack_tol");
  try {
    o.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return o;
}

}  // namespace blindconv
