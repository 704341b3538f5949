#pragma once

// Run configuration: flat "key = value" text grouped under [section]
// headers. Every key has a default; unknown keys and malformed values are
// rejected with the offending line number. Keys are addressed as
// "section.key".

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "blindconv/solver.hpp"

namespace blindconv {

enum class ValueType { kString, kInt, kU64, kDouble, kBool, kSizeList, kDoubleList };

struct KeySpec {
  std::string key;
  ValueType type;
  std::string default_value;
};

/// All recognized keys with their defaults.
const std::vector<KeySpec>& config_schema();

class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  /// Canonical form: sections and keys sorted, one "key = value" per line.
  std::string serialize() const;
  /// 64-bit FNV-1a of the canonical form, as 16 hex digits.
  std::string hash() const;

  /// Sets a known key after validating the value; throws ConfigError.
  void set(const std::string& key, const std::string& value, int line = 0);
  /// Applies "key=value" overrides in order.
  void apply_overrides(const std::vector<std::string>& assignments);

  const std::string& raw(const std::string& key) const;
  std::string get_string(const std::string& key) const { return raw(key); }
  long long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::size_t> get_size_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  SolverOptions solver_options() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace blindconv
