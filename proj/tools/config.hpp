#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace repnp::cli {

struct ConfigKey {
  std::string section;
  std::string name;
  std::string default_value;
  std::string doc;
};

/// Sectioned key-value configuration:
///
///   # comment
///   [section]
///   key = value
///
/// Only keys declared in the schema are accepted; anything else is a
/// ConfigError naming the file and line.
class Config {
 public:
  explicit Config(std::vector<ConfigKey> schema);

  void load_file(const std::filesystem::path& path);
  /// Applies "section.key=value".
  void apply_override(const std::string& assignment);
  void set(const std::string& section, const std::string& name, const std::string& value);

  const std::string& get(const std::string& section, const std::string& name) const;
  double get_double(const std::string& section, const std::string& name) const;
  int get_int(const std::string& section, const std::string& name) const;
  std::uint64_t get_u64(const std::string& section, const std::string& name) const;
  bool get_bool(const std::string& section, const std::string& name) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& name) const;
  std::vector<int> get_ints(const std::string& section, const std::string& name) const;
  /// True when the value is the literal "auto".
  bool is_auto(const std::string& section, const std::string& name) const;

  /// Every key with its effective value, documented, in schema order.
  void write(std::ostream& out) const;
  void write_file(const std::filesystem::path& path) const;

 private:
  const ConfigKey& key(const std::string& section, const std::string& name) const;

  std::vector<ConfigKey> schema_;
  std::map<std::string, std::string> values_;  // "section.name" -> value
};

}  // namespace repnp::cli
