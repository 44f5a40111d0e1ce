#include "config.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "repnp/errors.hpp"

namespace repnp::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError(where + ": cannot parse '" + text + "' as a number");
  }
  return value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

Config::Config(std::vector<ConfigKey> schema) : schema_(std::move(schema)) {
  for (const ConfigKey& k : schema_) values_[k.section + "." + k.name] = k.default_value;
}

const ConfigKey& Config::key(const std::string& section, const std::string& name) const {
  for (const ConfigKey& k : schema_) {
    if (k.section == section && k.name == name) return k;
  }
  throw ConfigError("unknown configuration key '" + section + "." + name + "'");
}

void Config::set(const std::string& section, const std::string& name, const std::string& value) {
  key(section, name);
  values_[section + "." + name] = value;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override must look like section.key=value, got '" + assignment + "'");
  }
  set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
      unquote(trim(assignment.substr(eq + 1))));
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const ConfigKey& k : schema_) known = known || k.section == section;
      if (!known) throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    const std::string name = trim(line.substr(0, eq));
    try {
      set(section, name, unquote(trim(line.substr(eq + 1))));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

const std::string& Config::get(const std::string& section, const std::string& name) const {
  key(section, name);
  return values_.at(section + "." + name);
}

double Config::get_double(const std::string& section, const std::string& name) const {
  return parse_number<double>(get(section, name), section + "." + name);
}

int Config::get_int(const std::string& section, const std::string& name) const {
  return parse_number<int>(get(section, name), section + "." + name);
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& name) const {
  return parse_number<std::uint64_t>(get(section, name), section + "." + name);
}

bool Config::get_bool(const std::string& section, const std::string& name) const {
  const std::string& v = get(section, name);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(section + "." + name + ": expected true or false, got '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& name) const {
  std::vector<double> out;
  for (const std::string& item : split_list(get(section, name))) {
    out.push_back(parse_number<double>(item, section + "." + name));
  }
  return out;
}

std::vector<int> Config::get_ints(const std::string& section, const std::string& name) const {
  std::vector<int> out;
  for (const std::string& item : split_list(get(section, name))) {
    out.push_back(parse_number<int>(item, section + "." + name));
  }
  return out;
}

bool Config::is_auto(const std::string& section, const std::string& name) const {
  return get(section, name) == "auto";
}

void Config::write(std::ostream& out) const {
  std::string section;
  for (const ConfigKey& k : schema_) {
    if (k.section != section) {
      if (!section.empty()) out << '\n';
      section = k.section;
      out << '[' << section << "]\n";
    }
    out << "# " << k.doc << " (default: " << (k.default_value.empty() ? "\"\"" : k.default_value) << ")\n";
    out << k.name << " = " << values_.at(k.section + "." + k.name) << '\n';
  }
}

void Config::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write(out);
}

}  // namespace repnp::cli
