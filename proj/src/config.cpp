#include "fdw/common/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fdw::config {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/// Strips a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

void validate_key(const std::string& key, const std::string& origin) {
  if (key.empty()) throw std::invalid_argument(origin + ": empty config key");
  for (char c : key)
    if (!std::isalnum((unsigned char)c) && c != '_' && c != '.')
      throw std::invalid_argument(origin + ": bad character in key '" + key + "'");
}

std::vector<std::string> split_array(const std::string& key, const std::string& raw) {
  const auto t = trim(raw);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    throw std::invalid_argument("config key '" + key + "' is not an array: " + raw);
  std::vector<std::string> items;
  std::string body = t.substr(1, t.size() - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::int64_t parse_int(const std::string& key, const std::string& raw) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(trim(raw), &used);
    if (used != trim(raw).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' is not an integer: " + raw);
  }
}

double parse_double(const std::string& key, const std::string& raw) {
  try {
    std::size_t used = 0;
    const auto v = std::stod(trim(raw), &used);
    if (used != trim(raw).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' is not a number: " + raw);
  }
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  std::stringstream ss(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      validate_key(section, where);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(where + ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    validate_key(key, where);
    if (!section.empty()) key = section + "." + key;
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw std::invalid_argument(where + ": empty value for '" + key + "'");
    if (cfg.values_.count(key))
      throw std::invalid_argument(where + ": duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path.string());
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must be section.key=value, got '" + assignment + "'");
  const std::string key = trim(assignment.substr(0, eq));
  validate_key(key, "--set");
  const std::string value = trim(assignment.substr(eq + 1));
  if (value.empty()) throw std::invalid_argument("--set: empty value for '" + key + "'");
  values_[key] = value;
}

std::string Config::raw(const std::string& key) const {
  consumed_.insert(key);
  return values_.at(key);
}

std::int64_t Config::get_int(const std::string& key, std::int64_t def) const {
  return has(key) ? parse_int(key, raw(key)) : def;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t def) const {
  if (!has(key)) return def;
  const auto v = parse_int(key, raw(key));
  if (v < 0) throw std::invalid_argument("config key '" + key + "' must be non-negative");
  return (std::uint64_t)v;
}

double Config::get_double(const std::string& key, double def) const {
  return has(key) ? parse_double(key, raw(key)) : def;
}

bool Config::get_bool(const std::string& key, bool def) const {
  if (!has(key)) return def;
  const auto v = trim(raw(key));
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument("config key '" + key + "' is not a boolean: " + v);
}

std::string Config::get_string(const std::string& key, const std::string& def) const {
  if (!has(key)) return def;
  auto v = trim(raw(key));
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

std::vector<std::int64_t> Config::get_int_array(const std::string& key,
                                                std::vector<std::int64_t> def) const {
  if (!has(key)) return def;
  std::vector<std::int64_t> out;
  for (const auto& item : split_array(key, raw(key))) out.push_back(parse_int(key, item));
  return out;
}

std::vector<double> Config::get_double_array(const std::string& key,
                                             std::vector<double> def) const {
  if (!has(key)) return def;
  std::vector<double> out;
  for (const auto& item : split_array(key, raw(key))) out.push_back(parse_double(key, item));
  return out;
}

void Config::reject_unknown() const {
  std::string unknown;
  for (const auto& [key, value] : values_)
    if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  if (!unknown.empty())
    throw std::invalid_argument("unknown config keys: " + unknown);
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

}  // namespace fdw::config
