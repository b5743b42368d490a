#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace fdw::config {

/// Flat key-value configuration in a TOML subset: [section] headers,
/// `key = value`, # comments, scalars (int, float, bool, quoted string)
/// and one-line arrays. Keys are addressed as "section.key".
///
/// Typed getters record which keys were consumed; reject_unknown() then
/// flags anything the command never asked about, so typos fail loudly.
class Config {
 public:
  Config() = default;

  static Config parse_file(const std::filesystem::path& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  /// Command-line override, `section.key=value` with a raw TOML value.
  void set(const std::string& assignment);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::int64_t get_int(const std::string& key, std::int64_t def) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
  double get_double(const std::string& key, double def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::string get_string(const std::string& key, const std::string& def) const;
  std::vector<std::int64_t> get_int_array(const std::string& key,
                                          std::vector<std::int64_t> def) const;
  std::vector<double> get_double_array(const std::string& key, std::vector<double> def) const;

  /// Throws naming every present key that no getter consumed.
  void reject_unknown() const;

  /// Sorted `key = value` lines; stable input for config hashing.
  std::string canonical() const;

 private:
  std::string raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

}  // namespace fdw::config
