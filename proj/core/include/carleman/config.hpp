#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace carleman {

// Strict INI-style configuration. Accepted syntax, one construct per line:
//   [section]        section header (letters, digits, '_', '-', '.')
//   key = value      assignment inside the current section
//   # ... / ; ...    full-line comment
// Duplicate keys, assignments before any header, stray text and malformed
// headers are parse errors. Typed getters record which keys were read;
// require_all_consumed() turns leftovers into an error so configs cannot carry
// silently ignored settings.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  // Whitespace-separated list of doubles.
  std::vector<double> get_doubles(const std::string& section, const std::string& key) const;

  std::vector<std::string> sections() const;
  std::vector<std::string> keys(const std::string& section) const;

  // Throws listing every key no getter has touched.
  void require_all_consumed() const;

  // Canonical text form: sections and keys sorted, "key = value" lines. The
  // round trip parse_string(serialize()) reproduces the same configuration.
  std::string serialize() const;

 private:
  std::string lookup(const std::string& section, const std::string& key) const;

  std::map<std::string, std::map<std::string, std::string>> data_;
  mutable std::set<std::string> consumed_;
};

// 64-bit FNV-1a over the bytes of text; used to stamp outputs with the
// configuration they came from.
std::uint64_t fnv1a(const std::string& text);

// fnv1a over the canonical serialization.
std::uint64_t config_hash(const Config& cfg);

}  // namespace carleman
