#include "carleman/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace carleman {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
      return false;
  return true;
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw std::invalid_argument("Config: line " + std::to_string(line) + ": " + what);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  bool have_section = false;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section)) fail(line_no, "invalid section name '" + section + "'");
      have_section = true;
      cfg.data_[section];  // empty sections are legal
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
    if (!have_section) fail(line_no, "assignment before any [section] header");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_name(key)) fail(line_no, "invalid key '" + key + "'");
    auto& sec = cfg.data_[section];
    if (sec.count(key)) fail(line_no, "duplicate key '" + section + "." + key + "'");
    sec[key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  return it != data_.end() && it->second.count(key) > 0;
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  if (!valid_name(section) || !valid_name(key))
    throw std::invalid_argument("Config: invalid name '" + section + "." + key + "'");
  data_[section][key] = value;
}

std::string Config::lookup(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  if (it == data_.end() || !it->second.count(key))
    throw std::out_of_range("Config: missing key '" + section + "." + key + "'");
  consumed_.insert(section + "." + key);
  return it->second.at(key);
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  return lookup(section, key);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? lookup(section, key) : fallback;
}

namespace {

double parse_double(const std::string& section, const std::string& key,
                    const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw std::invalid_argument("Config: key '" + section + "." + key +
                                "' is not a number: '" + value + "'");
  return v;
}

}  // namespace

double Config::get_double(const std::string& section, const std::string& key) const {
  return parse_double(section, key, lookup(section, key));
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

int Config::get_int(const std::string& section, const std::string& key) const {
  const double v = get_double(section, key);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw std::invalid_argument("Config: key '" + section + "." + key +
                                "' is not an integer");
  return i;
}

int Config::get_int(const std::string& section, const std::string& key,
                    int fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string value = lookup(section, key);
  const char* begin = value.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw std::invalid_argument("Config: key '" + section + "." + key +
                                "' is not an unsigned integer: '" + value + "'");
  return static_cast<std::uint64_t>(v);
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = lookup(section, key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("Config: key '" + section + "." + key +
                              "' is not a boolean: '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& section,
                                        const std::string& key) const {
  std::istringstream in(lookup(section, key));
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(section, key, tok));
  if (out.empty())
    throw std::invalid_argument("Config: key '" + section + "." + key + "' is empty");
  return out;
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, kv] : data_) out.push_back(name);
  return out;
}

std::vector<std::string> Config::keys(const std::string& section) const {
  std::vector<std::string> out;
  auto it = data_.find(section);
  if (it != data_.end())
    for (const auto& [key, value] : it->second) out.push_back(key);
  return out;
}

void Config::require_all_consumed() const {
  std::string leftovers;
  for (const auto& [section, kv] : data_)
    for (const auto& [key, value] : kv)
      if (!consumed_.count(section + "." + key))
        leftovers += (leftovers.empty() ? "" : ", ") + section + "." + key;
  if (!leftovers.empty())
    throw std::invalid_argument("Config: unknown keys: " + leftovers);
}

std::string Config::serialize() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, kv] : data_) {
    if (!first) out << "\n";
    first = false;
    out << "[" << section << "]\n";
    for (const auto& [key, value] : kv) out << key << " = " << value << "\n";
  }
  return out.str();
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : text) {
    hash ^= static_cast<std::uint64_t>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

std::uint64_t config_hash(const Config& cfg) { return fnv1a(cfg.serialize()); }

}  // namespace carleman
