#pragma once

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kcd/core/types.hpp"

namespace kcd::cli {

// Plain-text experiment configuration:
//
//   # comment (also ';')
//   [section]
//   key = value
//   list = 0.5, 1.0, 2.0
//
// Keys are unique within a section. Every field read through the typed
// accessors is marked as used; check_all_used() rejects leftovers so typos
// do not silently fall back to defaults.
class Config {
 public:
  struct Field {
    std::string value;
    int line = 0;
  };

  static Config parse(const std::string& text, const std::string& origin = "<config>") {
    Config c;
    c.origin_ = origin;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      std::string s = strip(cut_comment(raw));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']' || s.size() < 3)
          throw c.error_at(line, "malformed section header '" + s + "'");
        section = strip(s.substr(1, s.size() - 2));
        if (!valid_name(section)) throw c.error_at(line, "invalid section name '" + section + "'");
        if (!c.sections_.insert(section).second) throw c.error_at(line, "duplicate section [" + section + "]");
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw c.error_at(line, "expected 'key = value', got '" + s + "'");
      if (section.empty()) throw c.error_at(line, "field outside of any section");
      const std::string key = strip(s.substr(0, eq)), value = strip(s.substr(eq + 1));
      if (!valid_name(key)) throw c.error_at(line, "invalid field name '" + key + "'");
      if (value.empty()) throw c.error_at(line, "[" + section + "] " + key + ": empty value");
      if (!c.fields_.emplace(section + "." + key, Field{value, line}).second)
        throw c.error_at(line, "[" + section + "] " + key + ": duplicate field");
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Config, path + ": cannot open config file");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }

  const std::string& origin() const noexcept { return origin_; }
  bool has(const std::string& section, const std::string& key) const {
    return fields_.count(section + "." + key) > 0;
  }
  bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

  // Overrides (or inserts) a field, e.g. from a command-line flag.
  void set(const std::string& section, const std::string& key, const std::string& value) {
    sections_.insert(section);
    fields_[section + "." + key] = Field{value, 0};
  }

  std::string get_string(const std::string& section, const std::string& key) const {
    return field(section, key).value;
  }
  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
    return has(section, key) ? get_string(section, key) : fallback;
  }

  std::string get_choice(const std::string& section, const std::string& key,
                         const std::vector<std::string>& allowed) const {
    const Field& f = field(section, key);
    for (const auto& a : allowed)
      if (f.value == a) return a;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw field_error(section, key, f.line, "expected one of {" + list + "}, got '" + f.value + "'");
  }
  std::string get_choice(const std::string& section, const std::string& key, const std::vector<std::string>& allowed,
                         const std::string& fallback) const {
    return has(section, key) ? get_choice(section, key, allowed) : fallback;
  }

  double get_double(const std::string& section, const std::string& key) const {
    const Field& f = field(section, key);
    return to_double(f.value, section, key, f.line);
  }
  double get_double(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
  }

  long long get_int(const std::string& section, const std::string& key) const {
    const Field& f = field(section, key);
    return to_int(f.value, section, key, f.line);
  }
  long long get_int(const std::string& section, const std::string& key, long long fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key) const {
    const Field& f = field(section, key);
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(f.value.c_str(), &end, 10);
    if (f.value.front() == '-' || errno != 0 || end == f.value.c_str() || *end != '\0')
      throw field_error(section, key, f.line, "expected unsigned 64-bit integer, got '" + f.value + "'");
    return v;
  }

  std::vector<double> get_doubles(const std::string& section, const std::string& key) const {
    const Field& f = field(section, key);
    std::vector<double> out;
    for (const auto& item : split(f.value)) out.push_back(to_double(item, section, key, f.line));
    return out;
  }

  std::vector<std::string> get_strings(const std::string& section, const std::string& key) const {
    return split(field(section, key).value);
  }

  // Reports a semantic problem with a field that parsed fine.
  Error invalid(const std::string& section, const std::string& key, const std::string& what) const {
    auto it = fields_.find(section + "." + key);
    return field_error(section, key, it == fields_.end() ? 0 : it->second.line, what);
  }

  void check_all_used() const {
    for (const auto& [name, f] : fields_)
      if (!used_.count(name)) {
        const auto dot = name.find('.');
        throw error_at(f.line, "[" + name.substr(0, dot) + "] " + name.substr(dot + 1) + ": unknown field");
      }
    for (const auto& s : sections_) {
      bool any = false;
      for (const auto& u : used_) any = any || u.rfind(s + ".", 0) == 0;
      if (!any) throw Error(ErrorKind::Config, origin_ + ": section [" + s + "] is not used by this experiment");
    }
  }

  // Canonical "section.key=value" lines in sorted order.
  std::string canonical() const {
    std::string out;
    for (const auto& [name, f] : fields_) out += name + "=" + f.value + "\n";
    return out;
  }

  // FNV-1a over the canonical form, so formatting and comments do not matter.
  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical()) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  std::map<std::string, std::string> flat() const {
    std::map<std::string, std::string> out;
    for (const auto& [name, f] : fields_) out[name] = f.value;
    return out;
  }

 private:
  std::string origin_;
  std::map<std::string, Field> fields_;
  std::set<std::string> sections_;
  mutable std::set<std::string> used_;

  const Field& field(const std::string& section, const std::string& key) const {
    auto it = fields_.find(section + "." + key);
    if (it == fields_.end())
      throw Error(ErrorKind::Config, origin_ + ": [" + section + "] " + key + ": required field missing");
    used_.insert(it->first);
    return it->second;
  }

  Error error_at(int line, const std::string& what) const {
    return Error(ErrorKind::Config, origin_ + (line > 0 ? ":" + std::to_string(line) : "") + ": " + what);
  }
  Error field_error(const std::string& section, const std::string& key, int line, const std::string& what) const {
    return error_at(line, "[" + section + "] " + key + ": " + what);
  }

  double to_double(const std::string& s, const std::string& section, const std::string& key, int line) const {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end == s.c_str() || *end != '\0' || !std::isfinite(v))
      throw field_error(section, key, line, "expected a finite number, got '" + s + "'");
    return v;
  }

  long long to_int(const std::string& s, const std::string& section, const std::string& key, int line) const {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end == s.c_str() || *end != '\0')
      throw field_error(section, key, line, "expected an integer, got '" + s + "'");
    return v;
  }

  static std::string cut_comment(const std::string& s) {
    const auto p = s.find_first_of("#;");
    return p == std::string::npos ? s : s.substr(0, p);
  }
  static std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    return s.substr(a, s.find_last_not_of(" \t\r\n") - a + 1);
  }
  static bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char ch : s)
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) return false;
    return true;
  }
  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) out.push_back(strip(item));
    return out;
  }
};

}  // namespace kcd::cli
