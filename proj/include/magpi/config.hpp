#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "magpi/common.hpp"

namespace magpi {

// Flat text configuration: [section] headers followed by key = value lines.
// Keys are stored section-qualified ("section.key").  Full-line comments
// start with '#' or ';'; values are taken verbatim after trimming, so they
// may contain any printable character including '#'.
//
// serialize() emits a canonical form (sections and keys sorted, single
// spaces around '='); parse(serialize(c)) == c for every config, and the
// canonical bytes are what config_hash digests.

struct Config {
  std::map<std::string, std::string> kv;

  bool has(const std::string& key) const { return kv.count(key) != 0; }

  const std::string& raw(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw config_error("missing config key: " + key);
    return it->second;
  }

  void set(const std::string& key, const std::string& value) { kv[key] = value; }

  std::string get_string(const std::string& key) const { return raw(key); }
  std::string get_string(const std::string& key, const std::string& def) const {
    return has(key) ? raw(key) : def;
  }

  double get_double(const std::string& key) const {
    return parse_double(key, raw(key));
  }
  double get_double(const std::string& key, double def) const {
    return has(key) ? get_double(key) : def;
  }

  std::int64_t get_int(const std::string& key) const {
    return parse_integer<std::int64_t>(key, raw(key));
  }
  std::int64_t get_int(const std::string& key, std::int64_t def) const {
    return has(key) ? get_int(key) : def;
  }

  std::uint64_t get_uint(const std::string& key) const {
    return parse_integer<std::uint64_t>(key, raw(key));
  }
  std::uint64_t get_uint(const std::string& key, std::uint64_t def) const {
    return has(key) ? get_uint(key) : def;
  }

  bool get_bool(const std::string& key) const {
    const std::string& v = raw(key);
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw config_error("bad boolean for key " + key + ": '" + v + "'");
  }
  bool get_bool(const std::string& key, bool def) const {
    return has(key) ? get_bool(key) : def;
  }

  // whitespace- or comma-separated numbers
  std::vector<double> get_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& tok : split_tokens(raw(key)))
      out.push_back(parse_double(key, tok));
    return out;
  }

  std::vector<int> get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (const std::string& tok : split_tokens(raw(key)))
      out.push_back(static_cast<int>(parse_integer<std::int64_t>(key, tok)));
    return out;
  }

  Vec3 get_vec3(const std::string& key) const {
    const auto v = get_list(key);
    if (v.size() != 3)
      throw config_error("key " + key + " must hold exactly 3 numbers");
    return Vec3{v[0], v[1], v[2]};
  }

  // semicolon-separated triples: "x y z; x y z; ..."
  std::vector<Vec3> get_vec3_list(const std::string& key) const {
    std::vector<Vec3> out;
    std::stringstream ss(raw(key));
    std::string group;
    while (std::getline(ss, group, ';')) {
      const auto toks = split_tokens(group);
      if (toks.empty()) continue;
      if (toks.size() != 3)
        throw config_error("key " + key + ": each ';' group needs 3 numbers");
      out.push_back(Vec3{parse_double(key, toks[0]), parse_double(key, toks[1]),
                         parse_double(key, toks[2])});
    }
    return out;
  }

  bool operator==(const Config& o) const { return kv == o.kv; }

 private:
  static std::vector<std::string> split_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
        if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }

  static double parse_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing junk");
      return d;
    } catch (const std::exception&) {
      throw config_error("bad number for key " + key + ": '" + v + "'");
    }
  }

  template <class Int>
  static Int parse_integer(const std::string& key, const std::string& v) {
    Int value{};
    const char* first = v.data();
    const char* last = v.data() + v.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
      throw config_error("bad integer for key " + key + ": '" + v + "'");
    return value;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline void check_name(const std::string& name, const char* what, int line_no) {
  if (name.empty())
    throw config_error(std::string("empty ") + what + " at line " +
                       std::to_string(line_no));
  for (char ch : name)
    if (ch == '.' || ch == '[' || ch == ']' || ch == '=' ||
        std::isspace(static_cast<unsigned char>(ch)))
      throw config_error(std::string("invalid character in ") + what + " '" +
                         name + "' at line " + std::to_string(line_no));
}

}  // namespace detail

inline Config parse_config(const std::string& text) {
  Config cfg;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw config_error("unterminated section header at line " +
                           std::to_string(line_no));
      section = detail::trim(t.substr(1, t.size() - 2));
      detail::check_name(section, "section name", line_no);
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error("expected key = value at line " +
                         std::to_string(line_no));
    const std::string key = detail::trim(t.substr(0, eq));
    detail::check_name(key, "key", line_no);
    if (section.empty())
      throw config_error("key '" + key + "' outside any [section] at line " +
                         std::to_string(line_no));
    const std::string full = section + "." + key;
    if (cfg.kv.count(full))
      throw config_error("duplicate key " + full + " at line " +
                         std::to_string(line_no));
    cfg.kv[full] = detail::trim(t.substr(eq + 1));
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// Canonical text form: sections in lexicographic order, keys sorted within
// each (std::map order), "key = value" with single spaces.
inline std::string serialize(const Config& cfg) {
  std::string out;
  std::string section;
  for (const auto& [full, value] : cfg.kv) {
    const std::size_t dot = full.find('.');
    const std::string sec = full.substr(0, dot);
    const std::string key = full.substr(dot + 1);
    if (sec != section) {
      if (!out.empty()) out += '\n';
      out += '[' + sec + "]\n";
      section = sec;
    }
    out += key + " = " + value + '\n';
  }
  return out;
}

// FNV-1a over the canonical serialization: stable across platforms and
// insensitive to comment/order differences in the source text.
inline std::uint64_t config_hash(const Config& cfg) {
  const std::string bytes = serialize(cfg);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace magpi
