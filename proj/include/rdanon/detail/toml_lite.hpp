#pragma once

// Flat TOML subset: `key = value` lines, `#` comments, bare keys, integer,
// float, boolean and basic-string values. Tables and arrays are rejected.

#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>

#include "../error.hpp"

namespace rdanon::detail {

using TomlValue = std::variant<long long, double, bool, std::string>;

class TomlTable {
public:
  static TomlTable parse(std::string_view text) {
    TomlTable table;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string_view line = strip_comment(raw);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        throw FormatError(where(line_no) + "tables are not supported");
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw FormatError(where(line_no) + "expected `key = value`");
      }
      const std::string key{trim(line.substr(0, eq))};
      if (key.empty() || !valid_key(key)) {
        throw FormatError(where(line_no) + "invalid key '" + key + "'");
      }
      if (table.values_.contains(key)) {
        throw FormatError(where(line_no) + "duplicate key '" + key + "'");
      }
      table.values_[key] = parse_value(trim(line.substr(eq + 1)), line_no);
    }
    return table;
  }

  bool contains(const std::string& key) const { return values_.contains(key); }

  std::optional<long long> get_integer(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (auto* v = std::get_if<long long>(&it->second)) return *v;
    throw FormatError("config key '" + key + "' must be an integer");
  }

  /// Integers are accepted where a float is expected.
  std::optional<double> get_real(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (auto* v = std::get_if<double>(&it->second)) return *v;
    if (auto* v = std::get_if<long long>(&it->second)) return static_cast<double>(*v);
    throw FormatError("config key '" + key + "' must be a number");
  }

  std::optional<std::string> get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (auto* v = std::get_if<std::string>(&it->second)) return *v;
    throw FormatError("config key '" + key + "' must be a string");
  }

private:
  static std::string where(int line_no) {
    return "config line " + std::to_string(line_no) + ": ";
  }

  static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  }

  // A '#' inside a quoted string is not a comment.
  static std::string_view strip_comment(std::string_view s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static bool valid_key(std::string_view key) {
    for (char c : key) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    }
    return true;
  }

  static TomlValue parse_value(std::string_view v, int line_no) {
    if (v.empty()) throw FormatError(where(line_no) + "missing value");
    if (v.front() == '"') {
      if (v.size() < 2 || v.back() != '"') {
        throw FormatError(where(line_no) + "unterminated string");
      }
      std::string out;
      for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] == '\\' && i + 2 < v.size()) {
          const char e = v[++i];
          switch (e) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            default: throw FormatError(where(line_no) + "unsupported escape");
          }
        } else {
          out += v[i];
        }
      }
      return out;
    }
    if (v == "true") return true;
    if (v == "false") return false;

    std::string digits;
    for (char c : v) {
      if (c != '_') digits += c;
    }
    const bool looks_real = digits.find_first_of(".eE") != std::string::npos ||
                            digits == "inf" || digits == "nan";
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    if (!digits.empty() && digits.front() == '+') ++first;
    if (looks_real) {
      double d = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, d);
      if (ec == std::errc{} && ptr == last) return d;
    } else {
      long long i = 0;
      auto [ptr, ec] = std::from_chars(first, last, i);
      if (ec == std::errc{} && ptr == last) return i;
    }
    throw FormatError(where(line_no) + "cannot parse value '" + std::string(v) + "'");
  }

  std::map<std::string, TomlValue, std::less<>> values_;
};

} // namespace rdanon::detail
