#pragma once

// Structured text report: `[section]` headers followed by `key = value` lines.
// Numbers are written with up to 17 significant digits so that parsing the
// text recovers every value exactly.

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "larmor/config.hpp"
#include "larmor/error.hpp"

namespace larmor {

using ReportValue = std::variant<double, std::int64_t, bool, std::string>;

/// Bitwise equality, so NaN entries compare equal to themselves.
inline bool same_value(const ReportValue& a, const ReportValue& b) {
  if (a.index() != b.index()) return false;
  if (const double* x = std::get_if<double>(&a))
    return std::bit_cast<std::uint64_t>(*x) == std::bit_cast<std::uint64_t>(std::get<double>(b));
  return a == b;
}

struct ReportEntry {
  std::string key;
  ReportValue value;
};

struct ReportSection {
  std::string name;
  std::vector<ReportEntry> entries;
};

class Report {
 public:
  ReportSection& section(const std::string& name) {
    for (auto& s : sections_)
      if (s.name == name) return s;
    sections_.push_back({name, {}});
    return sections_.back();
  }

  void set(const std::string& sec, const std::string& key, double v) { put(sec, key, v); }
  void set(const std::string& sec, const std::string& key, std::int64_t v) { put(sec, key, v); }
  void set(const std::string& sec, const std::string& key, int v) { put(sec, key, std::int64_t(v)); }
  void set(const std::string& sec, const std::string& key, bool v) { put(sec, key, v); }
  void set(const std::string& sec, const std::string& key, std::string v) { put(sec, key, std::move(v)); }
  void set(const std::string& sec, const std::string& key, const char* v) { put(sec, key, std::string(v)); }

  void put(const std::string& sec, const std::string& key, ReportValue v) {
    auto& s = section(sec);
    for (auto& e : s.entries)
      if (e.key == key) {
        e.value = std::move(v);
        return;
      }
    s.entries.push_back({key, std::move(v)});
  }

  const ReportValue* find(const std::string& sec, const std::string& key) const {
    for (const auto& s : sections_)
      if (s.name == sec)
        for (const auto& e : s.entries)
          if (e.key == key) return &e.value;
    return nullptr;
  }

  double number(const std::string& sec, const std::string& key) const {
    const ReportValue* v = find(sec, key);
    require(v != nullptr, "report.missing_key", sec + "." + key);
    if (const double* d = std::get_if<double>(v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(v)) return double(*i);
    throw Error("report.type", sec + "." + key + " is not numeric");
  }

  bool flag(const std::string& sec, const std::string& key) const {
    const ReportValue* v = find(sec, key);
    require(v != nullptr && std::holds_alternative<bool>(*v), "report.missing_key", sec + "." + key);
    return std::get<bool>(*v);
  }

  const std::vector<ReportSection>& sections() const { return sections_; }

  std::string to_text() const {
    std::string out;
    for (const auto& s : sections_) {
      if (!out.empty()) out += "\n";
      out += "[" + s.name + "]\n";
      for (const auto& e : s.entries) out += e.key + " = " + format_value(e.value) + "\n";
    }
    return out;
  }

  static Report parse(const std::string& text) {
    Report r;
    std::istringstream in(text);
    std::string line, current;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        require(line.back() == ']', "report.syntax", "bad section header at line " + std::to_string(lineno));
        current = line.substr(1, line.size() - 2);
        r.section(current);
        continue;
      }
      const auto eq = line.find(" = ");
      require(eq != std::string::npos && !current.empty(), "report.syntax",
              "line " + std::to_string(lineno) + " is not key = value inside a section");
      r.put(current, line.substr(0, eq), parse_value(line.substr(eq + 3)));
    }
    return r;
  }

  bool operator==(const Report& o) const {
    if (sections_.size() != o.sections_.size()) return false;
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      const auto& a = sections_[i];
      const auto& b = o.sections_[i];
      if (a.name != b.name || a.entries.size() != b.entries.size()) return false;
      for (std::size_t j = 0; j < a.entries.size(); ++j)
        if (a.entries[j].key != b.entries[j].key || !same_value(a.entries[j].value, b.entries[j].value))
          return false;
    }
    return true;
  }

 private:
  // Strings are quoted so that "1" and 1, or "true" and true, stay distinct.
  static std::string format_value(const ReportValue& v) {
    if (const double* d = std::get_if<double>(&v)) {
      std::string s = format_double(*d);
      // keep doubles that print as integers distinguishable from int entries
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      return s;
    }
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    if (const bool* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    return "\"" + std::get<std::string>(v) + "\"";
  }

  static ReportValue parse_value(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    if (s.find_first_of(".eEn") == std::string::npos) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      require(ec == std::errc() && p == s.data() + s.size(), "report.syntax", "bad integer '" + s + "'");
      return v;
    }
    return parse_double("report", s);
  }

  std::vector<ReportSection> sections_;
};

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  require(bool(f), "output.writable", "cannot write " + path);
  f << text;
}

}  // namespace larmor
