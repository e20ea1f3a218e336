#pragma once

// Report tables: CSV with a header row and 12 significant digits, and JSON
// {experiment, params, rows[], diagnostics{}} with round-trip precision.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "potkit/errors.hpp"

namespace potkit {

using Cell = std::variant<double, long long, bool, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
      throw DimensionMismatch("table '" + name + "' row", columns.size(), row.size());
    rows.push_back(std::move(row));
  }
};

struct Report {
  std::string experiment;
  nlohmann::json params = nlohmann::json::object();
  std::vector<Table> tables;
  nlohmann::json diagnostics = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> attachments;  // extra files: name, content
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string format_cell(const Cell& c) {
  struct Visitor {
    std::string operator()(double v) const { return format_number(v); }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
  };
  return std::visit(Visitor{}, c);
}

inline std::string to_csv(const Table& t) {
  std::ostringstream out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
    out << "\n";
  }
  return out.str();
}

// Non-finite doubles become strings, since JSON has no representation for them.
inline nlohmann::json cell_json(const Cell& c) {
  struct Visitor {
    nlohmann::json operator()(double v) const { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(format_number(v)); }
    nlohmann::json operator()(long long v) const { return v; }
    nlohmann::json operator()(bool v) const { return v; }
    nlohmann::json operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, c);
}

// rows[] holds one object per row of every table, tagged with the table name.
inline nlohmann::json to_json(const Report& r) {
  nlohmann::json j;
  j["experiment"] = r.experiment;
  j["params"] = r.params;
  j["rows"] = nlohmann::json::array();
  for (const Table& t : r.tables) {
    for (const auto& row : t.rows) {
      nlohmann::json o = nlohmann::json::object();
      o["table"] = t.name;
      for (std::size_t i = 0; i < row.size(); ++i) o[t.columns[i]] = cell_json(row[i]);
      j["rows"].push_back(std::move(o));
    }
  }
  j["diagnostics"] = r.diagnostics;
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << content;
  f.flush();
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

enum class Format { Csv, Json };

// Writes <dir>/<experiment>.json, or one <dir>/<experiment>_<table>.csv per table.
// Attachments are written verbatim next to them. Returns the written paths.
inline std::vector<std::filesystem::path> emit_report(const Report& r, Format format, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  if (format == Format::Json) {
    const auto p = dir / (r.experiment + ".json");
    write_text(p, to_json(r).dump(2) + "\n");
    written.push_back(p);
  } else {
    for (const Table& t : r.tables) {
      const auto p = dir / (r.experiment + "_" + t.name + ".csv");
      write_text(p, to_csv(t));
      written.push_back(p);
    }
  }
  for (const auto& [name, content] : r.attachments) {
    const auto p = dir / name;
    write_text(p, content);
    written.push_back(p);
  }
  return written;
}

}  // namespace potkit
