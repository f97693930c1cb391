#pragma once

#include <cstdio>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kcd/core/types.hpp"

namespace kcd::cli {

using Json = nlohmann::ordered_json;

// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double x) {
  if (x == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// A column-ordered table; cells are numbers or strings.
struct Table {
  using Cell = std::variant<double, long long, std::string>;

  std::string name;  // file stem suffix, e.g. "b" for <experiment>.b.csv
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    require(row.size() == columns.size(), ErrorKind::LengthMismatch,
            "table '" + name + "' row has " + std::to_string(row.size()) + " cells, expected " +
                std::to_string(columns.size()));
    rows.push_back(std::move(row));
  }

  static std::string cell_text(const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) return format_double(*d);
    if (const long long* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
  }

  std::string to_csv(const std::string& config_hash) const {
    std::string out = "# config_hash=" + config_hash + " version=" + kVersion + "\n";
    for (std::size_t j = 0; j < columns.size(); ++j) out += (j ? "," : "") + columns[j];
    out += "\n";
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < r.size(); ++j) out += (j ? "," : "") + cell_text(r[j]);
      out += "\n";
    }
    return out;
  }

  // Column-major JSON: {"columns": [...], "data": {"col": [...]}}.
  Json to_json() const {
    Json data = Json::object();
    for (std::size_t j = 0; j < columns.size(); ++j) {
      Json col = Json::array();
      for (const auto& r : rows) {
        if (const double* d = std::get_if<double>(&r[j]))
          col.push_back(*d == 0.0 ? 0.0 : *d);
        else if (const long long* i = std::get_if<long long>(&r[j]))
          col.push_back(*i);
        else
          col.push_back(std::get<std::string>(r[j]));
      }
      data[columns[j]] = std::move(col);
    }
    return Json{{"columns", columns}, {"data", std::move(data)}};
  }
};

struct OutputFile {
  std::string name;
  std::string content;
};

enum class Format { Csv, Json };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw Error(ErrorKind::Config, "unknown output format '" + s + "'");
}

struct Report {
  std::string experiment;  // output file stem
  Json metadata = Json::object();
  std::vector<Table> tables;

  // csv: one CSV per table plus <stem>.json metadata; json: a single
  // <stem>.json holding the metadata and every table.
  std::vector<OutputFile> render(Format f, const std::string& config_hash) const {
    Json meta = metadata;
    meta["config_hash"] = config_hash;
    meta["version"] = kVersion;
    std::vector<OutputFile> out;
    if (f == Format::Csv) {
      Json files = Json::array();
      for (const auto& t : tables) {
        out.push_back({experiment + "." + t.name + ".csv", t.to_csv(config_hash)});
        files.push_back(out.back().name);
      }
      meta["files"] = std::move(files);
    } else {
      Json tabs = Json::object();
      for (const auto& t : tables) tabs[t.name] = t.to_json();
      meta["tables"] = std::move(tabs);
    }
    out.push_back({experiment + ".json", meta.dump(2) + "\n"});
    return out;
  }
};

}  // namespace kcd::cli
