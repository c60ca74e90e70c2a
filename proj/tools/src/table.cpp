#include "ldx/cli/table.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ldx/errors.hpp"

namespace ldx::cli {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

double parse_number(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ConfigError("malformed number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<Table>& tables) {
  for (const auto& t : tables) {
    os << "# table: " << t.name << '\n';
    for (size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
    os << '\n';
    for (const auto& row : t.rows) {
      for (size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
      os << '\n';
    }
  }
}

void write_json(std::ostream& os, const std::vector<Table>& tables) {
  nlohmann::ordered_json doc;
  doc["tables"] = nlohmann::ordered_json::object();
  for (const auto& t : tables) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
      nlohmann::ordered_json r = nlohmann::ordered_json::array();
      for (double x : row) {
        if (std::isfinite(x))
          r.push_back(x);
        else
          r.push_back(format_number(x));
      }
      rows.push_back(std::move(r));
    }
    doc["tables"][t.name] = {{"columns", t.columns}, {"rows", std::move(rows)}};
  }
  os << doc.dump(2) << '\n';
}

std::vector<Table> read_csv(std::istream& is) {
  std::vector<Table> out;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.rfind("# table: ", 0) == 0) {
      out.push_back({line.substr(9), {}, {}});
      header = true;
    } else if (out.empty()) {
      throw ConfigError("CSV does not start with a table marker");
    } else if (header) {
      out.back().columns = line.empty() ? std::vector<std::string>{} : split(line);
      header = false;
    } else {
      std::vector<double> row;
      for (const auto& cell : split(line)) row.push_back(parse_number(cell));
      out.back().rows.push_back(std::move(row));
    }
  }
  return out;
}

std::vector<Table> read_json(std::istream& is) {
  const auto doc = nlohmann::ordered_json::parse(is);
  std::vector<Table> out;
  for (const auto& [name, t] : doc.at("tables").items()) {
    Table tab{name, t.at("columns").get<std::vector<std::string>>(), {}};
    for (const auto& r : t.at("rows")) {
      std::vector<double> row;
      for (const auto& x : r) row.push_back(x.is_string() ? parse_number(x.get<std::string>()) : x.get<double>());
      tab.rows.push_back(std::move(row));
    }
    out.push_back(std::move(tab));
  }
  return out;
}

}  // namespace ldx::cli
