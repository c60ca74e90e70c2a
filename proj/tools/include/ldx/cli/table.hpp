#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ldx::cli {

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// Tables separated by "# table: <name>" lines; numbers as %.17g.
void write_csv(std::ostream& os, const std::vector<Table>& tables);
/// {"tables": {name: {"columns": [...], "rows": [[...]]}}}; non-finite numbers as strings.
void write_json(std::ostream& os, const std::vector<Table>& tables);

std::vector<Table> read_csv(std::istream& is);
std::vector<Table> read_json(std::istream& is);

std::string format_number(double x);

}  // namespace ldx::cli
