#include "conic_ke/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "conic_ke/errors.hpp"

namespace conic_ke::io {

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  add_row(std::move(cells));
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header.size()) throw InvalidArgument("row width does not match the CSV header");
  rows.push_back(std::move(cells));
}

namespace {
std::string join(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cells[i];
  }
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw InvalidArgument("cannot parse number '" + s + "' in " + where);
  return v;
}
}  // namespace

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << join(table.header) << '\n';
  for (const auto& row : table.rows) out << join(row) << '\n';
  if (!out) throw InvalidArgument("write failed for " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path);
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    auto cells = split(line);
    if (cells.size() != t.header.size()) throw InvalidArgument("ragged row in " + path);
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw InvalidArgument(path + " is empty");
  return t;
}

CsvTable potential_table(const RadialKahlerPotential& pot) {
  CsvTable t{{"t", "phi_prime", "phi_doubleprime"}, {}};
  const auto& g = pot.grid();
  for (int i = 0; i < g.size(); ++i) t.add_row({g.node(i), pot.phi_prime()[i], pot.phi_doubleprime()[i]});
  return t;
}

void write_potential_csv(const std::string& path, const RadialKahlerPotential& pot) {
  write_csv(path, potential_table(pot));
}

RadialKahlerPotential read_potential_csv(const std::string& path, std::optional<double> angle_zero,
                                         std::optional<double> angle_infinity) {
  const auto table = read_csv(path);
  int ct = -1, c1 = -1, c2 = -1;
  for (int i = 0; i < static_cast<int>(table.header.size()); ++i) {
    if (table.header[i] == "t") ct = i;
    if (table.header[i] == "phi_prime") c1 = i;
    if (table.header[i] == "phi_doubleprime") c2 = i;
  }
  if (ct < 0 || c1 < 0 || c2 < 0) throw InvalidArgument(path + " needs columns t, phi_prime, phi_doubleprime");
  const int n = static_cast<int>(table.rows.size());
  if (n < 9 || n % 2 == 0) throw InvalidArgument(path + " needs an odd number (>= 9) of grid rows");
  Profile t(n), d1(n), d2(n);
  for (int i = 0; i < n; ++i) {
    t[i] = parse_double(table.rows[i][ct], path);
    d1[i] = parse_double(table.rows[i][c1], path);
    d2[i] = parse_double(table.rows[i][c2], path);
  }
  const double half = t.back();
  if (!(half > 0.0) || std::abs(t.front() + half) > 1e-9 * half) throw InvalidArgument(path + ": grid is not symmetric");
  Grid grid(half, n);
  for (int i = 0; i < n; ++i)
    if (std::abs(t[i] - grid.node(i)) > 1e-9 * half) throw InvalidArgument(path + ": grid is not uniform");
  Profile values = numerics::cumulative_integral(d1, grid.spacing());
  RadialKahlerPotential probe(grid, values, d1, d2, 0.0, 1.0, 1.0, Check::basic);
  auto fraction = [&](std::optional<double> given, Pole p) {
    if (given) return *given;
    const double b = cone_angle_at_pole(probe, p);
    return b > 1.0 - 1e-3 ? 1.0 : b;
  };
  const double bz = fraction(angle_zero, Pole::zero);
  const double bi = fraction(angle_infinity, Pole::infinity);
  return RadialKahlerPotential(grid, std::move(values), std::move(d1), std::move(d2), 0.0, bz, bi, Check::strict);
}

void write_json(const std::string& path, const nlohmann::json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << value.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

}  // namespace conic_ke::io
