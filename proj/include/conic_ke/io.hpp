#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conic_ke/geometry.hpp"

namespace conic_ke::io {

/// 17 significant digits, the round-trip width for doubles.
std::string format_number(double x);

/// Header plus rows of already formatted cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<double>& values);
  void add_row(std::vector<std::string> cells);
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

/// `t,phi_prime,phi_doubleprime`, one row per node.
CsvTable potential_table(const RadialKahlerPotential& pot);
void write_potential_csv(const std::string& path, const RadialKahlerPotential& pot);

/// Reads `t,phi_prime,phi_doubleprime` on a uniform symmetric grid. Missing cone fractions are
/// fitted from the log-slope of Phi'' and taken as 1 when within 1e-3 of it.
RadialKahlerPotential read_potential_csv(const std::string& path, std::optional<double> angle_zero = {},
                                         std::optional<double> angle_infinity = {});

void write_json(const std::string& path, const nlohmann::json& value);
nlohmann::json read_json(const std::string& path);

}  // namespace conic_ke::io
