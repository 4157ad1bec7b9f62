#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "healthshock/model.hpp"

namespace healthshock {

enum class TableKind { Mortality, Morbidity };

struct LifeTableRow {
  double age = 0.0;
  double rate = 0.0;
  double weight = 1.0;
};

struct LifeTable {
  std::vector<LifeTableRow> rows;
  TableKind kind = TableKind::Mortality;

  double min_age() const;
  /// Rows sorted by age; throws DegenerateTable on repeated ages.
  LifeTable sorted() const;
};

/// CSV with header `age,rate[,weight]`. Blank lines and lines starting with
/// '#' are skipped. Errors name the offending line.
LifeTable read_life_table(std::istream& in, TableKind kind, const std::string& source = "<stream>");
LifeTable load_life_table(const std::string& path, TableKind kind);
void write_life_table(std::ostream& out, const LifeTable& table);

struct FitResult {
  std::string model;  // gompertz | illness | transition
  std::map<std::string, double> parameters;
  double sse = 0.0;
  std::size_t iterations = 0;
  bool converged = false;

  double at(const std::string& name) const;
};

struct NelderMeadOptions {
  double tolerance = 1e-8;  // simplex diameter relative to the best vertex
  std::size_t max_iterations = 10000;
};

/// (n, l) by Nelder-Mead on the weighted SSE of rates, m fixed to the table's
/// minimum age. Started from the log-linear fit unless `init` is given.
FitResult fit_gompertz(const LifeTable& table, std::optional<GompertzLaw> init = std::nullopt,
                       const NelderMeadOptions& options = {});

/// (k1, k2) by weighted linear least squares of rate - gompertz(age) on (1, age).
FitResult fit_illness_excess(const LifeTable& mortality, const FitResult& base);

/// (m1, n1) of q(t) = m1 exp(n1 t), t = age - base_age, by weighted least
/// squares on log rates. base_age defaults to the table's minimum age.
FitResult fit_transition(const LifeTable& table, std::optional<double> base_age = std::nullopt);

/// Rows `parameter,value` followed by sse, iterations and converged.
void write_fit_csv(std::ostream& out, const FitResult& fit);
FitResult read_fit_csv(std::istream& in, const std::string& source = "<stream>");

}  // namespace healthshock
