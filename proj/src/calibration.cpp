#include "healthshock/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace healthshock {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, where + ": '" + cell + "' is not a number");
  }
  if (used != cell.size() || !std::isfinite(v))
    throw Error(ErrorCode::ParseError, where + ": '" + cell + "' is not a finite number");
  return v;
}

// Weighted least squares y ~ a + b x with centered normal equations.
struct LineFit {
  double a = 0.0, b = 0.0, sse = 0.0;
};

LineFit weighted_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sw += w[k];
    sx += w[k] * x[k];
    sy += w[k] * y[k];
  }
  const double xbar = sx / sw, ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += w[k] * (x[k] - xbar) * (x[k] - xbar);
    sxy += w[k] * (x[k] - xbar) * (y[k] - ybar);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::DegenerateTable, "fewer than two distinct ages");
  LineFit fit;
  fit.b = sxy / sxx;
  fit.a = ybar - fit.b * xbar;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - fit.a - fit.b * x[k];
    fit.sse += w[k] * r * r;
  }
  return fit;
}

double gompertz_rate(double age, double n, double l) { return std::exp((age - l) / n) / n; }

double gompertz_sse(const LifeTable& t, double n, double l) {
  if (!(n > 0.0)) return std::numeric_limits<double>::infinity();
  double sse = 0.0;
  for (const auto& row : t.rows) {
    const double r = row.rate - gompertz_rate(row.age, n, l);
    sse += row.weight * r * r;
  }
  return std::isfinite(sse) ? sse : std::numeric_limits<double>::infinity();
}

void check_weights(const LifeTable& t) {
  for (const auto& row : t.rows)
    if (!(row.weight > 0.0) || !std::isfinite(row.weight))
      throw Error(ErrorCode::InvalidParameter, "table weights must be positive");
}

using Vertex = std::array<double, 2>;

struct SimplexResult {
  Vertex best;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
template <class F>
SimplexResult nelder_mead(F&& f, const Vertex& start, const NelderMeadOptions& opt, std::size_t budget) {
  std::array<Vertex, 3> x{start, start, start};
  for (std::size_t d = 0; d < 2; ++d) x[d + 1][d] += std::max(0.05 * std::abs(start[d]), 1e-3);
  std::array<double, 3> fx{f(x[0]), f(x[1]), f(x[2])};

  SimplexResult res;
  auto order = [&] {
    std::array<std::size_t, 3> idx{0, 1, 2};
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    const auto xs = x;
    const auto fs = fx;
    for (std::size_t k = 0; k < 3; ++k) {
      x[k] = xs[idx[k]];
      fx[k] = fs[idx[k]];
    }
  };
  auto point = [](const Vertex& c, const Vertex& w, double s) {
    return Vertex{c[0] + s * (w[0] - c[0]), c[1] + s * (w[1] - c[1])};
  };

  while (res.iterations < budget) {
    order();
    double diameter = 0.0;
    for (std::size_t k = 1; k < 3; ++k)
      diameter = std::max(diameter, std::hypot(x[k][0] - x[0][0], x[k][1] - x[0][1]));
    if (diameter <= opt.tolerance * std::max(1.0, std::hypot(x[0][0], x[0][1]))) {
      res.converged = true;
      break;
    }
    ++res.iterations;
    const Vertex c{0.5 * (x[0][0] + x[1][0]), 0.5 * (x[0][1] + x[1][1])};
    const Vertex xr = point(c, x[2], -1.0);
    const double fr = f(xr);
    if (fr < fx[0]) {
      const Vertex xe = point(c, x[2], -2.0);
      const double fe = f(xe);
      if (fe < fr) {
        x[2] = xe;
        fx[2] = fe;
      } else {
        x[2] = xr;
        fx[2] = fr;
      }
      continue;
    }
    if (fr < fx[1]) {
      x[2] = xr;
      fx[2] = fr;
      continue;
    }
    const bool outside = fr < fx[2];
    const Vertex xc = point(c, outside ? xr : x[2], 0.5);
    const double fc = f(xc);
    if (fc < (outside ? fr : fx[2])) {
      x[2] = xc;
      fx[2] = fc;
      continue;
    }
    for (std::size_t k = 1; k < 3; ++k) {
      x[k] = point(x[0], x[k], 0.5);
      fx[k] = f(x[k]);
    }
  }
  order();
  res.best = x[0];
  res.value = fx[0];
  return res;
}

}  // namespace

double LifeTable::min_age() const {
  if (rows.empty()) throw Error(ErrorCode::DegenerateTable, "table has no rows");
  double m = rows.front().age;
  for (const auto& r : rows) m = std::min(m, r.age);
  return m;
}

LifeTable LifeTable::sorted() const {
  LifeTable out = *this;
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const LifeTableRow& a, const LifeTableRow& b) { return a.age < b.age; });
  for (std::size_t k = 1; k < out.rows.size(); ++k)
    if (out.rows[k].age == out.rows[k - 1].age)
      throw Error(ErrorCode::DegenerateTable, "age " + std::to_string(out.rows[k].age) + " appears twice");
  return out;
}

LifeTable read_life_table(std::istream& in, TableKind kind, const std::string& source) {
  LifeTable table;
  table.kind = kind;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  bool has_weight = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto cells = split(text);
    if (!header) {
      if (cells.size() < 2 || cells.size() > 3 || cells[0] != "age" || cells[1] != "rate" ||
          (cells.size() == 3 && cells[2] != "weight"))
        throw Error(ErrorCode::ParseError, where + ": expected header 'age,rate[,weight]', got '" + text + "'");
      header = true;
      has_weight = cells.size() == 3;
      continue;
    }
    if (cells.size() != (has_weight ? 3U : 2U))
      throw Error(ErrorCode::ParseError, where + ": expected " + std::to_string(has_weight ? 3 : 2) + " fields");
    LifeTableRow row;
    row.age = parse_number(cells[0], where);
    row.rate = parse_number(cells[1], where);
    if (has_weight) row.weight = parse_number(cells[2], where);
    if (row.rate >= 1.0) throw Error(ErrorCode::ParseError, where + ": rate must be below 1");
    if (!(row.weight > 0.0)) throw Error(ErrorCode::ParseError, where + ": weight must be positive");
    table.rows.push_back(row);
  }
  if (!header) throw Error(ErrorCode::ParseError, source + ": missing header 'age,rate[,weight]'");
  return table;
}

LifeTable load_life_table(const std::string& path, TableKind kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open table '" + path + "'");
  return read_life_table(in, kind, path);
}

void write_life_table(std::ostream& out, const LifeTable& table) {
  out << "age,rate,weight\n" << std::setprecision(17);
  for (const auto& r : table.rows) out << r.age << ',' << r.rate << ',' << r.weight << '\n';
}

double FitResult::at(const std::string& name) const {
  const auto it = parameters.find(name);
  if (it == parameters.end()) throw Error(ErrorCode::InvalidParameter, model + " fit has no parameter '" + name + "'");
  return it->second;
}

FitResult fit_gompertz(const LifeTable& input, std::optional<GompertzLaw> init, const NelderMeadOptions& options) {
  if (input.rows.size() < 3) throw Error(ErrorCode::DegenerateTable, "Gompertz fit needs at least 3 rows");
  const LifeTable table = input.sorted();
  check_weights(table);
  for (const auto& r : table.rows)
    if (!(r.rate > 0.0)) throw Error(ErrorCode::NonPositiveRate, "mortality rates must be positive");

  Vertex start;
  if (init) {
    start = {init->n, init->l};
  } else {
    // log rate = -log n + (age - l) / n is linear in age.
    std::vector<double> x, y, w;
    for (const auto& r : table.rows) {
      x.push_back(r.age);
      y.push_back(std::log(r.rate));
      w.push_back(r.weight);
    }
    const LineFit line = weighted_line(x, y, w);
    if (!(line.b > 0.0))
      throw Error(ErrorCode::DegenerateTable, "rates do not increase with age; Gompertz slope is undefined");
    const double n = 1.0 / line.b;
    start = {n, -n * (line.a + std::log(n))};
  }

  auto sse = [&](const Vertex& v) { return gompertz_sse(table, v[0], v[1]); };
  SimplexResult res = nelder_mead(sse, start, options, options.max_iterations);
  std::size_t total = res.iterations;
  if (res.converged) {
    // One restart from the converged point guards against a collapsed simplex.
    const SimplexResult again = nelder_mead(sse, res.best, options, options.max_iterations - std::min(total, options.max_iterations));
    total += again.iterations;
    if (again.value <= res.value) res = again;
    res.converged = again.converged;
  }
  if (!res.converged)
    throw Error(ErrorCode::NonConvergence,
                "Nelder-Mead did not converge in " + std::to_string(options.max_iterations) + " iterations");

  FitResult fit;
  fit.model = "gompertz";
  fit.parameters = {{"m", table.min_age()}, {"n", res.best[0]}, {"l", res.best[1]}};
  fit.sse = res.value;
  fit.iterations = total;
  fit.converged = true;
  return fit;
}

FitResult fit_illness_excess(const LifeTable& input, const FitResult& base) {
  if (base.model != "gompertz") throw Error(ErrorCode::InvalidParameter, "illness fit needs a Gompertz base fit");
  const double n = base.at("n");
  const double l = base.at("l");
  if (input.rows.size() < 2) throw Error(ErrorCode::DegenerateTable, "excess fit needs at least 2 rows");
  const LifeTable table = input.sorted();
  check_weights(table);
  std::vector<double> x, y, w;
  for (const auto& r : table.rows) {
    x.push_back(r.age);
    y.push_back(r.rate - gompertz_rate(r.age, n, l));
    w.push_back(r.weight);
  }
  const LineFit line = weighted_line(x, y, w);
  FitResult fit;
  fit.model = "illness";
  fit.parameters = {{"k1", line.a}, {"k2", line.b}, {"m", base.parameters.count("m") ? base.at("m") : table.min_age()},
                    {"n", n}, {"l", l}};
  fit.sse = line.sse;
  fit.iterations = 1;
  fit.converged = true;
  return fit;
}

FitResult fit_transition(const LifeTable& input, std::optional<double> base_age) {
  if (input.rows.size() < 2) throw Error(ErrorCode::DegenerateTable, "transition fit needs at least 2 rows");
  const LifeTable table = input.sorted();
  check_weights(table);
  const double base = base_age.value_or(table.min_age());
  std::vector<double> x, y, w;
  for (const auto& r : table.rows) {
    if (!(r.rate > 0.0))
      throw Error(ErrorCode::NonPositiveRate, "rate at age " + std::to_string(r.age) + " is not positive");
    x.push_back(r.age - base);
    y.push_back(std::log(r.rate));
    w.push_back(r.weight);
  }
  const LineFit line = weighted_line(x, y, w);
  FitResult fit;
  fit.model = "transition";
  fit.parameters = {{"m1", std::exp(line.a)}, {"n1", line.b}, {"base_age", base}};
  double sse = 0.0;
  for (const auto& r : table.rows) {
    const double e = r.rate - std::exp(line.a + line.b * (r.age - base));
    sse += r.weight * e * e;
  }
  fit.sse = sse;
  fit.iterations = 1;
  fit.converged = true;
  return fit;
}

void write_fit_csv(std::ostream& out, const FitResult& fit) {
  out << "parameter,value\n" << std::setprecision(17);
  out << "model," << fit.model << '\n';
  for (const auto& [k, v] : fit.parameters) out << k << ',' << v << '\n';
  out << "sse," << fit.sse << '\n';
  out << "iterations," << fit.iterations << '\n';
  out << "converged," << (fit.converged ? 1 : 0) << '\n';
}

FitResult read_fit_csv(std::istream& in, const std::string& source) {
  FitResult fit;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto cells = split(text);
    if (cells.size() != 2) throw Error(ErrorCode::ParseError, where + ": expected 'parameter,value'");
    if (!header) {
      if (cells[0] != "parameter" || cells[1] != "value")
        throw Error(ErrorCode::ParseError, where + ": expected header 'parameter,value'");
      header = true;
    } else if (cells[0] == "model") {
      fit.model = cells[1];
    } else if (cells[0] == "sse") {
      fit.sse = parse_number(cells[1], where);
    } else if (cells[0] == "iterations") {
      fit.iterations = static_cast<std::size_t>(parse_number(cells[1], where));
    } else if (cells[0] == "converged") {
      fit.converged = parse_number(cells[1], where) != 0.0;
    } else {
      fit.parameters[cells[0]] = parse_number(cells[1], where);
    }
  }
  if (!header) throw Error(ErrorCode::ParseError, source + ": empty fit file");
  if (fit.model.empty()) throw Error(ErrorCode::ParseError, source + ": fit file does not name its model");
  return fit;
}

}  // namespace healthshock
