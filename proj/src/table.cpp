#include "healthshock/table.hpp"

#include <algorithm>
#include <cmath>

#include "healthshock/errors.hpp"

namespace healthshock {

UniformTable::UniformTable(double t0, double t1, std::vector<double> values, std::vector<double> slopes)
    : t0_(t0), t1_(t1), values_(std::move(values)), slopes_(std::move(slopes)) {
  if (values_.size() < 2 || values_.size() != slopes_.size() || !(t1 > t0))
    throw Error(ErrorCode::InvalidParameter, "table needs >= 2 nodes on a nonempty interval");
  step_ = (t1_ - t0_) / static_cast<double>(values_.size() - 1);
}

std::size_t UniformTable::locate(double t, double& s) const {
  const double u = (t - t0_) / step_;
  const auto last = values_.size() - 2;
  double cell = std::floor(u);
  cell = std::clamp(cell, 0.0, static_cast<double>(last));
  s = u - cell;
  return static_cast<std::size_t>(cell);
}

double UniformTable::value(double t) const {
  double s = 0.0;
  const std::size_t k = locate(t, s);
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * values_[k] + h10 * step_ * slopes_[k] + h01 * values_[k + 1] +
         h11 * step_ * slopes_[k + 1];
}

double UniformTable::derivative(double t) const {
  double s = 0.0;
  const std::size_t k = locate(t, s);
  const double s2 = s * s;
  const double d00 = 6 * s2 - 6 * s;
  const double d10 = 3 * s2 - 4 * s + 1;
  const double d01 = -6 * s2 + 6 * s;
  const double d11 = 3 * s2 - 2 * s;
  return (d00 * values_[k] + d01 * values_[k + 1]) / step_ + d10 * slopes_[k] + d11 * slopes_[k + 1];
}

void UniformTable::scale(double factor) {
  for (auto& v : values_) v *= factor;
  for (auto& d : slopes_) d *= factor;
}

}  // namespace healthshock
