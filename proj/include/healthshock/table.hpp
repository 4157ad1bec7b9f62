#pragma once

#include <cstddef>
#include <vector>

namespace healthshock {

/// A function tabulated on a uniform grid together with its derivative at each
/// node, evaluated between nodes by cubic Hermite interpolation.
class UniformTable {
 public:
  UniformTable() = default;
  UniformTable(double t0, double t1, std::vector<double> values, std::vector<double> slopes);

  double value(double t) const;
  double derivative(double t) const;

  std::size_t size() const { return values_.size(); }
  double node(std::size_t k) const { return t0_ + step_ * static_cast<double>(k); }
  double step() const { return step_; }
  double front_time() const { return t0_; }
  double back_time() const { return t1_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& slopes() const { return slopes_; }

  /// Multiplies values and slopes by `factor` (used by corruption probes).
  void scale(double factor);

 private:
  // Locates the cell containing t and the local coordinate s in [0, 1].
  std::size_t locate(double t, double& s) const;

  double t0_ = 0.0;
  double t1_ = 0.0;
  double step_ = 0.0;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

}  // namespace healthshock
