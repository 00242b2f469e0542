#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace lpvbat {

/// Clamped B-spline basis over the SOC axis. The knot vector has
/// size() + degree + 1 entries; the first and last degree+1 knots are
/// repeated so the curve interpolates its end control points.
///
/// Basis values follow the de Boor-Cox recursion with the convention that
/// any term with a zero knot-span denominator is zero. The zero-degree
/// indicator is half-open [z_i, z_{i+1}) except at the right domain edge,
/// where the last nonempty interval is closed so the basis still sums to
/// one at z_max.
class SplineBasis {
 public:
  SplineBasis() = default;
  SplineBasis(int degree, std::vector<double> knots);

  /// Uniform interior knots on [z_min, z_max], boundary knots repeated
  /// degree+1 times. Yields n_segments + degree basis functions.
  static SplineBasis clamped_uniform(double z_min, double z_max,
                                     int n_segments, int degree = 3);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
  int n_segments() const { return size() - degree_; }
  double z_min() const { return knots_[degree_]; }
  double z_max() const { return knots_[size()]; }
  const std::vector<double>& knots() const { return knots_; }

  /// Breakpoint j in [0, n_segments]: the distinct knots bounding the
  /// polynomial pieces.
  double breakpoint(int j) const { return knots_[degree_ + j]; }

  /// All basis values g_1..g_h at z. out.size() must equal size().
  void eval(double z, std::span<double> out) const;

  /// d-th derivative of every basis function at z, 1 <= d <= degree.
  void eval_derivative(double z, int d, std::span<double> out) const;

  Eigen::VectorXd eval(double z) const;
  Eigen::VectorXd eval_derivative(double z, int d) const;

  bool in_domain(double z) const { return z >= z_min() && z <= z_max(); }

 private:
  int find_span(double z) const;
  void check_domain(double z) const;

  int degree_ = 3;
  std::vector<double> knots_;
};

/// Rows are eval(z_samples[k]); shape m x h.
Eigen::MatrixXd basis_matrix(const SplineBasis& basis,
                             std::span<const double> z_samples);

/// One row per knot interval: the third basis derivative evaluated at the
/// interval midpoint. The third derivative of a cubic spline is constant
/// within an interval, so one row per interval carries the full penalty
/// structure. Shape n_segments x h.
Eigen::MatrixXd third_derivative_knot_matrix(const SplineBasis& basis);

struct SplineCurve {
  SplineBasis basis;
  Eigen::VectorXd control_points;

  double eval(double z) const;
};

}  // namespace lpvbat
