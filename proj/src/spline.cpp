#include "spline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace lpvbat {

namespace {
// Repeated knots make spans empty; the recursion defines those terms as 0.
inline double safe_div(double num, double den) {
  return den != 0.0 ? num / den : 0.0;
}
}  // namespace

SplineBasis::SplineBasis(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
  if (degree_ < 1) fail(ErrorCode::InvalidArgument, "spline degree must be >= 1");
  if (static_cast<int>(knots_.size()) < 2 * (degree_ + 1))
    fail(ErrorCode::InvalidArgument, "knot vector too short");
  if (!std::is_sorted(knots_.begin(), knots_.end()))
    fail(ErrorCode::InvalidArgument, "knot vector must be non-decreasing");
  if (!(z_min() < z_max()))
    fail(ErrorCode::InvalidRange, "spline domain is empty");
}

SplineBasis SplineBasis::clamped_uniform(double z_min, double z_max,
                                         int n_segments, int degree) {
  if (!(z_min < z_max))
    fail(ErrorCode::InvalidRange, "clamped_uniform: z_min must be < z_max");
  if (n_segments < 1)
    fail(ErrorCode::InvalidArgument, "clamped_uniform: n_segments must be >= 1");
  if (degree < 1)
    fail(ErrorCode::InvalidArgument, "clamped_uniform: degree must be >= 1");

  std::vector<double> knots;
  knots.reserve(n_segments + 2 * degree + 1);
  for (int i = 0; i <= degree; ++i) knots.push_back(z_min);
  const double step = (z_max - z_min) / n_segments;
  for (int i = 1; i < n_segments; ++i) knots.push_back(z_min + i * step);
  for (int i = 0; i <= degree; ++i) knots.push_back(z_max);
  return SplineBasis(degree, std::move(knots));
}

void SplineBasis::check_domain(double z) const {
  if (!std::isfinite(z) || z < z_min() || z > z_max()) {
    std::ostringstream msg;
    msg << "z = " << z << " outside spline domain [" << z_min() << ", "
        << z_max() << "]";
    fail(ErrorCode::OutOfDomain, msg.str());
  }
}

int SplineBasis::find_span(double z) const {
  const int h = size();
  if (z >= knots_[h]) return h - 1;  // right-closed last interval
  // knots_[degree_] <= z < knots_[h]; binary search over breakpoints.
  auto it = std::upper_bound(knots_.begin() + degree_, knots_.begin() + h, z);
  return static_cast<int>(it - knots_.begin()) - 1;
}

void SplineBasis::eval(double z, std::span<double> out) const {
  check_domain(z);
  if (static_cast<int>(out.size()) != size())
    fail(ErrorCode::InvalidArgument, "eval: output span has wrong length");

  const int span = find_span(z);
  const int n_knots = static_cast<int>(knots_.size());

  // Bottom-up de Boor-Cox triangle over the full index range. work[i] holds
  // g_{i,p} while stepping p from 0 to degree; entry count shrinks by one
  // per degree step.
  std::vector<double> work(n_knots - 1, 0.0);
  work[span] = 1.0;
  for (int p = 1; p <= degree_; ++p) {
    const int count = n_knots - p - 1;
    for (int i = 0; i < count; ++i) {
      const double left =
          safe_div(z - knots_[i], knots_[i + p] - knots_[i]) * work[i];
      const double right =
          safe_div(knots_[i + p + 1] - z, knots_[i + p + 1] - knots_[i + 1]) *
          work[i + 1];
      work[i] = left + right;
    }
  }
  std::copy(work.begin(), work.begin() + size(), out.begin());
}

void SplineBasis::eval_derivative(double z, int d, std::span<double> out) const {
  if (d < 1 || d > degree_)
    fail(ErrorCode::InvalidOrder,
         "eval_derivative: order must be in [1, degree]");
  check_domain(z);
  if (static_cast<int>(out.size()) != size())
    fail(ErrorCode::InvalidArgument, "eval_derivative: output span has wrong length");

  const int span = find_span(z);
  const int n_knots = static_cast<int>(knots_.size());

  // Values of the degree (p-d) basis, then d derivative steps
  // g'_{i,q} = q/(z_{i+q}-z_i) g_{i,q-1} - q/(z_{i+q+1}-z_{i+1}) g_{i+1,q-1}.
  std::vector<double> work(n_knots - 1, 0.0);
  work[span] = 1.0;
  for (int p = 1; p <= degree_ - d; ++p) {
    const int count = n_knots - p - 1;
    for (int i = 0; i < count; ++i) {
      work[i] = safe_div(z - knots_[i], knots_[i + p] - knots_[i]) * work[i] +
                safe_div(knots_[i + p + 1] - z,
                         knots_[i + p + 1] - knots_[i + 1]) *
                    work[i + 1];
    }
  }
  for (int q = degree_ - d + 1; q <= degree_; ++q) {
    const int count = n_knots - q - 1;
    for (int i = 0; i < count; ++i) {
      work[i] = q * (safe_div(work[i], knots_[i + q] - knots_[i]) -
                     safe_div(work[i + 1], knots_[i + q + 1] - knots_[i + 1]));
    }
  }
  std::copy(work.begin(), work.begin() + size(), out.begin());
}

Eigen::VectorXd SplineBasis::eval(double z) const {
  Eigen::VectorXd out(size());
  eval(z, std::span<double>(out.data(), out.size()));
  return out;
}

Eigen::VectorXd SplineBasis::eval_derivative(double z, int d) const {
  Eigen::VectorXd out(size());
  eval_derivative(z, d, std::span<double>(out.data(), out.size()));
  return out;
}

Eigen::MatrixXd basis_matrix(const SplineBasis& basis,
                             std::span<const double> z_samples) {
  const int m = static_cast<int>(z_samples.size());
  Eigen::MatrixXd out(m, basis.size());
  std::vector<double> row(basis.size());
  for (int k = 0; k < m; ++k) {
    try {
      basis.eval(z_samples[k], row);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OutOfDomain) {
        std::ostringstream msg;
        msg << "sample " << k << ": " << e.what();
        fail(ErrorCode::OutOfDomain, msg.str());
      }
      throw;
    }
    for (int i = 0; i < basis.size(); ++i) out(k, i) = row[i];
  }
  return out;
}

Eigen::MatrixXd third_derivative_knot_matrix(const SplineBasis& basis) {
  if (basis.degree() != 3)
    fail(ErrorCode::InvalidArgument,
         "third_derivative_knot_matrix requires a cubic basis");
  const int n_seg = basis.n_segments();
  Eigen::MatrixXd out(n_seg, basis.size());
  std::vector<double> row(basis.size());
  for (int j = 0; j < n_seg; ++j) {
    const double mid = 0.5 * (basis.breakpoint(j) + basis.breakpoint(j + 1));
    basis.eval_derivative(mid, 3, row);
    for (int i = 0; i < basis.size(); ++i) out(j, i) = row[i];
  }
  return out;
}

double SplineCurve::eval(double z) const {
  if (control_points.size() != basis.size())
    fail(ErrorCode::InvalidArgument,
         "SplineCurve: control point count does not match basis");
  return basis.eval(z).dot(control_points);
}

}  // namespace lpvbat
