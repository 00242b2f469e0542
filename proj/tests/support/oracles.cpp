#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace lpvbat::testing {

double naive_bspline(std::span<const double> knots, int i, int p, double z,
                     bool close_right) {
  if (p == 0) {
    if (knots[i] <= z && z < knots[i + 1]) return 1.0;
    // Right-edge closure: membership of z_max goes to the last nonempty
    // interval.
    if (close_right && z == knots[knots.size() - 1] && knots[i] < knots[i + 1] &&
        z == knots[i + 1])
      return 1.0;
    return 0.0;
  }
  double acc = 0.0;
  const double d1 = knots[i + p] - knots[i];
  if (d1 != 0.0)
    acc += (z - knots[i]) / d1 * naive_bspline(knots, i, p - 1, z, close_right);
  const double d2 = knots[i + p + 1] - knots[i + 1];
  if (d2 != 0.0)
    acc += (knots[i + p + 1] - z) / d2 *
           naive_bspline(knots, i + 1, p - 1, z, close_right);
  return acc;
}

double naive_bspline_derivative(std::span<const double> knots, int i, int p,
                                int d, double z, bool close_right) {
  if (d == 0) return naive_bspline(knots, i, p, z, close_right);
  double acc = 0.0;
  const double d1 = knots[i + p] - knots[i];
  if (d1 != 0.0)
    acc += p / d1 * naive_bspline_derivative(knots, i, p - 1, d - 1, z, close_right);
  const double d2 = knots[i + p + 1] - knots[i + 1];
  if (d2 != 0.0)
    acc -= p / d2 *
           naive_bspline_derivative(knots, i + 1, p - 1, d - 1, z, close_right);
  return acc;
}

double l1ls_objective(const Eigen::VectorXd& y, const Eigen::MatrixXd& A,
                      const std::vector<L1Penalty>& penalties,
                      const Eigen::VectorXd& c) {
  double obj = 0.5 * (y - A * c).squaredNorm();
  for (const auto& p : penalties) obj += p.weight * (p.matrix * c).lpNorm<1>();
  return obj;
}

Eigen::VectorXd reference_l1ls(const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& A,
                               const std::vector<L1Penalty>& penalties,
                               long iterations) {
  const Eigen::Index n = A.cols();
  Eigen::Index q = 0;
  for (const auto& p : penalties) q += p.matrix.rows();
  Eigen::MatrixXd K(q, n);
  Eigen::VectorXd bound(q);
  {
    Eigen::Index at = 0;
    for (const auto& p : penalties) {
      K.middleRows(at, p.matrix.rows()) = p.matrix;
      bound.segment(at, p.matrix.rows()).setConstant(p.weight);
      at += p.matrix.rows();
    }
  }

  // Power iteration for |K|_2.
  double knorm = 0.0;
  if (q > 0) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
    for (int it = 0; it < 200; ++it) {
      Eigen::VectorXd w = K.transpose() * (K * v);
      const double nw = w.norm();
      if (nw == 0.0) break;
      v = w / nw;
      knorm = std::sqrt(nw);
    }
  }
  const double step = knorm > 0.0 ? 0.95 / knorm : 1.0;
  const double tau = step, sigma = step;

  // Cache the resolvent of the quadratic term.
  const Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(n, n) + tau * A.transpose() * A;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  const Eigen::VectorXd aty = A.transpose() * y;

  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd cbar = c;
  Eigen::VectorXd dual = Eigen::VectorXd::Zero(q);
  for (long it = 0; it < iterations; ++it) {
    if (q > 0) {
      dual += sigma * (K * cbar);
      for (Eigen::Index r = 0; r < q; ++r)
        dual[r] = std::clamp(dual[r], -bound[r], bound[r]);
    }
    const Eigen::VectorXd c_prev = c;
    Eigen::VectorXd rhs = c - tau * (q > 0 ? (K.transpose() * dual).eval()
                                           : Eigen::VectorXd::Zero(n).eval());
    rhs += tau * aty;
    c = ldlt.solve(rhs);
    cbar = 2.0 * c - c_prev;
    if ((c - c_prev).lpNorm<Eigen::Infinity>() <
        1e-17 * (1.0 + c.lpNorm<Eigen::Infinity>()))
      break;
  }
  return c;
}

double FixtureRng::uniform(double lo, double hi) {
  const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

double FixtureRng::normal() {
  // Box-Muller on two uniforms.
  const double u1 = uniform(1e-12, 1.0);
  const double u2 = uniform(0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

int FixtureRng::integer(int lo, int hi) {
  return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
}

std::uint64_t FixtureRng::next() {
  state_ ^= state_ << 13;
  state_ ^= state_ >> 7;
  state_ ^= state_ << 17;
  return state_;
}

}  // namespace lpvbat::testing
