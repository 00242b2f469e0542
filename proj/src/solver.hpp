#pragma once

#include <Eigen/Dense>
#include <vector>

namespace lpvbat {

/// One L1 term of the composite objective
///   0.5 |y - A c|^2 + sum_i weight_i * |P_i c|_1.
struct L1Penalty {
  double weight = 0.0;
  Eigen::MatrixXd matrix;  // q_i x n_c
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 50000;
  double ridge = 1e-10;       // scaled by trace(A'A)/n
  bool column_scaling = true; // normalize columns of A to unit RMS internally
  double rho = 1.0;           // initial splitting penalty parameter
  bool adapt_rho = true;
  double over_relaxation = 1.6;  // damps active-set chattering
  bool record_trace = true;
};

struct SolverReport {
  Eigen::VectorXd solution;
  /// Best objective seen up to each iteration (non-increasing).
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = true;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  /// Subgradient estimates s_i per penalty (entries in [-1, 1] at optimum),
  /// recovered from the scaled dual variables; empty when no penalties.
  std::vector<Eigen::VectorXd> subgradients;
};

/// Bidiagonal forward-difference matrix: row j has +1 at j, -1 at j+1.
/// Shape (q-1) x q.
Eigen::MatrixXd difference_matrix(int q);

/// Minimizes 0.5 |y - A c|_2^2 + sum_i lambda_i |P_i c|_1 by operator
/// splitting with a cached factorization of the quadratic subproblem.
/// A tiny trace-scaled ridge keeps the factorization full rank. With no
/// active penalties this reduces to a single regularized LS solve.
///
/// Returns converged = false when max_iter is hit; callers decide whether
/// to accept the iterate.
SolverReport solve_l1_ls(const Eigen::VectorXd& y, const Eigen::MatrixXd& A,
                         const std::vector<L1Penalty>& penalties,
                         const SolverOptions& options = {});

}  // namespace lpvbat
