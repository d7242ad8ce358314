#pragma once

// Consistency of the linear system a sum-decomposed coordination graph must
// solve to represent the second-stage rewards of the two-step game. With
// permutation-invariant utilities q_A, q_B and payoffs q_AA, q_AB, q_BB, each
// count of B actions gives one equation; the augmented matrix has higher rank
// than the coefficient matrix, so no linear CG fits the rewards exactly.

#include <cmath>
#include <utility>

#include <Eigen/Dense>

namespace nlcg {

/// Rank by Gaussian elimination with partial pivoting; pivots with magnitude
/// at or below `tol` count as zero.
inline int gaussian_rank(Eigen::MatrixXd a, double tol = 1e-9) {
  int rank = 0;
  const Eigen::Index rows = a.rows();
  for (Eigen::Index col = 0; col < a.cols() && rank < rows; ++col) {
    Eigen::Index pivot = rank;
    for (Eigen::Index r = rank + 1; r < rows; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) <= tol) continue;
    a.row(pivot).swap(a.row(rank));
    for (Eigen::Index r = rank + 1; r < rows; ++r) {
      const double f = a(r, col) / a(rank, col);
      a.row(r) -= f * a.row(rank);
    }
    ++rank;
  }
  return rank;
}

/// Rows: #B = 0..4. Columns: q_A, q_B, q_AA, q_AB, q_BB (counts over the
/// 4 agents and 6 agent pairs of the complete graph).
inline Eigen::MatrixXd two_step_coefficients() {
  Eigen::MatrixXd c(5, 5);
  c << 4, 0, 6, 0, 0,
       3, 1, 3, 3, 0,
       2, 2, 1, 4, 1,
       1, 3, 0, 3, 3,
       0, 4, 0, 0, 6;
  return c;
}

inline Eigen::VectorXd two_step_rewards() {
  Eigen::VectorXd r(5);
  r << 0.0, -0.1, 0.1, 0.3, 8.0;
  return r;
}

struct RankReport {
  int coefficient_rank = 0;
  int augmented_rank = 0;
};

inline RankReport rank_check(const Eigen::MatrixXd& coefficients, const Eigen::VectorXd& rhs, double tol = 1e-9) {
  Eigen::MatrixXd augmented(coefficients.rows(), coefficients.cols() + 1);
  augmented << coefficients, rhs;
  return {gaussian_rank(coefficients, tol), gaussian_rank(augmented, tol)};
}

inline RankReport rank_check() { return rank_check(two_step_coefficients(), two_step_rewards()); }

/// Residual norm of the least-squares solution of the rank-check system.
inline double least_squares_residual(const Eigen::MatrixXd& coefficients, const Eigen::VectorXd& rhs) {
  const Eigen::VectorXd x = coefficients.completeOrthogonalDecomposition().solve(rhs);
  return (coefficients * x - rhs).norm();
}

}  // namespace nlcg
