#pragma once

// Convex quadratic programs with a diagonal Hessian:
//
//   minimize    sum_j q_j x_j^2 + c' x
//   subject to  A x  = b
//               G x <= h
//               lo <= x <= hi        (entries may be +-infinity)
//
// solved by a primal-dual interior-point method (Mehrotra predictor-corrector)
// with a sparse LDL' factorization of the quasi-definite reduced KKT system.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace eshed::qp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

struct QuadProgram {
  int n = 0;
  Vector q_diag; ///< nonnegative, objective term q_j x_j^2 (no 1/2 factor)
  Vector c_lin;
  SparseMatrix A_eq;
  Vector b_eq;
  SparseMatrix G_ineq;
  Vector h_ineq;
  Vector lower;
  Vector upper;
  std::vector<std::string> names; ///< optional, empty or size n

  /// An empty program over n unbounded variables.
  static QuadProgram with_variables(int n);

  int num_eq() const { return static_cast<int>(b_eq.size()); }
  int num_ineq() const { return static_cast<int>(h_ineq.size()); }

  /// Throws DimensionError on inconsistent sizes, negative q_diag or lo > hi.
  void check() const;

  double objective(const Vector& x) const;
};

/// Incremental row-wise assembly of a sparse constraint block.
class RowBuilder {
public:
  explicit RowBuilder(int cols) : cols_(cols) {}

  int add_row(double rhs) {
    rhs_.push_back(rhs);
    return static_cast<int>(rhs_.size()) - 1;
  }
  void add(int row, int col, double value) {
    if (value != 0.0) triplets_.emplace_back(row, col, value);
  }
  int rows() const { return static_cast<int>(rhs_.size()); }

  SparseMatrix matrix() const;
  Vector rhs() const;

private:
  int cols_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<double> rhs_;
};

struct SolverConfig {
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  double tol_gap = 1e-8;
  int max_iter = 100;
  double feas_tol = 1e-7; ///< phase-1 violation threshold for infeasibility
  /// Re-solve with near-active bounds pinned, so degenerate zeros come out exact.
  bool polish = true;

  void check() const;
};

enum class SolveStatus { optimal, infeasible, max_iter };

const char* to_string(SolveStatus status);

struct Solution {
  Vector x;
  Vector duals_eq;
  Vector duals_ineq;
  Vector duals_lower; ///< multipliers of x >= lo (zero where lo = -inf)
  Vector duals_upper; ///< multipliers of x <= hi (zero where hi = +inf)
  double objective = 0.0;
  SolveStatus status = SolveStatus::max_iter;
  int iterations = 0;
  /// Minimized total constraint violation, set whenever phase 1 ran.
  double phase1_violation = 0.0;
};

struct KktResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;

  double max() const;
};

Solution solve_qp(const QuadProgram& program, const SolverConfig& config = {});

struct FeasibilityResult {
  bool feasible = false;
  double violation = 0.0; ///< optimal phase-1 objective
  int iterations = 0;
};

/// Phase-1 feasibility test. The objective of `program` is ignored.
FeasibilityResult check_feasibility(const QuadProgram& program, const SolverConfig& config = {});

/// Scaled infinity-norm KKT residuals of a candidate primal/dual pair.
///
/// stationarity    = |2Qx + c + A'y + G'z - z_lo + z_hi|_inf / (1 + |c|_inf)
/// feasibility     = max violation of Ax=b, Gx<=h, bounds / (1 + max |b|,|h|,|finite bounds|)
/// complementarity = max(|z_i slack_i|, negative parts of inequality duals) / (1 + |objective|)
KktResiduals kkt_residuals(const QuadProgram& program, const Solution& solution);

/// Primal objective minus Lagrangian dual objective.
double duality_gap(const QuadProgram& program, const Solution& solution);

/// Debug dump: {"n", "q_diag", "c_lin", "A_eq": {"rows","cols","triplets"}, ...}
/// Infinite bounds are written as null.
nlohmann::json to_json(const QuadProgram& program);
QuadProgram quad_program_from_json(const nlohmann::json& j);

} // namespace eshed::qp
