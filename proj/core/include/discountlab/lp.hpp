#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace discountlab {

enum class RowSense { Eq, Le };

/// min c.x  s.t.  A x (= or <=) b,  x >= 0 unless flagged free.
struct LPProblem {
    Eigen::VectorXd c;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    std::vector<RowSense> sense; // one per row
    std::vector<bool> free;      // one per column; empty means all nonnegative

    int rows() const { return static_cast<int>(A.rows()); }
    int cols() const { return static_cast<int>(A.cols()); }
    bool is_free(int j) const { return !free.empty() && free[j]; }
};

enum class LPStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LPStatus s);

struct LPSolution {
    LPStatus status = LPStatus::Infeasible;
    Eigen::VectorXd x;
    double objective_value = 0.0;
    /// Row multipliers y with c - A^T y >= 0 on nonnegative columns, = 0 on
    /// free ones, y <= 0 on <= rows. objective_value = b . y at optimality.
    Eigen::VectorXd dual;
    int iterations = 0;
    double primal_residual = 0.0;
    double cs_residual = 0.0;
    /// For Unbounded: a direction d with A d (= or <=) 0, d feasible in sign,
    /// and c.d < 0.
    Eigen::VectorXd ray;
};

inline constexpr double kPrimalCertTol = 1e-9;
inline constexpr double kSlacknessCertTol = 1e-8;

/// Dense two-phase primal simplex. Dantzig pricing, switching to Bland's rule
/// after 2 (rows + cols) pivots. The final basis is refactored with LU and the
/// answer certified; throws NumericalBreakdown when that fails.
LPSolution lp_solve(const LPProblem& p);

/// max over rows of the constraint violation of x (sign included).
double primal_residual(const LPProblem& p, const Eigen::VectorXd& x);

/// All basic feasible solutions of {x >= 0 : A x = b}, deduplicated to
/// `dedup_tol` in the sup norm. Exponential; meant for tiny problems.
std::vector<Eigen::VectorXd> basic_feasible_solutions(const Eigen::MatrixXd& A,
                                                      const Eigen::VectorXd& b,
                                                      double dedup_tol = 1e-9);

} // namespace discountlab
