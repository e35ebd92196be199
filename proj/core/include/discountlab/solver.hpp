#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Sparse>
#include <nlohmann/json.hpp>

#include "discountlab/discretize.hpp"
#include "discountlab/error.hpp"

namespace discountlab {

struct SolveDiagnostics {
    int iterations = 0;
    double final_residual = 0.0;
    double contraction_estimate = 0.0;
    double wall_time = 0.0; // seconds
};

void to_json(nlohmann::json& j, const SolveDiagnostics& d);

struct SolveResult {
    ValueField u;
    Policy policy;
    SolveDiagnostics diagnostics;
};

/// Raised when an iteration cap is hit; carries the last iterate.
class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, SolveResult partial)
        : Error(Errc::NoConvergence, what), partial_(std::move(partial)) {}
    const SolveResult& partial() const noexcept { return partial_; }

private:
    SolveResult partial_;
};

inline constexpr double kDiscountedTol = 1e-10;
inline constexpr double kErgodicTol = 1e-8;

/// Nonlinear Gauss-Seidel: each (i, x), swept lexicographically, is set to the
/// value that makes the maximising control's linear relation exact,
/// min_a (L_i(x,a) - offdiagonal terms) / diagonal_a. Stops once
/// ||bellman_residual||_inf <= tol.
SolveResult value_iterate(const DiscreteSystem& sys, double lambda, const ValueField& u0,
                          double tol = kDiscountedTol, int max_iter = 200000);

/// Sparse matrix of the per-policy linear operator (lambda I + upwind + coupling).
Eigen::SparseMatrix<double> policy_matrix(const DiscreteSystem& sys, double lambda,
                                          const Policy& pi);

/// Cost vector L_i(x, pi(i, x)).
Eigen::VectorXd policy_cost(const DiscreteSystem& sys, const Policy& pi);

/// Solves policy_matrix * u = policy_cost by sparse LU. Throws SingularSystem.
ValueField policy_evaluate(const DiscreteSystem& sys, double lambda, const Policy& pi);

using IterateObserver = std::function<void(int iteration, const ValueField& u, const Policy& pi)>;

/// Howard iteration: evaluate, then switch every (i, x) whose greedy control
/// beats the current one by more than rounding. Values are nonincreasing
/// across iterations. `warm` seeds the first policy by greedy selection.
SolveResult policy_iterate(const DiscreteSystem& sys, double lambda, double tol = kDiscountedTol,
                           const ValueField* warm = nullptr, int max_iter = 1000,
                           const IterateObserver& observer = {});

/// Validates the residual signs (NotASubsolution / NotASupersolution), then
/// returns whether sub <= sup everywhere.
bool comparison_check(const DiscreteSystem& sys, double lambda, const ValueField& sub,
                      const ValueField& sup);

struct ErgodicStep {
    ValueField v;
    ValueField Tu;
    std::vector<double> c_est;
    std::vector<int> policy; // per (mode, state) control of the scalar solves
};

/// One application of Tu := v - min v, where for each mode i, v_i solves
/// lambda v_i + max_a [xi_a . D_h v_i + eta_a . u - L_i] = lambda u_i with
/// the whole coupling argument frozen at u. c_est = -lambda * min_x v_i.
ErgodicStep ergodic_map_T(const DiscreteSystem& sys, double lambda, const ValueField& u,
                          const std::vector<int>* warm_policy = nullptr);

struct ErgodicResult {
    std::vector<double> c;
    ValueField u;
    int outer_iterations = 0;
    double residual = 0.0; // ||H[u] - c||_inf
    double map_gap = 0.0;  // ||Tu - u||_inf at exit
    bool converged = false;
    bool polished = false;
};

void to_json(nlohmann::json& j, const ErgodicResult& r);

/// Damped fixed-point iteration u <- (1-d) u + d Tu until ||Tu - u|| <= tol.
/// The result is then polished by solving the ergodic linear system of the
/// greedy policy (kept only if it lowers the residual and keeps min u_i = 0).
/// converged is true iff the map gap reached tol and residual <= 10 tol.
ErgodicResult ergodic_solve(const DiscreteSystem& sys, double lambda, double tol = kErgodicTol,
                            double damping = 0.5, int max_outer = 20000);

/// ||H[u] - c||_inf with H the lambda = 0 discrete operator.
double ergodic_residual(const DiscreteSystem& sys, const ValueField& u,
                        const std::vector<double>& c);

} // namespace discountlab
