#pragma once

// Independent reference computations for the test suites. Nothing here calls
// the stencil, solver or LP code of the library.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "discountlab/discretize.hpp"
#include "discountlab/lp.hpp"

namespace oracle {

using discountlab::DiscreteSystem;
using discountlab::ValueField;

/// min c.x over {x >= 0 : A x = b} by trying every column subset of size
/// rank(A) with hand-rolled Gaussian elimination. nullopt if infeasible.
std::optional<double> brute_force_lp_min(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                         const Eigen::VectorXd& c);

/// Solves the square system M y = r by Gaussian elimination with partial
/// pivoting; nullopt when singular to 1e-12.
std::optional<Eigen::VectorXd> gauss_solve(Eigen::MatrixXd M, Eigen::VectorXd r);

/// lambda u_i(x) + max_a [xi . D u_i + eta . u - L], recomputed from grid
/// coordinates without the library's stencil code.
ValueField reference_residual(const DiscreteSystem& sys, double lambda, const ValueField& u);

/// Dense per-policy matrix from grid coordinates.
Eigen::MatrixXd reference_policy_matrix(const DiscreteSystem& sys, double lambda,
                                        const std::vector<int>& choice);

/// Componentwise min over every policy of the evaluated value.
Eigen::VectorXd enumerate_policy_optimum(const DiscreteSystem& sys, double lambda);

/// A feasible, bounded LP in the form min c.x, A x = b, x >= 0 with
/// b = A x0 (x0 >= 0) and c = A^T y + s (s >= 0).
struct RandomLP {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
};
RandomLP random_lp(std::mt19937_64& rng, int rows, int cols);

/// Random monotone coupling matrix: off-diagonals <= 0, row sums >= 0.
std::vector<std::vector<double>> random_monotone_B(std::mt19937_64& rng, int m);

/// Random ValueField with entries in [-scale, scale].
ValueField random_field(const DiscreteSystem& sys, std::mt19937_64& rng, double scale = 1.0);

/// Small random linear-B system (m = 2, n = 1).
DiscreteSystem random_system(std::mt19937_64& rng);

} // namespace oracle
