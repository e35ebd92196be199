#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "discountlab/discretize.hpp"
#include "discountlab/lp.hpp"

namespace discountlab {

/// Nonnegative weights mu_i(x, a), laid out like DiscreteSystem::cost:
/// mode blocks, each x-major over that mode's controls.
struct MeasureVector {
    std::vector<int> offset; // start of each mode block
    std::vector<int> controls;
    int states = 0;
    Eigen::VectorXd weights;
    double lambda_tag = 0.0;

    static MeasureVector zeros(const DiscreteSystem& sys, double lambda_tag);
    int m() const { return static_cast<int>(offset.size()); }
    int index(int mode, int x, int a) const { return offset[mode] + x * controls[mode] + a; }
    double operator()(int mode, int x, int a) const { return weights[index(mode, x, a)]; }
    double& operator()(int mode, int x, int a) { return weights[index(mode, x, a)]; }
    double total_mass() const { return weights.sum(); }
};

void to_json(nlohmann::json& j, const MeasureVector& mu);

/// Number of (mode, state, control) triples.
int measure_size(const DiscreteSystem& sys);

/// <mu, L>.
double cost_pairing(const DiscreteSystem& sys, const MeasureVector& mu);
/// <mu, u> = sum mu_i(x, a) u_i(x).
double value_pairing(const MeasureVector& mu, const ValueField& u);
/// <mu, S^lambda 1> = sum mu_i(x, a) (lambda + sum_j eta_{a, j}).
double normalization(const DiscreteSystem& sys, const MeasureVector& mu, double lambda);

/// One equality row per indicator test field of (mode, state); the column of
/// (i, x, a) is the operator row of (i, x, a), so the matrix is exactly the
/// transpose of the solver's per-control operator. rhs = e_(z, k) for
/// lambda > 0; for lambda = 0 the rhs is zero and a final row <mu, 1> <= 1 is
/// appended. The objective is the cost vector.
LPProblem assemble_closed_constraints(const DiscreteSystem& sys, double lambda,
                                      std::optional<int> z = std::nullopt,
                                      std::optional<int> k = std::nullopt);

/// max over the closedness rows of |A mu - rhs| (the mass row is excluded).
double closedness_residual(const DiscreteSystem& sys, const MeasureVector& mu, double lambda,
                           std::optional<int> z = std::nullopt,
                           std::optional<int> k = std::nullopt);

struct GreenPoissonResult {
    MeasureVector mu;
    double value = 0.0;
    LPSolution lp;
};

/// min <mu, L> over the closed measures of (z, k, lambda).
GreenPoissonResult green_poisson(const DiscreteSystem& sys, double lambda, int z, int k);

/// Discounted occupation measure of the chain driven by pi, started at (z, k):
/// solves policy_matrix^T w = e_(z, k) and puts w on (x, pi(i, x)).
MeasureVector occupation_from_policy(const DiscreteSystem& sys, double lambda, const Policy& pi,
                                     int z, int k);

struct ExtraRow {
    MeasureVector nu;
    double bound = 0.0;
};

struct SubsolutionResult {
    LPStatus status = LPStatus::Optimal;
    ValueField u;
    double value = 0.0;
    ValueField ray; // set when Unbounded
    LPSolution lp;
};

/// max u_k(z) over free u with operator_row . u <= L for every (i, x, a), plus
/// <nu, u> <= bound for each extra row. Unbounded is reported in `status`;
/// an infeasible program throws Infeasible.
SubsolutionResult subsolution_lp(const DiscreteSystem& sys, double lambda, int z, int k,
                                 const std::vector<ExtraRow>& extra_rows = {});

struct DualityReport {
    int z = 0;
    int k = 0;
    double lambda = 0.0;
    double solver_value = 0.0;
    double measure_value = 0.0;
    double subsolution_value = 0.0;
    double cs_residual = 0.0;
    double spread = 0.0; // max(|a - b|, |a - c|)
    bool passed = false;
};

inline constexpr double kDualityTol = 1e-7;

void to_json(nlohmann::json& j, const DualityReport& r);

/// Solver value, measure-LP min and subsolution-LP max at (z, k). A solved
/// field may be passed to skip the solve.
DualityReport duality_audit(const DiscreteSystem& sys, double lambda, int z, int k,
                            const ValueField* solved = nullptr);

struct SupportEntry {
    int mode, x, a;
    double weight;
};

struct SupportReport {
    std::vector<SupportEntry> entries;
    /// Per mode bounding boxes; empty when the mode carries no mass.
    std::vector<std::vector<double>> xi_min, xi_max, eta_min, eta_max;
    /// xi support strictly inside the sampled xi box, per dimension.
    bool interior = true;
    double mass_floor = 1e-10;
};

void to_json(nlohmann::json& j, const SupportReport& r);

SupportReport support_audit(const MeasureVector& mu, const DiscreteSystem& sys,
                            double mass_floor = 1e-10);

} // namespace discountlab
