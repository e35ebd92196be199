#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "discountlab/measures.hpp"
#include "discountlab/solver.hpp"

namespace discountlab {

struct SweepRung {
    double lambda = 0.0;
    ValueField v;
    Policy policy;
    SolveDiagnostics diagnostics;
};

struct SweepResult {
    std::vector<SweepRung> ladder;
    std::vector<double> cauchy_gaps; // ||v_j - v_{j+1}||, one fewer than rungs
    double uniform_bound = 0.0;
    ValueField limit_candidate;
    bool divergent = false;
};

void to_json(nlohmann::json& j, const SweepResult& s);
/// Columns lambda, sup_norm, cauchy_gap, solver_iters; the gap of row j is
/// ||v_{j-1} - v_j|| and is nan on the first row.
std::string sweep_csv(const SweepResult& s);

inline constexpr double kDivergenceBound = 1e6;

/// Solves (P_lambda) at lambda_start * ratio^j, j < rungs, by policy iteration
/// warm-started from the previous rung. Flags divergence when the uniform
/// bound exceeds kDivergenceBound, or when the sup norm grew by at least
/// sqrt(1 / ratio) over each of the last three rungs.
SweepResult discount_sweep(const DiscreteSystem& sys, double lambda_start = 0.5,
                           double ratio = 0.5, int rungs = 18, double tol = kDiscountedTol);

struct ErgodicNormalization {
    DiscreteSystem shifted;
    ErgodicResult ergodic;
};

/// Shifts the costs by the ergodic constants so the shifted system has c = 0.
ErgodicNormalization ergodic_normalize(const DiscreteSystem& sys, double lambda = 1.0);

struct SweepMather {
    MeasureVector nu; // lambda_tag = 0
    double lambda = 0.0;
    double closedness_residual = 0.0;
    double cost = 0.0; // <nu, L>
};

void to_json(nlohmann::json& j, const SweepMather& r);

/// lambda mu^lambda at the smallest rung, where mu^lambda is the occupation
/// measure of that rung's optimal policy from (z, k).
SweepMather mather_from_sweep(const DiscreteSystem& sys, const SweepResult& sweep, int z, int k);

struct MatherLP {
    MeasureVector nu;
    double min_value = 0.0;
    LPSolution lp;
};

/// min <nu, L> over lambda = 0 closed measures with <nu, 1> <= 1.
MatherLP mather_lp(const DiscreteSystem& sys);

struct MatherSet {
    std::vector<MeasureVector> representatives;
    std::vector<std::string> sources; // "sweep-limit" | "lp-vertex" | "random-objective"
    double min_value = 0.0;
    bool exhaustive = false;          // oracle enumeration ran
    int exhaustive_vertices = 0;
    bool sampling_complete = false;   // every oracle vertex was also sampled
};

void to_json(nlohmann::json& j, const MatherSet& s);

inline constexpr int kExhaustiveVariableLimit = 30;
inline constexpr double kFaceDedupTol = 1e-7;

/// Total-variation distance (half the l1 distance of the weights).
double tv_distance(const MeasureVector& a, const MeasureVector& b);

/// Re-minimises `count` random objectives over the optimal face
/// {closed, <nu, 1> <= 1, <nu, L> = min_value}. With at most
/// kExhaustiveVariableLimit variables every vertex of the face is also
/// enumerated (vertices with <nu, L> <= min_value + tol).
MatherSet mather_face_samples(const DiscreteSystem& sys, int count, std::uint64_t seed,
                              double tol = 1e-9);

/// Subsolution LP at lambda = 0 with the rows <nu, u> <= 0 for every
/// representative.
SubsolutionResult selection_solve(const DiscreteSystem& sys, const MatherSet& mset, int z, int k);

/// selection_solve at every (z, k); throws Unbounded if any point is.
ValueField selection_field(const DiscreteSystem& sys, const MatherSet& mset);

struct ConvergenceReport {
    std::vector<double> gaps;
    double limit_vs_selection_gap = 0.0;
    std::vector<double> conv5; // <nu, limit> per representative
    double conv5_max = 0.0;
    bool pass = false;
};

inline constexpr double kSelectionTol = 1e-5;
inline constexpr double kConv5Tol = 1e-6;

void to_json(nlohmann::json& j, const ConvergenceReport& r);

ConvergenceReport convergence_report(const DiscreteSystem& sys, const SweepResult& sweep,
                                     const ValueField& selection, const MatherSet& mset);

} // namespace discountlab
