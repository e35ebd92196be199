#include "discountlab/limits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "discountlab/error.hpp"
#include "discountlab/parallel.hpp"

namespace discountlab {

namespace {

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void to_json(nlohmann::json& j, const SweepResult& s) {
    auto ladder = nlohmann::json::array();
    for (const auto& r : s.ladder)
        ladder.push_back({{"lambda", r.lambda},
                          {"sup_norm", sup_norm(r.v.values)},
                          {"diagnostics", r.diagnostics}});
    j = nlohmann::json{{"ladder", std::move(ladder)},
                       {"cauchy_gaps", s.cauchy_gaps},
                       {"uniform_bound", s.uniform_bound},
                       {"limit_candidate", s.limit_candidate},
                       {"divergent", s.divergent}};
}

std::string sweep_csv(const SweepResult& s) {
    std::string out = "lambda,sup_norm,cauchy_gap,solver_iters\n";
    for (std::size_t j = 0; j < s.ladder.size(); ++j) {
        const auto& r = s.ladder[j];
        double gap = j == 0 ? std::nan("") : s.cauchy_gaps[j - 1];
        out += fmt17(r.lambda) + "," + fmt17(sup_norm(r.v.values)) + "," + fmt17(gap) + "," +
               std::to_string(r.diagnostics.iterations) + "\n";
    }
    return out;
}

SweepResult discount_sweep(const DiscreteSystem& sys, double lambda_start, double ratio, int rungs,
                           double tol) {
    require(lambda_start > 0.0, "sweep needs lambda_start > 0");
    require(ratio > 0.0 && ratio < 1.0, "sweep ratio must lie in (0, 1)");
    require(rungs >= 2, "sweep needs at least two rungs");
    SweepResult s;
    double lambda = lambda_start;
    for (int j = 0; j < rungs; ++j, lambda *= ratio) {
        const ValueField* warm = s.ladder.empty() ? nullptr : &s.ladder.back().v;
        SolveResult r = policy_iterate(sys, lambda, tol, warm);
        if (!s.ladder.empty()) s.cauchy_gaps.push_back(sup_norm(s.ladder.back().v.values - r.u.values));
        s.uniform_bound = std::max(s.uniform_bound, sup_norm(r.u.values));
        s.ladder.push_back({lambda, std::move(r.u), std::move(r.policy), r.diagnostics});
    }
    s.limit_candidate = s.ladder.back().v;
    s.divergent = s.uniform_bound > kDivergenceBound;
    if (rungs >= 4) {
        const double growth = std::sqrt(1.0 / ratio);
        constexpr double kGrowthFloor = 1e-6;
        bool growing = true;
        for (int j = rungs - 3; j < rungs; ++j) {
            double prev = sup_norm(s.ladder[j - 1].v.values);
            double cur = sup_norm(s.ladder[j].v.values);
            if (!(cur >= growth * prev && cur - prev > kGrowthFloor)) growing = false;
        }
        s.divergent = s.divergent || growing;
    }
    return s;
}

ErgodicNormalization ergodic_normalize(const DiscreteSystem& sys, double lambda) {
    ErgodicNormalization out;
    out.ergodic = ergodic_solve(sys, lambda);
    if (!out.ergodic.converged)
        throw Error(Errc::NoConvergence, "ergodic iteration did not reach its tolerance");
    out.shifted = shift_costs(sys, out.ergodic.c);
    return out;
}

void to_json(nlohmann::json& j, const SweepMather& r) {
    j = nlohmann::json{{"nu", r.nu},
                       {"lambda", r.lambda},
                       {"closedness_residual", r.closedness_residual},
                       {"cost", r.cost}};
}

SweepMather mather_from_sweep(const DiscreteSystem& sys, const SweepResult& sweep, int z, int k) {
    require(!sweep.ladder.empty(), "empty sweep");
    require(!sweep.divergent, "sweep is flagged divergent");
    const SweepRung& last = sweep.ladder.back();
    SweepMather out;
    out.lambda = last.lambda;
    out.nu = occupation_from_policy(sys, last.lambda, last.policy, z, k);
    out.nu.weights *= last.lambda;
    out.nu.lambda_tag = 0.0;
    out.closedness_residual = closedness_residual(sys, out.nu, 0.0);
    out.cost = cost_pairing(sys, out.nu);
    return out;
}

MatherLP mather_lp(const DiscreteSystem& sys) {
    LPProblem p = assemble_closed_constraints(sys, 0.0);
    MatherLP out;
    out.lp = lp_solve(p);
    if (out.lp.status != LPStatus::Optimal)
        throw Error(Errc::NumericalBreakdown,
                    std::string("Mather LP returned ") + to_string(out.lp.status));
    out.nu = MeasureVector::zeros(sys, 0.0);
    out.nu.weights = out.lp.x.cwiseMax(0.0);
    out.min_value = out.lp.objective_value;
    return out;
}

void to_json(nlohmann::json& j, const MatherSet& s) {
    auto reps = nlohmann::json::array();
    for (std::size_t r = 0; r < s.representatives.size(); ++r) {
        nlohmann::json m = s.representatives[r];
        m["source"] = s.sources[r];
        reps.push_back(std::move(m));
    }
    j = nlohmann::json{{"representatives", std::move(reps)},
                       {"min_value", s.min_value},
                       {"exhaustive", s.exhaustive},
                       {"exhaustive_vertices", s.exhaustive_vertices},
                       {"sampling_complete", s.sampling_complete}};
}

double tv_distance(const MeasureVector& a, const MeasureVector& b) {
    return 0.5 * (a.weights - b.weights).cwiseAbs().sum();
}

namespace {

bool contains(const std::vector<MeasureVector>& set, const MeasureVector& nu) {
    for (const auto& r : set)
        if (tv_distance(r, nu) <= kFaceDedupTol) return true;
    return false;
}

} // namespace

MatherSet mather_face_samples(const DiscreteSystem& sys, int count, std::uint64_t seed,
                              double tol) {
    require(count >= 0, "sample count must be nonnegative");
    MatherSet out;
    out.min_value = mather_lp(sys).min_value;

    LPProblem face = assemble_closed_constraints(sys, 0.0);
    const int n_var = face.cols();
    const int rows = face.rows();
    face.A.conservativeResize(rows + 1, Eigen::NoChange);
    face.b.conservativeResize(rows + 1);
    face.A.row(rows) = face.c.transpose();
    face.b[rows] = out.min_value;
    face.sense.push_back(RowSense::Eq);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Eigen::VectorXd> objectives(count, Eigen::VectorXd(n_var));
    for (auto& obj : objectives)
        for (int j = 0; j < n_var; ++j) obj[j] = unit(rng);
    std::vector<MeasureVector> sampled(count);
    parallel_for(count, [&](std::size_t s) {
        LPProblem p = face;
        p.c = objectives[s];
        LPSolution sol = lp_solve(p);
        if (sol.status != LPStatus::Optimal)
            throw Error(Errc::NumericalBreakdown, "face sample LP is not optimal");
        sampled[s] = MeasureVector::zeros(sys, 0.0);
        sampled[s].weights = sol.x.cwiseMax(0.0);
    });
    std::vector<MeasureVector> unique_samples;
    for (auto& nu : sampled)
        if (!contains(unique_samples, nu)) unique_samples.push_back(std::move(nu));

    if (n_var <= kExhaustiveVariableLimit) {
        out.exhaustive = true;
        LPProblem full = assemble_closed_constraints(sys, 0.0);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(full.rows(), n_var + 1);
        A.leftCols(n_var) = full.A;
        A(full.rows() - 1, n_var) = 1.0; // slack of the mass row
        for (const auto& x : basic_feasible_solutions(A, full.b)) {
            MeasureVector nu = MeasureVector::zeros(sys, 0.0);
            nu.weights = x.head(n_var);
            if (cost_pairing(sys, nu) > out.min_value + tol) continue;
            if (contains(out.representatives, nu)) continue;
            out.representatives.push_back(std::move(nu));
            out.sources.push_back("lp-vertex");
        }
        out.exhaustive_vertices = static_cast<int>(out.representatives.size());
        out.sampling_complete = true;
        for (const auto& v : out.representatives)
            if (!contains(unique_samples, v)) out.sampling_complete = false;
    }
    for (auto& nu : unique_samples)
        if (!contains(out.representatives, nu)) {
            out.representatives.push_back(std::move(nu));
            out.sources.push_back("random-objective");
        }
    return out;
}

SubsolutionResult selection_solve(const DiscreteSystem& sys, const MatherSet& mset, int z, int k) {
    require(!mset.representatives.empty(), "selection needs at least one Mather representative");
    std::vector<ExtraRow> rows;
    rows.reserve(mset.representatives.size());
    for (const auto& nu : mset.representatives) rows.push_back({nu, 0.0});
    return subsolution_lp(sys, 0.0, z, k, rows);
}

ValueField selection_field(const DiscreteSystem& sys, const MatherSet& mset) {
    ValueField w = ValueField::constant(sys, 0.0);
    std::vector<SubsolutionResult> results(sys.unknowns());
    parallel_for(sys.unknowns(), [&](std::size_t idx) {
        int k = static_cast<int>(idx) / sys.states();
        int z = static_cast<int>(idx) % sys.states();
        results[idx] = selection_solve(sys, mset, z, k);
    });
    for (int idx = 0; idx < sys.unknowns(); ++idx) {
        if (results[idx].status != LPStatus::Optimal)
            throw Error(Errc::Unbounded, "selection LP is unbounded at unknown " +
                                             std::to_string(idx));
        w.values[idx] = results[idx].value;
    }
    return w;
}

void to_json(nlohmann::json& j, const ConvergenceReport& r) {
    j = nlohmann::json{{"gaps", r.gaps},
                       {"limit_vs_selection_gap", r.limit_vs_selection_gap},
                       {"conv5", r.conv5},
                       {"conv5_max", r.conv5_max},
                       {"pass", r.pass}};
}

ConvergenceReport convergence_report(const DiscreteSystem& sys, const SweepResult& sweep,
                                     const ValueField& selection, const MatherSet& mset) {
    (void)sys;
    ConvergenceReport r;
    r.gaps = sweep.cauchy_gaps;
    r.limit_vs_selection_gap = sup_norm(sweep.limit_candidate.values - selection.values);
    r.conv5_max = -std::numeric_limits<double>::infinity();
    for (const auto& nu : mset.representatives) {
        r.conv5.push_back(value_pairing(nu, sweep.limit_candidate));
        r.conv5_max = std::max(r.conv5_max, r.conv5.back());
    }
    if (r.conv5.empty()) r.conv5_max = 0.0;
    r.pass = !sweep.divergent && r.limit_vs_selection_gap <= kSelectionTol &&
             r.conv5_max <= kConv5Tol;
    return r;
}

} // namespace discountlab
