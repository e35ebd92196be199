#include "discountlab/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/SparseLU>

namespace discountlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

constexpr double kRoundoff = 64.0 * std::numeric_limits<double>::epsilon();

/// Value of row (i, x, a) at u: (operator row . u) - L, with a rounding scale.
struct RowValue {
    double value;
    double scale;
};

RowValue row_value(const DiscreteSystem& sys, double lambda, const Eigen::VectorXd& u, int i,
                   int x, int a, StencilRow& row) {
    operator_row(sys, lambda, i, x, a, row);
    double s = 0.0, scale = 0.0;
    for (const auto& e : row) {
        double t = e.coeff * u[e.unknown];
        s += t;
        scale += std::abs(t);
    }
    double L = sys.cost_at(i, x, a);
    return {s - L, scale + std::abs(L)};
}

Eigen::VectorXd solve_sparse(Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b) {
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw Error(Errc::SingularSystem, "sparse LU failed");
    Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite())
        throw Error(Errc::SingularSystem, "sparse solve failed");
    return x;
}

} // namespace

void to_json(nlohmann::json& j, const SolveDiagnostics& d) {
    j = nlohmann::json{{"iterations", d.iterations},
                       {"final_residual", d.final_residual},
                       {"contraction_estimate", d.contraction_estimate},
                       {"wall_time", d.wall_time}};
}

SolveResult value_iterate(const DiscreteSystem& sys, double lambda, const ValueField& u0,
                          double tol, int max_iter) {
    require(lambda > 0.0, "value_iterate needs lambda > 0");
    require(tol > 0.0, "value_iterate needs tol > 0");
    require(u0.values.size() == sys.unknowns(), "initial field has wrong size");
    auto start = Clock::now();
    SolveResult out{u0, Policy::constant(sys, 0), {}};
    Eigen::VectorXd& u = out.u.values;
    StencilRow row;
    double previous_change = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        double change = 0.0;
        for (int i = 0; i < sys.m; ++i) {
            for (int x = 0; x < sys.states(); ++x) {
                double best = std::numeric_limits<double>::infinity();
                for (int a = 0; a < sys.control_count(i); ++a) {
                    operator_row(sys, lambda, i, x, a, row);
                    double rhs = sys.cost_at(i, x, a);
                    for (std::size_t k = 1; k < row.size(); ++k)
                        rhs -= row[k].coeff * u[row[k].unknown];
                    best = std::min(best, rhs / row.front().coeff);
                }
                int idx = sys.unknown(i, x);
                change = std::max(change, std::abs(best - u[idx]));
                u[idx] = best;
            }
        }
        if (previous_change > 0.0) out.diagnostics.contraction_estimate = change / previous_change;
        previous_change = change;
        ValueField r = bellman_residual(sys, lambda, out.u, &out.policy);
        out.diagnostics.iterations = it;
        out.diagnostics.final_residual = sup_norm(r.values);
        if (out.diagnostics.final_residual <= tol) {
            out.diagnostics.wall_time = seconds_since(start);
            return out;
        }
    }
    out.diagnostics.wall_time = seconds_since(start);
    throw NoConvergence("value_iterate hit max_iter", out);
}

Eigen::SparseMatrix<double> policy_matrix(const DiscreteSystem& sys, double lambda,
                                          const Policy& pi) {
    std::vector<Eigen::Triplet<double>> triplets;
    StencilRow row;
    for (int i = 0; i < sys.m; ++i)
        for (int x = 0; x < sys.states(); ++x) {
            operator_row(sys, lambda, i, x, pi(i, x), row);
            for (const auto& e : row) triplets.emplace_back(sys.unknown(i, x), e.unknown, e.coeff);
        }
    Eigen::SparseMatrix<double> A(sys.unknowns(), sys.unknowns());
    A.setFromTriplets(triplets.begin(), triplets.end());
    return A;
}

Eigen::VectorXd policy_cost(const DiscreteSystem& sys, const Policy& pi) {
    Eigen::VectorXd L(sys.unknowns());
    for (int i = 0; i < sys.m; ++i)
        for (int x = 0; x < sys.states(); ++x) L[sys.unknown(i, x)] = sys.cost_at(i, x, pi(i, x));
    return L;
}

ValueField policy_evaluate(const DiscreteSystem& sys, double lambda, const Policy& pi) {
    require(lambda > 0.0, "policy_evaluate needs lambda > 0");
    auto A = policy_matrix(sys, lambda, pi);
    return ValueField{sys.m, sys.states(), solve_sparse(A, policy_cost(sys, pi))};
}

namespace {

// Rounding level of a residual evaluation: the stencil terms cancel at the
// scale (lambda + |stencil|) |u| + |L|.
double residual_floor(const DiscreteSystem& sys, double lambda, const ValueField& u) {
    double cost_max = 0.0;
    for (const auto& c : sys.cost)
        for (double v : c) cost_max = std::max(cost_max, std::abs(v));
    return 16.0 * std::numeric_limits<double>::epsilon() *
           ((lambda + stencil_norm(sys)) * sup_norm(u.values) + cost_max);
}

} // namespace

SolveResult policy_iterate(const DiscreteSystem& sys, double lambda, double tol,
                           const ValueField* warm, int max_iter, const IterateObserver& observer) {
    require(lambda > 0.0, "policy_iterate needs lambda > 0");
    auto start = Clock::now();
    SolveResult out;
    if (warm) {
        bellman_residual(sys, lambda, *warm, &out.policy);
    } else {
        bellman_residual(sys, lambda, ValueField::constant(sys, 0.0), &out.policy);
    }
    StencilRow row;
    double previous_step = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        ValueField u = policy_evaluate(sys, lambda, out.policy);
        if (it > 1) {
            double step = sup_norm(u.values - out.u.values);
            if (previous_step > 0.0) out.diagnostics.contraction_estimate = step / previous_step;
            previous_step = step;
        }
        out.u = std::move(u);
        out.diagnostics.iterations = it;
        if (observer) observer(it, out.u, out.policy);

        bool changed = false;
        for (int i = 0; i < sys.m; ++i) {
            for (int x = 0; x < sys.states(); ++x) {
                int current = out.policy(i, x);
                RowValue cur = row_value(sys, lambda, out.u.values, i, x, current, row);
                int best_a = current;
                double best = cur.value;
                for (int a = 0; a < sys.control_count(i); ++a) {
                    RowValue cand = row_value(sys, lambda, out.u.values, i, x, a, row);
                    if (cand.value > best + kRoundoff * std::max(cand.scale, cur.scale)) {
                        best = cand.value;
                        best_a = a;
                    }
                }
                if (best_a != current) {
                    out.policy(i, x) = best_a;
                    changed = true;
                }
            }
        }
        out.diagnostics.final_residual =
            sup_norm(bellman_residual(sys, lambda, out.u).values);
        if (!changed) {
            out.diagnostics.wall_time = seconds_since(start);
            if (out.diagnostics.final_residual <= std::max(tol, residual_floor(sys, lambda, out.u)))
                return out;
            throw NoConvergence("policy_iterate: stable policy but residual above tol", out);
        }
    }
    out.diagnostics.wall_time = seconds_since(start);
    throw NoConvergence("policy_iterate hit max_iter", out);
}

bool comparison_check(const DiscreteSystem& sys, double lambda, const ValueField& sub,
                      const ValueField& sup) {
    require(lambda > 0.0, "comparison_check needs lambda > 0");
    if (bellman_residual(sys, lambda, sub).values.maxCoeff() > 0.0)
        throw Error(Errc::NotASubsolution, "residual of sub has a positive entry");
    if (bellman_residual(sys, lambda, sup).values.minCoeff() < 0.0)
        throw Error(Errc::NotASupersolution, "residual of sup has a negative entry");
    return (sub.values.array() <= sup.values.array()).all();
}

// ---------------------------------------------------------------------------
// Ergodic problem

namespace {

/// Scalar policy iteration for mode i with the coupling frozen at u.
Eigen::VectorXd solve_frozen_mode(const DiscreteSystem& sys, double lambda, const ValueField& u,
                                  int i, std::vector<int>& policy) {
    const int S = sys.states();
    StencilRow row;
    // Right-hand side of control a at x: lambda u_i(x) + L_i(x,a) - eta_a . u(x).
    auto rhs = [&](int x, int a) {
        const auto& c = sys.control(i, a);
        double coupling = 0.0;
        for (int j = 0; j < sys.m; ++j) coupling += c.eta[j] * u(j, x);
        return lambda * u(i, x) + sys.cost_at(i, x, a) - coupling;
    };
    auto value = [&](const Eigen::VectorXd& v, int x, int a) {
        drift_row(sys, lambda, i, x, a, row);
        double s = 0.0, scale = 0.0;
        for (const auto& e : row) {
            double t = e.coeff * v[e.unknown - sys.unknown(i, 0)];
            s += t;
            scale += std::abs(t);
        }
        double b = rhs(x, a);
        return RowValue{s - b, scale + std::abs(b)};
    };

    Eigen::VectorXd v = u.values.segment(sys.unknown(i, 0), S);
    for (int it = 0; it < 1000; ++it) {
        std::vector<Eigen::Triplet<double>> triplets;
        Eigen::VectorXd b(S);
        for (int x = 0; x < S; ++x) {
            int a = policy[sys.unknown(i, x)];
            drift_row(sys, lambda, i, x, a, row);
            for (const auto& e : row)
                triplets.emplace_back(x, e.unknown - sys.unknown(i, 0), e.coeff);
            b[x] = rhs(x, a);
        }
        Eigen::SparseMatrix<double> A(S, S);
        A.setFromTriplets(triplets.begin(), triplets.end());
        v = solve_sparse(A, b);

        bool changed = false;
        for (int x = 0; x < S; ++x) {
            int& current = policy[sys.unknown(i, x)];
            RowValue cur = value(v, x, current);
            int best_a = current;
            double best = cur.value;
            for (int a = 0; a < sys.control_count(i); ++a) {
                RowValue cand = value(v, x, a);
                if (cand.value > best + kRoundoff * std::max(cand.scale, cur.scale)) {
                    best = cand.value;
                    best_a = a;
                }
            }
            if (best_a != current) {
                current = best_a;
                changed = true;
            }
        }
        if (!changed) return v;
    }
    throw Error(Errc::NoConvergence, "scalar policy iteration in ergodic map did not settle");
}

} // namespace

ErgodicStep ergodic_map_T(const DiscreteSystem& sys, double lambda, const ValueField& u,
                          const std::vector<int>* warm_policy) {
    require(lambda > 0.0, "ergodic_map_T needs lambda > 0");
    ErgodicStep step;
    step.v = ValueField::constant(sys, 0.0);
    step.Tu = ValueField::constant(sys, 0.0);
    step.c_est.assign(sys.m, 0.0);
    if (warm_policy && static_cast<int>(warm_policy->size()) == sys.unknowns()) {
        step.policy = *warm_policy;
    } else {
        Policy greedy;
        bellman_residual(sys, 0.0, u, &greedy);
        step.policy = greedy.choice;
    }
    for (int i = 0; i < sys.m; ++i) {
        Eigen::VectorXd v = solve_frozen_mode(sys, lambda, u, i, step.policy);
        double lowest = v.minCoeff();
        step.v.values.segment(sys.unknown(i, 0), sys.states()) = v;
        step.Tu.values.segment(sys.unknown(i, 0), sys.states()) =
            v - Eigen::VectorXd::Constant(v.size(), lowest);
        step.c_est[i] = -lambda * lowest;
    }
    return step;
}

double ergodic_residual(const DiscreteSystem& sys, const ValueField& u,
                        const std::vector<double>& c) {
    ValueField h = bellman_residual(sys, 0.0, u);
    double worst = 0.0;
    for (int i = 0; i < sys.m; ++i)
        for (int x = 0; x < sys.states(); ++x) worst = std::max(worst, std::abs(h(i, x) - c[i]));
    return worst;
}

namespace {

/// Solves A_pi u - c_i = L_pi with u_i(argmin_i) = 0 for the greedy policy of
/// `u`. Returns false when the result is not an improvement.
bool polish_ergodic(const DiscreteSystem& sys, ErgodicResult& r) {
    const int S = sys.states(), m = sys.m, n_u = sys.unknowns();
    Policy pi;
    bellman_residual(sys, 0.0, r.u, &pi);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_u + m, n_u + m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n_u + m);
    StencilRow row;
    std::vector<int> anchor(m);
    for (int i = 0; i < m; ++i) {
        Eigen::Index idx;
        r.u.values.segment(sys.unknown(i, 0), S).minCoeff(&idx);
        anchor[i] = static_cast<int>(idx);
        for (int x = 0; x < S; ++x) {
            int k = sys.unknown(i, x);
            operator_row(sys, 0.0, i, x, pi(i, x), row);
            for (const auto& e : row) A(k, e.unknown) += e.coeff;
            A(k, n_u + i) = -1.0;
            b[k] = sys.cost_at(i, x, pi(i, x));
        }
        A(n_u + i, sys.unknown(i, anchor[i])) = 1.0;
    }
    Eigen::VectorXd sol = A.completeOrthogonalDecomposition().solve(b);
    if (!sol.allFinite()) return false;
    ErgodicResult cand = r;
    cand.u.values = sol.head(n_u);
    cand.c.assign(sol.data() + n_u, sol.data() + n_u + m);
    for (int i = 0; i < m; ++i) {
        auto seg = cand.u.values.segment(sys.unknown(i, 0), S);
        double lowest = seg.minCoeff();
        if (lowest < -1e-12) return false;
        seg[anchor[i]] = 0.0;
        for (int x = 0; x < S; ++x)
            if (seg[x] < 0.0) seg[x] = 0.0;
    }
    cand.residual = ergodic_residual(sys, cand.u, cand.c);
    if (!(cand.residual < r.residual)) return false;
    cand.polished = true;
    r = std::move(cand);
    return true;
}

} // namespace

ErgodicResult ergodic_solve(const DiscreteSystem& sys, double lambda, double tol, double damping,
                            int max_outer) {
    require(lambda > 0.0, "ergodic_solve needs lambda > 0");
    require(damping > 0.0 && damping <= 1.0, "damping must lie in (0, 1]");
    require(tol > 0.0, "ergodic_solve needs tol > 0");
    ErgodicResult r;
    r.u = ValueField::constant(sys, 0.0);
    r.c.assign(sys.m, 0.0);
    std::vector<int> policy;
    for (int k = 1; k <= max_outer; ++k) {
        ErgodicStep step = ergodic_map_T(sys, lambda, r.u, policy.empty() ? nullptr : &policy);
        policy = step.policy;
        r.outer_iterations = k;
        r.map_gap = sup_norm(step.Tu.values - r.u.values);
        r.c = step.c_est;
        if (r.map_gap <= tol) {
            r.u = std::move(step.Tu);
            r.converged = true;
            break;
        }
        r.u.values = (1.0 - damping) * r.u.values + damping * step.Tu.values;
    }
    r.residual = ergodic_residual(sys, r.u, r.c);
    polish_ergodic(sys, r);
    r.converged = r.converged && r.residual <= 10.0 * tol;
    return r;
}

void to_json(nlohmann::json& j, const ErgodicResult& r) {
    j = nlohmann::json{{"c", r.c},
                       {"u", r.u},
                       {"residual", r.residual},
                       {"outer_iterations", r.outer_iterations},
                       {"map_gap", r.map_gap},
                       {"converged", r.converged},
                       {"polished", r.polished}};
}

} // namespace discountlab
