#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "discountlab/error.hpp"
#include "discountlab/instances.hpp"
#include "discountlab/solver.hpp"
#include "oracles.hpp"

using namespace discountlab;

namespace {

double sup_dist(const ValueField& a, const ValueField& b) {
    return (a.values - b.values).cwiseAbs().maxCoeff();
}

double sup_dev(const ValueField& a, double c) { return (a.values.array() - c).abs().maxCoeff(); }

DiscreteSystem flat_eikonal(int N, double level) {
    return instances::eikonal(N, [level](ConstSpan) { return level; });
}

} // namespace

TEST(ValueIterate, InstanceAClosedForm) {
    auto sys = instances::constant_coupling();
    auto r1 = value_iterate(sys, 1.0, ValueField::constant(sys, 0.0), 1e-10);
    EXPECT_LE(sup_dev(r1.u, -0.5), 1e-10);
    auto r2 = value_iterate(sys, 0.25, ValueField::constant(sys, 0.0), 1e-10);
    EXPECT_LE(sup_dev(r2.u, -0.8), 1e-9);
    EXPECT_LE(r2.diagnostics.final_residual, 1e-10);
}

TEST(ValueIterate, InstanceBAgreesWithPolicyIteration) {
    auto sys = instances::quadratic_plc();
    auto vi = value_iterate(sys, 0.5, ValueField::constant(sys, 0.0), 1e-10);
    auto pi = policy_iterate(sys, 0.5, 1e-10);
    EXPECT_LE(sup_dist(vi.u, pi.u), 1e-9);
    EXPECT_LE(bellman_residual(sys, 0.5, vi.u).values.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ValueIterate, NoConvergenceCarriesPartialResult) {
    auto sys = instances::quadratic_plc();
    try {
        value_iterate(sys, 0.01, ValueField::constant(sys, 0.0), 1e-12, 2);
        FAIL();
    } catch (const NoConvergence& e) {
        EXPECT_EQ(e.code(), Errc::NoConvergence);
        EXPECT_EQ(e.partial().diagnostics.iterations, 2);
        EXPECT_EQ(e.partial().u.values.size(), sys.unknowns());
    }
}

TEST(ValueIterate, RejectsBadArguments) {
    auto sys = instances::constant_coupling();
    EXPECT_THROW(value_iterate(sys, 0.0, ValueField::constant(sys, 0.0)), Error);
    EXPECT_THROW(value_iterate(sys, 1.0, ValueField::constant(sys, 0.0), 0.0), Error);
}

TEST(PolicyEvaluate, InstanceA) {
    auto sys = instances::constant_coupling();
    for (double lambda : {0.1, 1.0, 3.0}) {
        // Controls are xi in {-1, 0, 1}; indices 1 and 2 are xi = 0 and xi = 1.
        EXPECT_LE(sup_dev(policy_evaluate(sys, lambda, Policy::constant(sys, 1)),
                          -1.0 / (1.0 + lambda)),
                  1e-13);
        EXPECT_LE(sup_dev(policy_evaluate(sys, lambda, Policy::constant(sys, 2)),
                          -1.0 / (1.0 + lambda)),
                  1e-13);
    }
}

TEST(PolicyEvaluate, MatchesDenseReferenceSolve) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        auto sys = oracle::random_system(rng);
        double lambda = std::uniform_real_distribution<double>(0.05, 2.0)(rng);
        Policy pi = Policy::constant(sys, 0);
        for (int r = 0; r < sys.unknowns(); ++r)
            pi.choice[r] = std::uniform_int_distribution<int>(
                0, sys.control_count(r / sys.states()) - 1)(rng);
        Eigen::VectorXd L(sys.unknowns());
        for (int r = 0; r < sys.unknowns(); ++r)
            L[r] = sys.cost_at(r / sys.states(), r % sys.states(), pi.choice[r]);
        auto ref = oracle::gauss_solve(oracle::reference_policy_matrix(sys, lambda, pi.choice), L);
        ASSERT_TRUE(ref.has_value());
        auto got = policy_evaluate(sys, lambda, pi);
        EXPECT_LE((got.values - *ref).cwiseAbs().maxCoeff(), 1e-9 * (1.0 + ref->cwiseAbs().maxCoeff()));
    }
}

TEST(PolicyEvaluate, InstanceBOptimalPolicyMatchesValueIteration) {
    auto sys = instances::quadratic_plc();
    auto vi = value_iterate(sys, 0.5, ValueField::constant(sys, 0.0), 1e-11);
    Policy greedy;
    bellman_residual(sys, 0.5, vi.u, &greedy);
    EXPECT_LE(sup_dist(policy_evaluate(sys, 0.5, greedy), vi.u), 1e-9);
}

TEST(PolicyIterate, InstanceA) {
    auto sys = instances::constant_coupling();
    auto r = policy_iterate(sys, 0.7, 1e-10);
    EXPECT_LE(r.diagnostics.iterations, 2);
    EXPECT_LE(sup_dev(r.u, -1.0 / 1.7), 1e-13);
}

TEST(PolicyIterate, InstanceBMatchesExhaustiveEnumeration) {
    auto sys = instances::quadratic_plc(4, 2.0, 3);
    ASSERT_EQ(sys.control_count(0), 6);
    auto best = oracle::enumerate_policy_optimum(sys, 0.5);
    auto r = policy_iterate(sys, 0.5, 1e-12);
    EXPECT_LE((r.u.values - best).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PolicyIterate, SmallDiscount) {
    auto sys = instances::quadratic_plc();
    auto r = policy_iterate(sys, 1e-3, 1e-10);
    EXPECT_LE(r.diagnostics.final_residual, 1e-10);
    EXPECT_GT(r.diagnostics.iterations, 0);
    auto vi = value_iterate(sys, 1e-3, r.u, 1e-10);
    EXPECT_LE(sup_dist(vi.u, r.u), 1e-6);
}

TEST(PolicyIterate, ValuesAreNonincreasing) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 25; ++trial) {
        auto sys = oracle::random_system(rng);
        double lambda = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
        std::vector<Eigen::VectorXd> seen;
        policy_iterate(sys, lambda, 1e-10, nullptr, 1000,
                       [&](int, const ValueField& u, const Policy&) { seen.push_back(u.values); });
        ASSERT_FALSE(seen.empty());
        for (std::size_t k = 1; k < seen.size(); ++k)
            EXPECT_LE((seen[k] - seen[k - 1]).maxCoeff(),
                      1e-10 * (1.0 + seen[k - 1].cwiseAbs().maxCoeff()));
    }
}

TEST(Uniqueness, ValueAndPolicyIterationAgreeFromAnyStart) {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 25; ++trial) {
        auto sys = oracle::random_system(rng);
        double lambda = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
        auto u0 = oracle::random_field(sys, rng, 10.0);
        auto vi = value_iterate(sys, lambda, u0, 1e-10);
        auto pi = policy_iterate(sys, lambda, 1e-10, &u0);
        // Residual r bounds the error by r / lambda.
        EXPECT_LE(sup_dist(vi.u, pi.u), 10.0 * 1e-10 / std::min(lambda, 1.0) + 1e-12) << trial;
    }
}

TEST(ShiftProperty, SolvedValuePlusConstant) {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 20; ++trial) {
        auto sys = oracle::random_system(rng);
        double lambda = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
        auto v = policy_iterate(sys, lambda, 1e-11).u;
        for (double c : {0.0, 0.3, 2.0}) {
            ValueField s = v;
            s.values.array() += c;
            EXPECT_GE(bellman_residual(sys, lambda, s).values.minCoeff(), lambda * c - 1e-9);
        }
    }
}

TEST(Comparison, Examples) {
    auto a = instances::constant_coupling();
    EXPECT_TRUE(comparison_check(a, 1.0, ValueField::constant(a, -2.0), ValueField::constant(a, 0.0)));
    try {
        comparison_check(a, 1.0, ValueField::constant(a, 0.0), ValueField::constant(a, 0.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NotASubsolution);
    }
    try {
        comparison_check(a, 1.0, ValueField::constant(a, -2.0), ValueField::constant(a, -2.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NotASupersolution);
    }

    auto b = instances::quadratic_plc();
    auto v = policy_iterate(b, 0.5, 1e-12).u;
    ValueField lo = v, hi = v;
    lo.values.array() -= 0.1;
    hi.values.array() += 0.1;
    EXPECT_TRUE(comparison_check(b, 0.5, lo, hi));
}

TEST(Comparison, RandomSubAndSuperSolutions) {
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> D(0.01, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto sys = oracle::random_system(rng);
        double lambda = D(rng);
        auto v = policy_iterate(sys, lambda, 1e-12).u;
        ValueField lo = v, hi = v;
        lo.values.array() -= D(rng);
        hi.values.array() += D(rng);
        EXPECT_TRUE(comparison_check(sys, lambda, lo, hi));
    }
}

TEST(ErgodicMap, DecoupledConstantCost) {
    auto sys = flat_eikonal(8, 2.0);
    for (double lambda : {0.5, 1.0}) {
        auto step = ergodic_map_T(sys, lambda, ValueField::constant(sys, 0.0));
        EXPECT_LE(sup_dev(step.v, 2.0 / lambda), 1e-12);
        EXPECT_LE(step.Tu.values.cwiseAbs().maxCoeff(), 1e-12);
        ASSERT_EQ(step.c_est.size(), 1u);
        EXPECT_NEAR(step.c_est[0], -2.0, 1e-12);
    }
}

TEST(ErgodicMap, InstanceAFrozenCoupling) {
    auto sys = instances::constant_coupling();
    double lambda = 0.5;
    auto step = ergodic_map_T(sys, lambda, ValueField::constant(sys, 0.0));
    // The whole coupling slot is frozen at u = 0: lambda v + 1 = 0.
    EXPECT_LE(sup_dev(step.v, -1.0 / lambda), 1e-12);
    EXPECT_LE(step.Tu.values.cwiseAbs().maxCoeff(), 1e-12);
    for (double c : step.c_est) EXPECT_NEAR(c, 1.0, 1e-12);
}

TEST(ErgodicMap, EikonalFixedPoint) {
    auto sys = instances::eikonal(64);
    auto r = ergodic_solve(sys, 0.05, 1e-8);
    EXPECT_NEAR(r.c[0], -1.0, 0.05);
    auto step = ergodic_map_T(sys, 0.05, r.u);
    EXPECT_NEAR(step.c_est[0], -1.0, 0.05);
}

TEST(ErgodicSolve, Eikonal) {
    auto sys = instances::eikonal(64);
    auto r = ergodic_solve(sys, 1.0, 1e-8);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.c[0], -1.0, 2e-2);
    EXPECT_LE(r.residual, 1e-6);
    EXPECT_EQ(r.u.values.minCoeff(), 0.0);
}

TEST(ErgodicSolve, InstanceA) {
    auto sys = instances::constant_coupling();
    auto r = ergodic_solve(sys, 1.0, 1e-8);
    EXPECT_TRUE(r.converged);
    ASSERT_EQ(r.c.size(), 2u);
    EXPECT_NEAR(r.c[0], 1.0, 1e-8);
    EXPECT_NEAR(r.c[1], 1.0, 1e-8);
    EXPECT_LE(r.residual, 1e-8);
    EXPECT_LE(r.u.values.cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(ergodic_residual(sys, ValueField::constant(sys, 0.0), {1.0, 1.0}), 1e-15);
}

TEST(ErgodicSolve, ZeroDampingIsRejected) {
    auto sys = instances::constant_coupling();
    try {
        ergodic_solve(sys, 1.0, 1e-8, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Precondition);
    }
}

TEST(ErgodicSolve, NormalizationIsExact) {
    std::mt19937_64 rng(59);
    for (int trial = 0; trial < 8; ++trial) {
        auto sys = oracle::random_system(rng);
        auto r = ergodic_solve(sys, 1.0, 1e-8);
        for (int i = 0; i < sys.m; ++i)
            EXPECT_EQ(r.u.values.segment(i * sys.states(), sys.states()).minCoeff(), 0.0);
        if (r.converged) EXPECT_LE(r.residual, 1e-7);
    }
}

TEST(SolverJson, Shapes) {
    auto sys = instances::constant_coupling();
    nlohmann::json e = ergodic_solve(sys, 1.0, 1e-8);
    for (const char* key : {"c", "u", "residual", "outer_iterations"}) EXPECT_TRUE(e.contains(key));
    nlohmann::json d = policy_iterate(sys, 1.0).diagnostics;
    for (const char* key : {"iterations", "final_residual", "contraction_estimate", "wall_time"})
        EXPECT_TRUE(d.contains(key));
}
