#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "discountlab/error.hpp"
#include "discountlab/instances.hpp"
#include "discountlab/limits.hpp"
#include "oracles.hpp"

using namespace discountlab;

namespace {

double sup_norm(const ValueField& u) { return u.values.cwiseAbs().maxCoeff(); }

DiscreteSystem shifted_a() { return shift_costs(instances::constant_coupling(), {1.0, 1.0}); }

DiscreteSystem two_minima(int N) {
    return instances::eikonal(N, [](ConstSpan x) {
        return 0.5 * (1.0 - std::cos(4.0 * std::numbers::pi * x[0]));
    });
}

// One mode, N = 3, controls xi in {0, 1} with eta = 0.
DiscreteSystem tiny_two_control() {
    nlohmann::json j = {
        {"label", "tiny"},
        {"n", 1},
        {"N", 3},
        {"m", 1},
        {"controls", {{{"mode", 0}, {"xi", {0.0}}, {"eta", {0.0}}},
                      {{"mode", 0}, {"xi", {1.0}}, {"eta", {0.0}}}}},
        {"cost", {0.0, 0.2, 0.5, 0.2, 1.0, 0.2}}};
    return system_from_json(j);
}

// <nu, operator(u)> at lambda = 0.
double pairing_with_operator(const DiscreteSystem& sys, const MeasureVector& nu,
                             const ValueField& u) {
    double total = 0.0;
    StencilRow row;
    for (int i = 0; i < sys.m; ++i)
        for (int x = 0; x < sys.states(); ++x)
            for (int a = 0; a < sys.control_count(i); ++a) {
                if (nu(i, x, a) == 0.0) continue;
                operator_row(sys, 0.0, i, x, a, row);
                double applied = 0.0;
                for (const auto& e : row) applied += e.coeff * u.values[e.unknown];
                total += nu(i, x, a) * applied;
            }
    return total;
}

} // namespace

TEST(Sweep, InstanceAClosedForm) {
    auto sys = instances::constant_coupling();
    auto s = discount_sweep(sys, 1.0, 0.5, 20, 1e-12);
    ASSERT_EQ(s.ladder.size(), 20u);
    ASSERT_EQ(s.cauchy_gaps.size(), 19u);
    for (std::size_t j = 0; j < s.ladder.size(); ++j) {
        double lambda = s.ladder[j].lambda;
        EXPECT_DOUBLE_EQ(lambda, std::pow(0.5, static_cast<double>(j)));
        EXPECT_LE((s.ladder[j].v.values.array() + 1.0 / (1.0 + lambda)).abs().maxCoeff(), 1e-11);
    }
    // gap_j = (lambda_j - lambda_{j+1}) / ((1 + lambda_j)(1 + lambda_{j+1})): halving as lambda -> 0.
    for (std::size_t j = 0; j < s.cauchy_gaps.size(); ++j) {
        double l0 = s.ladder[j].lambda, l1 = s.ladder[j + 1].lambda;
        EXPECT_NEAR(s.cauchy_gaps[j], (l0 - l1) / ((1 + l0) * (1 + l1)), 1e-11);
    }
    for (std::size_t j = 8; j < s.cauchy_gaps.size(); ++j)
        EXPECT_NEAR(s.cauchy_gaps[j] / s.cauchy_gaps[j - 1], 0.5, 1e-2);
    EXPECT_LE((s.limit_candidate.values.array() + 1.0).abs().maxCoeff(), 1e-5);
    EXPECT_FALSE(s.divergent);
}

TEST(Sweep, ShiftedQuadraticPlcConverges) {
    auto norm = ergodic_normalize(instances::quadratic_plc());
    ASSERT_TRUE(norm.ergodic.converged);
    auto s = discount_sweep(norm.shifted);
    EXPECT_FALSE(s.divergent);
    EXPECT_LT(s.cauchy_gaps.back(), 1e-6);
    for (std::size_t j = 3; j < s.cauchy_gaps.size(); ++j)
        EXPECT_LE(s.cauchy_gaps[j], s.cauchy_gaps[j - 1] * (1.0 + 1e-6) + 1e-12);
    EXPECT_LT(s.uniform_bound, 10.0 * sup_norm(s.ladder.front().v));
}

TEST(Sweep, UnshiftedEikonalDiverges) {
    auto sys = instances::eikonal(32);
    auto s = discount_sweep(sys);
    EXPECT_TRUE(s.divergent);
    const auto& last = s.ladder.back();
    // v ~ -c / lambda with c = -1.
    EXPECT_NEAR(sup_norm(last.v) * last.lambda, 1.0, 1e-3);
    EXPECT_THROW(mather_from_sweep(sys, s, 0, 0), Error);
}

TEST(Sweep, LambdasStrictlyDecreasing) {
    auto s = discount_sweep(instances::constant_coupling(), 0.9, 0.3, 6);
    for (std::size_t j = 1; j < s.ladder.size(); ++j)
        EXPECT_LT(s.ladder[j].lambda, s.ladder[j - 1].lambda);
}

TEST(Sweep, Preconditions) {
    auto sys = instances::constant_coupling();
    EXPECT_THROW(discount_sweep(sys, 0.0, 0.5, 4), Error);
    EXPECT_THROW(discount_sweep(sys, 0.5, 1.0, 4), Error);
    EXPECT_THROW(discount_sweep(sys, 0.5, 0.5, 1), Error);
}

TEST(Sweep, CsvAndJson) {
    auto s = discount_sweep(instances::constant_coupling(), 1.0, 0.5, 3);
    std::istringstream in(sweep_csv(s));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "lambda,sup_norm,cauchy_gap,solver_iters");
    std::getline(in, line);
    EXPECT_NE(line.find(",nan,"), std::string::npos);
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3);
    nlohmann::json j = s;
    EXPECT_EQ(j.at("cauchy_gaps").size(), 2u);
}

TEST(MatherFromSweep, ShiftedInstanceAVanishes) {
    auto sys = shifted_a();
    auto s = discount_sweep(sys);
    EXPECT_LE(sup_norm(s.limit_candidate), 1e-12);
    auto m = mather_from_sweep(sys, s, 0, 0);
    double lambda = s.ladder.back().lambda;
    EXPECT_NEAR(m.nu.total_mass(), lambda / (1.0 + lambda), 1e-12);
    EXPECT_NEAR(m.cost, 0.0, 1e-12);
    EXPECT_EQ(m.nu.lambda_tag, 0.0);
}

TEST(MatherFromSweep, ShiftedEikonalConcentratesAtMinimizer) {
    auto norm = ergodic_normalize(instances::eikonal(32));
    auto s = discount_sweep(norm.shifted);
    ASSERT_FALSE(s.divergent);
    auto m = mather_from_sweep(norm.shifted, s, 3, 0);
    EXPECT_NEAR(m.nu.total_mass(), 1.0, 1e-3);
    EXPECT_LE(std::abs(m.cost), 1e-4);
    double lambda_min = s.ladder.back().lambda;
    EXPECT_LE(m.closedness_residual, 5.0 * lambda_min * (1.0 + stencil_norm(norm.shifted)));
    // Almost all mass at x = 1/2 with xi = 0.
    int centre = 16, still = 1;
    EXPECT_GT(m.nu(0, centre, still), 0.999);
    // The optimal face also holds nu = 0; any mass the LP keeps sits at the minimizer.
    auto lp = mather_lp(norm.shifted);
    EXPECT_NEAR(lp.nu.total_mass(), lp.nu(0, centre, still), 1e-9);
    MeasureVector dirac = MeasureVector::zeros(norm.shifted, 0.0);
    dirac(0, centre, still) = 1.0;
    EXPECT_LE(closedness_residual(norm.shifted, dirac, 0.0), 1e-15);
    EXPECT_NEAR(cost_pairing(norm.shifted, dirac), lp.min_value, 1e-8);
}

TEST(MatherLp, Examples) {
    std::mt19937_64 rng(83);
    for (int trial = 0; trial < 5; ++trial)
        EXPECT_LE(mather_lp(oracle::random_system(rng)).min_value, 0.0);

    auto norm = ergodic_normalize(instances::eikonal(16));
    auto m = mather_lp(norm.shifted);
    EXPECT_NEAR(m.min_value, 0.0, 1e-8);

    // An instance with c = +1: f = -1, so H = |p| + 1 and the Dirac cycle costs -1.
    auto neg = instances::eikonal(8, [](ConstSpan) { return -1.0; });
    auto mn = mather_lp(neg);
    EXPECT_NEAR(mn.min_value, -1.0, 1e-12);
    EXPECT_NEAR(mn.nu.total_mass(), 1.0, 1e-12);

    // Unshifted default eikonal: the zero measure is optimal.
    EXPECT_NEAR(mather_lp(instances::eikonal(16)).min_value, 0.0, 1e-12);
}

TEST(FaceSamples, ShiftedInstanceAIsZero) {
    auto mset = mather_face_samples(shifted_a(), 8, 1);
    ASSERT_EQ(mset.representatives.size(), 1u);
    EXPECT_EQ(mset.representatives[0].total_mass(), 0.0);
    EXPECT_TRUE(mset.exhaustive);
    EXPECT_TRUE(mset.sampling_complete);
}

TEST(FaceSamples, TinySampledEqualsEnumerated) {
    auto sys = tiny_two_control();
    auto mset = mather_face_samples(sys, 32, 5);
    EXPECT_TRUE(mset.exhaustive);
    EXPECT_TRUE(mset.sampling_complete);
    EXPECT_EQ(mset.min_value, 0.0);
    // Face vertices: the zero measure and the Dirac cycle at x = 0 with xi = 0.
    EXPECT_EQ(mset.exhaustive_vertices, 2);
}

TEST(FaceSamples, TwoMinimaGiveTwoVertices) {
    auto sys = two_minima(8);
    auto mset = mather_face_samples(sys, 32, 9);
    int dirac = 0;
    for (const auto& nu : mset.representatives) {
        if (nu.total_mass() < 0.5) continue;
        ++dirac;
        EXPECT_NEAR(cost_pairing(sys, nu), 0.0, 1e-9);
        EXPECT_LE(closedness_residual(sys, nu, 0.0), 1e-9);
    }
    EXPECT_GE(dirac, 2);
    // Each single-point measure at a zero of f is feasible with value 0.
    for (int x : {0, 4}) {
        MeasureVector nu = MeasureVector::zeros(sys, 0.0);
        nu(0, x, 1) = 1.0;
        EXPECT_LE(closedness_residual(sys, nu, 0.0), 1e-15);
        EXPECT_NEAR(cost_pairing(sys, nu), 0.0, 1e-15);
    }
}

TEST(FaceSamples, RepresentativeInvariants) {
    for (auto sys : {two_minima(6), tiny_two_control(), ergodic_normalize(instances::quadratic_plc(4, 1.0, 3)).shifted}) {
        auto mset = mather_face_samples(sys, 16, 3);
        std::mt19937_64 rng(2);
        for (const auto& nu : mset.representatives) {
            EXPECT_LE(closedness_residual(sys, nu, 0.0), 1e-8);
            EXPECT_LE(nu.total_mass(), 1.0 + 1e-12);
            EXPECT_GE(cost_pairing(sys, nu), -1e-8);
            for (int rep = 0; rep < 5; ++rep) {
                auto u = oracle::random_field(sys, rng, 3.0);
                EXPECT_NEAR(pairing_with_operator(sys, nu, u), 0.0, 1e-8);
            }
        }
        for (std::size_t a = 0; a < mset.representatives.size(); ++a)
            for (std::size_t b = a + 1; b < mset.representatives.size(); ++b)
                EXPECT_GT(tv_distance(mset.representatives[a], mset.representatives[b]),
                          kFaceDedupTol);
    }
}

TEST(Selection, ShiftedInstanceA) {
    auto sys = shifted_a();
    auto mset = mather_face_samples(sys, 4, 1);
    auto field = selection_field(sys, mset);
    EXPECT_LE(sup_norm(field), 1e-12);
    auto s = discount_sweep(sys);
    auto rep = convergence_report(sys, s, field, mset);
    EXPECT_LE(rep.limit_vs_selection_gap, 1e-12);
    ASSERT_EQ(rep.conv5.size(), 1u);
    EXPECT_EQ(rep.conv5[0], 0.0);
    EXPECT_TRUE(rep.pass);
}

TEST(Selection, EmptyMatherSetRejected) {
    MatherSet empty;
    try {
        selection_solve(shifted_a(), empty, 0, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Precondition);
    }
}

TEST(Selection, UnpinnedIsUnbounded) {
    auto sys = two_minima(6);
    MatherSet zero_only;
    zero_only.representatives.push_back(MeasureVector::zeros(sys, 0.0));
    zero_only.sources.push_back("lp-vertex");
    auto r = selection_solve(sys, zero_only, 0, 0);
    EXPECT_EQ(r.status, LPStatus::Unbounded);
    try {
        selection_field(sys, zero_only);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Unbounded);
    }
}

TEST(Selection, TwoMinimaMatchesSweepLimit) {
    auto sys = two_minima(6);
    auto mset = mather_face_samples(sys, 32, 7);
    ASSERT_TRUE(mset.exhaustive);
    auto field = selection_field(sys, mset);
    auto s = discount_sweep(sys);
    auto rep = convergence_report(sys, s, field, mset);
    EXPECT_LE(rep.limit_vs_selection_gap, kSelectionTol);
    EXPECT_LE(rep.conv5_max, kConv5Tol);
    EXPECT_TRUE(rep.pass);
}

TEST(Selection, ShiftedEikonalN32) {
    auto norm = ergodic_normalize(instances::eikonal(32));
    auto mset = mather_face_samples(norm.shifted, 16, 11);
    auto field = selection_field(norm.shifted, mset);
    auto s = discount_sweep(norm.shifted);
    auto rep = convergence_report(norm.shifted, s, field, mset);
    EXPECT_LE(rep.limit_vs_selection_gap, 1e-5);
    EXPECT_LE(rep.conv5_max, 1e-6);
    EXPECT_TRUE(rep.pass);
    nlohmann::json j = rep;
    for (const char* key : {"limit_vs_selection_gap", "conv5_max", "pass"})
        EXPECT_TRUE(j.contains(key));
}

TEST(Selection, ShiftedQuadraticPlc) {
    auto norm = ergodic_normalize(instances::quadratic_plc());
    auto mset = mather_face_samples(norm.shifted, 16, 13);
    auto field = selection_field(norm.shifted, mset);
    auto s = discount_sweep(norm.shifted);
    auto rep = convergence_report(norm.shifted, s, field, mset);
    EXPECT_LE(rep.limit_vs_selection_gap, 1e-5);
    EXPECT_EQ(rep.gaps.size(), s.cauchy_gaps.size());
}

TEST(Selection, MoreRowsNeverRaiseTheValue) {
    auto sys = two_minima(6);
    auto mset = mather_face_samples(sys, 32, 7);
    ASSERT_GE(mset.representatives.size(), 2u);
    for (int z = 0; z < sys.states(); ++z) {
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t take = 1; take <= mset.representatives.size(); ++take) {
            MatherSet sub = mset;
            sub.representatives.resize(take);
            sub.sources.resize(take);
            auto r = selection_solve(sys, sub, z, 0);
            double value = r.status == LPStatus::Unbounded
                               ? std::numeric_limits<double>::infinity()
                               : r.value;
            EXPECT_LE(value, prev + 1e-12);
            prev = value;
        }
    }
}

TEST(Selection, SweepValuesSitBelowSelection) {
    // The selected field dominates v^lambda up to the discrete closedness error.
    auto sys = two_minima(6);
    auto mset = mather_face_samples(sys, 32, 7);
    auto field = selection_field(sys, mset);
    auto s = discount_sweep(sys);
    for (const auto& rung : s.ladder)
        EXPECT_LE((rung.v.values - field.values).maxCoeff(), 1e-9) << rung.lambda;
}
