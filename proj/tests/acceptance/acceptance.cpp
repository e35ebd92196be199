// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "discountlab/error.hpp"
#include "discountlab/instances.hpp"
#include "discountlab/limits.hpp"
#include "discountlab/lp.hpp"
#include "discountlab/measures.hpp"
#include "discountlab/model.hpp"
#include "discountlab/solver.hpp"
#include "discountlab/zoo.hpp"
#include "oracles.hpp"

using namespace discountlab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double sup_norm(const ValueField& u) { return u.values.cwiseAbs().maxCoeff(); }

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

// Criteria 1 and 2 share the Green-Poisson solves.
struct DualitySweep {
    double worst_measure = 0.0;
    double worst_sub = 0.0;
    double worst_mass = 0.0;
    int combos = 0;
    double seconds = 0.0;
};

DualitySweep run_duality() {
    DualitySweep out;
    auto t0 = Clock::now();
    std::vector<DiscreteSystem> systems{instances::constant_coupling(4, 2),
                                        instances::quadratic_plc(8)};
    for (const auto& sys : systems) {
        for (double lambda : {1.0, 0.5, 0.1, 0.01}) {
            auto solved = policy_iterate(sys, lambda, 1e-12);
            for (int k = 0; k < sys.m; ++k)
                for (int z = 0; z < sys.states(); ++z) {
                    auto r = duality_audit(sys, lambda, z, k, &solved.u);
                    double v = solved.u(k, z);
                    out.worst_measure = std::max(out.worst_measure, std::abs(v - r.measure_value));
                    out.worst_sub = std::max(out.worst_sub, std::abs(v - r.subsolution_value));
                    auto gp = green_poisson(sys, lambda, z, k);
                    out.worst_mass =
                        std::max(out.worst_mass, std::abs(normalization(sys, gp.mu, lambda) - 1.0));
                    ++out.combos;
                }
        }
    }
    out.seconds = seconds_since(t0);
    return out;
}

// Criterion 4: a sub/supersolution pair from +-delta shifts of the solution
// with a small random ripple, kept only if the reference residual has the
// right sign everywhere.
bool residual_sign_ok(const DiscreteSystem& sys, double lambda, const ValueField& u, int sign) {
    auto r = oracle::reference_residual(sys, lambda, u);
    for (int q = 0; q < r.values.size(); ++q)
        if (sign * r.values[q] < 0.0) return false;
    return true;
}

Outcome comparison_criterion() {
    struct Named {
        const char* name;
        DiscreteSystem sys;
    };
    std::vector<Named> cases{{"constant-coupling", instances::constant_coupling()},
                             {"quadratic-plc", instances::quadratic_plc()},
                             {"linear-B", instances::linear_b({{1, -1}, {-1, 1}})},
                             {"eikonal-f", instances::eikonal(32)}};
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> L(0.01, 1.0), D(1e-3, 1.0), R(0.0, 1.0);
    int counterexamples = 0, pairs = 0, rejected = 0;
    for (const auto& c : cases) {
        int kept = 0;
        while (kept < 100) {
            double lambda = L(rng);
            auto v = policy_iterate(c.sys, lambda, 1e-12).u;
            double dlo = D(rng), dhi = D(rng), ripple = 0.5 * lambda * R(rng);
            ValueField sub = v, sup = v;
            for (int q = 0; q < v.values.size(); ++q) {
                sub.values[q] -= dlo * (1.0 + ripple * R(rng));
                sup.values[q] += dhi * (1.0 + ripple * R(rng));
            }
            if (!residual_sign_ok(c.sys, lambda, sub, -1) ||
                !residual_sign_ok(c.sys, lambda, sup, +1)) {
                ++rejected;
                continue;
            }
            bool ordered = comparison_check(c.sys, lambda, sub, sup);
            bool direct = (sub.values.array() <= sup.values.array()).all();
            if (!ordered || !direct) ++counterexamples;
            ++kept;
            ++pairs;
        }
    }
    return {counterexamples == 0,
            fmt("pairs=%.0f counterexamples=%.0f rejected_candidates=%.0f", pairs,
                counterexamples, rejected)};
}

Outcome vanishing_discount() {
    auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    std::vector<std::pair<const char*, DiscreteSystem>> cases{
        {"eikonal-f", ergodic_normalize(instances::eikonal(32)).shifted},
        {"quadratic-plc", ergodic_normalize(instances::quadratic_plc()).shifted}};
    for (const auto& [name, sys] : cases) {
        auto s = discount_sweep(sys, 0.5, 0.5, 18);
        double last_gap = s.cauchy_gaps.back();
        double first_norm = sup_norm(s.ladder.front().v);
        bool bounded = s.uniform_bound < 10.0 * first_norm;
        bool small = last_gap < 1e-6 && s.ladder.size() == 18;
        ok = ok && bounded && small && !s.divergent;
        detail += std::string(name) + fmt(": last_gap=%.3g bound=%.4g (10x=%.4g) ", last_gap,
                                          s.uniform_bound, 10.0 * first_norm);
    }
    double t = seconds_since(t0);
    ok = ok && t < 120.0;
    detail += fmt("time=%.2fs", t);
    return {ok, detail};
}

Outcome mather_properties() {
    bool ok = true;
    std::string detail;
    std::vector<std::pair<const char*, DiscreteSystem>> cases{
        {"eikonal-f", ergodic_normalize(instances::eikonal(32)).shifted},
        {"quadratic-plc", ergodic_normalize(instances::quadratic_plc()).shifted}};
    for (const auto& [name, sys] : cases) {
        auto lp = mather_lp(sys);
        auto s = discount_sweep(sys, 0.5, 0.5, 18);
        double lambda_min = s.ladder.back().lambda;
        double bound = 5.0 * lambda_min * stencil_norm(sys);
        double worst_closed = 0.0, worst_cost = 0.0;
        for (int k = 0; k < sys.m; ++k)
            for (int z = 0; z < sys.states(); ++z) {
                auto m = mather_from_sweep(sys, s, z, k);
                worst_closed = std::max(worst_closed, m.closedness_residual);
                worst_cost = std::max(worst_cost, std::abs(m.cost));
            }
        bool here = lp.min_value >= -1e-8 && lp.min_value <= 0.0 && worst_closed <= bound &&
                    worst_cost <= 1e-4;
        ok = ok && here;
        std::string part = fmt("min=%.3g closed=%.3g (<=%.3g) |cost|=%.3g ", lp.min_value,
                               worst_closed, bound, worst_cost);
        detail += std::string(name) + ": " + part;
    }
    return {ok, detail};
}

DiscreteSystem two_minima(int N) {
    return instances::eikonal(N, [](ConstSpan x) {
        return 0.5 * (1.0 - std::cos(4.0 * std::numbers::pi * x[0]));
    });
}

Outcome selection_principle() {
    auto t0 = Clock::now();
    auto sys = ergodic_normalize(two_minima(6)).shifted;
    int vars = measure_size(sys);
    bool ok = sys.m <= 2 && sys.states() <= 6 && vars <= kExhaustiveVariableLimit;
    auto mset = mather_face_samples(sys, 16, 19);
    ok = ok && mset.exhaustive && mset.exhaustive_vertices > 0;
    auto field = selection_field(sys, mset);
    auto s = discount_sweep(sys, 0.5, 0.5, 18);
    // Independent checks against the sweep limit.
    double gap = (field.values - s.limit_candidate.values).cwiseAbs().maxCoeff();
    double conv5 = -std::numeric_limits<double>::infinity();
    for (const auto& nu : mset.representatives)
        conv5 = std::max(conv5, value_pairing(nu, s.limit_candidate));
    double t = seconds_since(t0);
    ok = ok && gap <= 1e-5 && conv5 <= 1e-6 && t < 60.0;
    return {ok, fmt("vars=%.0f vertices=%.0f gap=%.3g max<nu,limit>=%.3g", vars,
                    mset.exhaustive_vertices, gap, conv5) +
                    fmt(" time=%.2fs", t)};
}

Outcome ergodic_criterion() {
    auto t0 = Clock::now();
    const double lambda = 1.0;
    const double min_f = 1.0;
    bool ok = true;
    std::string detail;
    std::vector<double> errors;
    for (int N : {64, 256, 512}) {
        auto sys = instances::eikonal(N);
        auto r = ergodic_solve(sys, lambda, 1e-8);
        double err = std::abs(r.c[0] + min_f);
        double residual = ergodic_residual(sys, r.u, r.c);
        errors.push_back(err);
        if (N != 512) ok = ok && err <= 3.0 / N + 2.0 * lambda && residual <= 1e-6;
        detail += fmt("N=%.0f |c+min f|=%.3g res=%.3g ", N, err, residual);
    }
    // Refinement oracle: the finest grid is no worse than the coarse ones.
    bool trend = errors[2] <= errors[0] + 1e-9 && errors[2] <= errors[1] + 1e-9;
    auto prof = coercivity_profile(zoo::eikonal_f(zoo::default_eikonal_potential), 4.0,
                                   {1, 2, 4, 8, 16}, 400);
    bool erg = check_erg_condition(prof, 1);
    double t = seconds_since(t0);
    ok = ok && trend && erg && t < 60.0;
    detail += std::string("trend=") + (trend ? "ok" : "bad") + " erg_condition=" +
              (erg ? "true" : "false") + fmt(" time=%.2fs", t);
    return {ok, detail};
}

Outcome structure_checkers() {
    auto good = check_monotone(zoo::linear_b({{1, -1}, {-1, 1}}), 4000, 3);
    auto bad = check_monotone(zoo::linear_b({{1, 0.1}, {-1, 1}}), 4000, 3);
    bool witnessed = !bad.passed && bad.witness.mode >= 0 && !bad.witness.u.empty();

    auto model = zoo::quadratic_plc();
    std::vector<std::vector<double>> xi;
    for (int a = 0; a < 9; ++a) xi.push_back({-2.0 + 0.5 * a});
    // Admissible etas plus injected ones outside the cone of each mode.
    std::vector<std::vector<std::vector<double>>> etas{
        {{0, 0}, {1, -1}, {0, 1}, {-1, -1}, {-0.5, 0.25}},
        {{0, 0}, {-1, 1}, {1, 0}, {-1, -1}, {0.25, -0.5}}};
    auto table = build_lagrangian_table(model, {{0.0}, {0.3}, {0.7}}, xi, etas,
                                        SearchBox{3.0, 3.0, 31});
    int finite = 0, finite_outside = 0, injected = 0, injected_finite = 0;
    for (const auto& s : table.slices)
        for (std::size_t a = 0; a < s.xi_grid.size(); ++a)
            for (std::size_t b = 0; b < s.eta_grid.size(); ++b) {
                bool inside = in_coupling_cone(s.mode, s.eta_grid[b]);
                const auto& e = s.at(a, b);
                if (!inside) {
                    ++injected;
                    if (!e.is_infinite || e.value != table.clip_bound) ++injected_finite;
                } else if (!e.is_infinite) {
                    ++finite;
                }
                if (!e.is_infinite && !inside) ++finite_outside;
            }
    bool domain = check_domain_Yi(table).passed;
    bool ok = good.passed && good.worst_violation == 0.0 && witnessed && domain &&
              finite_outside == 0 && injected > 0 && injected_finite == 0 && finite > 0;
    return {ok, fmt("monotone_violation=%.3g perturbed_violation=%.3g ", good.worst_violation,
                    bad.worst_violation) +
                    fmt("finite=%.0f injected=%.0f injected_not_infinite=%.0f", finite, injected,
                        injected_finite) +
                    (domain ? " domain=ok" : " domain=bad")};
}

Outcome lp_certification() {
    std::mt19937_64 rng(10);
    int mismatches = 0, uncertified = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        int rows = 1 + static_cast<int>(rng() % 12);
        int cols = rows + 1 + static_cast<int>(rng() % (20 - rows));
        auto gen = oracle::random_lp(rng, rows, cols);
        LPProblem p;
        p.A = gen.A;
        p.b = gen.b;
        p.c = gen.c;
        p.sense.assign(rows, RowSense::Eq);
        auto s = lp_solve(p);
        auto best = oracle::brute_force_lp_min(gen.A, gen.b, gen.c);
        if (!best || s.status != LPStatus::Optimal) {
            ++mismatches;
            continue;
        }
        double err = std::abs(s.objective_value - *best);
        worst = std::max(worst, err);
        if (err > 1e-9) ++mismatches;
        if (primal_residual(p, s.x) > kPrimalCertTol || s.cs_residual > kSlacknessCertTol ||
            s.x.minCoeff() < -kPrimalCertTol)
            ++uncertified;
    }
    return {mismatches == 0 && uncertified == 0,
            fmt("problems=200 mismatches=%.0f uncertified=%.0f worst_error=%.3g", mismatches,
                uncertified, worst)};
}

} // namespace

int main() {
    DualitySweep dual;
    bool dual_ok = true;
    std::string dual_error;
    try {
        dual = run_duality();
    } catch (const std::exception& e) {
        dual_ok = false;
        dual_error = e.what();
    }

    report(1, [&] {
        if (!dual_ok) return Outcome{false, "exception: " + dual_error};
        bool ok = dual.worst_measure <= 1e-7 && dual.worst_sub <= 1e-7 && dual.seconds < 60.0;
        return Outcome{ok, fmt("combos=%.0f |v-measure|=%.3g |v-subsolution|=%.3g time=%.2fs",
                               dual.combos, dual.worst_measure, dual.worst_sub, dual.seconds)};
    });
    report(2, [&] {
        if (!dual_ok) return Outcome{false, "exception: " + dual_error};
        bool ok = dual.combos >= 50 && dual.worst_mass <= 1e-9;
        return Outcome{ok, fmt("measures=%.0f |<mu,S>-1|=%.3g", dual.combos, dual.worst_mass)};
    });
    report(3, [] {
        auto sys = instances::constant_coupling();
        double worst = 0.0;
        for (double lambda : {1.0, 0.25}) {
            auto r = policy_iterate(sys, lambda, 1e-12);
            worst = std::max(worst, (r.u.values.array() + 1.0 / (1.0 + lambda)).abs().maxCoeff());
        }
        return Outcome{worst <= 1e-12, fmt("max|v+1/(1+lambda)|=%.3g", worst)};
    });
    report(4, comparison_criterion);
    report(5, vanishing_discount);
    report(6, mather_properties);
    report(7, selection_principle);
    report(8, ergodic_criterion);
    report(9, structure_checkers);
    report(10, lp_certification);

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
