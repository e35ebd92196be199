#include "discountlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "discountlab/error.hpp"
#include "discountlab/solver.hpp"

#include <Eigen/SparseLU>

namespace discountlab {

MeasureVector MeasureVector::zeros(const DiscreteSystem& sys, double lambda_tag) {
    MeasureVector mu;
    mu.states = sys.states();
    mu.lambda_tag = lambda_tag;
    int total = 0;
    for (int i = 0; i < sys.m; ++i) {
        mu.offset.push_back(total);
        mu.controls.push_back(sys.control_count(i));
        total += sys.states() * sys.control_count(i);
    }
    mu.weights = Eigen::VectorXd::Zero(total);
    return mu;
}

void to_json(nlohmann::json& j, const MeasureVector& mu) {
    auto entries = nlohmann::json::array();
    for (int i = 0; i < mu.m(); ++i)
        for (int x = 0; x < mu.states; ++x)
            for (int a = 0; a < mu.controls[i]; ++a)
                if (mu(i, x, a) > 0.0)
                    entries.push_back({{"mode", i}, {"x", x}, {"a", a}, {"weight", mu(i, x, a)}});
    j = nlohmann::json{{"lambda_tag", mu.lambda_tag}, {"entries", std::move(entries)}};
}

int measure_size(const DiscreteSystem& sys) {
    int total = 0;
    for (int i = 0; i < sys.m; ++i) total += sys.states() * sys.control_count(i);
    return total;
}

double cost_pairing(const DiscreteSystem& sys, const MeasureVector& mu) {
    double s = 0.0;
    for (int i = 0; i < sys.m; ++i)
        for (int x = 0; x < sys.states(); ++x)
            for (int a = 0; a < sys.control_count(i); ++a) s += mu(i, x, a) * sys.cost_at(i, x, a);
    return s;
}

double value_pairing(const MeasureVector& mu, const ValueField& u) {
    double s = 0.0;
    for (int i = 0; i < mu.m(); ++i)
        for (int x = 0; x < mu.states; ++x)
            for (int a = 0; a < mu.controls[i]; ++a) s += mu(i, x, a) * u(i, x);
    return s;
}

double normalization(const DiscreteSystem& sys, const MeasureVector& mu, double lambda) {
    double s = 0.0;
    for (int i = 0; i < sys.m; ++i)
        for (int a = 0; a < sys.control_count(i); ++a) {
            double weight = lambda;
            for (double e : sys.control(i, a).eta) weight += e;
            double mass = 0.0;
            for (int x = 0; x < sys.states(); ++x) mass += mu(i, x, a);
            s += mass * weight;
        }
    return s;
}

LPProblem assemble_closed_constraints(const DiscreteSystem& sys, double lambda,
                                      std::optional<int> z, std::optional<int> k) {
    require(lambda >= 0.0, "closed constraints need lambda >= 0");
    if (lambda > 0.0) {
        require(z && k, "lambda > 0 needs a base point (z, k)");
        require(*z >= 0 && *z < sys.states() && *k >= 0 && *k < sys.m, "(z, k) out of range");
    } else {
        require(!z && !k, "lambda = 0 takes no base point");
    }
    const int n_var = measure_size(sys);
    const int n_rows = sys.unknowns() + (lambda > 0.0 ? 0 : 1);
    LPProblem p;
    p.A = Eigen::MatrixXd::Zero(n_rows, n_var);
    p.b = Eigen::VectorXd::Zero(n_rows);
    p.c = Eigen::VectorXd::Zero(n_var);
    p.sense.assign(n_rows, RowSense::Eq);
    MeasureVector layout = MeasureVector::zeros(sys, lambda);
    StencilRow row;
    for (int i = 0; i < sys.m; ++i)
        for (int x = 0; x < sys.states(); ++x)
            for (int a = 0; a < sys.control_count(i); ++a) {
                int col = layout.index(i, x, a);
                operator_row(sys, lambda, i, x, a, row);
                for (const auto& e : row) p.A(e.unknown, col) += e.coeff;
                p.c[col] = sys.cost_at(i, x, a);
            }
    if (lambda > 0.0) {
        p.b[sys.unknown(*k, *z)] = 1.0;
    } else {
        p.A.row(n_rows - 1).setOnes();
        p.b[n_rows - 1] = 1.0;
        p.sense.back() = RowSense::Le;
    }
    return p;
}

double closedness_residual(const DiscreteSystem& sys, const MeasureVector& mu, double lambda,
                           std::optional<int> z, std::optional<int> k) {
    LPProblem p = assemble_closed_constraints(sys, lambda, z, k);
    Eigen::VectorXd r = (p.A * mu.weights - p.b).head(sys.unknowns());
    return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
}

GreenPoissonResult green_poisson(const DiscreteSystem& sys, double lambda, int z, int k) {
    require(lambda > 0.0, "green_poisson needs lambda > 0");
    LPProblem p = assemble_closed_constraints(sys, lambda, z, k);
    GreenPoissonResult out;
    out.lp = lp_solve(p);
    if (out.lp.status != LPStatus::Optimal)
        throw Error(out.lp.status == LPStatus::Infeasible ? Errc::Infeasible : Errc::Unbounded,
                    std::string("Green-Poisson LP is ") + to_string(out.lp.status));
    out.mu = MeasureVector::zeros(sys, lambda);
    out.mu.weights = out.lp.x.cwiseMax(0.0);
    out.value = out.lp.objective_value;
    return out;
}

MeasureVector occupation_from_policy(const DiscreteSystem& sys, double lambda, const Policy& pi,
                                     int z, int k) {
    require(lambda > 0.0, "occupation_from_policy needs lambda > 0");
    require(z >= 0 && z < sys.states() && k >= 0 && k < sys.m, "(z, k) out of range");
    Eigen::SparseMatrix<double> At = policy_matrix(sys, lambda, pi).transpose();
    At.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(At);
    if (lu.info() != Eigen::Success) throw Error(Errc::SingularSystem, "transposed policy matrix");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(sys.unknowns());
    e[sys.unknown(k, z)] = 1.0;
    Eigen::VectorXd w = lu.solve(e);
    if (lu.info() != Eigen::Success || !w.allFinite())
        throw Error(Errc::SingularSystem, "transposed policy solve");
    MeasureVector mu = MeasureVector::zeros(sys, lambda);
    for (int i = 0; i < sys.m; ++i)
        for (int x = 0; x < sys.states(); ++x)
            mu(i, x, pi(i, x)) = std::max(w[sys.unknown(i, x)], 0.0);
    return mu;
}

SubsolutionResult subsolution_lp(const DiscreteSystem& sys, double lambda, int z, int k,
                                 const std::vector<ExtraRow>& extra_rows) {
    require(lambda >= 0.0, "subsolution_lp needs lambda >= 0");
    require(z >= 0 && z < sys.states() && k >= 0 && k < sys.m, "(z, k) out of range");
    const int n_u = sys.unknowns();
    const int n_rows = measure_size(sys) + static_cast<int>(extra_rows.size());
    LPProblem p;
    p.A = Eigen::MatrixXd::Zero(n_rows, n_u);
    p.b = Eigen::VectorXd::Zero(n_rows);
    p.c = Eigen::VectorXd::Zero(n_u);
    p.c[sys.unknown(k, z)] = -1.0;
    p.sense.assign(n_rows, RowSense::Le);
    p.free.assign(n_u, true);
    MeasureVector layout = MeasureVector::zeros(sys, lambda);
    StencilRow row;
    for (int i = 0; i < sys.m; ++i)
        for (int x = 0; x < sys.states(); ++x)
            for (int a = 0; a < sys.control_count(i); ++a) {
                int r = layout.index(i, x, a);
                operator_row(sys, lambda, i, x, a, row);
                for (const auto& e : row) p.A(r, e.unknown) += e.coeff;
                p.b[r] = sys.cost_at(i, x, a);
            }
    int r = measure_size(sys);
    for (const auto& extra : extra_rows) {
        require(extra.nu.weights.size() == layout.weights.size(), "extra row has wrong layout");
        for (int i = 0; i < sys.m; ++i)
            for (int x = 0; x < sys.states(); ++x)
                for (int a = 0; a < sys.control_count(i); ++a)
                    p.A(r, sys.unknown(i, x)) += extra.nu(i, x, a);
        p.b[r++] = extra.bound;
    }

    SubsolutionResult out;
    out.lp = lp_solve(p);
    out.status = out.lp.status;
    if (out.status == LPStatus::Infeasible)
        throw Error(Errc::Infeasible, "subsolution LP has no feasible point");
    out.u = ValueField{sys.m, sys.states(), out.lp.x};
    if (out.status == LPStatus::Unbounded) {
        out.ray = ValueField{sys.m, sys.states(), out.lp.ray};
        out.value = std::numeric_limits<double>::infinity();
    } else {
        out.value = out.u(k, z);
    }
    return out;
}

void to_json(nlohmann::json& j, const DualityReport& r) {
    j = nlohmann::json{{"z", r.z},
                       {"k", r.k},
                       {"lambda", r.lambda},
                       {"solver_value", r.solver_value},
                       {"measure_value", r.measure_value},
                       {"subsolution_value", r.subsolution_value},
                       {"cs_residual", r.cs_residual},
                       {"spread", r.spread},
                       {"passed", r.passed}};
}

DualityReport duality_audit(const DiscreteSystem& sys, double lambda, int z, int k,
                            const ValueField* solved) {
    require(lambda > 0.0, "duality_audit needs lambda > 0");
    DualityReport r;
    r.z = z;
    r.k = k;
    r.lambda = lambda;
    if (solved) {
        r.solver_value = (*solved)(k, z);
    } else {
        r.solver_value = policy_iterate(sys, lambda, 1e-11).u(k, z);
    }
    GreenPoissonResult gp = green_poisson(sys, lambda, z, k);
    SubsolutionResult sub = subsolution_lp(sys, lambda, z, k);
    r.measure_value = gp.value;
    r.subsolution_value = sub.value;
    r.cs_residual = std::max(gp.lp.cs_residual, sub.lp.cs_residual);
    r.spread = std::max(std::abs(r.solver_value - r.measure_value),
                        std::abs(r.solver_value - r.subsolution_value));
    r.passed = sub.status == LPStatus::Optimal && r.spread <= kDualityTol;
    return r;
}

void to_json(nlohmann::json& j, const SupportReport& r) {
    auto entries = nlohmann::json::array();
    for (const auto& e : r.entries)
        entries.push_back({{"mode", e.mode}, {"x", e.x}, {"a", e.a}, {"weight", e.weight}});
    j = nlohmann::json{{"entries", std::move(entries)}, {"xi_min", r.xi_min},
                       {"xi_max", r.xi_max},           {"eta_min", r.eta_min},
                       {"eta_max", r.eta_max},         {"interior", r.interior},
                       {"mass_floor", r.mass_floor}};
}

SupportReport support_audit(const MeasureVector& mu, const DiscreteSystem& sys,
                            double mass_floor) {
    SupportReport r;
    r.mass_floor = mass_floor;
    r.xi_min.resize(sys.m);
    r.xi_max.resize(sys.m);
    r.eta_min.resize(sys.m);
    r.eta_max.resize(sys.m);
    const int n = sys.grid.n;
    for (int i = 0; i < sys.m; ++i) {
        std::vector<double> sample_lo(n, std::numeric_limits<double>::infinity());
        std::vector<double> sample_hi(n, -std::numeric_limits<double>::infinity());
        for (const auto& c : sys.controls.modes[i])
            for (int d = 0; d < n; ++d) {
                sample_lo[d] = std::min(sample_lo[d], c.xi[d]);
                sample_hi[d] = std::max(sample_hi[d], c.xi[d]);
            }
        for (int x = 0; x < sys.states(); ++x)
            for (int a = 0; a < sys.control_count(i); ++a) {
                double w = mu(i, x, a);
                if (w <= mass_floor) continue;
                r.entries.push_back({i, x, a, w});
                const Control& c = sys.control(i, a);
                if (r.xi_min[i].empty()) {
                    r.xi_min[i] = r.xi_max[i] = c.xi;
                    r.eta_min[i] = r.eta_max[i] = c.eta;
                }
                for (int d = 0; d < n; ++d) {
                    r.xi_min[i][d] = std::min(r.xi_min[i][d], c.xi[d]);
                    r.xi_max[i][d] = std::max(r.xi_max[i][d], c.xi[d]);
                }
                for (int j = 0; j < sys.m; ++j) {
                    r.eta_min[i][j] = std::min(r.eta_min[i][j], c.eta[j]);
                    r.eta_max[i][j] = std::max(r.eta_max[i][j], c.eta[j]);
                }
            }
        if (r.xi_min[i].empty()) continue;
        for (int d = 0; d < n; ++d)
            if (r.xi_min[i][d] <= sample_lo[d] || r.xi_max[i][d] >= sample_hi[d])
                r.interior = false;
    }
    return r;
}

} // namespace discountlab
