#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "discountlab/model.hpp"

namespace discountlab {

/// Uniform periodic grid on the unit n-torus, N points per dimension.
struct TorusGrid {
    int n = 1;
    int N = 2;
    double delta = 0.5;

    int size() const { return n == 1 ? N : N * N; }
    std::array<int, 2> coords(int index) const { return {index % N, index / N}; }
    int index(int i0, int i1 = 0) const { return i0 + N * i1; }
    /// Neighbour one step along dimension d (step = +1 or -1), wrapping.
    int neighbor(int index, int d, int step) const;
    std::vector<double> point(int index) const;
};

TorusGrid build_grid(int n, int N);

struct Control {
    std::vector<double> xi;  // drift, length n
    std::vector<double> eta; // coupling covector, length m
    std::string label;
};

/// Finite control list per mode.
struct ControlSet {
    std::vector<std::vector<Control>> modes;
};

/// Symmetric uniform grid of [-radius, radius]^n with `count` points per
/// dimension (odd, so 0 is included), crossed with eta_spec. Every eta must
/// lie in the coupling cone of `mode` (EtaOutsideY), and the model's closed
/// form or `table` must provide a cost (MissingCost).
std::vector<Control> sample_controls(const HamiltonianModel& model, int mode, double xi_radius,
                                     int xi_count,
                                     const std::vector<std::vector<double>>& eta_spec,
                                     const LagrangianTable* table = nullptr);

/// The exact finite monotone system: grid, controls, finite costs L_i(x, a).
struct DiscreteSystem {
    TorusGrid grid;
    int m = 1;
    ControlSet controls;
    /// cost[i][x * controls(i) + a]
    std::vector<std::vector<double>> cost;
    std::string label;
    double drift_bound = 0.0;

    int states() const { return grid.size(); }
    int unknowns() const { return m * grid.size(); }
    int control_count(int mode) const { return static_cast<int>(controls.modes[mode].size()); }
    int unknown(int mode, int x) const { return mode * grid.size() + x; }
    double cost_at(int mode, int x, int a) const { return cost[mode][x * control_count(mode) + a]; }
    const Control& control(int mode, int a) const { return controls.modes[mode][a]; }
};

/// Grid function u_i(x), stored mode-major.
struct ValueField {
    int m = 0;
    int states = 0;
    Eigen::VectorXd values;

    static ValueField constant(const DiscreteSystem& sys, double c);
    double operator()(int mode, int x) const { return values[mode * states + x]; }
    double& operator()(int mode, int x) { return values[mode * states + x]; }
};

/// Chosen control index per (mode, state).
struct Policy {
    int m = 0;
    int states = 0;
    std::vector<int> choice;

    static Policy constant(const DiscreteSystem& sys, int a);
    int operator()(int mode, int x) const { return choice[mode * states + x]; }
    int& operator()(int mode, int x) { return choice[mode * states + x]; }
    bool operator==(const Policy&) const = default;
};

struct StencilEntry {
    int unknown;
    double coeff;
};
using StencilRow = std::vector<StencilEntry>;

/// Coefficients of lambda*u_i(x) + xi_a . D_h u_i(x) in the unknowns; the
/// first entry is the diagonal.
void drift_row(const DiscreteSystem& sys, double lambda, int mode, int x, int a, StencilRow& out);

/// Coefficients of lambda*u_i(x) + xi_a . D_h u_i(x) + eta_a . u(x) in the
/// unknowns. This is the single code path shared by the solvers and by the
/// closed-measure constraint assembly. The first entry is the diagonal.
void operator_row(const DiscreteSystem& sys, double lambda, int mode, int x, int a,
                  StencilRow& out);

/// sum_d xi_d D_d u_i(x): backward difference where xi_d > 0, forward
/// difference otherwise, periodic wrap.
double upwind_directional(const ValueField& u, const TorusGrid& grid, int mode, int x,
                          ConstSpan xi);

/// lambda*u_i(x) + max_a [xi_a . D_h u_i(x) + eta_a . u(x) - L_i(x, a)].
/// Ties in the max go to the lowest control index; the maximisers are written
/// to `argmax` when given.
ValueField bellman_residual(const DiscreteSystem& sys, double lambda, const ValueField& u,
                            Policy* argmax = nullptr);

/// Materialises costs on the grid (closed-form hint first, then table) and
/// verifies the monotone-scheme certificate.
DiscreteSystem assemble_system(const HamiltonianModel& model, const TorusGrid& grid,
                               const ControlSet& controls, const LagrangianTable* table = nullptr,
                               std::string label = {});

struct MonotoneCertificate {
    bool holds = true;
    double min_diagonal_margin = 0.0; // min over rows of (diagonal - lambda)
    double min_row_sum_margin = 0.0;  // min over rows of (row sum - lambda)
    double max_offdiagonal = 0.0;     // largest off-diagonal coefficient (must be <= 0)
};

/// Checks, for every (i, x, a), that the operator row has diagonal >= lambda,
/// off-diagonals <= 0 and row sum >= lambda.
MonotoneCertificate certify_monotone(const DiscreteSystem& sys, double lambda);

/// Re-verifies every DiscreteSystem invariant; throws EtaOutsideY,
/// MissingCost or BadSystemFile.
void validate(const DiscreteSystem& sys);

/// Adds c_i to every cost of mode i (H_i -> H_i - c_i).
DiscreteSystem shift_costs(const DiscreteSystem& sys, const std::vector<double>& c);

/// max_i,x,a |stencil row| in the l1 sense at lambda = 0.
double stencil_norm(const DiscreteSystem& sys);

void to_json(nlohmann::json& j, const DiscreteSystem& sys);
/// Parses and re-verifies; throws BadSystemFile, EtaOutsideY or MissingCost.
DiscreteSystem system_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const ValueField& u);
void to_json(nlohmann::json& j, const Policy& pi);

} // namespace discountlab
