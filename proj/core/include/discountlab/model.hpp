#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace discountlab {

using ConstSpan = std::span<const double>;

/// H_i(x, p, u) for x on the unit torus, mode i in [0, m), p in R^n, u in R^m.
using HamiltonianFn = std::function<double(ConstSpan x, int mode, ConstSpan p, ConstSpan u)>;

/// Closed-form L_i(x, xi, eta). Returns nullopt where L_i is +infinity.
using LagrangianFn =
    std::function<std::optional<double>(ConstSpan x, int mode, ConstSpan xi, ConstSpan eta)>;

/// A weakly coupled system of m Hamiltonians on the n-torus. Modes are
/// 0-based throughout the library.
struct HamiltonianModel {
    int m = 1;
    int n = 1;
    HamiltonianFn H;
    LagrangianFn lagrangian_hint; // empty when no closed form is known
    std::string zoo_id;           // empty for ad-hoc models

    double operator()(ConstSpan x, int mode, ConstSpan p, ConstSpan u) const {
        return H(x, mode, p, u);
    }
};

/// True iff eta lies in the admissible coupling cone of `mode`: every
/// off-mode component is <= 0 and the components sum to >= 0. Exact test.
bool in_coupling_cone(int mode, ConstSpan eta);

// ---------------------------------------------------------------------------
// Structural checks

inline constexpr double kStructureTolerance = 1e-9;

struct Witness {
    std::vector<double> x;
    int mode = -1;
    std::vector<double> p;
    std::vector<double> u;
    std::vector<double> v;
    std::map<std::string, double> metrics;
};

struct StructureReport {
    std::string check_name;
    bool passed = true;
    double worst_violation = 0.0;
    double tolerance = kStructureTolerance;
    Witness witness;
    std::size_t samples_used = 0;
};

void to_json(nlohmann::json& j, const StructureReport& r);

/// Samples (x, p, v, k, delta) with delta_k = max_i delta_i >= 0 and checks
/// H_k(x,p,v+delta) >= H_k(x,p,v), plus both one-sided shift inequalities
/// for random alpha >= 0.
StructureReport check_monotone(const HamiltonianModel& model, std::size_t sample_count,
                               std::uint64_t seed);

/// Midpoint convexity of H_i in (p, u) on random pairs.
StructureReport check_convex(const HamiltonianModel& model, std::size_t sample_count,
                             std::uint64_t seed);

/// |H_i(x,p,v+tc) - H_i(x,p,v)| <= 1e-9 for t in {-1, 0.5, 2}.
StructureReport check_shift_invariance(const HamiltonianModel& model, ConstSpan c,
                                       std::size_t sample_count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Coercivity constants

struct CoercivityProfile {
    double R = 0.0;
    /// (r, alpha_R(r)) with r ascending; alpha is nondecreasing.
    std::vector<std::pair<double, double>> alpha;
    double beta = 0.0;
};

/// alpha_R(r): min of H_i over x, u in the Euclidean R-ball and |p| = r, made
/// monotone by taking the suffix minimum over the stored radii. beta_R: max of
/// H_i(x, 0, u) over the same x, u samples. `sample_density` Halton samples
/// per (mode, radius).
CoercivityProfile coercivity_profile(const HamiltonianModel& model, double R,
                                     const std::vector<double>& radii,
                                     std::size_t sample_density, std::uint64_t seed = 7);

/// beta_R < alpha_R(2R / sqrt(n)), reading alpha at the largest stored radius
/// not above the threshold. Throws MissingRadius when the table does not
/// bracket the threshold.
bool check_erg_condition(const CoercivityProfile& profile, int n);

// ---------------------------------------------------------------------------
// Legendre-Fenchel transform

inline constexpr double kDefaultClipBound = 1e12;

/// Tensor grid over [-p_radius, p_radius]^n x [-u_radius, u_radius]^m.
struct SearchBox {
    double p_radius = 1.0;
    double u_radius = 1.0;
    int points_per_dim = 41;
};

/// Radius max(2 max|xi|, 2 max|eta|) * scale for both p and u.
SearchBox default_search_box(const std::vector<std::vector<double>>& xi_grid,
                             const std::vector<std::vector<double>>& eta_grid,
                             int points_per_dim, double scale = 1.0);

struct LagrangianEntry {
    double value = kDefaultClipBound;
    bool is_infinite = true;
};

/// L_i(x, ., .) on a (xi, eta) grid at one torus point.
struct LagrangianSlice {
    int mode = 0;
    std::vector<double> x;
    std::vector<std::vector<double>> xi_grid;
    std::vector<std::vector<double>> eta_grid;
    std::vector<LagrangianEntry> entries; // [xi_index * eta_count + eta_index]

    const LagrangianEntry& at(std::size_t xi_index, std::size_t eta_index) const {
        return entries[xi_index * eta_grid.size() + eta_index];
    }
    LagrangianEntry& at(std::size_t xi_index, std::size_t eta_index) {
        return entries[xi_index * eta_grid.size() + eta_index];
    }
};

struct LagrangianTable {
    int m = 1;
    int n = 1;
    double clip_bound = kDefaultClipBound;
    std::vector<LagrangianSlice> slices;

    /// Finite value at an exactly matching (mode, x, xi, eta), if any.
    std::optional<double> lookup(int mode, ConstSpan x, ConstSpan xi, ConstSpan eta) const;
};

/// L_i(x, xi, eta) = max over the search grid of xi.p + eta.u - H_i(x,p,u).
/// Entries with eta outside the coupling cone are forced to +infinity without
/// search. A supremum that is still growing on the boundary of the search box
/// (boundary maximum strictly above the interior maximum) or that exceeds
/// clip_bound is reported as +infinity.
LagrangianSlice legendre_transform(const HamiltonianModel& model, int mode, ConstSpan x,
                                   const std::vector<std::vector<double>>& xi_grid,
                                   const std::vector<std::vector<double>>& eta_grid,
                                   const SearchBox& box, double clip_bound = kDefaultClipBound);

/// One slice per (mode, x). eta_grids[i] is used for mode i.
LagrangianTable build_lagrangian_table(const HamiltonianModel& model,
                                       const std::vector<std::vector<double>>& xs,
                                       const std::vector<std::vector<double>>& xi_grid,
                                       const std::vector<std::vector<std::vector<double>>>& eta_grids,
                                       const SearchBox& box, double clip_bound = kDefaultClipBound);

/// Fenchel-Young on every finite entry and recovery of H as the max of the
/// table's affine minorants at sampled (p, u) with |p_d| <= p_radius,
/// |u_j| <= u_radius. Passes iff Fenchel-Young holds to 1e-9 and the recovery
/// gap is at most recovery_tol. The witness metrics carry both errors.
StructureReport fenchel_equality_check(const HamiltonianModel& model,
                                       const LagrangianTable& table, std::size_t sample_count,
                                       double recovery_tol, double p_radius, double u_radius,
                                       std::uint64_t seed = 11);

/// Every finite entry has eta in the coupling cone of its mode (exact).
StructureReport check_domain_Yi(const LagrangianTable& table);

} // namespace discountlab
