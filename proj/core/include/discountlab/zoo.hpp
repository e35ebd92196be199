#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "discountlab/model.hpp"

namespace discountlab::zoo {

inline constexpr std::string_view kConstantCoupling = "constant-coupling";
inline constexpr std::string_view kLinearB = "linear-B";
inline constexpr std::string_view kQuadraticPlc = "quadratic-plc";
inline constexpr std::string_view kEikonalF = "eikonal-f";

struct Entry {
    std::string_view id;
    std::string_view summary;
};

const std::vector<Entry>& catalog();

/// H_i = |p| + u_i + 1. L_i = -1 on {|xi| <= 1} x {e_i}, +inf elsewhere.
HamiltonianModel constant_coupling(int m = 2, int n = 1);

/// H_i = |p|^2/2 - V_i(x) + (B u)_i with the bump potential V_i of mode i.
/// L_i = |xi|^2/2 + V_i(x) at eta = row i of B, +inf elsewhere.
HamiltonianModel linear_b(std::vector<std::vector<double>> B, int n = 1);

/// Two modes, H_i = |p|^2/2 - V_i(x) + theta * max(u_i - u_j, 0).
/// L_i = |xi|^2/2 + V_i(x) for eta = s * theta * (e_i - e_j), s in [0,1].
HamiltonianModel quadratic_plc(double theta = 1.0, int n = 1);

/// One mode, H = |p| - f(x). L = f(x) on {|xi| <= 1} x {0}.
HamiltonianModel eikonal_f(std::function<double(ConstSpan)> f, int n = 1);

/// f(x) = 2 + mean_d cos(2 pi x_d); min f = 1, max f = 3.
double default_eikonal_potential(ConstSpan x);

/// V_i(x) = mean_d (1 - cos 2 pi (x_d - i/m)) / 2, vanishing at x = i/m.
double bump_potential(ConstSpan x, int mode, int m);

/// Zoo model with default parameters; throws BadValue for unknown ids.
HamiltonianModel make(std::string_view id, int n = 1);

} // namespace discountlab::zoo
