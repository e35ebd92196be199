#include "discountlab/zoo.hpp"

#include <cmath>
#include <numbers>

#include "discountlab/error.hpp"

namespace discountlab::zoo {

namespace {

double norm(ConstSpan v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}

bool is_zero(ConstSpan v) {
    for (double c : v)
        if (c != 0.0) return false;
    return true;
}

} // namespace

const std::vector<Entry>& catalog() {
    static const std::vector<Entry> entries{
        {kConstantCoupling, "H_i = |p| + u_i + 1 (m=2); closed-form solution -1/(1+lambda)"},
        {kLinearB, "H_i = |p|^2/2 - V_i(x) + (Bu)_i with B = [[1,-1],[-1,1]]"},
        {kQuadraticPlc, "H_i = |p|^2/2 - V_i(x) + theta*max(u_i - u_j, 0), theta = 1"},
        {kEikonalF, "H = |p| - f(x), f = 2 + cos(2 pi x); ergodic constant -min f"},
    };
    return entries;
}

double default_eikonal_potential(ConstSpan x) {
    double s = 0.0;
    for (double xd : x) s += std::cos(2.0 * std::numbers::pi * xd);
    return 2.0 + s / static_cast<double>(x.size());
}

double bump_potential(ConstSpan x, int mode, int m) {
    double s = 0.0;
    double centre = static_cast<double>(mode) / m;
    for (double xd : x) s += 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * (xd - centre)));
    return s / static_cast<double>(x.size());
}

HamiltonianModel constant_coupling(int m, int n) {
    HamiltonianModel model;
    model.m = m;
    model.n = n;
    model.zoo_id = std::string(kConstantCoupling);
    model.H = [](ConstSpan, int i, ConstSpan p, ConstSpan u) { return norm(p) + u[i] + 1.0; };
    model.lagrangian_hint = [](ConstSpan, int i, ConstSpan xi,
                               ConstSpan eta) -> std::optional<double> {
        if (norm(xi) > 1.0) return std::nullopt;
        for (std::size_t j = 0; j < eta.size(); ++j)
            if (eta[j] != (static_cast<int>(j) == i ? 1.0 : 0.0)) return std::nullopt;
        return -1.0;
    };
    return model;
}

HamiltonianModel linear_b(std::vector<std::vector<double>> B, int n) {
    const int m = static_cast<int>(B.size());
    for (const auto& row : B)
        if (static_cast<int>(row.size()) != m) throw Error(Errc::BadValue, "B must be square");
    HamiltonianModel model;
    model.m = m;
    model.n = n;
    model.zoo_id = std::string(kLinearB);
    model.H = [B, m](ConstSpan x, int i, ConstSpan p, ConstSpan u) {
        double q = norm(p);
        double coupling = 0.0;
        for (int j = 0; j < m; ++j) coupling += B[i][j] * u[j];
        return 0.5 * q * q - bump_potential(x, i, m) + coupling;
    };
    model.lagrangian_hint = [B, m](ConstSpan x, int i, ConstSpan xi,
                                   ConstSpan eta) -> std::optional<double> {
        for (int j = 0; j < m; ++j)
            if (eta[j] != B[i][j]) return std::nullopt;
        double q = norm(xi);
        return 0.5 * q * q + bump_potential(x, i, m);
    };
    return model;
}

HamiltonianModel quadratic_plc(double theta, int n) {
    HamiltonianModel model;
    model.m = 2;
    model.n = n;
    model.zoo_id = std::string(kQuadraticPlc);
    model.H = [theta](ConstSpan x, int i, ConstSpan p, ConstSpan u) {
        double q = norm(p);
        int j = 1 - i;
        return 0.5 * q * q - bump_potential(x, i, 2) + theta * std::max(u[i] - u[j], 0.0);
    };
    model.lagrangian_hint = [theta](ConstSpan x, int i, ConstSpan xi,
                                    ConstSpan eta) -> std::optional<double> {
        int j = 1 - i;
        // eta = s * theta * (e_i - e_j) with s in [0, 1]
        if (eta[i] != -eta[j] || eta[i] < 0.0 || eta[i] > theta) return std::nullopt;
        double q = norm(xi);
        return 0.5 * q * q + bump_potential(x, i, 2);
    };
    return model;
}

HamiltonianModel eikonal_f(std::function<double(ConstSpan)> f, int n) {
    HamiltonianModel model;
    model.m = 1;
    model.n = n;
    model.zoo_id = std::string(kEikonalF);
    model.H = [f](ConstSpan x, int, ConstSpan p, ConstSpan) { return norm(p) - f(x); };
    model.lagrangian_hint = [f](ConstSpan x, int, ConstSpan xi,
                                ConstSpan eta) -> std::optional<double> {
        if (norm(xi) > 1.0 || !is_zero(eta)) return std::nullopt;
        return f(x);
    };
    return model;
}

HamiltonianModel make(std::string_view id, int n) {
    if (id == kConstantCoupling) return constant_coupling(2, n);
    if (id == kLinearB) return linear_b({{1.0, -1.0}, {-1.0, 1.0}}, n);
    if (id == kQuadraticPlc) return quadratic_plc(1.0, n);
    if (id == kEikonalF) return eikonal_f(default_eikonal_potential, n);
    throw Error(Errc::BadValue, "unknown zoo id '" + std::string(id) + "'");
}

} // namespace discountlab::zoo
