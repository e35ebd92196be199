#include "discountlab/instances.hpp"

#include <string>

#include "discountlab/error.hpp"
#include "discountlab/zoo.hpp"

namespace discountlab::instances {

namespace {

using EtaList = std::vector<std::vector<double>>;

std::vector<double> unit(int m, int i, double scale = 1.0) {
    std::vector<double> e(m, 0.0);
    e[i] = scale;
    return e;
}

DiscreteSystem build(const HamiltonianModel& model, const GridOptions& opts,
                     const std::function<std::vector<std::vector<double>>(int)>& etas,
                     std::string label) {
    TorusGrid grid = build_grid(opts.n, opts.N);
    ControlSet controls;
    for (int i = 0; i < model.m; ++i)
        controls.modes.push_back(
            sample_controls(model, i, opts.xi_radius, opts.xi_count, etas(i)));
    return assemble_system(model, grid, controls, nullptr, std::move(label));
}

} // namespace

DiscreteSystem constant_coupling(int N, int m) {
    auto model = zoo::constant_coupling(m, 1);
    return build(model, {1, N, 1.0, 3}, [m](int i) { return EtaList{unit(m, i)}; },
                 "constant-coupling");
}

DiscreteSystem quadratic_plc(int N, double xi_radius, int xi_count, double theta) {
    auto model = zoo::quadratic_plc(theta, 1);
    return build(model, {1, N, xi_radius, xi_count},
                 [theta](int i) {
                     std::vector<double> e = unit(2, i, theta);
                     e[1 - i] = -theta;
                     return EtaList{{0.0, 0.0}, e};
                 },
                 "quadratic-plc");
}

DiscreteSystem linear_b(const std::vector<std::vector<double>>& B, int N, double xi_radius,
                        int xi_count) {
    auto model = zoo::linear_b(B, 1);
    return build(model, {1, N, xi_radius, xi_count}, [&B](int i) { return EtaList{B[i]}; },
                 "linear-B");
}

DiscreteSystem eikonal(int N, std::function<double(ConstSpan)> f, int xi_count) {
    if (!f) f = zoo::default_eikonal_potential;
    auto model = zoo::eikonal_f(std::move(f), 1);
    return build(model, {1, N, 1.0, xi_count}, [](int) { return EtaList{{0.0}}; },
                 "eikonal-f");
}

GridOptions default_options(std::string_view id) {
    if (id == zoo::kConstantCoupling) return {1, 4, 1.0, 3};
    if (id == zoo::kQuadraticPlc || id == zoo::kLinearB) return {1, 8, 2.0, 9};
    if (id == zoo::kEikonalF) return {1, 32, 1.0, 3};
    throw Error(Errc::BadValue, "unknown zoo id '" + std::string(id) + "'");
}

DiscreteSystem from_zoo(std::string_view id, const GridOptions& opts) {
    auto model = zoo::make(id, opts.n);
    if (id == zoo::kConstantCoupling)
        return build(model, opts, [&](int i) { return EtaList{unit(model.m, i)}; },
                     std::string(id));
    if (id == zoo::kQuadraticPlc)
        return build(model, opts,
                     [](int i) {
                         std::vector<double> e = unit(2, i);
                         e[1 - i] = -1.0;
                         return EtaList{{0.0, 0.0}, e};
                     },
                     std::string(id));
    if (id == zoo::kLinearB)
        return build(model, opts,
                     [](int i) {
                         return i == 0 ? EtaList{{1.0, -1.0}} : EtaList{{-1.0, 1.0}};
                     },
                     std::string(id));
    if (id == zoo::kEikonalF)
        return build(model, opts, [](int) { return EtaList{{0.0}}; },
                     std::string(id));
    throw Error(Errc::BadValue, "unknown zoo id '" + std::string(id) + "'");
}

} // namespace discountlab::instances
