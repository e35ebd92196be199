#pragma once

#include <functional>
#include <string_view>

#include "discountlab/discretize.hpp"

namespace discountlab::instances {

struct GridOptions {
    int n = 1;
    int N = 8;
    double xi_radius = 1.0;
    int xi_count = 3;
};

/// constant-coupling, eta = e_i.
DiscreteSystem constant_coupling(int N = 4, int m = 2);

/// quadratic-plc with eta in {0, theta (e_i - e_j)}.
DiscreteSystem quadratic_plc(int N = 8, double xi_radius = 2.0, int xi_count = 9,
                             double theta = 1.0);

/// linear-B with eta = row i of B.
DiscreteSystem linear_b(const std::vector<std::vector<double>>& B, int N = 8,
                        double xi_radius = 2.0, int xi_count = 9);

/// eikonal H = |p| - f with xi on [-1, 1] and eta = 0.
DiscreteSystem eikonal(int N, std::function<double(ConstSpan)> f = {}, int xi_count = 3);

/// Zoo model by id on the given grid, using the eta sets above.
DiscreteSystem from_zoo(std::string_view id, const GridOptions& opts);

/// Default grid for each zoo id.
GridOptions default_options(std::string_view id);

} // namespace discountlab::instances
