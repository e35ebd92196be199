#include "discountlab/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "discountlab/error.hpp"

namespace discountlab {

int TorusGrid::neighbor(int index, int d, int step) const {
    auto c = coords(index);
    c[d] = (c[d] + step + N) % N;
    return n == 1 ? c[0] : this->index(c[0], c[1]);
}

std::vector<double> TorusGrid::point(int index) const {
    auto c = coords(index);
    std::vector<double> x(n);
    for (int d = 0; d < n; ++d) x[d] = c[d] * delta;
    return x;
}

TorusGrid build_grid(int n, int N) {
    if (n != 1 && n != 2) throw Error(Errc::BadDimension, "grid dimension must be 1 or 2");
    if (N < 2) throw Error(Errc::BadResolution, "grid needs N >= 2");
    return TorusGrid{n, N, 1.0 / N};
}

ValueField ValueField::constant(const DiscreteSystem& sys, double c) {
    return ValueField{sys.m, sys.states(), Eigen::VectorXd::Constant(sys.unknowns(), c)};
}

Policy Policy::constant(const DiscreteSystem& sys, int a) {
    return Policy{sys.m, sys.states(), std::vector<int>(sys.unknowns(), a)};
}

namespace {

std::string describe(const std::vector<double>& v) {
    std::ostringstream os;
    os << '(';
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
    os << ')';
    return os.str();
}

std::vector<double> axis(double radius, int count) {
    if (count == 1) return {0.0};
    std::vector<double> out(count);
    int half = count / 2;
    for (int k = 0; k < count; ++k) {
        // Exact zero at the centre; symmetric by construction.
        out[k] = radius * static_cast<double>(k - half) / half;
    }
    return out;
}

std::optional<double> cost_from(const HamiltonianModel& model, const LagrangianTable* table,
                                int mode, ConstSpan x, const Control& c) {
    if (model.lagrangian_hint) return model.lagrangian_hint(x, mode, c.xi, c.eta);
    if (table) return table->lookup(mode, x, c.xi, c.eta);
    return std::nullopt;
}

} // namespace

std::vector<Control> sample_controls(const HamiltonianModel& model, int mode, double xi_radius,
                                     int xi_count,
                                     const std::vector<std::vector<double>>& eta_spec,
                                     const LagrangianTable* table) {
    require(mode >= 0 && mode < model.m, "mode out of range");
    require(xi_count >= 1 && xi_count % 2 == 1, "xi_count must be odd so the grid contains 0");
    require(xi_radius >= 0.0, "xi_radius must be nonnegative");
    require(!eta_spec.empty(), "eta_spec must be nonempty");
    for (const auto& eta : eta_spec) {
        if (static_cast<int>(eta.size()) != model.m)
            throw Error(Errc::BadValue, "eta has wrong length");
        if (!in_coupling_cone(mode, eta))
            throw Error(Errc::EtaOutsideY,
                        "eta " + describe(eta) + " not admissible for mode " + std::to_string(mode));
    }
    if (!model.lagrangian_hint && !table)
        throw Error(Errc::MissingCost, "no closed-form Lagrangian and no table");

    auto ax = axis(xi_radius, xi_count);
    std::vector<std::vector<double>> xis;
    if (model.n == 1) {
        for (double a : ax) xis.push_back({a});
    } else {
        for (double b : ax)
            for (double a : ax) xis.push_back({a, b});
    }

    std::vector<Control> out;
    for (const auto& eta : eta_spec) {
        for (const auto& xi : xis) {
            Control c{xi, eta, "xi=" + describe(xi) + " eta=" + describe(eta)};
            bool covered = false;
            if (model.lagrangian_hint) {
                covered = true;
            } else {
                for (const auto& slice : table->slices) {
                    if (slice.mode == mode && table->lookup(mode, slice.x, xi, eta)) {
                        covered = true;
                        break;
                    }
                }
            }
            if (!covered) throw Error(Errc::MissingCost, "no finite cost for " + c.label);
            out.push_back(std::move(c));
        }
    }
    return out;
}

void drift_row(const DiscreteSystem& sys, double lambda, int mode, int x, int a, StencilRow& out) {
    const auto& c = sys.control(mode, a);
    const auto& g = sys.grid;
    out.clear();
    double diag = lambda;
    for (int d = 0; d < g.n; ++d) diag += std::abs(c.xi[d]) / g.delta;
    out.push_back({sys.unknown(mode, x), diag});
    for (int d = 0; d < g.n; ++d) {
        double xi = c.xi[d];
        if (xi > 0.0)
            out.push_back({sys.unknown(mode, g.neighbor(x, d, -1)), -xi / g.delta});
        else if (xi < 0.0)
            out.push_back({sys.unknown(mode, g.neighbor(x, d, +1)), xi / g.delta});
    }
}

void operator_row(const DiscreteSystem& sys, double lambda, int mode, int x, int a,
                  StencilRow& out) {
    drift_row(sys, lambda, mode, x, a, out);
    const auto& c = sys.control(mode, a);
    out.front().coeff += c.eta[mode];
    for (int j = 0; j < sys.m; ++j)
        if (j != mode && c.eta[j] != 0.0) out.push_back({sys.unknown(j, x), c.eta[j]});
}

double upwind_directional(const ValueField& u, const TorusGrid& grid, int mode, int x,
                          ConstSpan xi) {
    double s = 0.0;
    const double here = u(mode, x);
    for (int d = 0; d < grid.n; ++d) {
        if (xi[d] > 0.0)
            s += xi[d] * (here - u(mode, grid.neighbor(x, d, -1))) / grid.delta;
        else
            s += xi[d] * (u(mode, grid.neighbor(x, d, +1)) - here) / grid.delta;
    }
    return s;
}

ValueField bellman_residual(const DiscreteSystem& sys, double lambda, const ValueField& u,
                            Policy* argmax) {
    ValueField r = ValueField::constant(sys, 0.0);
    if (argmax) *argmax = Policy::constant(sys, 0);
    for (int i = 0; i < sys.m; ++i) {
        for (int x = 0; x < sys.states(); ++x) {
            double best = -std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int a = 0; a < sys.control_count(i); ++a) {
                const auto& c = sys.control(i, a);
                double coupling = 0.0;
                for (int j = 0; j < sys.m; ++j) coupling += c.eta[j] * u(j, x);
                double val = upwind_directional(u, sys.grid, i, x, c.xi) + coupling -
                             sys.cost_at(i, x, a);
                if (val > best) {
                    best = val;
                    best_a = a;
                }
            }
            r(i, x) = lambda * u(i, x) + best;
            if (argmax) (*argmax)(i, x) = best_a;
        }
    }
    return r;
}

void validate(const DiscreteSystem& sys) {
    if (sys.m < 1) throw Error(Errc::BadSystemFile, "system needs m >= 1");
    if (static_cast<int>(sys.controls.modes.size()) != sys.m ||
        static_cast<int>(sys.cost.size()) != sys.m)
        throw Error(Errc::MissingCost, "controls/costs must cover every mode");
    for (int i = 0; i < sys.m; ++i) {
        if (sys.controls.modes[i].empty())
            throw Error(Errc::MissingCost, "mode " + std::to_string(i) + " has no controls");
        if (static_cast<int>(sys.cost[i].size()) != sys.states() * sys.control_count(i))
            throw Error(Errc::BadSystemFile, "cost tensor has wrong size");
        for (const auto& c : sys.controls.modes[i]) {
            if (static_cast<int>(c.xi.size()) != sys.grid.n ||
                static_cast<int>(c.eta.size()) != sys.m)
                throw Error(Errc::BadSystemFile, "control has wrong dimensions");
            if (!in_coupling_cone(i, c.eta))
                throw Error(Errc::EtaOutsideY, "control " + c.label + " violates the cone");
        }
        for (double v : sys.cost[i])
            if (!std::isfinite(v)) throw Error(Errc::MissingCost, "non-finite cost");
    }
}

DiscreteSystem assemble_system(const HamiltonianModel& model, const TorusGrid& grid,
                               const ControlSet& controls, const LagrangianTable* table,
                               std::string label) {
    if (static_cast<int>(controls.modes.size()) < model.m)
        throw Error(Errc::MissingCost, "controls do not cover every mode");
    DiscreteSystem sys;
    sys.grid = grid;
    sys.m = model.m;
    sys.controls = controls;
    sys.controls.modes.resize(model.m);
    sys.label = label.empty() ? model.zoo_id : std::move(label);
    sys.cost.resize(model.m);
    for (int i = 0; i < model.m; ++i) {
        const auto& list = sys.controls.modes[i];
        if (list.empty())
            throw Error(Errc::MissingCost, "no controls for mode " + std::to_string(i));
        sys.cost[i].resize(static_cast<std::size_t>(grid.size()) * list.size());
        for (int x = 0; x < grid.size(); ++x) {
            auto pt = grid.point(x);
            for (std::size_t a = 0; a < list.size(); ++a) {
                if (!in_coupling_cone(i, list[a].eta))
                    throw Error(Errc::EtaOutsideY, "control " + list[a].label);
                auto v = cost_from(model, table, i, pt, list[a]);
                if (!v || !std::isfinite(*v) || (table && *v >= table->clip_bound))
                    throw Error(Errc::MissingCost, "infinite or missing cost for " +
                                                       list[a].label + " at x=" + describe(pt));
                sys.cost[i][x * list.size() + a] = *v;
            }
        }
        for (const auto& c : list)
            for (double v : c.xi) sys.drift_bound = std::max(sys.drift_bound, std::abs(v));
    }
    validate(sys);
    if (!certify_monotone(sys, 0.0).holds)
        throw Error(Errc::EtaOutsideY, "monotone-scheme certificate fails");
    return sys;
}

MonotoneCertificate certify_monotone(const DiscreteSystem& sys, double lambda) {
    MonotoneCertificate cert;
    cert.min_diagonal_margin = std::numeric_limits<double>::infinity();
    cert.min_row_sum_margin = std::numeric_limits<double>::infinity();
    cert.max_offdiagonal = -std::numeric_limits<double>::infinity();
    StencilRow row;
    for (int i = 0; i < sys.m; ++i) {
        for (int x = 0; x < sys.states(); ++x) {
            for (int a = 0; a < sys.control_count(i); ++a) {
                operator_row(sys, lambda, i, x, a, row);
                double diag = 0.0, sum = 0.0;
                for (const auto& e : row) {
                    sum += e.coeff;
                    if (e.unknown == sys.unknown(i, x)) {
                        diag += e.coeff;
                    } else {
                        cert.max_offdiagonal = std::max(cert.max_offdiagonal, e.coeff);
                    }
                }
                cert.min_diagonal_margin = std::min(cert.min_diagonal_margin, diag - lambda);
                cert.min_row_sum_margin = std::min(cert.min_row_sum_margin, sum - lambda);
            }
        }
    }
    if (cert.max_offdiagonal == -std::numeric_limits<double>::infinity()) cert.max_offdiagonal = 0;
    // Row sums equal lambda + sum_j eta_j exactly in exact arithmetic; allow the
    // rounding of the |xi|/delta terms that cancel.
    double slack = 1e-12 * (1.0 + stencil_norm(sys));
    cert.holds = cert.min_diagonal_margin >= 0.0 && cert.max_offdiagonal <= 0.0 &&
                 cert.min_row_sum_margin >= -slack;
    return cert;
}

DiscreteSystem shift_costs(const DiscreteSystem& sys, const std::vector<double>& c) {
    require(static_cast<int>(c.size()) == sys.m, "shift needs one constant per mode");
    DiscreteSystem out = sys;
    for (int i = 0; i < sys.m; ++i)
        for (auto& v : out.cost[i]) v += c[i];
    return out;
}

double stencil_norm(const DiscreteSystem& sys) {
    double best = 0.0;
    StencilRow row;
    for (int i = 0; i < sys.m; ++i)
        for (int a = 0; a < sys.control_count(i); ++a) {
            operator_row(sys, 0.0, i, 0, a, row);
            double s = 0.0;
            for (const auto& e : row) s += std::abs(e.coeff);
            best = std::max(best, s);
        }
    return best;
}

void to_json(nlohmann::json& j, const DiscreteSystem& sys) {
    nlohmann::json controls = nlohmann::json::array();
    for (int i = 0; i < sys.m; ++i)
        for (const auto& c : sys.controls.modes[i])
            controls.push_back({{"mode", i}, {"xi", c.xi}, {"eta", c.eta}});
    std::vector<double> cost;
    for (int i = 0; i < sys.m; ++i) cost.insert(cost.end(), sys.cost[i].begin(), sys.cost[i].end());
    j = nlohmann::json{{"label", sys.label},       {"n", sys.grid.n}, {"N", sys.grid.N},
                       {"m", sys.m},               {"controls", controls},
                       {"cost", cost}};
}

DiscreteSystem system_from_json(const nlohmann::json& j) {
    DiscreteSystem sys;
    try {
        sys.grid = build_grid(j.at("n").get<int>(), j.at("N").get<int>());
        sys.m = j.at("m").get<int>();
        sys.label = j.value("label", std::string{});
        if (sys.m < 1) throw Error(Errc::BadSystemFile, "m must be >= 1");
        sys.controls.modes.resize(sys.m);
        for (const auto& c : j.at("controls")) {
            int mode = c.at("mode").get<int>();
            if (mode < 0 || mode >= sys.m) throw Error(Errc::BadSystemFile, "control mode out of range");
            Control ctl{c.at("xi").get<std::vector<double>>(), c.at("eta").get<std::vector<double>>(),
                        {}};
            ctl.label = "xi=" + describe(ctl.xi) + " eta=" + describe(ctl.eta);
            sys.controls.modes[mode].push_back(std::move(ctl));
        }
        auto flat = j.at("cost").get<std::vector<double>>();
        std::size_t cursor = 0;
        sys.cost.resize(sys.m);
        for (int i = 0; i < sys.m; ++i) {
            std::size_t len = static_cast<std::size_t>(sys.states()) * sys.controls.modes[i].size();
            if (cursor + len > flat.size()) throw Error(Errc::BadSystemFile, "cost array too short");
            sys.cost[i].assign(flat.begin() + cursor, flat.begin() + cursor + len);
            cursor += len;
        }
        if (cursor != flat.size()) throw Error(Errc::BadSystemFile, "cost array too long");
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::BadSystemFile, e.what());
    }
    for (int i = 0; i < sys.m; ++i)
        for (const auto& c : sys.controls.modes[i])
            for (double v : c.xi) sys.drift_bound = std::max(sys.drift_bound, std::abs(v));
    validate(sys);
    if (!certify_monotone(sys, 0.0).holds)
        throw Error(Errc::EtaOutsideY, "monotone-scheme certificate fails");
    return sys;
}

void to_json(nlohmann::json& j, const ValueField& u) {
    std::vector<std::vector<double>> rows(u.m, std::vector<double>(u.states));
    for (int i = 0; i < u.m; ++i)
        for (int x = 0; x < u.states; ++x) rows[i][x] = u(i, x);
    j = rows;
}

void to_json(nlohmann::json& j, const Policy& pi) {
    std::vector<std::vector<int>> rows(pi.m, std::vector<int>(pi.states));
    for (int i = 0; i < pi.m; ++i)
        for (int x = 0; x < pi.states; ++x) rows[i][x] = pi(i, x);
    j = rows;
}

} // namespace discountlab
