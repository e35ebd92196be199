#include "discountlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "discountlab/error.hpp"
#include "discountlab/sampling.hpp"

namespace discountlab {

namespace {

constexpr double kSampleP = 5.0;
constexpr double kSampleU = 5.0;

double uniform(double t, double lo, double hi) { return lo + (hi - lo) * t; }

std::vector<double> slice_of(const std::vector<double>& q, std::size_t& cursor, int count,
                             double lo, double hi) {
    std::vector<double> out(count);
    for (int k = 0; k < count; ++k) out[k] = uniform(q[cursor++], lo, hi);
    return out;
}

int pick_mode(double t, int m) { return std::min(m - 1, static_cast<int>(t * m)); }

struct WorstTracker {
    double worst = 0.0;
    Witness witness;
    bool first = true;

    void offer(double violation, const Witness& w) {
        if (first || violation > worst) {
            worst = std::max(violation, 0.0);
            witness = w;
            first = false;
        }
    }
};

StructureReport finish(std::string name, const WorstTracker& t, std::size_t samples) {
    StructureReport r;
    r.check_name = std::move(name);
    r.worst_violation = t.worst;
    r.witness = t.witness;
    r.samples_used = samples;
    r.passed = r.worst_violation <= r.tolerance;
    return r;
}

double dot(ConstSpan a, ConstSpan b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

} // namespace

bool in_coupling_cone(int mode, ConstSpan eta) {
    double total = 0.0;
    for (std::size_t j = 0; j < eta.size(); ++j) {
        if (static_cast<int>(j) != mode && eta[j] > 0.0) return false;
        total += eta[j];
    }
    return total >= 0.0;
}

void to_json(nlohmann::json& j, const StructureReport& r) {
    nlohmann::json w = {{"x", r.witness.x}, {"mode", r.witness.mode}, {"p", r.witness.p},
                        {"u", r.witness.u}, {"v", r.witness.v}};
    for (const auto& [k, val] : r.witness.metrics) w[k] = val;
    j = nlohmann::json{{"check_name", r.check_name},
                       {"passed", r.passed},
                       {"worst_violation", r.worst_violation},
                       {"witness", w},
                       {"samples_used", r.samples_used}};
}

namespace {

// a - b with differences at the rounding level of the operands read as 0.
double rounded_excess(double a, double b) {
    double gap = a - b;
    double ulp_floor =
        16.0 * std::numeric_limits<double>::epsilon() * (std::abs(a) + std::abs(b) + 1.0);
    return gap <= ulp_floor ? std::min(gap, 0.0) : gap;
}

} // namespace

StructureReport check_monotone(const HamiltonianModel& model, std::size_t sample_count,
                               std::uint64_t seed) {
    require(sample_count >= 1, "check_monotone needs sample_count >= 1");
    const int n = model.n, m = model.m;
    // x, p, v, k, delta, alpha, second mode for Lemma-1(ii)
    HaltonSampler sampler(n + n + m + 1 + m + 1 + 1, seed);
    WorstTracker worst;
    for (std::size_t s = 0; s < sample_count; ++s) {
        const auto& q = sampler.next();
        std::size_t c = 0;
        auto x = slice_of(q, c, n, 0.0, 1.0);
        auto p = slice_of(q, c, n, -kSampleP, kSampleP);
        auto v = slice_of(q, c, m, -kSampleU, kSampleU);
        int k = pick_mode(q[c++], m);
        auto delta = slice_of(q, c, m, -1.0, 1.0);
        double alpha = uniform(q[c++], 0.0, 2.0);
        int other = pick_mode(q[c++], m);

        double top = 0.0;
        for (int i = 0; i < m; ++i)
            if (i != k) top = std::max(top, delta[i]);
        delta[k] = top;
        std::vector<double> u(m);
        for (int i = 0; i < m; ++i) u[i] = v[i] + delta[i];
        worst.offer(rounded_excess(model(x, k, p, v), model(x, k, p, u)), Witness{x, k, p, u, v, {}});

        // H_i(u + alpha 1) >= H_i(u)
        std::vector<double> shifted(m);
        for (int i = 0; i < m; ++i) shifted[i] = v[i] + alpha;
        for (int i = 0; i < m; ++i)
            worst.offer(rounded_excess(model(x, i, p, v), model(x, i, p, shifted)),
                        Witness{x, i, p, shifted, v, {{"alpha", alpha}}});

        // H_j(u + alpha e_i) <= H_j(u) for j != i
        std::vector<double> bumped = v;
        bumped[other] += alpha;
        for (int j = 0; j < m; ++j) {
            if (j == other) continue;
            worst.offer(rounded_excess(model(x, j, p, bumped), model(x, j, p, v)),
                        Witness{x, j, p, bumped, v, {{"alpha", alpha}}});
        }
    }
    return finish("monotone", worst, sample_count);
}

StructureReport check_convex(const HamiltonianModel& model, std::size_t sample_count,
                             std::uint64_t seed) {
    require(sample_count >= 1, "check_convex needs sample_count >= 1");
    const int n = model.n, m = model.m;
    HaltonSampler sampler(n + 2 * n + 2 * m + 1, seed);
    WorstTracker worst;
    for (std::size_t s = 0; s < sample_count; ++s) {
        const auto& q = sampler.next();
        std::size_t c = 0;
        auto x = slice_of(q, c, n, 0.0, 1.0);
        auto p1 = slice_of(q, c, n, -kSampleP, kSampleP);
        auto p2 = slice_of(q, c, n, -kSampleP, kSampleP);
        auto u1 = slice_of(q, c, m, -kSampleU, kSampleU);
        auto u2 = slice_of(q, c, m, -kSampleU, kSampleU);
        int i = pick_mode(q[c++], m);
        std::vector<double> pm(n), um(m);
        for (int d = 0; d < n; ++d) pm[d] = 0.5 * (p1[d] + p2[d]);
        for (int j = 0; j < m; ++j) um[j] = 0.5 * (u1[j] + u2[j]);
        double hm = model(x, i, pm, um), h1 = model(x, i, p1, u1), h2 = model(x, i, p2, u2);
        double gap = hm - 0.5 * (h1 + h2);
        // Midpoint rounding of exactly affine pieces is not a violation.
        double ulp_floor = 16.0 * std::numeric_limits<double>::epsilon() *
                           (std::abs(hm) + std::abs(h1) + std::abs(h2) + 1.0);
        if (gap <= ulp_floor) gap = std::min(gap, 0.0);
        worst.offer(gap, Witness{x, i, pm, um, {}, {}});
    }
    return finish("convex", worst, sample_count);
}

StructureReport check_shift_invariance(const HamiltonianModel& model, ConstSpan c,
                                       std::size_t sample_count, std::uint64_t seed) {
    require(static_cast<int>(c.size()) == model.m, "shift vector must have m entries");
    const int n = model.n, m = model.m;
    HaltonSampler sampler(n + n + m + 1, seed);
    WorstTracker worst;
    constexpr double ts[] = {-1.0, 0.5, 2.0};
    for (std::size_t s = 0; s < sample_count; ++s) {
        const auto& q = sampler.next();
        std::size_t cur = 0;
        auto x = slice_of(q, cur, n, 0.0, 1.0);
        auto p = slice_of(q, cur, n, -kSampleP, kSampleP);
        auto v = slice_of(q, cur, m, -kSampleU, kSampleU);
        int i = pick_mode(q[cur++], m);
        for (double t : ts) {
            std::vector<double> shifted(m);
            for (int j = 0; j < m; ++j) shifted[j] = v[j] + t * c[j];
            worst.offer(std::abs(model(x, i, p, shifted) - model(x, i, p, v)),
                        Witness{x, i, p, shifted, v, {{"t", t}}});
        }
    }
    return finish("shift_invariance", worst, sample_count);
}

CoercivityProfile coercivity_profile(const HamiltonianModel& model, double R,
                                     const std::vector<double>& radii,
                                     std::size_t sample_density, std::uint64_t seed) {
    if (sample_density == 0) throw Error(Errc::EmptySampleSet, "sample_density must be >= 1");
    require(!radii.empty(), "coercivity_profile needs at least one radius");
    require(R > 0.0, "coercivity_profile needs R > 0");
    require(std::is_sorted(radii.begin(), radii.end()) && radii.front() > 0.0,
            "radii must be positive and ascending");
    const int n = model.n, m = model.m;

    auto ball_point = [&](const std::vector<double>& q, std::size_t& c) {
        std::vector<double> u(m);
        double norm2 = 0.0;
        for (int j = 0; j < m; ++j) {
            u[j] = uniform(q[c++], -1.0, 1.0);
            norm2 += u[j] * u[j];
        }
        // Cube points outside the unit ball are projected onto the sphere.
        double scale = norm2 > 1.0 ? R / std::sqrt(norm2) : R;
        for (auto& uj : u) uj *= scale;
        return u;
    };
    auto sphere_point = [&](double t, double r) {
        std::vector<double> p(n);
        if (n == 1) {
            p[0] = t < 0.5 ? -r : r;
        } else {
            double theta = 2.0 * std::numbers::pi * t;
            p[0] = r * std::cos(theta);
            p[1] = r * std::sin(theta);
        }
        return p;
    };

    CoercivityProfile profile;
    profile.R = R;
    profile.beta = -std::numeric_limits<double>::infinity();
    std::vector<double> zero_p(n, 0.0);
    HaltonSampler base(n + m, seed);
    for (std::size_t s = 0; s < sample_density; ++s) {
        const auto& q = base.next();
        std::size_t c = 0;
        auto x = slice_of(q, c, n, 0.0, 1.0);
        auto u = ball_point(q, c);
        for (int i = 0; i < m; ++i) profile.beta = std::max(profile.beta, model(x, i, zero_p, u));
    }

    std::vector<double> raw(radii.size(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < radii.size(); ++k) {
        HaltonSampler sampler(n + m + 1, seed + 1 + k);
        for (std::size_t s = 0; s < sample_density; ++s) {
            const auto& q = sampler.next();
            std::size_t c = 0;
            auto x = slice_of(q, c, n, 0.0, 1.0);
            auto u = ball_point(q, c);
            // n == 1 alternates both signs of p deterministically.
            double t = n == 1 ? (s % 2 == 0 ? 0.25 : 0.75) : q[c];
            auto p = sphere_point(t, radii[k]);
            for (int i = 0; i < m; ++i) raw[k] = std::min(raw[k], model(x, i, p, u));
        }
    }
    for (std::size_t k = radii.size(); k-- > 0;) {
        if (k + 1 < radii.size()) raw[k] = std::min(raw[k], raw[k + 1]);
    }
    for (std::size_t k = 0; k < radii.size(); ++k) profile.alpha.emplace_back(radii[k], raw[k]);
    return profile;
}

bool check_erg_condition(const CoercivityProfile& profile, int n) {
    require(n >= 1, "dimension must be >= 1");
    const double threshold = 2.0 * profile.R / std::sqrt(static_cast<double>(n));
    const std::pair<double, double>* lower = nullptr;
    bool bracketed = false;
    for (const auto& entry : profile.alpha) {
        if (entry.first <= threshold) lower = &entry;
        if (entry.first >= threshold) bracketed = true;
    }
    if (!bracketed || lower == nullptr)
        throw Error(Errc::MissingRadius, "profile does not cover r = 2R/sqrt(n)");
    return profile.beta < lower->second;
}

SearchBox default_search_box(const std::vector<std::vector<double>>& xi_grid,
                             const std::vector<std::vector<double>>& eta_grid,
                             int points_per_dim, double scale) {
    double reach = 0.0;
    for (const auto& xi : xi_grid)
        for (double v : xi) reach = std::max(reach, 2.0 * std::abs(v));
    for (const auto& eta : eta_grid)
        for (double v : eta) reach = std::max(reach, 2.0 * std::abs(v));
    reach = std::max(reach, 1.0) * scale;
    return SearchBox{reach, reach, points_per_dim};
}

LagrangianSlice legendre_transform(const HamiltonianModel& model, int mode, ConstSpan x,
                                   const std::vector<std::vector<double>>& xi_grid,
                                   const std::vector<std::vector<double>>& eta_grid,
                                   const SearchBox& box, double clip_bound) {
    require(!xi_grid.empty() && !eta_grid.empty(), "legendre_transform needs nonempty grids");
    require(box.points_per_dim >= 3, "search grid needs >= 3 points per dimension");
    require(mode >= 0 && mode < model.m, "mode out of range");
    const int n = model.n, m = model.m;
    const int dims = n + m;
    const int k = box.points_per_dim;

    LagrangianSlice slice;
    slice.mode = mode;
    slice.x.assign(x.begin(), x.end());
    slice.xi_grid = xi_grid;
    slice.eta_grid = eta_grid;
    slice.entries.assign(xi_grid.size() * eta_grid.size(), LagrangianEntry{});

    std::vector<char> admissible(eta_grid.size());
    bool any = false;
    for (std::size_t e = 0; e < eta_grid.size(); ++e) {
        admissible[e] = in_coupling_cone(mode, eta_grid[e]);
        any = any || admissible[e];
    }
    if (!any) return slice;

    std::vector<double> interior(slice.entries.size(), -std::numeric_limits<double>::infinity());
    std::vector<double> boundary(slice.entries.size(), -std::numeric_limits<double>::infinity());

    std::vector<int> idx(dims, 0);
    std::vector<double> p(n), u(m);
    std::size_t total = 1;
    for (int d = 0; d < dims; ++d) total *= static_cast<std::size_t>(k);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rest = flat;
        bool on_boundary = false;
        for (int d = 0; d < dims; ++d) {
            idx[d] = static_cast<int>(rest % k);
            rest /= k;
            on_boundary = on_boundary || idx[d] == 0 || idx[d] == k - 1;
        }
        for (int d = 0; d < n; ++d) p[d] = -box.p_radius + 2.0 * box.p_radius * idx[d] / (k - 1);
        for (int j = 0; j < m; ++j)
            u[j] = -box.u_radius + 2.0 * box.u_radius * idx[n + j] / (k - 1);
        double h = model(x, mode, p, u);
        for (std::size_t a = 0; a < xi_grid.size(); ++a) {
            double xp = dot(xi_grid[a], p);
            for (std::size_t e = 0; e < eta_grid.size(); ++e) {
                if (!admissible[e]) continue;
                double val = xp + dot(eta_grid[e], u) - h;
                auto& slot = on_boundary ? boundary[a * eta_grid.size() + e]
                                         : interior[a * eta_grid.size() + e];
                slot = std::max(slot, val);
            }
        }
    }

    for (std::size_t a = 0; a < xi_grid.size(); ++a) {
        for (std::size_t e = 0; e < eta_grid.size(); ++e) {
            if (!admissible[e]) continue;
            std::size_t s = a * eta_grid.size() + e;
            double best = std::max(interior[s], boundary[s]);
            double slack = 1e-12 * std::max(1.0, std::abs(interior[s]));
            bool growing = boundary[s] > interior[s] + slack;
            if (!growing && best <= clip_bound) slice.entries[s] = LagrangianEntry{best, false};
        }
    }
    return slice;
}

LagrangianTable build_lagrangian_table(const HamiltonianModel& model,
                                       const std::vector<std::vector<double>>& xs,
                                       const std::vector<std::vector<double>>& xi_grid,
                                       const std::vector<std::vector<std::vector<double>>>& eta_grids,
                                       const SearchBox& box, double clip_bound) {
    require(static_cast<int>(eta_grids.size()) == model.m, "need one eta grid per mode");
    LagrangianTable table;
    table.m = model.m;
    table.n = model.n;
    table.clip_bound = clip_bound;
    for (int i = 0; i < model.m; ++i)
        for (const auto& x : xs)
            table.slices.push_back(
                legendre_transform(model, i, x, xi_grid, eta_grids[i], box, clip_bound));
    return table;
}

std::optional<double> LagrangianTable::lookup(int mode, ConstSpan x, ConstSpan xi,
                                              ConstSpan eta) const {
    auto same = [](const std::vector<double>& a, ConstSpan b) {
        return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
    };
    for (const auto& slice : slices) {
        if (slice.mode != mode || !same(slice.x, x)) continue;
        for (std::size_t a = 0; a < slice.xi_grid.size(); ++a) {
            if (!same(slice.xi_grid[a], xi)) continue;
            for (std::size_t e = 0; e < slice.eta_grid.size(); ++e) {
                if (!same(slice.eta_grid[e], eta)) continue;
                const auto& entry = slice.at(a, e);
                if (entry.is_infinite) return std::nullopt;
                return entry.value;
            }
        }
    }
    return std::nullopt;
}

StructureReport fenchel_equality_check(const HamiltonianModel& model,
                                       const LagrangianTable& table, std::size_t sample_count,
                                       double recovery_tol, double p_radius, double u_radius,
                                       std::uint64_t seed) {
    const int n = model.n, m = model.m;
    double fy_worst = 0.0, rec_worst = 0.0;
    Witness fy_witness, rec_witness;
    std::size_t used = 0;
    for (std::size_t si = 0; si < table.slices.size(); ++si) {
        const auto& slice = table.slices[si];
        HaltonSampler sampler(n + m, seed + si);
        for (std::size_t s = 0; s < sample_count; ++s) {
            const auto& q = sampler.next();
            std::size_t c = 0;
            auto p = slice_of(q, c, n, -p_radius, p_radius);
            auto u = slice_of(q, c, m, -u_radius, u_radius);
            double h = model(slice.x, slice.mode, p, u);
            double recovered = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < slice.xi_grid.size(); ++a) {
                for (std::size_t e = 0; e < slice.eta_grid.size(); ++e) {
                    const auto& entry = slice.at(a, e);
                    if (entry.is_infinite) continue;
                    double affine =
                        dot(slice.xi_grid[a], p) + dot(slice.eta_grid[e], u) - entry.value;
                    recovered = std::max(recovered, affine);
                    if (affine - h > fy_worst) {
                        fy_worst = affine - h;
                        fy_witness = Witness{slice.x, slice.mode, p, u, {}, {}};
                    }
                }
            }
            double gap = h - recovered;
            if (gap > rec_worst) {
                rec_worst = gap;
                rec_witness = Witness{slice.x, slice.mode, p, u, {}, {}};
            }
            ++used;
        }
    }
    StructureReport r;
    r.check_name = "fenchel_equality";
    r.samples_used = used;
    double rec_excess = std::max(0.0, rec_worst - recovery_tol);
    r.worst_violation = std::max(fy_worst, rec_excess);
    r.witness = fy_worst >= rec_excess ? fy_witness : rec_witness;
    r.witness.metrics = {{"fenchel_young_violation", fy_worst},
                         {"recovery_error", rec_worst},
                         {"recovery_tolerance", recovery_tol}};
    r.passed = fy_worst <= kStructureTolerance && rec_worst <= recovery_tol;
    return r;
}

StructureReport check_domain_Yi(const LagrangianTable& table) {
    StructureReport r;
    r.check_name = "domain_Y";
    r.tolerance = 0.0;
    for (const auto& slice : table.slices) {
        for (std::size_t a = 0; a < slice.xi_grid.size(); ++a) {
            for (std::size_t e = 0; e < slice.eta_grid.size(); ++e) {
                if (slice.at(a, e).is_infinite) continue;
                ++r.samples_used;
                const auto& eta = slice.eta_grid[e];
                if (in_coupling_cone(slice.mode, eta)) continue;
                // Distance outside the cone: worst positive off-mode entry or negative total.
                double excess = 0.0, total = 0.0;
                for (std::size_t j = 0; j < eta.size(); ++j) {
                    total += eta[j];
                    if (static_cast<int>(j) != slice.mode) excess = std::max(excess, eta[j]);
                }
                excess = std::max(excess, -total);
                // Exact sign test: any violation at all fails, however small.
                if (!r.passed && excess <= r.worst_violation) continue;
                r.passed = false;
                r.worst_violation = std::max(excess, std::numeric_limits<double>::min());
                r.witness = Witness{slice.x, slice.mode, slice.xi_grid[a], {}, eta, {}};
            }
        }
    }
    return r;
}

} // namespace discountlab
