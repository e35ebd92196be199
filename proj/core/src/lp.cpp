#include "discountlab/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "discountlab/error.hpp"

namespace discountlab {

const char* to_string(LPStatus s) {
    switch (s) {
    case LPStatus::Optimal: return "Optimal";
    case LPStatus::Infeasible: return "Infeasible";
    case LPStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

double primal_residual(const LPProblem& p, const Eigen::VectorXd& x) {
    Eigen::VectorXd r = p.A * x - p.b;
    double worst = 0.0;
    for (int i = 0; i < p.rows(); ++i)
        worst = std::max(worst, p.sense[i] == RowSense::Eq ? std::abs(r[i]) : r[i]);
    for (int j = 0; j < p.cols(); ++j)
        if (!p.is_free(j)) worst = std::max(worst, -x[j]);
    return worst;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPivotTol = 1e-9;
constexpr double kTinyPivot = 1e-12;

/// Standard form min c.x, A x = b, x >= 0, b >= 0 built from an LPProblem.
struct StandardForm {
    RowMatrix A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    std::vector<double> row_sign;  // +1 or -1 per original row
    std::vector<int> pos, neg;     // original column -> standard columns (neg = -1 if none)
    std::vector<int> slack;        // original row -> slack column or -1
    int structural = 0;            // number of non-artificial columns
};

StandardForm standardize(const LPProblem& p) {
    StandardForm s;
    const int R = p.rows();
    int n = 0;
    s.pos.resize(p.cols());
    s.neg.assign(p.cols(), -1);
    for (int j = 0; j < p.cols(); ++j) {
        s.pos[j] = n++;
        if (p.is_free(j)) s.neg[j] = n++;
    }
    s.slack.assign(R, -1);
    for (int i = 0; i < R; ++i)
        if (p.sense[i] == RowSense::Le) s.slack[i] = n++;
    s.structural = n;
    s.A = RowMatrix::Zero(R, n);
    s.b.resize(R);
    s.c = Eigen::VectorXd::Zero(n);
    s.row_sign.resize(R);
    for (int i = 0; i < R; ++i) {
        double sign = p.b[i] < 0.0 ? -1.0 : 1.0;
        s.row_sign[i] = sign;
        s.b[i] = sign * p.b[i];
        for (int j = 0; j < p.cols(); ++j) {
            s.A(i, s.pos[j]) = sign * p.A(i, j);
            if (s.neg[j] >= 0) s.A(i, s.neg[j]) = -sign * p.A(i, j);
        }
        if (s.slack[i] >= 0) s.A(i, s.slack[i]) = sign;
    }
    for (int j = 0; j < p.cols(); ++j) {
        s.c[s.pos[j]] = p.c[j];
        if (s.neg[j] >= 0) s.c[s.neg[j]] = -p.c[j];
    }
    return s;
}

/// Dense tableau T = B^{-1} A with rhs = B^{-1} b and reduced costs d.
struct Tableau {
    RowMatrix T;
    Eigen::VectorXd rhs;
    Eigen::VectorXd d;
    std::vector<int> basis;
    std::vector<bool> allowed; // columns permitted to enter
    int iterations = 0;

    int rows() const { return static_cast<int>(T.rows()); }
    int cols() const { return static_cast<int>(T.cols()); }

    void price(const Eigen::VectorXd& cost) {
        Eigen::VectorXd cb(rows());
        for (int r = 0; r < rows(); ++r) cb[r] = cost[basis[r]];
        d = cost - T.transpose() * cb;
        for (int r = 0; r < rows(); ++r) d[basis[r]] = 0.0;
    }

    void pivot(int r, int q) {
        double piv = T(r, q);
        T.row(r) /= piv;
        rhs[r] /= piv;
        T(r, q) = 1.0;
        Eigen::VectorXd col = T.col(q);
        col[r] = 0.0;
        T.noalias() -= col * T.row(r);
        rhs -= col * rhs[r];
        for (int i = 0; i < rows(); ++i) {
            if (i != r) T(i, q) = 0.0;
            if (rhs[i] < 0.0 && rhs[i] > -1e-13) rhs[i] = 0.0;
        }
        double dq = d[q];
        d -= dq * T.row(r).transpose();
        d[q] = 0.0;
        basis[r] = q;
        ++iterations;
    }
};

enum class RunOutcome { Optimal, Unbounded };

/// Primal simplex from a feasible basis. On Unbounded, `entering` is the
/// offending column.
RunOutcome run_simplex(Tableau& t, double opt_tol, int& entering) {
    const long bland_after = 2L * (t.rows() + t.cols());
    const long cap = 50L * (t.rows() + t.cols()) + 10000;
    bool bland = false;
    for (long it = 0;; ++it) {
        if (it >= bland_after) bland = true;
        if (it > cap) throw Error(Errc::NumericalBreakdown, "simplex iteration cap reached");
        int q = -1;
        double best = -opt_tol;
        for (int j = 0; j < t.cols(); ++j) {
            if (!t.allowed[j] || t.d[j] >= -opt_tol) continue;
            if (bland) {
                q = j;
                break;
            }
            if (t.d[j] < best) {
                best = t.d[j];
                q = j;
            }
        }
        if (q < 0) return RunOutcome::Optimal;

        int r = -1;
        double ratio = std::numeric_limits<double>::infinity();
        bool small_only = false;
        for (int i = 0; i < t.rows(); ++i) {
            double a = t.T(i, q);
            if (a <= kPivotTol) {
                if (a > kTinyPivot) small_only = true;
                continue;
            }
            double rr = std::max(t.rhs[i], 0.0) / a;
            if (r < 0 || rr < ratio - 1e-12 * std::max(1.0, ratio)) {
                ratio = rr;
                r = i;
            } else if (rr <= ratio + 1e-12 * std::max(1.0, ratio)) {
                bool take = bland ? t.basis[i] < t.basis[r] : a > t.T(r, q);
                if (take) {
                    ratio = std::min(ratio, rr);
                    r = i;
                }
            }
        }
        if (r < 0) {
            if (small_only) {
                if (bland) throw Error(Errc::NumericalBreakdown, "only tiny pivots available");
                bland = true;
                continue;
            }
            entering = q;
            return RunOutcome::Unbounded;
        }
        t.pivot(r, q);
    }
}

/// Rebuilds the tableau from the original data for the current basis.
bool refactor(Tableau& t, const RowMatrix& A, const Eigen::VectorXd& b, const Eigen::VectorXd& cost) {
    const int R = t.rows();
    Eigen::MatrixXd B(R, R);
    for (int r = 0; r < R; ++r) B.col(r) = A.col(t.basis[r]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (lu.rank() < R) return false;
    t.T = lu.solve(Eigen::MatrixXd(A));
    t.rhs = lu.solve(b);
    for (int r = 0; r < R; ++r) {
        t.T.col(t.basis[r]).setZero();
        t.T(r, t.basis[r]) = 1.0;
        if (t.rhs[r] < 0.0 && t.rhs[r] > -1e-11) t.rhs[r] = 0.0;
    }
    t.price(cost);
    return true;
}

} // namespace

LPSolution lp_solve(const LPProblem& p) {
    require(p.A.rows() == p.b.size() && p.A.cols() == p.c.size(), "LP dimensions disagree");
    require(static_cast<int>(p.sense.size()) == p.rows(), "LP needs one sense per row");
    require(p.free.empty() || static_cast<int>(p.free.size()) == p.cols(),
            "LP free flags must match columns");
    require(p.A.allFinite() && p.b.allFinite() && p.c.allFinite(), "LP data must be finite");

    StandardForm s = standardize(p);
    const int R = p.rows();
    LPSolution sol;

    // Phase 1: artificial on every row without a +1 slack.
    std::vector<int> art_row;
    for (int i = 0; i < R; ++i)
        if (s.slack[i] < 0 || s.row_sign[i] < 0) art_row.push_back(i);
    const int n_art = static_cast<int>(art_row.size());
    const int n_all = s.structural + n_art;
    RowMatrix A1 = RowMatrix::Zero(R, n_all);
    A1.leftCols(s.structural) = s.A;
    Tableau t;
    t.basis.resize(R);
    for (int i = 0; i < R; ++i) t.basis[i] = s.slack[i];
    for (int k = 0; k < n_art; ++k) {
        A1(art_row[k], s.structural + k) = 1.0;
        t.basis[art_row[k]] = s.structural + k;
    }
    t.T = A1;
    t.rhs = s.b;
    t.allowed.assign(n_all, true);
    Eigen::VectorXd cost1 = Eigen::VectorXd::Zero(n_all);
    cost1.tail(n_art).setOnes();
    t.price(cost1);

    const double b_scale = 1.0 + (R ? s.b.cwiseAbs().maxCoeff() : 0.0);
    int entering = -1;
    if (n_art > 0) {
        run_simplex(t, 1e-11, entering);
        double infeas = 0.0;
        for (int r = 0; r < R; ++r)
            if (t.basis[r] >= s.structural) infeas += std::max(t.rhs[r], 0.0);
        if (infeas > 1e-9 * b_scale) {
            sol.status = LPStatus::Infeasible;
            sol.iterations = t.iterations;
            sol.x = Eigen::VectorXd::Zero(p.cols());
            sol.dual = Eigen::VectorXd::Zero(R);
            return sol;
        }
    }

    // Drive artificials out of the basis; rows where that is impossible are redundant.
    std::vector<int> kept;
    for (int r = 0; r < R; ++r) {
        if (t.basis[r] < s.structural) {
            kept.push_back(r);
            continue;
        }
        int q = -1;
        double best = kPivotTol;
        for (int j = 0; j < s.structural; ++j)
            if (std::abs(t.T(r, j)) > best) {
                best = std::abs(t.T(r, j));
                q = j;
            }
        if (q >= 0) {
            t.rhs[r] = 0.0;
            t.pivot(r, q);
            kept.push_back(r);
        }
    }
    const int Rk = static_cast<int>(kept.size());
    RowMatrix Ak(Rk, s.structural);
    Eigen::VectorXd bk(Rk);
    for (int k = 0; k < Rk; ++k) {
        Ak.row(k) = s.A.row(kept[k]);
        bk[k] = s.b[kept[k]];
    }
    Tableau t2;
    t2.iterations = t.iterations;
    t2.basis.resize(Rk);
    for (int k = 0; k < Rk; ++k) t2.basis[k] = t.basis[kept[k]];
    t2.T = RowMatrix::Zero(Rk, s.structural);
    t2.allowed.assign(s.structural, true);
    if (!refactor(t2, Ak, bk, s.c))
        throw Error(Errc::NumericalBreakdown, "singular basis after phase 1");

    // Phase 2 with refactor-and-verify rounds.
    const double opt_tol = 1e-10 * std::max(1.0, s.c.size() ? s.c.cwiseAbs().maxCoeff() : 0.0);
    RunOutcome outcome = RunOutcome::Optimal;
    for (int round = 0; round < 6; ++round) {
        outcome = run_simplex(t2, opt_tol, entering);
        if (outcome == RunOutcome::Unbounded) break;
        if (!refactor(t2, Ak, bk, s.c))
            throw Error(Errc::NumericalBreakdown, "singular optimal basis");
        bool primal_ok = t2.rhs.minCoeff() >= -1e-11 || Rk == 0;
        bool dual_ok = true;
        for (int j = 0; j < s.structural; ++j)
            if (t2.d[j] < -opt_tol) dual_ok = false;
        if (primal_ok && dual_ok) break;
        if (!primal_ok) throw Error(Errc::NumericalBreakdown, "basis lost primal feasibility");
    }
    sol.iterations = t2.iterations;

    auto to_original = [&](const Eigen::VectorXd& xs) {
        Eigen::VectorXd x(p.cols());
        for (int j = 0; j < p.cols(); ++j)
            x[j] = xs[s.pos[j]] - (s.neg[j] >= 0 ? xs[s.neg[j]] : 0.0);
        return x;
    };

    Eigen::VectorXd xs = Eigen::VectorXd::Zero(s.structural);
    for (int k = 0; k < Rk; ++k) xs[t2.basis[k]] = std::max(t2.rhs[k], 0.0);

    if (outcome == RunOutcome::Unbounded) {
        Eigen::VectorXd ds = Eigen::VectorXd::Zero(s.structural);
        ds[entering] = 1.0;
        for (int k = 0; k < Rk; ++k) ds[t2.basis[k]] = -t2.T(k, entering);
        sol.status = LPStatus::Unbounded;
        sol.x = to_original(xs);
        sol.ray = to_original(ds);
        sol.dual = Eigen::VectorXd::Zero(R);
        sol.objective_value = -std::numeric_limits<double>::infinity();
        return sol;
    }

    // Duals from the refactored basis.
    Eigen::MatrixXd B(Rk, Rk);
    Eigen::VectorXd cb(Rk);
    for (int k = 0; k < Rk; ++k) {
        B.col(k) = Ak.col(t2.basis[k]);
        cb[k] = s.c[t2.basis[k]];
    }
    Eigen::VectorXd yk = Rk ? Eigen::VectorXd(B.transpose().fullPivLu().solve(cb)) : Eigen::VectorXd();
    sol.dual = Eigen::VectorXd::Zero(R);
    for (int k = 0; k < Rk; ++k) sol.dual[kept[k]] = s.row_sign[kept[k]] * yk[k];

    sol.status = LPStatus::Optimal;
    sol.x = to_original(xs);
    sol.objective_value = p.c.dot(sol.x);
    sol.primal_residual = primal_residual(p, sol.x);

    Eigen::VectorXd reduced = p.c - p.A.transpose() * sol.dual;
    Eigen::VectorXd row_slack = p.b - p.A * sol.x;
    double cs = 0.0;
    for (int j = 0; j < p.cols(); ++j) {
        if (p.is_free(j)) {
            cs = std::max(cs, std::abs(reduced[j]));
        } else {
            cs = std::max(cs, std::abs(reduced[j] * sol.x[j]));
            cs = std::max(cs, -reduced[j]);
        }
    }
    for (int i = 0; i < R; ++i)
        if (p.sense[i] == RowSense::Le) {
            cs = std::max(cs, std::abs(sol.dual[i] * row_slack[i]));
            cs = std::max(cs, sol.dual[i]);
        }
    sol.cs_residual = cs;
    if (sol.primal_residual > kPrimalCertTol || sol.cs_residual > kSlacknessCertTol)
        throw Error(Errc::NumericalBreakdown,
                    "optimal basis failed certification (primal " +
                        std::to_string(sol.primal_residual) + ", slackness " +
                        std::to_string(sol.cs_residual) + ")");
    return sol;
}

std::vector<Eigen::VectorXd> basic_feasible_solutions(const Eigen::MatrixXd& A_in,
                                                      const Eigen::VectorXd& b_in,
                                                      double dedup_tol) {
    require(A_in.rows() == b_in.size(), "vertex enumeration dimensions disagree");
    const int n = static_cast<int>(A_in.cols());
    // Row-reduce [A | b] and keep independent rows.
    Eigen::MatrixXd M(A_in.rows(), n + 1);
    M << A_in, b_in;
    int rank = 0;
    for (int col = 0; col < n && rank < M.rows(); ++col) {
        Eigen::Index piv;
        double mag = M.col(col).segment(rank, M.rows() - rank).cwiseAbs().maxCoeff(&piv);
        if (mag < 1e-10) continue;
        M.row(rank).swap(M.row(rank + piv));
        M.row(rank) /= M(rank, col);
        for (int i = 0; i < M.rows(); ++i)
            if (i != rank) M.row(i) -= M(i, col) * M.row(rank);
        ++rank;
    }
    for (int i = rank; i < M.rows(); ++i)
        if (std::abs(M(i, n)) > 1e-9) return {};
    Eigen::MatrixXd A = M.topLeftCorner(rank, n);
    Eigen::VectorXd b = M.col(n).head(rank);

    std::vector<Eigen::VectorXd> out;
    if (rank == 0) {
        out.push_back(Eigen::VectorXd::Zero(n));
        return out;
    }
    std::vector<int> pick(rank);
    for (int k = 0; k < rank; ++k) pick[k] = k;
    Eigen::MatrixXd B(rank, rank);
    while (true) {
        for (int k = 0; k < rank; ++k) B.col(k) = A.col(pick[k]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
        if (lu.rank() == rank) {
            Eigen::VectorXd xb = lu.solve(b);
            if (xb.minCoeff() >= -1e-11) {
                Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
                for (int k = 0; k < rank; ++k) x[pick[k]] = std::max(xb[k], 0.0);
                bool seen = false;
                for (const auto& v : out)
                    if ((v - x).cwiseAbs().maxCoeff() <= dedup_tol) {
                        seen = true;
                        break;
                    }
                if (!seen) out.push_back(std::move(x));
            }
        }
        int k = rank - 1;
        while (k >= 0 && pick[k] == n - rank + k) --k;
        if (k < 0) break;
        ++pick[k];
        for (int l = k + 1; l < rank; ++l) pick[l] = pick[l - 1] + 1;
    }
    return out;
}

} // namespace discountlab
