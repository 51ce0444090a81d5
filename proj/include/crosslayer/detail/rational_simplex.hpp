#pragma once

// Exact phase-1 simplex over rationals, used for LP feasibility questions.
// The worst-case analysis sits exactly on constraint boundaries (budgets equal
// to needs), so the verdict must not depend on floating-point tolerances.
// Doubles convert to rationals exactly, which makes the shifted-strict
// system's feasibility a finite exact computation.

#include <boost/multiprecision/cpp_int.hpp>
#include <vector>

#include "crosslayer/errors.hpp"

namespace crosslayer::conic::detail {

using Rat = boost::multiprecision::cpp_rational;

struct RatRow {
    std::vector<Rat> a; // length nvars
    Rat b;              // a'x <= b
};

struct RatLpResult {
    bool feasible = false;
    std::vector<Rat> x;
};

// Feasibility of { x in R^n : a_i'x <= b_i for all rows }, x free.
// Bland's rule guarantees termination.
inline RatLpResult rational_lp_feasible(int nvars, const std::vector<RatRow>& rows) {
    const int m = static_cast<int>(rows.size());
    // columns: u(n) | v(n) | slack(m) | artificial(<=m), x = u - v
    std::vector<int> art_col(m, -1);
    int n_art = 0;
    for (int i = 0; i < m; ++i)
        if (rows[i].b < 0) ++n_art;
    const int ncols = 2 * nvars + m + n_art;

    std::vector<std::vector<Rat>> t(m, std::vector<Rat>(ncols + 1, Rat(0)));
    std::vector<int> basis(m, -1);
    int next_art = 2 * nvars + m;
    for (int i = 0; i < m; ++i) {
        const bool neg = rows[i].b < 0;
        const Rat sgn = neg ? Rat(-1) : Rat(1);
        for (int j = 0; j < nvars; ++j) {
            t[i][j] = sgn * rows[i].a[j];
            t[i][nvars + j] = -sgn * rows[i].a[j];
        }
        t[i][2 * nvars + i] = sgn; // slack
        t[i][ncols] = sgn * rows[i].b;
        if (neg) {
            art_col[i] = next_art;
            t[i][next_art] = Rat(1);
            basis[i] = next_art;
            ++next_art;
        } else {
            basis[i] = 2 * nvars + i;
        }
    }

    // phase-1 reduced costs: minimize sum of artificials
    std::vector<Rat> red(ncols, Rat(0));
    Rat obj(0);
    for (int i = 0; i < m; ++i) {
        if (art_col[i] < 0) continue;
        for (int j = 0; j < ncols; ++j) red[j] -= t[i][j];
        obj += t[i][ncols];
    }
    for (int i = 0; i < m; ++i)
        if (art_col[i] >= 0) red[art_col[i]] += Rat(1); // cost of artificial is 1
    // red[j] now holds c_j - z_j for the initial basis

    const long max_pivots = 20000L + 200L * static_cast<long>(m) * (ncols + 1);
    for (long iter = 0; iter < max_pivots; ++iter) {
        int enter = -1;
        for (int j = 0; j < ncols; ++j)
            if (red[j] < 0) { enter = j; break; } // Bland: smallest index
        if (enter < 0) {
            if (obj != 0) return {false, {}};
            RatLpResult res;
            res.feasible = true;
            res.x.assign(nvars, Rat(0));
            for (int i = 0; i < m; ++i) {
                if (basis[i] < nvars) res.x[basis[i]] += t[i][ncols];
                else if (basis[i] < 2 * nvars) res.x[basis[i] - nvars] -= t[i][ncols];
            }
            return res;
        }
        int leave = -1;
        Rat best_ratio(0);
        for (int i = 0; i < m; ++i) {
            if (t[i][enter] <= 0) continue;
            const Rat ratio = t[i][ncols] / t[i][enter];
            if (leave < 0 || ratio < best_ratio ||
                (ratio == best_ratio && basis[i] < basis[leave])) {
                leave = i;
                best_ratio = ratio;
            }
        }
        if (leave < 0)
            throw SolverError("rational simplex: phase-1 unbounded (internal error)");

        const Rat piv = t[leave][enter];
        for (int j = 0; j <= ncols; ++j) t[leave][j] /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == leave || t[i][enter] == 0) continue;
            const Rat f = t[i][enter];
            for (int j = 0; j <= ncols; ++j) t[i][j] -= f * t[leave][j];
        }
        if (red[enter] != 0) {
            const Rat f = red[enter];
            for (int j = 0; j < ncols; ++j) red[j] -= f * t[leave][j];
            obj += f * t[leave][ncols]; // objective moves by reduced cost * entering value
        }
        basis[leave] = enter;
    }
    throw SolverError("rational simplex: pivot limit exceeded");
}

} // namespace crosslayer::conic::detail
