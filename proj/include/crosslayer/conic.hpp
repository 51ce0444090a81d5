#pragma once

// Uniform interface to the semidefinite solver and the LP feasibility
// checker. Everything upstream (controller synthesis, online defense, worst
// case analysis) builds LmiProblem / LpProblem values and comes through here;
// no other module touches an optimization engine.

#include <cmath>
#include <optional>
#include <string>

#include "crosslayer/detail/rational_simplex.hpp"
#include "crosslayer/detail/sdp_ipm.hpp"
#include "crosslayer/lmi.hpp"

namespace crosslayer::conic {

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };

struct LmiSolution {
    SolveStatus status = SolveStatus::NumericalFailure;
    Vector x;                // values for all declared scalar variables
    double objective = std::numeric_limits<double>::quiet_NaN();
    double feas_margin = std::numeric_limits<double>::quiet_NaN(); // phase-1 t*
    std::string detail;

    bool ok() const { return status == SolveStatus::Optimal; }
    Matrix value(const MatrixVar& v) const { return v.value(x); }
    double value(VarId v) const { return x(v.index); }
};

struct SolveOptions {
    bool assume_feasible = false;      // skip the phase-1 feasibility probe
    double strict_margin = 1e-6;       // strict "< 0" encoded as "<= -margin*scale*I"
    double phase1_box = 1e5;           // fallback box for unbounded vars in phase 1
    double infeasible_above = 1e-7;    // phase-1 t* above this (normalized) => Infeasible
    double verify_psd_slack = 1e-6;    // scaled by block magnitude
    double verify_lin_slack = 1e-7;    // scaled by row magnitude
    detail::IpmOptions ipm;
};

namespace impl {

struct Conversion {
    detail::StdForm sf;
    std::vector<double> block_scale; // per LMI block
};

inline Conversion to_std_form(const LmiProblem& p, double strict_margin) {
    Conversion cv;
    cv.sf.nvars = p.nvars();
    cv.sf.c = Vector::Zero(p.nvars());

    for (const auto& blk : p.blocks()) {
        double scale = std::max(1.0, blk.f0().cwiseAbs().maxCoeff());
        for (auto& [k, fk] : blk.coeff()) {
            (void)k;
            scale = std::max(scale, fk.cwiseAbs().maxCoeff());
        }
        detail::DenseBlock db;
        db.f0 = blk.f0() / scale;
        if (blk.strict())
            db.f0 += strict_margin * Matrix::Identity(blk.dim(), blk.dim());
        for (auto& [k, fk] : blk.coeff()) db.coeff.emplace_back(k, fk / scale);
        cv.sf.blocks.push_back(std::move(db));
        cv.block_scale.push_back(scale);
    }

    auto push_row = [&](const LinExpr& e, double sign) {
        double scale = std::max(1.0, std::abs(e.constant));
        for (auto& [k, a] : e.terms) {
            (void)k;
            scale = std::max(scale, std::abs(a));
        }
        detail::DiagRow row;
        row.f0 = sign * e.constant / scale;
        for (auto& [k, a] : e.terms) row.a.emplace_back(k, sign * a / scale);
        cv.sf.rows.push_back(std::move(row));
    };
    for (const auto& lc : p.linear()) {
        push_row(lc.expr, 1.0);
        if (lc.rel == Relation::EQ) push_row(lc.expr, -1.0);
    }
    for (int k = 0; k < p.nvars(); ++k) {
        if (std::isfinite(p.lb(k))) {
            detail::DiagRow row;
            const double s = std::max(1.0, std::abs(p.lb(k)));
            row.f0 = p.lb(k) / s;
            row.a.emplace_back(k, -1.0 / s);
            cv.sf.rows.push_back(std::move(row));
        }
        if (std::isfinite(p.ub(k))) {
            detail::DiagRow row;
            const double s = std::max(1.0, std::abs(p.ub(k)));
            row.f0 = -p.ub(k) / s;
            row.a.emplace_back(k, 1.0 / s);
            cv.sf.rows.push_back(std::move(row));
        }
    }
    return cv;
}

// Phase 1: minimize t with every block and linear row relaxed by t. Boxes are
// kept hard, with a fallback box on unbounded variables so the problem is
// compact. t in [-1, inf): the cap keeps homogeneous feasibility cones from
// pushing t to the box boundary.
inline Conversion to_phase1(const LmiProblem& p, const SolveOptions& opt) {
    Conversion cv = to_std_form(p, opt.strict_margin);
    const int tvar = p.nvars();
    cv.sf.nvars = tvar + 1;
    cv.sf.c = Vector::Zero(tvar + 1);
    cv.sf.c(tvar) = 1.0;

    size_t relax_rows = 0;
    for (const auto& lc : p.linear()) relax_rows += (lc.rel == Relation::EQ) ? 2 : 1;

    for (auto& b : cv.sf.blocks)
        b.coeff.emplace_back(tvar, Matrix(-Matrix::Identity(b.f0.rows(), b.f0.cols())));
    for (size_t r = 0; r < relax_rows; ++r) cv.sf.rows[r].a.emplace_back(tvar, -1.0);

    for (int k = 0; k < p.nvars(); ++k) {
        if (!std::isfinite(p.lb(k))) {
            detail::DiagRow row;
            row.f0 = -opt.phase1_box;
            row.a.emplace_back(k, -1.0);
            cv.sf.rows.push_back(std::move(row));
        }
        if (!std::isfinite(p.ub(k))) {
            detail::DiagRow row;
            row.f0 = -opt.phase1_box;
            row.a.emplace_back(k, 1.0);
            cv.sf.rows.push_back(std::move(row));
        }
    }
    { // t >= -1
        detail::DiagRow row;
        row.f0 = -1.0;
        row.a.emplace_back(tvar, -1.0);
        cv.sf.rows.push_back(std::move(row));
    }
    return cv;
}

// Independent re-check of a candidate solution against the original problem.
inline bool verify_solution(const LmiProblem& p, const Vector& x,
                            const SolveOptions& opt, std::string* why) {
    for (const auto& blk : p.blocks()) {
        Matrix e = blk.f0();
        for (auto& [k, fk] : blk.coeff()) e += x(k) * fk;
        const double scale = std::max(1.0, e.cwiseAbs().maxCoeff());
        if (!is_psd_raw(-e, opt.verify_psd_slack * scale)) {
            if (why) *why = "LMI block '" + blk.label() + "' violated";
            return false;
        }
    }
    for (const auto& lc : p.linear()) {
        const double v = lc.expr.eval(x);
        double scale = std::max(1.0, std::abs(lc.expr.constant));
        for (auto& [k, a] : lc.expr.terms) scale = std::max(scale, std::abs(a * x(k)));
        const double slack = opt.verify_lin_slack * scale;
        const bool bad = (lc.rel == Relation::LE) ? (v > slack) : (std::abs(v) > slack);
        if (bad) {
            if (why) *why = "linear row '" + lc.label + "' violated by " + std::to_string(v);
            return false;
        }
    }
    for (int k = 0; k < p.nvars(); ++k) {
        const double slack = opt.verify_lin_slack * std::max(1.0, std::abs(x(k)));
        if ((std::isfinite(p.lb(k)) && x(k) < p.lb(k) - slack) ||
            (std::isfinite(p.ub(k)) && x(k) > p.ub(k) + slack)) {
            if (why) *why = "box on " + p.var_name(k) + " violated";
            return false;
        }
    }
    return true;
}

} // namespace impl

// Solve an LMI problem: optional phase-1 feasibility probe, then objective
// minimization. Every Optimal result is re-verified before being returned;
// a failed verification after the retry is an internal error.
inline LmiSolution solve_lmi(const LmiProblem& p, SolveOptions opt = {}) {
    p.validate();
    LmiSolution sol;

    double phase1_t = std::numeric_limits<double>::quiet_NaN();
    Vector phase1_x;
    if (!opt.assume_feasible) {
        impl::Conversion cv = impl::to_phase1(p, opt);
        detail::IpmResult r = detail::solve_ipm(cv.sf, opt.ipm);
        if (!r.converged) {
            // retry once with relaxed strictness margin
            SolveOptions retry = opt;
            retry.strict_margin = opt.strict_margin / 10.0;
            impl::Conversion cv2 = impl::to_phase1(p, retry);
            detail::IpmOptions io = opt.ipm;
            io.init_scale = 100.0;
            r = detail::solve_ipm(cv2.sf, io);
            if (!r.converged) {
                sol.status = SolveStatus::NumericalFailure;
                sol.detail = "phase-1: " + r.detail;
                return sol;
            }
        }
        phase1_t = r.x(p.nvars());
        phase1_x = r.x.head(p.nvars());
        if (phase1_t > opt.infeasible_above) {
            sol.status = SolveStatus::Infeasible;
            sol.feas_margin = phase1_t;
            sol.detail = "phase-1 margin " + std::to_string(phase1_t);
            return sol;
        }
    }

    if (!p.has_objective()) {
        if (opt.assume_feasible)
            throw InvalidInputError("solve_lmi: feasibility problem requires phase 1");
        std::string why;
        if (!impl::verify_solution(p, phase1_x, opt, &why))
            throw SolverError("solve_lmi: phase-1 solution failed verification: " + why);
        sol.status = SolveStatus::Optimal;
        sol.x = phase1_x;
        sol.objective = 0.0;
        sol.feas_margin = phase1_t;
        return sol;
    }

    auto attempt = [&](double margin, double init_scale) -> detail::IpmResult {
        SolveOptions o = opt;
        o.strict_margin = margin;
        impl::Conversion cv = impl::to_std_form(p, o.strict_margin);
        cv.sf.c = Vector::Zero(p.nvars());
        for (auto& [k, a] : p.objective().terms) cv.sf.c(k) += a;
        detail::IpmOptions io = opt.ipm;
        if (init_scale > 0) io.init_scale = init_scale;
        return detail::solve_ipm(cv.sf, io);
    };

    detail::IpmResult r = attempt(opt.strict_margin, 0.0);
    std::string why;
    if (r.converged && impl::verify_solution(p, r.x, opt, &why)) {
        sol.status = SolveStatus::Optimal;
        sol.x = r.x;
        sol.objective = r.objective + p.objective().constant;
        sol.feas_margin = phase1_t;
        return sol;
    }
    detail::IpmResult r2 = attempt(opt.strict_margin / 10.0, 100.0);
    if (r2.converged && impl::verify_solution(p, r2.x, opt, &why)) {
        sol.status = SolveStatus::Optimal;
        sol.x = r2.x;
        sol.objective = r2.objective + p.objective().constant;
        sol.feas_margin = phase1_t;
        return sol;
    }
    sol.status = SolveStatus::NumericalFailure;
    sol.detail = r.converged || r2.converged ? ("verification failed: " + why)
                                             : ("ipm: " + r.detail + " / " + r2.detail);
    return sol;
}

// ============================================================================
// LP feasibility with strict inequalities
// ============================================================================

struct LpOutcome {
    bool feasible = false;
    Vector witness;
};

// Strict rows "a'x > b" are solved as "a'x >= b + strict_eps"; the shifted
// system is decided exactly in rational arithmetic.
inline LpOutcome lp_feasible(const LpProblem& p, double strict_eps) {
    if (!(strict_eps > 0))
        throw InvalidInputError("lp_feasible: strict_eps must be positive");

    using detail::Rat;
    std::vector<detail::RatRow> rows;
    auto le_row = [&](const LinExpr& lhs, double rhs) {
        detail::RatRow r;
        r.a.assign(p.nvars(), Rat(0));
        for (auto& [k, a] : lhs.terms) r.a[k] += Rat(a);
        r.b = Rat(rhs) - Rat(lhs.constant);
        rows.push_back(std::move(r));
    };
    auto ge_row = [&](const LinExpr& lhs, double rhs) {
        detail::RatRow r;
        r.a.assign(p.nvars(), Rat(0));
        for (auto& [k, a] : lhs.terms) r.a[k] -= Rat(a);
        r.b = Rat(lhs.constant) - Rat(rhs);
        rows.push_back(std::move(r));
    };

    for (const auto& row : p.rows()) {
        switch (row.rel) {
            case LpRel::LE: le_row(row.lhs, row.rhs); break;
            case LpRel::GE: ge_row(row.lhs, row.rhs); break;
            case LpRel::LT: le_row(row.lhs, row.rhs - strict_eps); break;
            case LpRel::GT: ge_row(row.lhs, row.rhs + strict_eps); break;
            case LpRel::EQ:
                le_row(row.lhs, row.rhs);
                ge_row(row.lhs, row.rhs);
                break;
        }
    }
    for (int k = 0; k < p.nvars(); ++k) {
        LinExpr e;
        e.add(VarId{k}, 1.0);
        le_row(e, p.ub(k));
        ge_row(e, p.lb(k));
    }

    detail::RatLpResult r = detail::rational_lp_feasible(p.nvars(), rows);
    LpOutcome out;
    out.feasible = r.feasible;
    if (r.feasible) {
        out.witness = Vector(p.nvars());
        for (int k = 0; k < p.nvars(); ++k)
            out.witness(k) = r.x[k].convert_to<double>();
        // independent re-check of the rounded witness against the shifted rows
        for (const auto& row : rows) {
            double v = -row.b.convert_to<double>();
            double scale = std::max(1.0, std::abs(v));
            for (int k = 0; k < p.nvars(); ++k) {
                const double term = row.a[k].convert_to<double>() * out.witness(k);
                v += term;
                scale = std::max(scale, std::abs(term));
            }
            if (v > 1e-7 * scale)
                throw SolverError("lp_feasible: witness failed verification");
        }
    }
    return out;
}

} // namespace crosslayer::conic
