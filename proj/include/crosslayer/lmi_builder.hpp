#pragma once

// Builders for the three constraint systems of the method: the offline
// synthesis conditions (dilated, in Q = P^-1, G, Y), the online per-state
// subproblem (jointly affine in the rate beta and the gain K), and the
// product linearization that pins K*diag(L) through box constraints. Also the
// algebraic routes used to cross-check them: the unbulked quadratic forms and
// the generalized-eigenvalue evaluation of the rate for a fixed gain.

#include <optional>
#include <vector>

#include "crosslayer/channel_net.hpp"
#include "crosslayer/conic.hpp"
#include "crosslayer/linalg.hpp"
#include "crosslayer/lyapunov_design.hpp"
#include "crosslayer/plant.hpp"

namespace crosslayer {

// ============================================================================
// Offline synthesis conditions
// ============================================================================

struct OfflineLmiSpec {
    conic::LmiProblem problem;
    std::vector<conic::MatrixVar> q; // size s, q[i-1] is the inverse Lyapunov matrix
    std::vector<conic::MatrixVar> g; // size s
    std::vector<conic::MatrixVar> y; // size s
};

// Feasibility system over (Q_i, G_i, Y_i) with the cyclic convention
// Q_0 = Q_s. Both matrix inequalities are strict; Q_i > 0 is enforced as its
// own strict block.
inline OfflineLmiSpec build_offline(const PplsSystem& sys, const Vector& alpha) {
    const int s = sys.subsystem_count();
    const int n = sys.n();
    if (alpha.size() != s) throw InvalidInputError("build_offline: alpha size mismatch");
    for (int i = 0; i < s; ++i)
        if (!(alpha(i) > 0)) throw InvalidInputError("build_offline: alpha must be positive");

    OfflineLmiSpec spec;
    auto& p = spec.problem;
    for (int i = 1; i <= s; ++i) {
        spec.q.push_back(p.add_matrix("Q" + std::to_string(i), n, n, /*symmetric=*/true));
        spec.g.push_back(p.add_matrix("G" + std::to_string(i), n, n));
        spec.y.push_back(p.add_matrix("Y" + std::to_string(i), sys.nu(), n));
    }
    auto q_of = [&](int i) -> const conic::MatrixVar& { // i in 0..s, cyclic
        return spec.q[(i + s - 1) % s];
    };

    const Matrix eye = Matrix::Identity(n, n);
    for (int i = 1; i <= s; ++i) {
        const auto& sub = sys.sub(i);
        const double t = sub.dwell;
        const double a = alpha(i - 1);
        const auto& qprev = q_of(i - 1);
        const auto& qcur = q_of(i);
        const auto& gi = spec.g[i - 1];
        const auto& yi = spec.y[i - 1];

        {
            auto& blk = p.add_lmi(3 * n, /*strict=*/true, "dwell-entry " + std::to_string(i));
            const double c1 = (t + 1.0) / t * a;
            blk.add_var(0, 0, c1, qprev);
            blk.add_var(0, 0, -c1, gi, /*transpose=*/true);
            blk.add_var(0, 0, -c1, gi);
            blk.add_mat(n, 0, 1.0, sub.a, gi, false, eye);
            blk.add_mat(n, 0, 1.0, sub.b, yi, false, eye);
            blk.add_var(n, n, -1.0, qprev);
            blk.add_var(2 * n, 0, 1.0, gi);
            blk.add_var(2 * n, 2 * n, -t / a, qcur);
        }
        {
            auto& blk = p.add_lmi(2 * n, /*strict=*/true, "dwell-exit " + std::to_string(i));
            blk.add_var(0, 0, (t - 1.0) / t * a, qcur);
            blk.add_var(0, 0, a / t, qprev);
            blk.add_var(0, 0, -a, gi, /*transpose=*/true);
            blk.add_var(0, 0, -a, gi);
            blk.add_mat(n, 0, 1.0, sub.a, gi, false, eye);
            blk.add_mat(n, 0, 1.0, sub.b, yi, false, eye);
            blk.add_var(n, n, -1.0, qcur);
        }
        {
            auto& blk = p.add_lmi(n, /*strict=*/true, "Q" + std::to_string(i) + " pd");
            blk.add_var(0, 0, -1.0, spec.q[i - 1]);
        }
    }
    return spec;
}

// ============================================================================
// Online per-state subproblem
// ============================================================================

struct OnlineSubproblem {
    conic::LmiProblem problem;
    conic::VarId beta;
    conic::MatrixVar gain;
};

namespace builder_detail {

struct SqrtPair {
    Matrix root;     // P^(1/2)
    Matrix inv_root; // P^(-1/2)
};

inline SqrtPair sym_sqrt(const SymMatrix& p) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(p.m());
    if (es.info() != Eigen::Success || es.eigenvalues()(0) <= 0)
        throw ConditioningError("sym_sqrt: matrix not positive definite",
                                std::numeric_limits<double>::infinity());
    const Vector r = es.eigenvalues().cwiseSqrt();
    return {es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose(),
            es.eigenvectors() * r.cwiseInverse().asDiagonal() *
                es.eigenvectors().transpose()};
}

} // namespace builder_detail

// min beta over (beta, K): two non-strict matrix inequalities, affine in
// both variables; K enters through A + B K diag(L). Each inequality is
// whitened by congruence with the inverse square root of its Lyapunov matrix
// (the lower-right block becomes -I), which keeps the subproblem well
// conditioned even when the design matrices have a wide eigenvalue spread.
// The gain box is optional so the enumeration route can be run with and
// without it.
inline OnlineSubproblem build_online(const Subsystem& sub, const SymMatrix& p_prev,
                                     const SymMatrix& p_cur, const ChannelState& l,
                                     double k_bar, bool k_box_active = true) {
    const int n = static_cast<int>(sub.a.rows());
    const int nu = static_cast<int>(sub.b.cols());
    if (l.n() != n) throw InvalidInputError("build_online: channel state size mismatch");
    if (p_prev.dim() != n || p_cur.dim() != n)
        throw InvalidInputError("build_online: P dimension mismatch");
    if (k_box_active && !(k_bar > 0))
        throw InvalidInputError("build_online: gain bound must be positive");

    const double t = sub.dwell;
    const auto wprev = builder_detail::sym_sqrt(p_prev);
    const auto wcur = builder_detail::sym_sqrt(p_cur);

    OnlineSubproblem sp;
    auto& p = sp.problem;
    sp.beta = p.add_scalar("beta", 0.0, conic::kInf);
    sp.gain = p.add_matrix("K", nu, n, /*symmetric=*/false,
                           k_box_active ? -k_bar : -conic::kInf,
                           k_box_active ? k_bar : conic::kInf);

    const Matrix ldiag = l.diagonal();
    const Matrix m_entry = (-(t + 1.0) / t) * p_prev.m() + (1.0 / t) * p_cur.m();
    const Matrix m_exit = (-(t - 1.0) / t) * p_cur.m() - (1.0 / t) * p_prev.m();
    {
        auto& blk = p.add_lmi(2 * n, false, "rate-entry");
        blk.add_scaled(0, 0, sp.beta,
                       Matrix(wprev.inv_root * m_entry * wprev.inv_root));
        blk.add_const(n, 0, Matrix(wprev.root * sub.a * wprev.inv_root));
        blk.add_mat(n, 0, 1.0, Matrix(wprev.root * sub.b), sp.gain, false,
                    Matrix(ldiag * wprev.inv_root));
        blk.add_const(n, n, Matrix(-Matrix::Identity(n, n)));
    }
    {
        auto& blk = p.add_lmi(2 * n, false, "rate-exit");
        blk.add_scaled(0, 0, sp.beta, Matrix(wcur.inv_root * m_exit * wcur.inv_root));
        blk.add_const(n, 0, Matrix(wcur.root * sub.a * wcur.inv_root));
        blk.add_mat(n, 0, 1.0, Matrix(wcur.root * sub.b), sp.gain, false,
                    Matrix(ldiag * wcur.inv_root));
        blk.add_const(n, n, Matrix(-Matrix::Identity(n, n)));
    }
    conic::LinExpr obj;
    obj.add(sp.beta, 1.0);
    p.set_objective(obj);
    return sp;
}

struct OnlineResult {
    double beta = 0.0;
    Matrix gain;
};

// Solve the per-state subproblem. Strict feasibility holds for any channel
// state once (T+1)P_prev - P_cur > 0 (a consequence of the offline design),
// so phase 1 is skipped; a failed solve falls back to the probing path.
inline OnlineResult solve_online(const Subsystem& sub, const SymMatrix& p_prev,
                                 const SymMatrix& p_cur, const ChannelState& l,
                                 double k_bar, bool k_box_active = true) {
    OnlineSubproblem sp = build_online(sub, p_prev, p_cur, l, k_bar, k_box_active);
    conic::SolveOptions opt;
    opt.assume_feasible = true;
    conic::LmiSolution sol = conic::solve_lmi(sp.problem, opt);
    if (!sol.ok()) {
        opt.assume_feasible = false;
        sol = conic::solve_lmi(sp.problem, opt);
    }
    if (!sol.ok())
        throw SolverError("solve_online failed for state " + l.str() + ": " + sol.detail);
    return {sol.value(sp.beta), sol.value(sp.gain)};
}

// Unbulked quadratic forms of the two rate conditions, as PSD checks.
inline bool schur_forms_hold(const Subsystem& sub, const SymMatrix& p_prev,
                             const SymMatrix& p_cur, const ChannelState& l,
                             const Matrix& gain, double beta, double slack) {
    const double t = sub.dwell;
    const Matrix acl = sub.a + sub.b * gain * l.diagonal();
    const Matrix lhs1 = (beta / t) * ((t + 1.0) * p_prev.m() - p_cur.m()) -
                        acl.transpose() * p_prev.m() * acl;
    const Matrix lhs2 = (beta / t) * (p_prev.m() + (t - 1.0) * p_cur.m()) -
                        acl.transpose() * p_cur.m() * acl;
    return is_psd_raw(lhs1, slack) && is_psd_raw(lhs2, slack);
}

// Smallest feasible rate for a fixed gain, by generalized eigenvalues of the
// unbulked forms. Exact counterpart of the SDP route when K is not free.
inline double beta_for_fixed_gain(const Subsystem& sub, const SymMatrix& p_prev,
                                  const SymMatrix& p_cur, const ChannelState& l,
                                  const Matrix& gain) {
    const double t = sub.dwell;
    const Matrix acl = sub.a + sub.b * gain * l.diagonal();
    const Matrix s1 = ((t + 1.0) * p_prev.m() - p_cur.m()) / t;
    const Matrix s2 = (p_prev.m() + (t - 1.0) * p_cur.m()) / t;

    auto lambda_max_whitened = [](const Matrix& c, const Matrix& s) {
        Eigen::LLT<Matrix> llt(s);
        if (llt.info() != Eigen::Success)
            throw ConditioningError("beta_for_fixed_gain: scale matrix not positive "
                                    "definite; offline design invalid here",
                                    std::numeric_limits<double>::infinity());
        const Matrix lm = llt.matrixL();
        Matrix w = lm.triangularView<Eigen::Lower>().solve(c);
        w = lm.triangularView<Eigen::Lower>().solve(w.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(w), Eigen::EigenvaluesOnly);
        return es.eigenvalues().maxCoeff();
    };
    const double b1 = lambda_max_whitened(acl.transpose() * p_prev.m() * acl, s1);
    const double b2 = lambda_max_whitened(acl.transpose() * p_cur.m() * acl, s2);
    return std::max({b1, b2, 0.0});
}

// ============================================================================
// Product linearization of K * diag(L)
// ============================================================================

// Box system forcing the shifted product variable: for each entry (p, q),
//   0 <= Q_pq <= 2k,  Q_pq <= 2k*l_q,  Q_pq - K_pq <= k,  Q_pq - K_pq >= k(2l_q - 1),
// so that Q - k*1*diag(L) takes the value K*diag(L) whenever |K_pq| <= k.
struct ProductEncoding {
    double k_bar = 0.0;
    ChannelState l;

    struct Interval {
        double lo = 0.0, hi = 0.0;
        bool empty() const { return lo > hi + 1e-12; }
        double width() const { return hi - lo; }
    };

    // Feasible interval of Q_pq given a numeric gain entry.
    Interval feasible_interval(double k_entry, int col) const {
        const int lq = l.l[col];
        const double lo = std::max(0.0, k_entry - k_bar + 2.0 * k_bar * lq);
        const double hi =
            std::min({2.0 * k_bar, 2.0 * k_bar * static_cast<double>(lq), k_entry + k_bar});
        return {lo, hi};
    }

    // The value the linearization is meant to reproduce: K_pq * l_q after the
    // k*1*L shift is removed.
    double target_product(double k_entry, int col) const { return k_entry * l.l[col]; }
    double shift(int col) const { return k_bar * l.l[col]; }
};

inline ProductEncoding build_product_encoding(double k_bar, const ChannelState& l) {
    if (!(k_bar > 0)) throw InvalidInputError("build_product_encoding: bound must be positive");
    return {k_bar, l, };
}

// ============================================================================
// Per-step rate contract verification
// ============================================================================

struct RateRecord {
    long k = 0;
    double v = 0.0;      // V at step k
    double v_next = 0.0; // V at step k+1
    double rate = 0.0;   // alpha_i or beta*
    bool attacked = false;
};

struct RateReport {
    std::vector<long> violations;
    double worst_excess = 0.0; // max of v_next/(rate*v) - 1 over checked steps
    bool ok() const { return violations.empty(); }
};

inline RateReport verify_rate_contract(const std::vector<RateRecord>& records,
                                       double slack = 1e-6) {
    RateReport rep;
    for (const auto& r : records) {
        if (r.v <= 0.0) {
            if (r.v_next > 1e-18) rep.violations.push_back(r.k);
            continue;
        }
        const double excess = r.v_next / (r.rate * r.v) - 1.0;
        rep.worst_excess = std::max(rep.worst_excess, excess);
        if (r.v_next > r.rate * r.v * (1.0 + slack)) rep.violations.push_back(r.k);
    }
    return rep;
}

} // namespace crosslayer
