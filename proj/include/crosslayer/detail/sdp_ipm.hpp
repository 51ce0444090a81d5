#pragma once

// Primal-dual interior-point method for block-diagonal semidefinite programs
// in inequality ("LMI") form:
//
//     minimize    c'x
//     subject to  F0_b + sum_k x_k Fk_b  <=  0   (negative semidefinite),
//                 f0_r + a_r'x          <=  0    (scalar rows).
//
// The method is the standard infeasible-start path follower with the HKM
// direction and a Mehrotra predictor-corrector, maintaining a dual multiplier
// X_b > 0 per block and the slack Z_b = -(F0_b + sum x_k Fk_b) > 0. Scalar
// rows are handled as a diagonal block with elementwise arithmetic. All
// arithmetic is deterministic, so identical problems produce identical
// iterates.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "crosslayer/linalg.hpp"

namespace crosslayer::conic::detail {

struct DenseBlock {
    Matrix f0;
    std::vector<std::pair<int, Matrix>> coeff; // (var index, Fk)
};

struct DiagRow {
    double f0 = 0.0;
    std::vector<std::pair<int, double>> a;

    double eval(const Vector& x) const {
        double s = f0;
        for (auto& [k, v] : a) s += v * x(k);
        return s;
    }
};

struct StdForm {
    int nvars = 0;
    Vector c;
    std::vector<DenseBlock> blocks;
    std::vector<DiagRow> rows;
};

struct IpmOptions {
    int max_iters = 150;
    double tol_gap = 1e-9;
    double tol_feas = 1e-9;
    double step_frac = 0.98;
    double init_scale = 0.0; // 0 => auto
    bool trace = false;
};

struct IpmResult {
    bool converged = false;
    Vector x;
    double objective = 0.0;
    int iters = 0;
    double gap = 0.0, pinf = 0.0, dinf = 0.0;
    std::string detail;
};

inline double min_eig_sym(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// Largest alpha in (0, cap] with X + alpha*D > 0, X > 0 given by Cholesky.
inline double psd_step(const Eigen::LLT<Matrix>& llt, const Matrix& d, double cap) {
    const Matrix l = llt.matrixL();
    Matrix y = l.triangularView<Eigen::Lower>().solve(d);
    y = l.triangularView<Eigen::Lower>().solve(y.transpose()).eval();
    const double lmin = min_eig_sym(y);
    if (lmin >= -1e-14) return cap;
    return std::min(cap, -1.0 / lmin);
}

class IpmSolver {
public:
    IpmSolver(const StdForm& sf, const IpmOptions& opt) : sf_(sf), opt_(opt) {}

    IpmResult solve() {
        const int m = sf_.nvars;
        const int nb = static_cast<int>(sf_.blocks.size());
        const int nr = static_cast<int>(sf_.rows.size());
        ngap_ = nr;
        for (const auto& b : sf_.blocks) ngap_ += static_cast<int>(b.f0.rows());

        // -- initial point ---------------------------------------------------
        double data_scale = 1.0;
        for (const auto& b : sf_.blocks)
            data_scale = std::max(data_scale, b.f0.cwiseAbs().maxCoeff());
        for (const auto& r : sf_.rows) data_scale = std::max(data_scale, std::abs(r.f0));
        const double init = opt_.init_scale > 0 ? opt_.init_scale
                                                : std::max(10.0, 2.0 * data_scale);
        const double init_x = std::max(10.0, sf_.c.size() ? sf_.c.cwiseAbs().maxCoeff() : 1.0);

        x_ = Vector::Zero(m);
        xb_.resize(nb);
        zb_.resize(nb);
        for (int b = 0; b < nb; ++b) {
            const int d = static_cast<int>(sf_.blocks[b].f0.rows());
            xb_[b] = init_x * Matrix::Identity(d, d);
            zb_[b] = init * Matrix::Identity(d, d);
        }
        xr_ = Vector::Constant(nr, init_x);
        zr_ = Vector::Constant(nr, init);

        IpmResult res;
        int stalled = 0;
        for (int it = 0; it < opt_.max_iters; ++it) {
            res.iters = it;
            // -- residuals and convergence test -------------------------------
            compute_residuals();
            const double pobj = sf_.c.dot(x_);
            double dobj = 0.0;
            for (int b = 0; b < nb; ++b) dobj += (sf_.blocks[b].f0.array() * xb_[b].array()).sum();
            for (int r = 0; r < nr; ++r) dobj += sf_.rows[r].f0 * xr_(r);
            const double gap = dot_gap();
            const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
            // the attainable residual floor scales with the multiplier norms
            double xnorm = 0.0;
            for (int b = 0; b < nb; ++b) xnorm = std::max(xnorm, xb_[b].cwiseAbs().maxCoeff());
            for (int r = 0; r < nr; ++r) xnorm = std::max(xnorm, xr_(r));
            const double cn =
                1.0 + (sf_.c.size() ? sf_.c.cwiseAbs().maxCoeff() : 0.0) + xnorm;
            const double pinf = rp_.cwiseAbs().maxCoeff() / cn;
            double dinf = 0.0;
            for (int b = 0; b < nb; ++b)
                dinf = std::max(dinf, rd_[b].cwiseAbs().maxCoeff() /
                                          (1.0 + sf_.blocks[b].f0.cwiseAbs().maxCoeff()));
            for (int r = 0; r < nr; ++r)
                dinf = std::max(dinf, std::abs(rdr_(r)) / (1.0 + std::abs(sf_.rows[r].f0)));

            res.gap = relgap;
            res.pinf = pinf;
            res.dinf = dinf;
            if (opt_.trace)
                fprintf(stderr, "it %3d  pobj % .6e  dobj % .6e  gap %.2e  pinf %.2e  dinf %.2e  mu %.2e\n",
                        it, pobj, dobj, relgap, pinf, dinf, gap / ngap_);
            if (relgap <= opt_.tol_gap && pinf <= opt_.tol_feas && dinf <= opt_.tol_feas &&
                gap / ngap_ <= 1e-7 * (1.0 + std::abs(pobj))) {
                res.converged = true;
                res.x = x_;
                res.objective = pobj;
                return res;
            }
            // track the best iterate so a late stall can still hand back a
            // usable point
            const double score = std::max({relgap, pinf, dinf});
            if (score < best_score_) {
                best_score_ = score;
                best_x_ = x_;
                best_obj_ = pobj;
                since_best_ = 0;
            } else if (++since_best_ >= 8) {
                if (best_score_ <= 100.0 * std::max(opt_.tol_gap, opt_.tol_feas)) {
                    res.converged = true;
                    res.x = best_x_;
                    res.objective = best_obj_;
                    res.detail = "accepted stalled iterate";
                    return res;
                }
                res.detail = "stalled without reaching tolerance";
                break;
            }

            const double mu = gap / ngap_;

            // -- factorizations ----------------------------------------------
            if (!factorize()) {
                res.detail = "slack factorization failed";
                break;
            }
            if (!build_schur()) {
                res.detail = "schur factorization failed";
                break;
            }

            // -- predictor ----------------------------------------------------
            for (int b = 0; b < nb; ++b) rc_[b] = -(zb_[b] * xb_[b]);
            for (int r = 0; r < nr; ++r) rcr_(r) = -zr_(r) * xr_(r);
            Direction aff = compute_direction();
            double apa = step_length_x(aff);
            double ada = step_length_z(aff);

            double mu_aff = 0.0;
            for (int b = 0; b < nb; ++b)
                mu_aff += ((xb_[b] + apa * aff.dxb[b]).array() *
                           (zb_[b] + ada * aff.dzb[b]).array())
                              .sum();
            for (int r = 0; r < nr; ++r)
                mu_aff += (xr_(r) + apa * aff.dxr(r)) * (zr_(r) + ada * aff.dzr(r));
            mu_aff = std::max(mu_aff / ngap_, 0.0);
            double sigma = std::pow(mu_aff / mu, 3);
            sigma = std::clamp(sigma, 1e-10, 1.0);

            // -- corrector ----------------------------------------------------
            for (int b = 0; b < nb; ++b) {
                const int d = static_cast<int>(zb_[b].rows());
                rc_[b] = sigma * mu * Matrix::Identity(d, d) - zb_[b] * xb_[b] -
                         aff.dzb[b] * aff.dxb[b];
            }
            for (int r = 0; r < nr; ++r)
                rcr_(r) = sigma * mu - zr_(r) * xr_(r) - aff.dzr(r) * aff.dxr(r);
            Direction dir = compute_direction();
            double ap = opt_.step_frac * step_length_x(dir);
            double ad = opt_.step_frac * step_length_z(dir);
            ap = std::min(ap, 1.0);
            ad = std::min(ad, 1.0);

            // keep both cone points factorizable after the step: back off on
            // rounding-induced boundary grazes
            ap = backtrack_psd(xb_, dir.dxb, xr_, dir.dxr, ap);
            ad = backtrack_psd(zb_, dir.dzb, zr_, dir.dzr, ad);

            // safeguard against corrupted directions near degenerate faces:
            // a step must not blow the complementarity products up
            for (int guard = 0; guard < 12; ++guard) {
                double mu_new = 0.0;
                for (int b = 0; b < nb; ++b)
                    mu_new += ((xb_[b] + ap * dir.dxb[b]).array() *
                               (zb_[b] + ad * dir.dzb[b]).array())
                                  .sum();
                for (int r = 0; r < nr; ++r)
                    mu_new += (xr_(r) + ap * dir.dxr(r)) * (zr_(r) + ad * dir.dzr(r));
                mu_new /= ngap_;
                if (mu_new <= 5.0 * mu || (ap < 1e-8 && ad < 1e-8)) break;
                ap *= 0.5;
                ad *= 0.5;
            }

            if (ap < 1e-10 && ad < 1e-10) {
                if (++stalled >= 3) {
                    res.detail = "step length collapsed";
                    break;
                }
            } else {
                stalled = 0;
            }

            x_ += ad * dir.dx; // x moves with the slack side (dual variables of IPM)
            for (int b = 0; b < nb; ++b) {
                xb_[b] = symmetrize(xb_[b] + ap * dir.dxb[b]);
                zb_[b] = symmetrize(zb_[b] + ad * dir.dzb[b]);
            }
            xr_ += ap * dir.dxr;
            zr_ += ad * dir.dzr;
        }

        res.converged = false;
        res.x = x_;
        res.objective = sf_.c.dot(x_);
        if (res.detail.empty()) res.detail = "iteration limit reached";
        return res;
    }

private:
    struct Direction {
        Vector dx;
        std::vector<Matrix> dxb, dzb;
        Vector dxr, dzr;
    };

    void compute_residuals() {
        const int m = sf_.nvars;
        const int nb = static_cast<int>(sf_.blocks.size());
        const int nr = static_cast<int>(sf_.rows.size());
        rp_ = -sf_.c;
        for (int b = 0; b < nb; ++b)
            for (auto& [k, fk] : sf_.blocks[b].coeff)
                rp_(k) -= (fk.array() * xb_[b].array()).sum();
        for (int r = 0; r < nr; ++r)
            for (auto& [k, v] : sf_.rows[r].a) rp_(k) -= v * xr_(r);

        rd_.resize(nb);
        rc_.resize(nb);
        for (int b = 0; b < nb; ++b) {
            Matrix s = -sf_.blocks[b].f0;
            for (auto& [k, fk] : sf_.blocks[b].coeff) s -= x_(k) * fk;
            rd_[b] = s - zb_[b];
        }
        rdr_.resize(nr);
        rcr_.resize(nr);
        for (int r = 0; r < nr; ++r) rdr_(r) = -sf_.rows[r].eval(x_) - zr_(r);
        (void)m;
    }

    double dot_gap() const {
        double g = 0.0;
        for (size_t b = 0; b < xb_.size(); ++b)
            g += (xb_[b].array() * zb_[b].array()).sum();
        g += xr_.dot(zr_);
        return g;
    }

    bool factorize() {
        const int nb = static_cast<int>(sf_.blocks.size());
        lltx_.resize(nb);
        lltz_.resize(nb);
        zinv_.resize(nb);
        for (int b = 0; b < nb; ++b) {
            lltz_[b].compute(zb_[b]);
            if (lltz_[b].info() != Eigen::Success) return false;
            const int d = static_cast<int>(zb_[b].rows());
            zinv_[b] = lltz_[b].solve(Matrix::Identity(d, d));
            lltx_[b].compute(xb_[b]);
            if (lltx_[b].info() != Eigen::Success) return false;
        }
        for (int r = 0; r < static_cast<int>(sf_.rows.size()); ++r)
            if (zr_(r) <= 0 || xr_(r) <= 0) return false;
        return true;
    }

    bool build_schur() {
        const int m = sf_.nvars;
        Matrix schur = Matrix::Zero(m, m);
        wcache_.clear();
        wcache_.resize(sf_.blocks.size());
        for (size_t b = 0; b < sf_.blocks.size(); ++b) {
            const auto& coeff = sf_.blocks[b].coeff;
            auto& ws = wcache_[b];
            ws.reserve(coeff.size());
            for (auto& [j, fj] : coeff) ws.push_back(zinv_[b] * fj * xb_[b]);
            for (size_t p = 0; p < coeff.size(); ++p)
                for (size_t q = 0; q < coeff.size(); ++q) {
                    const int k = coeff[p].first;
                    const int j = coeff[q].first;
                    if (k > j) continue; // fill upper, symmetrize below
                    schur(k, j) += (coeff[p].second.array() * ws[q].array()).sum();
                }
        }
        for (size_t r = 0; r < sf_.rows.size(); ++r) {
            const double q = xr_(r) / zr_(r);
            const auto& a = sf_.rows[r].a;
            for (auto& [k, vk] : a)
                for (auto& [j, vj] : a)
                    if (k <= j) schur(k, j) += q * vk * vj;
        }
        schur = schur.selfadjointView<Eigen::Upper>();
        schur_ = schur;

        // tiny ridge keeps the factorization alive on degenerate optimal faces
        const double ridge0 = 1e-13 * (1.0 + schur.diagonal().cwiseAbs().maxCoeff());
        for (int attempt = 0; attempt < 6; ++attempt) {
            Matrix reg = schur + (attempt == 0 ? 0.0 : ridge0 * std::pow(100.0, attempt - 1)) *
                                     Matrix::Identity(m, m);
            schur_ldlt_.compute(reg);
            if (schur_ldlt_.info() == Eigen::Success &&
                (schur_ldlt_.vectorD().array() > 0).all())
                return true;
        }
        return false;
    }

    // one round of iterative refinement against the unregularized matrix
    Vector refined_solve(const Vector& rhs) const {
        Vector dx = schur_ldlt_.solve(rhs);
        const Vector resid = rhs - schur_ * dx;
        dx += schur_ldlt_.solve(resid);
        return dx;
    }

    Direction compute_direction() {
        const int nb = static_cast<int>(sf_.blocks.size());
        const int nr = static_cast<int>(sf_.rows.size());

        Vector rhs = rp_;
        for (int b = 0; b < nb; ++b) {
            const Matrix zirc = zinv_[b] * rc_[b];
            const Matrix zirdx = zinv_[b] * rd_[b] * xb_[b];
            for (auto& [k, fk] : sf_.blocks[b].coeff)
                rhs(k) += -(fk.array() * zirc.array()).sum() +
                          (fk.array() * zirdx.array()).sum();
        }
        for (int r = 0; r < nr; ++r) {
            const double t = -rcr_(r) / zr_(r) + rdr_(r) * xr_(r) / zr_(r);
            for (auto& [k, v] : sf_.rows[r].a) rhs(k) += v * t;
        }

        Direction dir;
        dir.dx = refined_solve(rhs);
        dir.dxb.resize(nb);
        dir.dzb.resize(nb);
        for (int b = 0; b < nb; ++b) {
            Matrix dz = rd_[b];
            for (auto& [k, fk] : sf_.blocks[b].coeff) dz -= dir.dx(k) * fk;
            dir.dzb[b] = symmetrize(dz);
            Matrix dx = zinv_[b] * (rc_[b] - dir.dzb[b] * xb_[b]);
            dir.dxb[b] = symmetrize(dx);
        }
        dir.dxr.resize(nr);
        dir.dzr.resize(nr);
        for (int r = 0; r < nr; ++r) {
            double dz = rdr_(r);
            for (auto& [k, v] : sf_.rows[r].a) dz -= dir.dx(k) * v;
            dir.dzr(r) = dz;
            dir.dxr(r) = (rcr_(r) - dz * xr_(r)) / zr_(r);
        }
        return dir;
    }

    static double backtrack_psd(const std::vector<Matrix>& blocks,
                                const std::vector<Matrix>& deltas, const Vector& rows,
                                const Vector& drows, double alpha) {
        for (int attempt = 0; attempt < 40 && alpha > 1e-12; ++attempt) {
            bool ok = true;
            for (size_t b = 0; b < blocks.size() && ok; ++b) {
                Eigen::LLT<Matrix> llt(symmetrize(blocks[b] + alpha * deltas[b]));
                ok = llt.info() == Eigen::Success;
            }
            for (int r = 0; r < rows.size() && ok; ++r)
                ok = rows(r) + alpha * drows(r) > 0;
            if (ok) return alpha;
            alpha *= 0.7;
        }
        return 0.0;
    }

    double step_length_x(const Direction& dir) {
        double a = 1.0 / 0.98; // allow full step after fraction scaling
        for (size_t b = 0; b < xb_.size(); ++b)
            a = std::min(a, psd_step(lltx_[b], dir.dxb[b], a));
        for (int r = 0; r < xr_.size(); ++r)
            if (dir.dxr(r) < 0) a = std::min(a, -xr_(r) / dir.dxr(r));
        return a;
    }
    double step_length_z(const Direction& dir) {
        double a = 1.0 / 0.98;
        for (size_t b = 0; b < zb_.size(); ++b)
            a = std::min(a, psd_step(lltz_[b], dir.dzb[b], a));
        for (int r = 0; r < zr_.size(); ++r)
            if (dir.dzr(r) < 0) a = std::min(a, -zr_(r) / dir.dzr(r));
        return a;
    }

    const StdForm& sf_;
    IpmOptions opt_;
    int ngap_ = 0;

    Vector x_;
    std::vector<Matrix> xb_, zb_;
    Vector xr_, zr_;

    Vector rp_;
    std::vector<Matrix> rd_, rc_;
    Vector rdr_, rcr_;

    std::vector<Eigen::LLT<Matrix>> lltx_, lltz_;
    std::vector<Matrix> zinv_;
    std::vector<std::vector<Matrix>> wcache_;
    Matrix schur_;
    Eigen::LDLT<Matrix> schur_ldlt_;

    double best_score_ = std::numeric_limits<double>::infinity();
    Vector best_x_;
    double best_obj_ = 0.0;
    int since_best_ = 0;
};

inline IpmResult solve_ipm(const StdForm& sf, const IpmOptions& opt = {}) {
    return IpmSolver(sf, opt).solve();
}

} // namespace crosslayer::conic::detail
