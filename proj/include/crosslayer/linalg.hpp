#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "crosslayer/errors.hpp"

namespace crosslayer {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// ============================================================================
// SymMatrix: checked symmetric matrix value
// ============================================================================
// Solver outputs carry asymmetric round-off; construction symmetrizes as
// (M + M^T)/2 after verifying the asymmetry is below tolerance.

class SymMatrix {
public:
    static constexpr double kSymmetryTol = 1e-12;

    SymMatrix() = default;

    explicit SymMatrix(const Matrix& m, double tol = kSymmetryTol) {
        if (m.rows() != m.cols() || m.rows() == 0)
            throw InvalidInputError("SymMatrix: matrix must be square and non-empty");
        if (!m.allFinite())
            throw InvalidInputError("SymMatrix: non-finite entries");
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
        if (asym > tol * scale)
            throw InvalidInputError("SymMatrix: asymmetry " + std::to_string(asym) +
                                    " exceeds tolerance");
        m_ = symmetrize(m);
    }

    static SymMatrix identity(int n) { return SymMatrix(Matrix::Identity(n, n)); }
    static SymMatrix zero(int n) { return SymMatrix(Matrix::Zero(n, n)); }
    static SymMatrix diag(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& m() const { return m_; }
    double operator()(int r, int c) const { return m_(r, c); }

private:
    Matrix m_;
};

struct EigExtrema {
    double min_eig = 0.0;
    double max_eig = 0.0;
};

// Smallest and largest eigenvalue of a symmetric matrix.
inline EigExtrema eig_extrema(const SymMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.m(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw SolverError("eig_extrema: eigensolver failed to converge");
    const Vector& ev = es.eigenvalues();
    return {ev(0), ev(ev.size() - 1)};
}

inline Vector eigenvalues(const SymMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.m(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw SolverError("eigenvalues: eigensolver failed to converge");
    return es.eigenvalues();
}

// Inverse of a well-conditioned symmetric positive definite matrix.
// Requires min eigenvalue > 1e-9 * max|entry|; throws ConditioningError with a
// condition estimate otherwise.
inline SymMatrix invert(const SymMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.m());
    if (es.info() != Eigen::Success)
        throw SolverError("invert: eigensolver failed to converge");
    const Vector& ev = es.eigenvalues();
    const double max_abs = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    const double tol = 1e-9 * std::max(1e-300, m.m().cwiseAbs().maxCoeff());
    if (ev(0) <= tol) {
        const double cond = ev(0) > 0 ? max_abs / ev(0)
                                      : std::numeric_limits<double>::infinity();
        throw ConditioningError("invert: matrix not safely positive definite "
                                "(min eigenvalue " + std::to_string(ev(0)) + ")",
                                cond);
    }
    const Matrix inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                       es.eigenvectors().transpose();
    return SymMatrix(symmetrize(inv), 1e-9);
}

// True iff min eigenvalue >= -slack.
inline bool is_psd(const SymMatrix& m, double slack) {
    if (slack < 0)
        throw InvalidInputError("is_psd: slack must be nonnegative");
    return eig_extrema(m).min_eig >= -slack;
}

// Default PSD slack, scaled by the matrix magnitude (conic solver accuracy is
// around 1e-8).
inline double default_psd_slack(const Matrix& m) {
    return 1e-8 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

// is_psd on a raw (possibly slightly asymmetric) matrix: symmetrizes first.
inline bool is_psd_raw(const Matrix& m, double slack) {
    return is_psd(SymMatrix(symmetrize(m)), slack);
}

inline double quad_form(const SymMatrix& p, const Vector& x) {
    return x.dot(p.m() * x);
}

// Condition number estimate for a general square matrix (SVD based).
inline double condition_estimate(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return svd.singularValues()(0) / smin;
}

} // namespace crosslayer
