#pragma once

#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "crosslayer/errors.hpp"
#include "crosslayer/linalg.hpp"

namespace crosslayer::conic {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Flat scalar decision variable handle.
struct VarId {
    int index = -1;
    bool valid() const { return index >= 0; }
};

// Affine scalar expression: constant + sum coef * var.
struct LinExpr {
    double constant = 0.0;
    std::vector<std::pair<int, double>> terms;

    LinExpr() = default;
    /*implicit*/ LinExpr(double c) : constant(c) {}
    /*implicit*/ LinExpr(VarId v) { terms.emplace_back(v.index, 1.0); }

    LinExpr& add(VarId v, double coef) {
        terms.emplace_back(v.index, coef);
        return *this;
    }
    LinExpr& add(double c) {
        constant += c;
        return *this;
    }
    double eval(const Vector& x) const {
        double s = constant;
        for (auto& [k, a] : terms) s += a * x(k);
        return s;
    }
};

// Matrix-valued variable: a grid of scalar variables. Symmetric variables
// share one scalar per unordered index pair.
class MatrixVar {
public:
    MatrixVar() = default;
    MatrixVar(std::string name, int rows, int cols, bool symmetric, int first_index)
        : name_(std::move(name)), rows_(rows), cols_(cols), symmetric_(symmetric) {
        if (symmetric_ && rows_ != cols_)
            throw InvalidInputError("MatrixVar: symmetric variable must be square");
        ids_.resize(rows_ * cols_, -1);
        int idx = first_index;
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) {
                if (symmetric_ && j < i) {
                    ids_[i * cols_ + j] = ids_[j * cols_ + i];
                } else {
                    ids_[i * cols_ + j] = idx++;
                }
            }
        count_ = idx - first_index;
    }

    const std::string& name() const { return name_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool symmetric() const { return symmetric_; }
    int scalar_count() const { return count_; }
    VarId entry(int i, int j) const { return VarId{ids_[i * cols_ + j]}; }

    Matrix value(const Vector& x) const {
        Matrix m(rows_, cols_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) m(i, j) = x(ids_[i * cols_ + j]);
        return m;
    }

private:
    std::string name_;
    int rows_ = 0, cols_ = 0;
    bool symmetric_ = false;
    int count_ = 0;
    std::vector<int> ids_;
};

// ============================================================================
// LmiBlock: one symmetric matrix constraint  F0 + sum_k x_k Fk <= 0
// ============================================================================
// Terms are placed at block offsets. Placing at (r0, c0) with r0 != c0 also
// places the transposed term at (c0, r0), mirroring the paper-style "*"
// ellipsis. Diagonal placements are taken literally, so symmetric content
// (e.g. -G - G^T) must be placed term by term. finalize() checks that every
// assembled coefficient matrix is symmetric.

class LmiBlock {
public:
    LmiBlock(int dim, bool strict, std::string label)
        : dim_(dim), strict_(strict), label_(std::move(label)),
          f0_(Matrix::Zero(dim, dim)) {}

    int dim() const { return dim_; }
    bool strict() const { return strict_; }
    const std::string& label() const { return label_; }

    void add_const(int r0, int c0, const Matrix& c) {
        place(r0, c0, c, [&](int r, int cc, double v) { f0_(r, cc) += v; });
    }

    // coef * cl * Op(v) * cr placed at (r0, c0); Op is transpose when
    // transpose_v is set.
    void add_mat(int r0, int c0, double coef, const Matrix& cl, const MatrixVar& v,
                 bool transpose_v, const Matrix& cr) {
        const int vr = transpose_v ? v.cols() : v.rows();
        const int vc = transpose_v ? v.rows() : v.cols();
        if (cl.cols() != vr || cr.rows() != vc)
            throw InvalidInputError("LmiBlock: dimension mismatch in add_mat");
        for (int p = 0; p < v.rows(); ++p)
            for (int q = 0; q < v.cols(); ++q) {
                const int var = v.entry(p, q).index;
                // contribution of scalar v_pq to cl*Op(v)*cr
                const int i = transpose_v ? q : p;
                const int j = transpose_v ? p : q;
                // (cl * E_ij * cr)(a,b) = cl(a,i) * cr(j,b)
                for (int a = 0; a < cl.rows(); ++a) {
                    const double cla = cl(a, i);
                    if (cla == 0.0) continue;
                    for (int b = 0; b < cr.cols(); ++b) {
                        const double val = coef * cla * cr(j, b);
                        if (val == 0.0) continue;
                        place_var(var, r0 + a, c0 + b);
                        coeff_[var](r0 + a, c0 + b) += val;
                        if (r0 != c0) coeff_[var](c0 + b, r0 + a) += val;
                    }
                }
            }
    }

    void add_var(int r0, int c0, double coef, const MatrixVar& v,
                 bool transpose_v = false) {
        const int rows = transpose_v ? v.cols() : v.rows();
        const int cols = transpose_v ? v.rows() : v.cols();
        add_mat(r0, c0, coef, Matrix::Identity(rows, rows), v, transpose_v,
                Matrix::Identity(cols, cols));
    }

    // scalar variable times a constant matrix
    void add_scaled(int r0, int c0, VarId x, const Matrix& c) {
        place(r0, c0, c, [&](int r, int cc, double v) {
            place_var(x.index, r, cc);
            coeff_[x.index](r, cc) += v;
        });
    }

    // Assembled data (after symmetry check); f0 may carry a strictness margin
    // added by the solver front end.
    const Matrix& f0() const { return f0_; }
    const std::map<int, Matrix>& coeff() const { return coeff_; }

    void check_symmetry() const {
        const double tol = 1e-9;
        auto check = [&](const Matrix& m, const std::string& what) {
            const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
            if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale)
                throw InvalidInputError("LmiBlock '" + label_ + "': asymmetric " + what);
        };
        check(f0_, "constant term");
        for (auto& [k, fk] : coeff_) check(fk, "coefficient of var " + std::to_string(k));
    }

private:
    template <class Fn>
    void place(int r0, int c0, const Matrix& m, Fn&& sink) {
        if (r0 + m.rows() > dim_ || c0 + m.cols() > dim_)
            throw InvalidInputError("LmiBlock: placement outside block");
        for (int a = 0; a < m.rows(); ++a)
            for (int b = 0; b < m.cols(); ++b) {
                if (m(a, b) == 0.0) continue;
                sink(r0 + a, c0 + b, m(a, b));
                if (r0 != c0) sink(c0 + b, r0 + a, m(a, b));
            }
    }
    void place_var(int var, int, int) {
        auto it = coeff_.find(var);
        if (it == coeff_.end()) coeff_.emplace(var, Matrix::Zero(dim_, dim_));
    }

    int dim_;
    bool strict_;
    std::string label_;
    Matrix f0_;
    std::map<int, Matrix> coeff_;
};

// ============================================================================
// LmiProblem
// ============================================================================

enum class Relation { LE, EQ };

struct LinearConstraint {
    LinExpr expr;      // expr (rel) 0
    Relation rel = Relation::LE;
    std::string label;
};

class LmiProblem {
public:
    VarId add_scalar(const std::string& name, double lb = -kInf, double ub = kInf) {
        VarId v{nvars_++};
        names_.push_back(name);
        lb_.push_back(lb);
        ub_.push_back(ub);
        return v;
    }

    MatrixVar add_matrix(const std::string& name, int rows, int cols,
                         bool symmetric = false, double lb = -kInf, double ub = kInf) {
        MatrixVar mv(name, rows, cols, symmetric, nvars_);
        for (int k = 0; k < mv.scalar_count(); ++k) {
            names_.push_back(name + "[" + std::to_string(k) + "]");
            lb_.push_back(lb);
            ub_.push_back(ub);
        }
        nvars_ += mv.scalar_count();
        return mv;
    }

    LmiBlock& add_lmi(int dim, bool strict = false, const std::string& label = "") {
        blocks_.emplace_back(dim, strict, label);
        return blocks_.back();
    }

    void add_linear_le(LinExpr e, const std::string& label = "") {
        linear_.push_back({std::move(e), Relation::LE, label});
    }
    void add_linear_eq(LinExpr e, const std::string& label = "") {
        linear_.push_back({std::move(e), Relation::EQ, label});
    }

    void set_objective(LinExpr e) {
        objective_ = std::move(e);
        has_objective_ = true;
    }
    bool has_objective() const { return has_objective_; }
    const LinExpr& objective() const { return objective_; }

    int nvars() const { return nvars_; }
    double lb(int k) const { return lb_[k]; }
    double ub(int k) const { return ub_[k]; }
    const std::string& var_name(int k) const { return names_[k]; }

    const std::vector<LmiBlock>& blocks() const { return blocks_; }
    std::vector<LmiBlock>& blocks() { return blocks_; }
    const std::vector<LinearConstraint>& linear() const { return linear_; }

    void validate() const {
        for (const auto& b : blocks_) {
            b.check_symmetry();
            for (auto& [k, fk] : b.coeff())
                if (k < 0 || k >= nvars_)
                    throw InvalidInputError("LmiProblem: undeclared variable in block");
            (void)b;
        }
        for (const auto& lc : linear_)
            for (auto& [k, a] : lc.expr.terms) {
                (void)a;
                if (k < 0 || k >= nvars_)
                    throw InvalidInputError("LmiProblem: undeclared variable in row");
            }
        if (has_objective_)
            for (auto& [k, a] : objective_.terms) {
                (void)a;
                if (k < 0 || k >= nvars_)
                    throw InvalidInputError("LmiProblem: undeclared variable in objective");
            }
    }

private:
    int nvars_ = 0;
    std::vector<std::string> names_;
    std::vector<double> lb_, ub_;
    std::vector<LmiBlock> blocks_;
    std::vector<LinearConstraint> linear_;
    LinExpr objective_;
    bool has_objective_ = false;
};

// ============================================================================
// LpProblem: box-bounded variables + affine rows, each strict or non-strict
// ============================================================================

enum class LpRel { LE, GE, LT, GT, EQ };

struct LpRow {
    LinExpr lhs;   // lhs (rel) rhs
    LpRel rel = LpRel::LE;
    double rhs = 0.0;
    std::string label;
};

class LpProblem {
public:
    VarId add_var(const std::string& name, double lb, double ub) {
        if (!std::isfinite(lb) || !std::isfinite(ub) || lb > ub)
            throw InvalidInputError("LpProblem: bounds must be finite with lb <= ub");
        VarId v{nvars_++};
        names_.push_back(name);
        lb_.push_back(lb);
        ub_.push_back(ub);
        return v;
    }

    void add_row(LinExpr lhs, LpRel rel, double rhs, const std::string& label = "") {
        rows_.push_back({std::move(lhs), rel, rhs, label});
    }

    int nvars() const { return nvars_; }
    double lb(int k) const { return lb_[k]; }
    double ub(int k) const { return ub_[k]; }
    const std::vector<LpRow>& rows() const { return rows_; }
    const std::string& var_name(int k) const { return names_[k]; }

private:
    int nvars_ = 0;
    std::vector<std::string> names_;
    std::vector<double> lb_, ub_;
    std::vector<LpRow> rows_;
};

} // namespace crosslayer::conic
