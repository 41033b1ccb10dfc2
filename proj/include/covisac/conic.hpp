#pragma once

#include "covisac/common.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace covisac {

// ============================================================
// Conic subproblem abstraction shared by the beamforming and
// trajectory SCA solvers: complex Hermitian PSD variables,
// linear / second-order-cone constraints, and a concave
// objective of the form  sum_i w_i log2(affine_i) + affine.
//
// Solved by a primal barrier interior-point method with an
// auxiliary phase-I problem for strict feasibility. Problems
// here are tiny (tens to a few hundred reals), so everything
// is dense and deterministic.
// ============================================================

struct VarRef {
    int offset = 0;
    int size = 0;
};

/// Complex Hermitian PSD variable of dimension `dim`, stored as
/// dim^2 real coordinates: diagonal first, then (Re, Im) pairs of
/// the upper triangle in row-major pair order.
struct PsdVarRef {
    int offset = 0;
    int dim = 0;
    int coords() const { return dim * dim; }
};

class LinExpr {
public:
    LinExpr() = default;
    explicit LinExpr(double constant) : constant_(constant) {}

    LinExpr& add(int index, double coeff) {
        if (coeff != 0.0) terms_.emplace_back(index, coeff);
        return *this;
    }
    LinExpr& add(const VarRef& v, const Eigen::VectorXd& coeffs) {
        for (int i = 0; i < v.size; ++i) add(v.offset + i, coeffs(i));
        return *this;
    }
    LinExpr& add_constant(double c) {
        constant_ += c;
        return *this;
    }
    /// += scale * tr(C W) for Hermitian C; real-valued by symmetry.
    LinExpr& add_trace(const PsdVarRef& p, const CMat& c, double scale = 1.0);

    void compress() {
        std::sort(terms_.begin(), terms_.end());
        size_t out = 0;
        for (size_t i = 0; i < terms_.size();) {
            int idx = terms_[i].first;
            double sum = 0.0;
            while (i < terms_.size() && terms_[i].first == idx) sum += terms_[i++].second;
            if (sum != 0.0) terms_[out++] = {idx, sum};
        }
        terms_.resize(out);
    }

    double value(const Eigen::VectorXd& x) const {
        double v = constant_;
        for (const auto& [i, c] : terms_) v += c * x(i);
        return v;
    }
    void add_gradient(Eigen::VectorXd& g, double scale) const {
        for (const auto& [i, c] : terms_) g(i) += scale * c;
    }
    /// H += scale * coeff coeff^T
    void add_outer(Eigen::MatrixXd& h, double scale) const {
        for (const auto& [i, ci] : terms_)
            for (const auto& [j, cj] : terms_) h(i, j) += scale * ci * cj;
    }
    Eigen::VectorXd dense(int dim) const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
        for (const auto& [i, c] : terms_) v(i) += c;
        return v;
    }

    double constant() const { return constant_; }
    const std::vector<std::pair<int, double>>& terms() const { return terms_; }
    int max_index() const {
        int m = -1;
        for (const auto& [i, c] : terms_) m = std::max(m, i);
        return m;
    }

private:
    std::vector<std::pair<int, double>> terms_;
    double constant_ = 0.0;
};

inline LinExpr& LinExpr::add_trace(const PsdVarRef& p, const CMat& c, double scale) {
    const int m = p.dim;
    for (int i = 0; i < m; ++i) add(p.offset + i, scale * std::real(c(i, i)));
    int pair = 0;
    for (int k = 0; k < m; ++k)
        for (int l = k + 1; l < m; ++l, ++pair) {
            add(p.offset + m + 2 * pair, scale * 2.0 * std::real(c(k, l)));
            add(p.offset + m + 2 * pair + 1, scale * 2.0 * std::imag(c(k, l)));
        }
    return *this;
}

enum class SolveStatus { optimal, infeasible, max_iter };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::max_iter: return "max_iter";
    }
    return "?";
}

struct ConicSolution {
    SolveStatus status = SolveStatus::max_iter;
    Eigen::VectorXd x;
    double objective = -std::numeric_limits<double>::infinity();
    double kkt_residual = std::numeric_limits<double>::infinity();
    double worst_violation = std::numeric_limits<double>::infinity();
    int newton_iters = 0;
};

struct ConicSolverOptions {
    double eps_gap = 1e-9;          // duality-gap target nu/t
    double t_init = 1.0;
    double mu = 20.0;               // barrier parameter growth
    int max_center_iters = 60;
    int max_total_newton = 5000;
    double interior_margin = 1e-10;  // strictness needed to skip phase I
    double phase1_target = 1e-7;     // stop phase I once this margin is reached
};

class ConicProblem {
public:
    VarRef add_vector_var(const std::string& name, int dim) {
        VarRef v{dim_, dim};
        dim_ += dim;
        vec_vars_.emplace_back(name, v);
        return v;
    }
    PsdVarRef add_psd_var(const std::string& name, int dim) {
        PsdVarRef p{dim_, dim};
        dim_ += p.coords();
        psd_vars_.emplace_back(name, p);
        return p;
    }

    /// weight * log2(arg); weight must be nonnegative to keep the
    /// objective concave.
    void add_log_term(LinExpr arg, double weight) {
        if (weight < 0.0) throw invariant_error("log term weight must be >= 0");
        if (weight == 0.0) return;
        arg.compress();
        logs_.push_back({std::move(arg), weight});
    }
    void add_linear_objective(const LinExpr& e) {
        for (const auto& [i, c] : e.terms()) linear_.add(i, c);
        linear_.add_constant(e.constant());
    }
    void add_le(LinExpr e) {  // e(x) <= 0
        e.compress();
        ineqs_.push_back(std::move(e));
    }
    void add_eq(LinExpr e) {  // e(x) == 0
        e.compress();
        eqs_.push_back(std::move(e));
    }
    void add_soc(std::vector<LinExpr> norm_parts, LinExpr rhs) {  // ||u(x)|| <= rhs(x)
        for (auto& e : norm_parts) e.compress();
        rhs.compress();
        socs_.push_back({std::move(norm_parts), std::move(rhs)});
    }

    int dim() const { return dim_; }

    // ---- value access ------------------------------------------------
    static CMat psd_matrix(const Eigen::VectorXd& x, const PsdVarRef& p) {
        CMat w = CMat::Zero(p.dim, p.dim);
        for (int i = 0; i < p.dim; ++i) w(i, i) = x(p.offset + i);
        int pair = 0;
        for (int k = 0; k < p.dim; ++k)
            for (int l = k + 1; l < p.dim; ++l, ++pair) {
                cplx v(x(p.offset + p.dim + 2 * pair), x(p.offset + p.dim + 2 * pair + 1));
                w(k, l) = v;
                w(l, k) = std::conj(v);
            }
        return w;
    }
    static void set_psd_matrix(Eigen::VectorXd& x, const PsdVarRef& p, const CMat& w) {
        for (int i = 0; i < p.dim; ++i) x(p.offset + i) = std::real(w(i, i));
        int pair = 0;
        for (int k = 0; k < p.dim; ++k)
            for (int l = k + 1; l < p.dim; ++l, ++pair) {
                x(p.offset + p.dim + 2 * pair) = std::real(w(k, l));
                x(p.offset + p.dim + 2 * pair + 1) = std::imag(w(k, l));
            }
    }

    double objective_value(const Eigen::VectorXd& x) const {
        double v = linear_.value(x);
        for (const auto& lt : logs_) v += lt.weight * std::log2(lt.arg.value(x));
        return v;
    }

    /// Largest constraint violation at x (0 when feasible).
    double worst_violation(const Eigen::VectorXd& x) const {
        double w = 0.0;
        for (const auto& e : ineqs_) w = std::max(w, e.value(x));
        for (const auto& e : eqs_) w = std::max(w, std::abs(e.value(x)));
        for (const auto& s : socs_) {
            double nn = 0.0;
            for (const auto& u : s.norm) nn += u.value(x) * u.value(x);
            w = std::max(w, std::sqrt(nn) - s.rhs.value(x));
        }
        for (const auto& [name, p] : psd_vars_) {
            Eigen::SelfAdjointEigenSolver<CMat> es(psd_matrix(x, p), Eigen::EigenvaluesOnly);
            w = std::max(w, -es.eigenvalues().minCoeff());
        }
        return w;
    }

    /// Self-describing text serialization for debugging.
    void dump(std::ostream& os) const;

    friend ConicSolution solve_conic(const ConicProblem&, const Eigen::VectorXd&,
                                     const ConicSolverOptions&);

private:
    struct LogTerm {
        LinExpr arg;
        double weight;
    };
    struct Soc {
        std::vector<LinExpr> norm;
        LinExpr rhs;
    };

    int dim_ = 0;
    std::vector<std::pair<std::string, VarRef>> vec_vars_;
    std::vector<std::pair<std::string, PsdVarRef>> psd_vars_;
    std::vector<LogTerm> logs_;
    LinExpr linear_;
    std::vector<LinExpr> ineqs_;
    std::vector<LinExpr> eqs_;
    std::vector<Soc> socs_;

    friend class BarrierSolver;
};

namespace detail {

inline void format_expr(std::ostream& os, const LinExpr& e) {
    os << e.constant();
    for (const auto& [i, c] : e.terms()) os << " " << i << ":" << c;
}

}  // namespace detail

inline void ConicProblem::dump(std::ostream& os) const {
    os << "conicdump v1\n";
    for (const auto& [name, v] : vec_vars_) os << "vector_var " << name << " " << v.size << "\n";
    for (const auto& [name, p] : psd_vars_) os << "psd_var " << name << " " << p.dim << "\n";
    for (const auto& lt : logs_) {
        os << "objective log2 " << lt.weight << " ";
        detail::format_expr(os, lt.arg);
        os << "\n";
    }
    os << "objective linear ";
    detail::format_expr(os, linear_);
    os << "\n";
    for (const auto& e : ineqs_) {
        os << "le ";
        detail::format_expr(os, e);
        os << "\n";
    }
    for (const auto& e : eqs_) {
        os << "eq ";
        detail::format_expr(os, e);
        os << "\n";
    }
    for (const auto& s : socs_) {
        os << "soc " << s.norm.size() << " rhs ";
        detail::format_expr(os, s.rhs);
        for (const auto& u : s.norm) {
            os << " | ";
            detail::format_expr(os, u);
        }
        os << "\n";
    }
}

// ============================================================
// Barrier solver internals
// ============================================================
class BarrierSolver {
public:
    BarrierSolver(const ConicProblem& p, const ConicSolverOptions& opt)
        : p_(p), opt_(opt) {}

    ConicSolution solve(Eigen::VectorXd x0) {
        if (x0.size() != p_.dim_) {
            x0 = Eigen::VectorXd::Zero(p_.dim_);
            for (const auto& [name, p] : p_.psd_vars_)
                for (int i = 0; i < p.dim; ++i) x0(p.offset + i) = 1.0;
        }
        ConicSolution sol;
        if (!strictly_feasible(x0, opt_.interior_margin)) {
            auto phase1 = run_phase1(x0);
            if (!phase1.has_value()) {
                sol.status = SolveStatus::infeasible;
                sol.x = x0;
                sol.worst_violation = p_.worst_violation(x0);
                return sol;
            }
            x0 = *phase1;
        }
        return run_barrier(x0, /*phase1_shift=*/-1, 0.0, nullptr);
    }

private:
    const ConicProblem& p_;
    ConicSolverOptions opt_;
    int total_newton_ = 0;

    // nu parameter of the combined barrier
    double barrier_nu() const {
        double nu = static_cast<double>(p_.ineqs_.size()) + 2.0 * p_.socs_.size();
        for (const auto& [name, p] : p_.psd_vars_) nu += p.dim;
        // log terms in the objective act as their own barrier
        return nu;
    }

    // ---- domain -------------------------------------------------------
    // shift < 0 means no phase-I shift variable. When shift_idx >= 0 the
    // scalar x(shift_idx) relaxes every cone: g - s <= 0, ||u|| <= t + s,
    // W + s I >= 0, arg + s > 0.
    struct Domain {
        bool ok = false;
        std::vector<double> log_args;
        std::vector<double> ineq_slack;            // -g(x) (+ s)
        std::vector<std::pair<double, double>> soc;  // (z, tv)
        std::vector<Eigen::LLT<CMat>> psd_llt;
    };

    Domain eval_domain(const Eigen::VectorXd& x, int shift_idx) const {
        Domain d;
        double s = shift_idx >= 0 ? x(shift_idx) : 0.0;
        for (const auto& lt : p_.logs_) {
            double v = lt.arg.value(x) + (shift_idx >= 0 ? s : 0.0);
            if (!(v > 0.0)) return d;
            d.log_args.push_back(v);
        }
        for (const auto& e : p_.ineqs_) {
            double v = -e.value(x) + (shift_idx >= 0 ? s : 0.0);
            if (!(v > 0.0)) return d;
            d.ineq_slack.push_back(v);
        }
        for (const auto& soc : p_.socs_) {
            double tv = soc.rhs.value(x) + (shift_idx >= 0 ? s : 0.0);
            if (!(tv > 0.0)) return d;
            double nn = 0.0;
            for (const auto& u : soc.norm) {
                double uv = u.value(x);
                nn += uv * uv;
            }
            double z = tv * tv - nn;
            if (!(z > 0.0)) return d;
            d.soc.emplace_back(z, tv);
        }
        for (const auto& [name, p] : p_.psd_vars_) {
            CMat w = ConicProblem::psd_matrix(x, p);
            if (shift_idx >= 0) w += s * CMat::Identity(p.dim, p.dim);
            Eigen::LLT<CMat> llt(w);
            if (llt.info() != Eigen::Success) return d;
            d.psd_llt.push_back(std::move(llt));
        }
        d.ok = true;
        return d;
    }

    bool strictly_feasible(const Eigen::VectorXd& x, double margin) const {
        if (!eval_domain(x, -1).ok) return false;
        for (const auto& lt : p_.logs_)
            if (!(lt.arg.value(x) > margin)) return false;
        for (const auto& e : p_.ineqs_)
            if (!(-e.value(x) > margin)) return false;
        for (const auto& soc : p_.socs_) {
            double tv = soc.rhs.value(x);
            double nn = 0.0;
            for (const auto& u : soc.norm) nn += u.value(x) * u.value(x);
            if (!(tv - std::sqrt(nn) > margin)) return false;
        }
        for (const auto& [name, p] : p_.psd_vars_) {
            Eigen::SelfAdjointEigenSolver<CMat> es(ConicProblem::psd_matrix(x, p),
                                                   Eigen::EigenvaluesOnly);
            if (!(es.eigenvalues().minCoeff() > margin)) return false;
        }
        for (const auto& e : p_.eqs_)
            if (std::abs(e.value(x)) > 1e-9) return false;
        return true;
    }

    // phi_t(x) = -t f(x) + Phi(x); objective = maximize f
    double merit(const Eigen::VectorXd& x, double t, const Domain& d, int shift_idx,
                 double phase1_weight) const {
        double val = 0.0;
        if (shift_idx < 0) {
            val -= t * p_.linear_.value(x);
            for (size_t i = 0; i < p_.logs_.size(); ++i)
                val -= t * (p_.logs_[i].weight / std::log(2.0)) * std::log(d.log_args[i]);
        } else {
            val += t * phase1_weight * x(shift_idx);  // minimize s
            for (double v : d.log_args) val -= std::log(v);
        }
        for (double v : d.ineq_slack) val -= std::log(v);
        for (const auto& [z, tv] : d.soc) val -= std::log(z);
        for (const auto& llt : d.psd_llt) {
            const auto& l = llt.matrixLLT();
            for (int i = 0; i < l.rows(); ++i) val -= 2.0 * std::log(std::real(l(i, i)));
        }
        return val;
    }

    // gradient and Hessian of phi_t
    void grad_hess(const Eigen::VectorXd& x, double t, const Domain& d, int shift_idx,
                   double phase1_weight, Eigen::VectorXd& g, Eigen::MatrixXd& h) const {
        const int n = static_cast<int>(x.size());
        g.setZero(n);
        h.setZero(n, n);
        auto expr_with_shift = [&](const LinExpr& e, double sign) {
            LinExpr out = e;
            if (shift_idx >= 0) out.add(shift_idx, sign);
            return out;
        };

        if (shift_idx < 0) {
            p_.linear_.add_gradient(g, -t);
            for (size_t i = 0; i < p_.logs_.size(); ++i) {
                double w = t * p_.logs_[i].weight / std::log(2.0);
                double z = d.log_args[i];
                p_.logs_[i].arg.add_gradient(g, -w / z);
                p_.logs_[i].arg.add_outer(h, w / (z * z));
            }
        } else {
            g(shift_idx) += t * phase1_weight;
            for (size_t i = 0; i < p_.logs_.size(); ++i) {
                double z = d.log_args[i];
                LinExpr e = expr_with_shift(p_.logs_[i].arg, 1.0);
                e.add_gradient(g, -1.0 / z);
                e.add_outer(h, 1.0 / (z * z));
            }
        }

        for (size_t i = 0; i < p_.ineqs_.size(); ++i) {
            double z = d.ineq_slack[i];
            // slack = -g(x) + s; gradient of -log(slack) is coeff(g)/z (minus shift)
            LinExpr e = expr_with_shift(p_.ineqs_[i], -1.0);
            e.add_gradient(g, 1.0 / z);
            e.add_outer(h, 1.0 / (z * z));
        }

        for (size_t i = 0; i < p_.socs_.size(); ++i) {
            const auto& soc = p_.socs_[i];
            auto [z, tv] = d.soc[i];
            LinExpr rhs = expr_with_shift(soc.rhs, 1.0);
            // grad z = 2 tv c_t - 2 sum u_i c_i
            rhs.add_gradient(g, -2.0 * tv / z);
            rhs.add_outer(h, -2.0 / z);
            Eigen::VectorXd gz = Eigen::VectorXd::Zero(n);
            rhs.add_gradient(gz, 2.0 * tv);
            for (const auto& u : soc.norm) {
                double uv = u.value(x);
                u.add_gradient(g, 2.0 * uv / z);
                u.add_outer(h, 2.0 / z);
                u.add_gradient(gz, -2.0 * uv);
            }
            h += gz * gz.transpose() / (z * z);
        }

        for (size_t b = 0; b < p_.psd_vars_.size(); ++b) {
            const auto& p = p_.psd_vars_[b].second;
            const int m = p.dim;
            CMat inv = d.psd_llt[b].solve(CMat::Identity(m, m));
            // basis elements: list of (row, col, coeff)
            struct Elem {
                int a, bcol;
                cplx coef;
            };
            std::vector<std::vector<Elem>> basis;
            std::vector<int> coord;
            for (int i = 0; i < m; ++i) {
                basis.push_back({{i, i, cplx(1, 0)}});
                coord.push_back(p.offset + i);
            }
            int pair = 0;
            for (int k = 0; k < m; ++k)
                for (int l = k + 1; l < m; ++l, ++pair) {
                    basis.push_back({{k, l, cplx(1, 0)}, {l, k, cplx(1, 0)}});
                    coord.push_back(p.offset + m + 2 * pair);
                    basis.push_back({{k, l, cplx(0, 1)}, {l, k, cplx(0, -1)}});
                    coord.push_back(p.offset + m + 2 * pair + 1);
                }
            if (shift_idx >= 0) {
                std::vector<Elem> id;
                for (int i = 0; i < m; ++i) id.push_back({i, i, cplx(1, 0)});
                basis.push_back(std::move(id));
                coord.push_back(shift_idx);
            }
            const int nb = static_cast<int>(basis.size());
            for (int k = 0; k < nb; ++k) {
                cplx tr(0, 0);
                for (const auto& e : basis[k]) tr += e.coef * inv(e.bcol, e.a);
                g(coord[k]) -= std::real(tr);
            }
            for (int k = 0; k < nb; ++k)
                for (int l = k; l < nb; ++l) {
                    cplx acc(0, 0);
                    for (const auto& ek : basis[k])
                        for (const auto& el : basis[l])
                            acc += ek.coef * el.coef * inv(el.bcol, ek.a) * inv(ek.bcol, el.a);
                    double v = std::real(acc);
                    h(coord[k], coord[l]) += v;
                    if (l != k) h(coord[l], coord[k]) += v;
                }
        }
    }

    // Damped Newton centering; returns false on iteration exhaustion.
    bool center(Eigen::VectorXd& x, double t, int shift_idx, double phase1_weight,
                double* out_residual, const std::function<bool(const Eigen::VectorXd&)>& stop) {
        const int n = static_cast<int>(x.size());
        const int neq = static_cast<int>(p_.eqs_.size());
        Eigen::VectorXd g;
        Eigen::MatrixXd h;
        for (int it = 0; it < opt_.max_center_iters; ++it) {
            if (stop && stop(x)) return true;
            if (++total_newton_ > opt_.max_total_newton) return false;
            Domain dom = eval_domain(x, shift_idx);
            if (!dom.ok) return false;
            grad_hess(x, t, dom, shift_idx, phase1_weight, g, h);
            double reg = 1e-12 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
            h.diagonal().array() += reg;

            Eigen::VectorXd dx(n);
            double decrement2;
            if (neq == 0) {
                Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
                dx = -ldlt.solve(g);
                decrement2 = -g.dot(dx);
            } else {
                Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + neq, n + neq);
                kkt.topLeftCorner(n, n) = h;
                Eigen::VectorXd rhs(n + neq);
                rhs.head(n) = -g;
                for (int i = 0; i < neq; ++i) {
                    Eigen::VectorXd row = p_.eqs_[i].dense(n);
                    kkt.block(n + i, 0, 1, n) = row.transpose();
                    kkt.block(0, n + i, n, 1) = row;
                    rhs(n + i) = -p_.eqs_[i].value(x);
                }
                Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
                Eigen::VectorXd sol = lu.solve(rhs);
                dx = sol.head(n);
                decrement2 = -g.dot(dx);
            }
            if (!(decrement2 > 0.0)) decrement2 = 0.0;
            if (decrement2 * 0.5 <= 1e-11 * (1.0 + t)) {
                if (out_residual) *out_residual = std::sqrt(decrement2) / (1.0 + t);
                return true;
            }

            double phi0 = merit(x, t, dom, shift_idx, phase1_weight);
            double step = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                Eigen::VectorXd xn = x + step * dx;
                Domain dn = eval_domain(xn, shift_idx);
                if (dn.ok) {
                    double phin = merit(xn, t, dn, shift_idx, phase1_weight);
                    if (phin <= phi0 - 0.25 * step * decrement2) {
                        x = xn;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if (!accepted) {
                if (out_residual) *out_residual = std::sqrt(decrement2) / (1.0 + t);
                return true;  // numerically stuck at centering accuracy
            }
        }
        return true;
    }

    std::optional<Eigen::VectorXd> run_phase1(const Eigen::VectorXd& x0) {
        const int n = p_.dim_;
        const int sidx = n;
        Eigen::VectorXd x(n + 1);
        x.head(n) = x0;
        // initial margin: strictly above every violation
        double s0 = 0.0;
        for (const auto& lt : p_.logs_) s0 = std::max(s0, -lt.arg.value(x0));
        for (const auto& e : p_.ineqs_) s0 = std::max(s0, e.value(x0));
        for (const auto& soc : p_.socs_) {
            double nn = 0.0;
            for (const auto& u : soc.norm) nn += u.value(x0) * u.value(x0);
            s0 = std::max(s0, std::sqrt(nn) - soc.rhs.value(x0));
        }
        for (const auto& [name, p] : p_.psd_vars_) {
            Eigen::SelfAdjointEigenSolver<CMat> es(ConicProblem::psd_matrix(x0, p),
                                                   Eigen::EigenvaluesOnly);
            s0 = std::max(s0, -es.eigenvalues().minCoeff());
        }
        x(sidx) = s0 + 0.5 * (1.0 + std::abs(s0));

        double target = -opt_.phase1_target;
        auto stop = [&](const Eigen::VectorXd& xc) { return xc(sidx) < target; };
        double t = opt_.t_init;
        double nu = barrier_nu() + static_cast<double>(p_.logs_.size());
        for (int outer = 0; outer < 80; ++outer) {
            if (!center(x, t, sidx, 1.0, nullptr, stop)) break;
            if (x(sidx) < target) break;
            if (nu / t <= 0.25 * opt_.phase1_target) break;
            t *= opt_.mu;
        }
        if (x(sidx) < -opt_.interior_margin) return x.head(n);
        return std::nullopt;
    }

    ConicSolution run_barrier(Eigen::VectorXd x, int shift_idx, double phase1_weight,
                              const std::function<bool(const Eigen::VectorXd&)>& stop) {
        ConicSolution sol;
        double nu = std::max(barrier_nu(), 1.0);
        double t = opt_.t_init;
        double residual = std::numeric_limits<double>::infinity();
        bool exhausted = false;
        while (true) {
            if (!center(x, t, shift_idx, phase1_weight, &residual, stop)) {
                exhausted = true;
                break;
            }
            if (nu / t <= opt_.eps_gap) break;
            t *= opt_.mu;
        }
        sol.x = x;
        sol.status = exhausted ? SolveStatus::max_iter : SolveStatus::optimal;
        sol.objective = p_.objective_value(x);
        sol.kkt_residual = residual;
        sol.worst_violation = p_.worst_violation(x);
        sol.newton_iters = total_newton_;
        return sol;
    }
};

/// Solve a conic problem starting from x0 (pass empty vector for the
/// default start). Deterministic: identical problems and starts give
/// identical iterates.
inline ConicSolution solve_conic(const ConicProblem& p,
                                 const Eigen::VectorXd& x0 = Eigen::VectorXd(),
                                 const ConicSolverOptions& opt = {}) {
    BarrierSolver solver(p, opt);
    return solver.solve(x0);
}

// ============================================================
// Rank-one machinery shared by the SDR beamforming solvers
// ============================================================

class rank_violation_error : public std::runtime_error {
public:
    rank_violation_error(double ratio, double min_ratio)
        : std::runtime_error("rank-one extraction failed: lambda_max/tr = " +
                             std::to_string(ratio) + " < " + std::to_string(min_ratio)),
          ratio_(ratio) {}
    double ratio() const { return ratio_; }

private:
    double ratio_;
};

struct RankOneExtraction {
    CVec vector;   // sqrt(lambda_max) * q_max
    double ratio;  // lambda_max / tr(W)
};

/// Dominant-eigenpair beamformer recovery; throws rank_violation_error
/// carrying the achieved ratio when below min_ratio.
inline RankOneExtraction extract_rank_one(const CMat& w, double min_ratio) {
    Eigen::SelfAdjointEigenSolver<CMat> es(w);
    if (es.info() != Eigen::Success) throw invariant_error("eigendecomposition failed");
    const int m = static_cast<int>(w.rows());
    double lmax = es.eigenvalues()(m - 1);
    double tr = es.eigenvalues().sum();
    RankOneExtraction out;
    out.ratio = tr > 0.0 ? lmax / tr : 1.0;
    if (out.ratio < min_ratio) throw rank_violation_error(out.ratio, min_ratio);
    CVec q = es.eigenvectors().col(m - 1);
    // fix the global phase: largest entry real nonnegative
    int imax = 0;
    for (int i = 1; i < m; ++i)
        if (std::abs(q(i)) > std::abs(q(imax))) imax = i;
    if (std::abs(q(imax)) > 0.0) q *= std::conj(q(imax)) / std::abs(q(imax));
    out.vector = std::sqrt(std::max(lmax, 0.0)) * q;
    return out;
}

/// Supporting hyperplane of the spectral norm at W_ref:
/// ||W||_2 >= ||W_ref||_2 + tr(q q^H (W - W_ref)) for all PSD W.
inline std::pair<double, CMat> spectral_linearization(const CMat& w_ref) {
    Eigen::SelfAdjointEigenSolver<CMat> es(w_ref);
    const int m = static_cast<int>(w_ref.rows());
    CVec q = es.eigenvectors().col(m - 1);
    return {es.eigenvalues()(m - 1), q * q.adjoint()};
}

}  // namespace covisac
