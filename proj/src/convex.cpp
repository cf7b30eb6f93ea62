#include "cloudradar/convex.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cloudradar/errors.hpp"

namespace cloudradar {

namespace {

constexpr double kNewtonEps = 1e-15;     // half squared Newton decrement
constexpr double kQuadraticRegion = 1e-2;  // squared decrement below which full steps are taken
constexpr double kInf = std::numeric_limits<double>::infinity();

bool strictly_feasible(const BarrierEval& e) {
    for (double f : e.fi) {
        if (!(f < 0.0)) return false;
    }
    return true;
}

double max_violation(const BarrierEval& e) {
    double v = 0.0;
    for (double f : e.fi) v = std::max(v, f);
    return v;
}

struct CenteringModel {
    double psi = 0.0;
    RVector grad;
    RMatrix hess;
};

double barrier_value(const BarrierEval& e, double t) {
    double v = t * e.f0;
    for (double f : e.fi) v -= std::log(-f);
    return v;
}

CenteringModel centering_model(const BarrierEval& e, double t) {
    CenteringModel c;
    c.psi = barrier_value(e, t);
    c.grad = t * e.g0;
    c.hess = t * e.h0;
    for (std::size_t i = 0; i < e.fi.size(); ++i) {
        const double inv = -1.0 / e.fi[i];
        c.grad += inv * e.gi[i];
        c.hess += inv * e.hi[i];
        c.hess.noalias() += (inv * inv) * e.gi[i] * e.gi[i].transpose();
    }
    return c;
}

RVector newton_direction(const RMatrix& h, const RVector& g) {
    Eigen::LDLT<RMatrix> ldlt(h);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        RVector dz = -ldlt.solve(g);
        if (dz.allFinite()) return dz;
    }
    // Tikhonov fallback for numerically semidefinite Hessians.
    const double scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    RMatrix reg = h;
    reg.diagonal().array() += 1e-10 * scale;
    return -reg.ldlt().solve(g);
}

// KKT residual at a central point. Barrier multipliers -1/(t f_i) lose
// relative accuracy on nearly active constraints (f_i ~ 1/t suffers
// cancellation), so those are re-estimated by least squares.
double kkt_residual(const BarrierEval& e, double t) {
    const std::size_t m = e.fi.size();
    std::vector<double> lam(m);
    double lam_max = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        lam[i] = -1.0 / (t * e.fi[i]);
        lam_max = std::max(lam_max, lam[i]);
    }
    RVector r = e.g0;
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < m; ++i) {
        if (lam[i] >= 1e-3 * lam_max) {
            active.push_back(i);
        } else {
            r += lam[i] * e.gi[i];
        }
    }
    RVector best = r;
    for (std::size_t i : active) best += lam[i] * e.gi[i];
    double res = best.cwiseAbs().maxCoeff();
    if (!active.empty()) {
        RMatrix ga(r.size(), static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k) ga.col(static_cast<Eigen::Index>(k)) = e.gi[active[k]];
        const RVector la = ga.colPivHouseholderQr().solve(-r);
        if (la.allFinite() && la.minCoeff() >= 0.0) {
            const RVector rr = r + ga * la;
            double comp = 0.0;
            for (std::size_t k = 0; k < active.size(); ++k) {
                comp = std::max(comp, la(static_cast<Eigen::Index>(k)) * std::abs(e.fi[active[k]]));
            }
            res = std::min(res, std::max(rr.cwiseAbs().maxCoeff(), comp));
        }
    }
    return res;
}

}  // namespace

BarrierResult barrier_minimize(const BarrierProgram& prog, RVector z0, const BarrierOptions& opts) {
    const int m = prog.n_constraints();
    BarrierResult res;
    res.z = std::move(z0);
    if (!prog.evaluate(res.z, res.eval, true)) throw Infeasible("barrier: start point outside the domain");
    if (!strictly_feasible(res.eval)) throw Infeasible("barrier: start point not strictly feasible");

    double t = m > 0 ? static_cast<double>(m) : 1.0;
    BarrierEval trial;
    while (true) {
        double prev_dec2 = kInf;
        while (true) {
            const CenteringModel c = centering_model(res.eval, t);
            const RVector dz = newton_direction(c.hess, c.grad);
            const double dec2 = -c.grad.dot(dz);
            if (!(dec2 > 2.0 * kNewtonEps)) break;
            // Round-off floor: full steps stopped contracting the decrement.
            if (dec2 < kQuadraticRegion && dec2 >= 0.5 * prev_dec2) break;
            prev_dec2 = dec2;
            if (++res.iterations > opts.max_newton) {
                throw MaxIterations("barrier: Newton iteration budget exhausted");
            }
            double s = 1.0;
            bool accepted = false;
            while (s > 1e-20) {
                const RVector zn = res.z + s * dz;
                if (prog.evaluate(zn, trial, false) && strictly_feasible(trial)) {
                    const double psi_new = barrier_value(trial, t);
                    if (dec2 < kQuadraticRegion || psi_new <= c.psi - opts.alpha * s * dec2) {
                        res.z = zn;
                        accepted = true;
                        break;
                    }
                }
                s *= opts.beta;
            }
            if (!accepted) break;
            prog.evaluate(res.z, res.eval, true);
        }
        if (m == 0 || static_cast<double>(m) / t < opts.tol) break;
        t *= opts.mu;
    }
    res.kkt_residual = m == 0 ? res.eval.g0.cwiseAbs().maxCoeff()
                              : std::max(kkt_residual(res.eval, t), static_cast<double>(m) / t);
    return res;
}

namespace {

// minimize s  s.t. f_i(z) - s <= 0,  -s - s_floor <= 0
class PhaseOneProgram final : public BarrierProgram {
public:
    PhaseOneProgram(const BarrierProgram& inner, double s_floor) : inner_(inner), s_floor_(s_floor) {}

    int dim() const override { return inner_.dim() + 1; }
    int n_constraints() const override { return inner_.n_constraints() + 1; }

    bool evaluate(const RVector& zs, BarrierEval& out, bool derivatives) const override {
        const int n = inner_.dim();
        const RVector z = zs.head(n);
        const double s = zs(n);
        if (!inner_.evaluate(z, scratch_, derivatives)) return false;
        const int m = inner_.n_constraints();
        out.f0 = s;
        out.fi.resize(static_cast<std::size_t>(m + 1));
        for (int i = 0; i < m; ++i) out.fi[static_cast<std::size_t>(i)] = scratch_.fi[static_cast<std::size_t>(i)] - s;
        out.fi[static_cast<std::size_t>(m)] = -s - s_floor_;
        if (!derivatives) return true;
        out.g0 = RVector::Zero(n + 1);
        out.g0(n) = 1.0;
        out.h0 = RMatrix::Zero(n + 1, n + 1);
        out.gi.assign(static_cast<std::size_t>(m + 1), RVector::Zero(n + 1));
        out.hi.assign(static_cast<std::size_t>(m + 1), RMatrix::Zero(n + 1, n + 1));
        for (int i = 0; i < m; ++i) {
            const auto k = static_cast<std::size_t>(i);
            out.gi[k].head(n) = scratch_.gi[k];
            out.gi[k](n) = -1.0;
            out.hi[k].topLeftCorner(n, n) = scratch_.hi[k];
        }
        out.gi[static_cast<std::size_t>(m)](n) = -1.0;
        return true;
    }

private:
    const BarrierProgram& inner_;
    double s_floor_;
    mutable BarrierEval scratch_;
};

}  // namespace

RVector barrier_phase_one(const BarrierProgram& prog, const RVector& z_domain, const BarrierOptions& opts) {
    BarrierEval e;
    if (!prog.evaluate(z_domain, e, false)) throw Infeasible("phase one: start point outside the domain");
    if (strictly_feasible(e)) return z_domain;
    const double worst = max_violation(e);
    const double s_floor = std::max(1.0, worst);
    PhaseOneProgram p1(prog, s_floor);
    RVector zs(prog.dim() + 1);
    zs.head(prog.dim()) = z_domain;
    zs(prog.dim()) = worst + 1.0;
    BarrierOptions o = opts;
    o.tol = 1e-9;
    const BarrierResult r = barrier_minimize(p1, zs, o);
    const RVector z = r.z.head(prog.dim());
    if (!prog.evaluate(z, e, false) || !strictly_feasible(e)) {
        throw Infeasible("phase one: no strictly feasible point (min max f_i = " +
                         std::to_string(r.z(prog.dim())) + ")");
    }
    return z;
}

// ---------------------------------------------------------------------------
// QCQP
// ---------------------------------------------------------------------------

double QuadraticForm::operator()(const CVector& x) const {
    return a.quad(x) - d.dot(x).real() + b;
}

namespace {

RMatrix real_embedding(const CMatrix& a) {
    const Eigen::Index k = a.rows();
    RMatrix r(2 * k, 2 * k);
    r.topLeftCorner(k, k) = a.real();
    r.topRightCorner(k, k) = -a.imag();
    r.bottomLeftCorner(k, k) = a.imag();
    r.bottomRightCorner(k, k) = a.real();
    return 0.5 * (r + r.transpose());
}

RVector real_vector(const CVector& v) {
    RVector r(2 * v.size());
    r << v.real(), v.imag();
    return r;
}

CVector complex_vector(const RVector& z) {
    const Eigen::Index k = z.size() / 2;
    CVector v(k);
    for (Eigen::Index i = 0; i < k; ++i) v(i) = cdouble(z(i), z(i + k));
    return v;
}

struct RealQuadratic {
    RMatrix a2;  // 2 * embedding (Hessian)
    RVector d;
    double b;

    double value(const RVector& z) const { return 0.5 * z.dot(a2 * z) - d.dot(z) + b; }
};

RealQuadratic embed(const QuadraticForm& q) {
    return RealQuadratic{2.0 * real_embedding(q.a.mat()), real_vector(q.d), q.b};
}

class QcqpProgram final : public BarrierProgram {
public:
    explicit QcqpProgram(const QcqpProblem& p) : obj_(embed(p.objective)) {
        for (const auto& c : p.constraints) cons_.push_back(embed(c));
    }

    int dim() const override { return static_cast<int>(obj_.d.size()); }
    int n_constraints() const override { return static_cast<int>(cons_.size()); }

    bool evaluate(const RVector& z, BarrierEval& out, bool derivatives) const override {
        out.f0 = obj_.value(z);
        out.fi.resize(cons_.size());
        for (std::size_t i = 0; i < cons_.size(); ++i) out.fi[i] = cons_[i].value(z);
        if (!derivatives) return true;
        out.g0 = obj_.a2 * z - obj_.d;
        out.h0 = obj_.a2;
        out.gi.resize(cons_.size());
        out.hi.resize(cons_.size());
        for (std::size_t i = 0; i < cons_.size(); ++i) {
            out.gi[i] = cons_[i].a2 * z - cons_[i].d;
            out.hi[i] = cons_[i].a2;
        }
        return true;
    }

private:
    RealQuadratic obj_;
    std::vector<RealQuadratic> cons_;
};

}  // namespace

SolveReport<CVector> solve_qcqp(const QcqpProblem& p, double tol, const std::optional<CVector>& start) {
    const QcqpProgram prog(p);
    BarrierOptions opts;
    opts.tol = tol;
    RVector z0 = start ? real_vector(*start) : RVector::Zero(prog.dim());
    z0 = barrier_phase_one(prog, z0, opts);
    const BarrierResult r = barrier_minimize(prog, z0, opts);

    SolveReport<CVector> rep;
    rep.solution = complex_vector(r.z);
    rep.objective = p.objective(rep.solution);
    for (const auto& c : p.constraints) rep.max_violation = std::max(rep.max_violation, c(rep.solution));
    rep.kkt_residual = r.kkt_residual;
    rep.iterations = r.iterations;
    return rep;
}

BallQcqpSolver::BallQcqpSolver(const HermitianMatrix& a) {
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(a.mat());
    if (es.info() != Eigen::Success) throw std::runtime_error("BallQcqpSolver: eigendecomposition failed");
    lambda_ = es.eigenvalues();
    u_ = es.eigenvectors();
    if (lambda_.size() > 0 && lambda_(0) < -1e-10 * std::max(std::abs(lambda_(lambda_.size() - 1)), 1.0)) {
        throw std::invalid_argument("BallQcqpSolver: matrix is not PSD");
    }
    lambda_ = lambda_.cwiseMax(0.0);
}

SolveReport<CVector> BallQcqpSolver::solve(double scale, const CVector& d, double radius_sq) const {
    if (!(scale >= 0.0)) throw std::invalid_argument("BallQcqpSolver: negative scale makes the program nonconvex");
    if (!(radius_sq >= 0.0)) throw std::invalid_argument("BallQcqpSolver: negative radius");
    const CVector c = u_.adjoint() * d;
    const RVector c2 = c.cwiseAbs2();
    // Stationarity: 2 (scale A + eta I) x = d, eta >= 0 the multiplier of the ball.
    auto norm_sq = [&](double eta) {
        double v = 0.0;
        for (Eigen::Index i = 0; i < c2.size(); ++i) {
            const double den = 2.0 * (scale * lambda_(i) + eta);
            if (c2(i) > 0.0) v += den > 0.0 ? c2(i) / (den * den) : std::numeric_limits<double>::infinity();
        }
        return v;
    };
    double eta = 0.0;
    const double cn = std::sqrt(c2.sum());
    if (cn > 0.0 && norm_sq(0.0) > radius_sq) {
        // Secular equation 1/||x(eta)|| = 1/sqrt(R), increasing and nearly
        // linear in eta: safeguarded Newton inside [lo, hi].
        const double r = std::sqrt(radius_sq);
        double lo = 0.0;
        double hi = cn / (2.0 * std::max(r, 1e-300));
        eta = hi;
        for (int it = 0; it < 200; ++it) {
            const double n2 = norm_sq(eta);
            const double g = 1.0 / std::sqrt(n2) - 1.0 / r;
            if (g < 0.0) lo = eta; else hi = eta;
            if (std::abs(g) * r < 1e-15 || hi - lo <= 1e-16 * hi) break;
            // d(n2)/d(eta) = -4 sum c2 / den^3 with den = 2(scale lambda + eta)
            double dn2 = 0.0;
            for (Eigen::Index i = 0; i < c2.size(); ++i) {
                const double den = 2.0 * (scale * lambda_(i) + eta);
                dn2 -= 4.0 * c2(i) / (den * den * den);
            }
            const double dg = -0.5 * dn2 / (n2 * std::sqrt(n2));
            double next = eta - g / dg;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            eta = next;
        }
    }
    CVector y(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const double den = 2.0 * (scale * lambda_(i) + eta);
        y(i) = c2(i) > 0.0 ? c(i) / den : cdouble(0.0);
    }
    SolveReport<CVector> rep;
    rep.solution = u_ * y;
    const double n2 = rep.solution.squaredNorm();
    if (n2 > radius_sq && n2 > 0.0) rep.solution *= std::sqrt(radius_sq / n2);
    const CVector ax = u_ * lambda_.cast<cdouble>().cwiseProduct(u_.adjoint() * rep.solution);
    rep.objective = scale * rep.solution.dot(ax).real() - d.dot(rep.solution).real();
    const CVector grad = 2.0 * scale * ax - d + 2.0 * eta * rep.solution;
    rep.max_violation = std::max(rep.solution.squaredNorm() - radius_sq, 0.0);
    rep.kkt_residual = std::max(grad.norm() / std::max(1.0, d.norm()),
                                eta * std::abs(rep.solution.squaredNorm() - radius_sq));
    rep.iterations = 1;
    return rep;
}

SolveReport<CVector> solve_ball_qcqp(const QcqpProblem& p) {
    if (p.constraints.size() != 1) throw std::invalid_argument("solve_ball_qcqp: expects exactly one constraint");
    const QuadraticForm& ball = p.constraints.front();
    const CMatrix id = CMatrix::Identity(ball.a.dim(), ball.a.dim());
    if ((ball.a.mat() - id).norm() > 1e-12 || ball.d.norm() > 0.0 || !(ball.b <= 0.0)) {
        throw std::invalid_argument("solve_ball_qcqp: constraint must be x^H x <= P");
    }
    SolveReport<CVector> rep = BallQcqpSolver(p.objective.a).solve(1.0, p.objective.d, -ball.b);
    rep.objective += p.objective.b;
    return rep;
}

// ---------------------------------------------------------------------------
// Hermitian parameterization
// ---------------------------------------------------------------------------

namespace {

struct BasisTerm {
    int row;
    int col;
    cdouble coef;
};

struct BasisElement {
    BasisTerm t[2];
    int n;
};

std::vector<BasisElement> hermitian_basis(int k) {
    std::vector<BasisElement> basis;
    basis.reserve(static_cast<std::size_t>(k * k));
    for (int i = 0; i < k; ++i) basis.push_back({{{i, i, 1.0}, {0, 0, 0.0}}, 1});
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) basis.push_back({{{i, j, 1.0}, {j, i, 1.0}}, 2});
    }
    const cdouble I(0.0, 1.0);
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) basis.push_back({{{i, j, I}, {j, i, -I}}, 2});
    }
    return basis;
}

}  // namespace

int hermitian_param_count(int k) { return k * k; }

HermitianMatrix hermitian_from_params(const RVector& w, int k) {
    CMatrix m = CMatrix::Zero(k, k);
    int a = 0;
    for (int i = 0; i < k; ++i) m(i, i) = w(a++);
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) m(i, j) = w(a++);
    }
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) m(i, j) += cdouble(0.0, w(a++));
    }
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) m(j, i) = std::conj(m(i, j));
    }
    return HermitianMatrix::symmetrized(m);
}

RVector hermitian_to_params(const HermitianMatrix& h) {
    const int k = static_cast<int>(h.dim());
    RVector w(k * k);
    int a = 0;
    for (int i = 0; i < k; ++i) w(a++) = h(i, i).real();
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) w(a++) = h(i, j).real();
    }
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) w(a++) = h(i, j).imag();
    }
    return w;
}

RVector hermitian_param_gradient(const CMatrix& g) {
    const int k = static_cast<int>(g.rows());
    RVector out(k * k);
    int a = 0;
    for (int i = 0; i < k; ++i) out(a++) = g(i, i).real();
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) out(a++) = g(i, j).real() + g(j, i).real();
    }
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) out(a++) = g(i, j).imag() - g(j, i).imag();
    }
    return out;
}

RMatrix logdet_param_hessian(const CMatrix& x_inv) {
    const int k = static_cast<int>(x_inv.rows());
    static thread_local int cached_k = -1;
    static thread_local std::vector<BasisElement> basis;
    if (cached_k != k) {
        basis = hermitian_basis(k);
        cached_k = k;
    }
    const int n = k * k;
    RMatrix h(n, n);
    // d^2/dw_a dw_b [-ln det X] = tr(X^{-1} E_a X^{-1} E_b)
    // with tr(A e_i e_j^T A e_k e_l^T) = A(j,k) A(l,i).
    for (int a = 0; a < n; ++a) {
        const BasisElement& ea = basis[static_cast<std::size_t>(a)];
        for (int b = a; b < n; ++b) {
            const BasisElement& eb = basis[static_cast<std::size_t>(b)];
            cdouble acc = 0.0;
            for (int s = 0; s < ea.n; ++s) {
                for (int t = 0; t < eb.n; ++t) {
                    acc += ea.t[s].coef * eb.t[t].coef * x_inv(ea.t[s].col, eb.t[t].row) *
                           x_inv(eb.t[t].col, ea.t[s].row);
                }
            }
            h(a, b) = acc.real();
            h(b, a) = acc.real();
        }
    }
    return h;
}

// ---------------------------------------------------------------------------
// Log-det program
// ---------------------------------------------------------------------------

namespace {

bool chol_logdet(const CMatrix& m, Eigen::LLT<CMatrix>& llt, double& ld) {
    llt.compute(m);
    if (llt.info() != Eigen::Success) return false;
    const auto& l = llt.matrixLLT();
    ld = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        const double d = l(i, i).real();
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        ld += std::log(d);
    }
    ld *= 2.0;
    return true;
}

double trace_product(const CMatrix& a, const CMatrix& b) {
    // tr(A B) for Hermitian A, B
    return (a.transpose().array() * b.array()).sum().real();
}

class QuantProgram final : public BarrierProgram {
public:
    explicit QuantProgram(const QuantSubproblem& p)
        : p_(p), k_(static_cast<int>(p.m.dim())),
          grad_g_(hermitian_param_gradient(p.g.mat())), grad_h_(hermitian_param_gradient(p.h.mat())),
          cap_nats_(p.cap_nats) {}

    int dim() const override { return k_ * k_; }
    int n_constraints() const override { return 1; }

    bool evaluate(const RVector& z, BarrierEval& out, bool derivatives) const override {
        const HermitianMatrix w = hermitian_from_params(z, k_);
        Eigen::LLT<CMatrix> llt_mw, llt_w;
        double ld_mw = 0.0, ld_w = 0.0;
        if (!chol_logdet(p_.m.mat() + w.mat(), llt_mw, ld_mw)) return false;
        if (!chol_logdet(w.mat(), llt_w, ld_w)) return false;
        out.f0 = -ld_mw + grad_g_.dot(z);
        out.fi.assign(1, -ld_w + grad_h_.dot(z) + p_.c0 - cap_nats_);
        if (!derivatives) return true;
        const CMatrix inv_mw = llt_mw.solve(CMatrix::Identity(k_, k_));
        const CMatrix inv_w = llt_w.solve(CMatrix::Identity(k_, k_));
        out.g0 = grad_g_ - hermitian_param_gradient(inv_mw);
        out.h0 = logdet_param_hessian(inv_mw);
        out.gi.assign(1, grad_h_ - hermitian_param_gradient(inv_w));
        out.hi.assign(1, logdet_param_hessian(inv_w));
        return true;
    }

private:
    const QuantSubproblem& p_;
    int k_;
    RVector grad_g_;
    RVector grad_h_;
    double cap_nats_;
};

}  // namespace

double QuantSubproblem::objective(const HermitianMatrix& w) const {
    Eigen::LLT<CMatrix> llt;
    double ld = 0.0;
    if (!chol_logdet(m.mat() + w.mat(), llt, ld)) return kInf;
    return -ld + trace_product(g.mat(), w.mat());
}

double QuantSubproblem::constraint_lhs(const HermitianMatrix& w) const {
    Eigen::LLT<CMatrix> llt;
    double ld = 0.0;
    if (!chol_logdet(w.mat(), llt, ld)) return kInf;
    return -ld + trace_product(h.mat(), w.mat()) + c0;
}

SolveReport<HermitianMatrix> solve_quant_subproblem(const QuantSubproblem& p, double tol,
                                                    const std::optional<HermitianMatrix>& start) {
    if (!(p.cap_nats > 0.0)) throw std::invalid_argument("solve_quant_subproblem: cap_nats must be positive");
    const int k = static_cast<int>(p.m.dim());
    const QuantProgram prog(p);
    BarrierOptions opts;
    opts.tol = tol;

    // The constraint's unconstrained minimizer is H^{-1}; mixing it with the
    // anchor gives a strictly feasible start whenever one exists.
    const HermitianMatrix h_inv = HermitianMatrix::symmetrized(CholeskyFactor(p.h).inverse());
    std::vector<HermitianMatrix> candidates;
    if (start) {
        candidates.push_back(*start);
        candidates.push_back((*start + h_inv) * 0.5);
    }
    candidates.push_back(h_inv);
    RVector z0;
    BarrierEval e;
    for (const auto& c : candidates) {
        const RVector z = hermitian_to_params(c);
        if (prog.evaluate(z, e, false) && e.fi[0] < 0.0) {
            z0 = z;
            break;
        }
    }
    if (z0.size() == 0) z0 = barrier_phase_one(prog, hermitian_to_params(h_inv), opts);

    const BarrierResult r = barrier_minimize(prog, z0, opts);
    SolveReport<HermitianMatrix> rep;
    rep.solution = hermitian_from_params(r.z, k);
    rep.objective = r.eval.f0;
    rep.max_violation = std::max(0.0, r.eval.fi[0]);
    rep.kkt_residual = r.kkt_residual;
    rep.iterations = r.iterations;
    return rep;
}

// ---------------------------------------------------------------------------
// Simplex-with-slack program
// ---------------------------------------------------------------------------

namespace {

class SimplexProgram final : public BarrierProgram {
public:
    SimplexProgram(const SmoothConvexObjective& obj, double budget) : obj_(obj), budget_(budget) {}

    int dim() const override { return obj_.dim(); }
    int n_constraints() const override { return obj_.dim() + 1; }

    bool evaluate(const RVector& p, BarrierEval& out, bool derivatives) const override {
        const int n = obj_.dim();
        out.fi.resize(static_cast<std::size_t>(n + 1));
        for (int i = 0; i < n; ++i) out.fi[static_cast<std::size_t>(i)] = -p(i);
        out.fi[static_cast<std::size_t>(n)] = p.sum() - budget_;
        if (!derivatives) return obj_.value(p, out.f0);
        if (!obj_.derivatives(p, out.f0, out.g0, out.h0)) return false;
        if (static_cast<int>(out.gi.size()) != n + 1) {
            out.gi.assign(static_cast<std::size_t>(n + 1), RVector::Zero(n));
            out.hi.assign(static_cast<std::size_t>(n + 1), RMatrix::Zero(n, n));
            for (int i = 0; i < n; ++i) out.gi[static_cast<std::size_t>(i)](i) = -1.0;
            out.gi[static_cast<std::size_t>(n)] = RVector::Ones(n);
        }
        return true;
    }

private:
    const SmoothConvexObjective& obj_;
    double budget_;
};

}  // namespace

SolveReport<RVector> solve_power_subproblem(const SmoothConvexObjective& obj, double budget, double tol,
                                            const std::optional<RVector>& start) {
    if (!(budget > 0.0)) throw std::invalid_argument("solve_power_subproblem: budget must be positive");
    const int n = obj.dim();
    const SimplexProgram prog(obj, budget);
    BarrierOptions opts;
    opts.tol = tol;

    const RVector centre = RVector::Constant(n, budget / static_cast<double>(n + 1));
    RVector p0 = start ? RVector(0.5 * start->cwiseMax(0.0) + 0.5 * centre) : centre;
    if (p0.sum() >= budget) p0 = centre;
    p0 = barrier_phase_one(prog, p0, opts);
    const BarrierResult r = barrier_minimize(prog, p0, opts);

    SolveReport<RVector> rep;
    rep.solution = r.z;
    rep.objective = r.eval.f0;
    rep.max_violation = max_violation(r.eval);
    rep.kkt_residual = r.kkt_residual;
    rep.iterations = r.iterations;
    return rep;
}

}  // namespace cloudradar

namespace cloudradar {

namespace {

struct SpectralPoint {
    double nu = 0.0;
    RVector w;        // eigenvalues of the whitened solution
    CMatrix u;        // solution = u diag(w) u^H
    double lhs = 0.0; // constraint left side minus cap, nats
    HermitianMatrix omega() const { return HermitianMatrix::symmetrized(u * w.asDiagonal() * u.adjoint()); }
};

class SpectralQuant {
public:
    // With G = L L^H and L^{-1} H L^{-H} = V diag(mu) V^H, every G + nu H
    // factors as F F^H with F = L V (I + nu mu)^{1/2}, so only the
    // whitened M needs a fresh eigendecomposition per multiplier.
    explicit SpectralQuant(const QuantSubproblem& p) : p_(p), cap_(p.cap_nats) {
        const Eigen::LLT<CMatrix> g_llt(p.g.mat());
        if (g_llt.info() != Eigen::Success) throw SingularMatrix("spectral quant: G not PD");
        const Eigen::Index k = p.m.dim();
        const CMatrix l = g_llt.matrixL();
        const CMatrix l_inv = l.triangularView<Eigen::Lower>().solve(CMatrix::Identity(k, k));
        const CMatrix hw = l_inv * p.h.mat() * l_inv.adjoint();
        const Eigen::SelfAdjointEigenSolver<CMatrix> he(0.5 * (hw + hw.adjoint()));
        mu_ = he.eigenvalues().cwiseMax(0.0);
        lv_ = l * he.eigenvectors();
        const CMatrix m0 = lv_.adjoint() * p.m.mat() * lv_;
        m0_ = 0.5 * (m0 + m0.adjoint());
        log_det_g_ = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) log_det_g_ += 2.0 * std::log(g_llt.matrixLLT()(i, i).real());
        lv_inv_h_ = l_inv.adjoint() * he.eigenvectors();
    }

    // Minimizer of -ln det(M+W) + tr((G + nu H) W) - nu ln det W. In the
    // coordinates W' = F^H W F the condition (M' + W')^{-1} + nu W'^{-1} = I
    // is diagonal in the eigenbasis of M' = F^H M F:
    //   w^2 + (m - 1 - nu) w - nu m = 0.
    SpectralPoint at(double nu) const {
        const RVector dh = (RVector::Ones(mu_.size()) + nu * mu_).cwiseSqrt();
        const CMatrix mw = dh.asDiagonal() * m0_ * dh.asDiagonal();
        const Eigen::SelfAdjointEigenSolver<CMatrix> me(mw);
        const RVector m = me.eigenvalues();
        SpectralPoint pt;
        pt.nu = nu;
        pt.w.resize(m.size());
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double mi = std::max(m(i), 0.0);
            const double b = mi - 1.0 - nu;
            const double disc = std::sqrt(b * b + 4.0 * nu * mi);
            pt.w(i) = b > 0.0 ? 2.0 * nu * mi / (b + disc) : 0.5 * (disc - b);
        }
        // W = F^{-H} W' F^{-1}, F^{-H} = L^{-H} V D^{-1/2} since V is unitary.
        pt.u = lv_inv_h_ * (dh.cwiseInverse().asDiagonal() * me.eigenvectors());
        if (!(pt.w.minCoeff() > 0.0)) {
            pt.lhs = kInf;
            return pt;
        }
        const double log_det_c = log_det_g_ + (RVector::Ones(mu_.size()) + nu * mu_).array().log().sum();
        const double log_det_w = pt.w.array().log().sum() - log_det_c;
        // tr(H u diag(w) u^H)
        const CMatrix hu = p_.h.mat() * pt.u;
        double tr_hw = 0.0;
        for (Eigen::Index i = 0; i < pt.w.size(); ++i) tr_hw += pt.w(i) * pt.u.col(i).dot(hu.col(i)).real();
        pt.lhs = -log_det_w + tr_hw + p_.c0 - cap_;
        return pt;
    }

private:
    const QuantSubproblem& p_;
    double cap_;
    RVector mu_;
    CMatrix lv_;
    CMatrix lv_inv_h_;  // (L V)^{-H}
    CMatrix m0_;
    double log_det_g_ = 0.0;
};

}  // namespace

SolveReport<HermitianMatrix> solve_quant_subproblem_spectral(const QuantSubproblem& p, double tol,
                                                             std::optional<double> nu_hint) {
    if (!(p.cap_nats > 0.0)) throw std::invalid_argument("solve_quant_subproblem: cap_nats must be positive");
    const SpectralQuant sq(p);
    int evals = 1;
    SpectralPoint best = sq.at(0.0);
    if (!(best.lhs <= 0.0)) {
        // lhs(nu) decreases in nu. Bracket the root, then Illinois regula
        // falsi in log nu, always keeping a feasible end.
        const bool hinted = nu_hint && *nu_hint > 0.0 && std::isfinite(*nu_hint);
        const double step = hinted ? 1.25 : 16.0;
        SpectralPoint hi = sq.at(hinted ? *nu_hint : 1.0);
        ++evals;
        SpectralPoint lo;
        if (hi.lhs <= 0.0) {
            lo = sq.at(hi.nu / step);
            ++evals;
            while (lo.lhs <= 0.0) {
                if (lo.nu < 1e-300) break;
                hi = std::move(lo);
                lo = sq.at(hi.nu / 16.0);
                ++evals;
            }
        } else {
            lo = std::move(hi);
            hi = sq.at(lo.nu * step);
            ++evals;
            while (!(hi.lhs <= 0.0)) {
                if (hi.nu > 1e40) throw Infeasible("solve_quant_subproblem: constraint cannot be met");
                lo = std::move(hi);
                hi = sq.at(lo.nu * 16.0);
                ++evals;
            }
        }
        double f_lo = std::isfinite(lo.lhs) ? lo.lhs : 1e300;
        double f_hi = hi.lhs;
        int side = 0;
        while (hi.nu / lo.nu - 1.0 > 1e-15 && evals < 200) {
            if (-f_hi * hi.nu < 0.01 * tol) break;
            const double a = std::log(lo.nu);
            const double b = std::log(hi.nu);
            double c = (f_lo < 1e299) ? b - f_hi * (b - a) / (f_hi - f_lo) : 0.5 * (a + b);
            // Keep the secant strictly inside the bracket; bisect only when it is undefined.
            if (!std::isfinite(c)) c = 0.5 * (a + b);
            c = std::clamp(c, a + 1e-9 * (b - a), b - 1e-9 * (b - a));
            SpectralPoint mid = sq.at(std::exp(c));
            ++evals;
            if (mid.lhs <= 0.0) {
                hi = std::move(mid);
                f_hi = hi.lhs;
                if (side == 1 && f_lo < 1e299) f_lo *= 0.5;
                side = 1;
            } else {
                lo = std::move(mid);
                f_lo = std::isfinite(lo.lhs) ? lo.lhs : 1e300;
                if (side == -1) f_hi *= 0.5;
                side = -1;
            }
        }
        best = std::move(hi);
    }

    SolveReport<HermitianMatrix> rep;
    rep.solution = best.omega();
    rep.objective = p.objective(rep.solution);
    rep.max_violation = std::max(0.0, best.lhs);
    rep.iterations = evals;
    rep.multiplier = best.nu;
    const Eigen::Index k = p.m.dim();
    const CMatrix id = CMatrix::Identity(k, k);
    const CMatrix inv_mw = (p.m.mat() + rep.solution.mat()).llt().solve(id);
    CMatrix r = p.g.mat() - inv_mw;
    if (best.nu > 0.0) r += best.nu * (p.h.mat() - rep.solution.mat().llt().solve(id));
    rep.kkt_residual =
        std::max(hermitian_param_gradient(r).cwiseAbs().maxCoeff(), best.nu * std::abs(best.lhs));
    return rep;
}

}  // namespace cloudradar
