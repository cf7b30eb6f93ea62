#pragma once

#include <optional>
#include <vector>

#include "cloudradar/linalg.hpp"

namespace cloudradar {

inline constexpr double kDefaultTol = 1e-7;

template <class Solution>
struct SolveReport {
    Solution solution;
    double objective = 0.0;
    double max_violation = 0.0;  // max_i max(f_i, 0) over inequality constraints
    double kkt_residual = 0.0;
    int iterations = 0;          // total Newton steps (or function evaluations for 1-D searches)
    double multiplier = 0.0;     // dual variable of the main constraint, where the solver exposes it
};

// ---------------------------------------------------------------------------
// Log-barrier interior point engine over real variables.
// ---------------------------------------------------------------------------

struct BarrierEval {
    double f0 = 0.0;
    RVector g0;
    RMatrix h0;
    std::vector<double> fi;
    std::vector<RVector> gi;
    std::vector<RMatrix> hi;
};

/// Convex program: minimize f0(z) s.t. f_i(z) <= 0. evaluate() returns false
/// when z lies outside the domain of f0 or any f_i.
class BarrierProgram {
public:
    virtual ~BarrierProgram() = default;
    virtual int dim() const = 0;
    virtual int n_constraints() const = 0;
    virtual bool evaluate(const RVector& z, BarrierEval& out, bool derivatives) const = 0;
};

struct BarrierOptions {
    double tol = kDefaultTol;   // duality gap target m / t
    double mu = 10.0;
    int max_newton = 2000;
    double alpha = 0.25;        // Armijo slope fraction
    double beta = 0.5;          // backtracking factor
};

struct BarrierResult {
    RVector z;
    BarrierEval eval;
    double kkt_residual = 0.0;
    int iterations = 0;
};

/// Requires z0 strictly feasible; throws Infeasible otherwise and
/// MaxIterations when the Newton budget is exhausted.
BarrierResult barrier_minimize(const BarrierProgram& prog, RVector z0, const BarrierOptions& opts);

/// Finds a strictly feasible point of prog starting from a point in the
/// domain; throws Infeasible if none exists.
RVector barrier_phase_one(const BarrierProgram& prog, const RVector& z_domain, const BarrierOptions& opts);

// ---------------------------------------------------------------------------
// Complex QCQP (waveform subproblems).
// ---------------------------------------------------------------------------

/// x^H A x - Re(d^H x) + b
struct QuadraticForm {
    HermitianMatrix a;
    CVector d;
    double b = 0.0;

    double operator()(const CVector& x) const;
};

struct QcqpProblem {
    QuadraticForm objective;                 // b ignored for optimization, kept in value
    std::vector<QuadraticForm> constraints;  // each <= 0

    int dim() const { return static_cast<int>(objective.a.dim()); }
};

SolveReport<CVector> solve_qcqp(const QcqpProblem& p, double tol = kDefaultTol,
                                const std::optional<CVector>& start = std::nullopt);

/// minimize scale x^H A x - Re(d^H x) s.t. x^H x <= radius_sq, A Hermitian PSD.
/// The eigendecomposition of A is kept, so repeated solves with a new scale
/// and linear term cost one secular-equation root find.
class BallQcqpSolver {
public:
    explicit BallQcqpSolver(const HermitianMatrix& a);
    SolveReport<CVector> solve(double scale, const CVector& d, double radius_sq) const;

private:
    RVector lambda_;
    CMatrix u_;
};

/// solve_qcqp specialized to a single constraint of the form x^H x - P <= 0.
SolveReport<CVector> solve_ball_qcqp(const QcqpProblem& p);

// ---------------------------------------------------------------------------
// Per-sensor log-det program over a Hermitian PSD matrix.
// ---------------------------------------------------------------------------

/// minimize  -ln det(M + W) + tr(G W)
/// s.t.      -ln det(W) + tr(H W) + c0 <= cap_nats
struct QuantSubproblem {
    HermitianMatrix m;
    HermitianMatrix g;
    HermitianMatrix h;
    double c0 = 0.0;
    double cap_nats = 0.0;

    /// Objective value; +inf outside the domain.
    double objective(const HermitianMatrix& w) const;
    /// Constraint left side in nats; +inf outside the domain.
    double constraint_lhs(const HermitianMatrix& w) const;
};

SolveReport<HermitianMatrix> solve_quant_subproblem(const QuantSubproblem& p, double tol = kDefaultTol,
                                                    const std::optional<HermitianMatrix>& start = std::nullopt);

/// Same program solved through its scalar dual: for a multiplier nu the
/// Lagrangian minimizer is available in closed form after whitening by
/// (G + nu H), and nu is found by bisection on the constraint value. Orders
/// of magnitude cheaper than the barrier route; throws Infeasible when the
/// constraint's minimum exceeds the cap.
/// nu_hint, typically the multiplier of a previous nearby solve, only seeds
/// the bracketing search.
SolveReport<HermitianMatrix> solve_quant_subproblem_spectral(const QuantSubproblem& p, double tol = kDefaultTol,
                                                             std::optional<double> nu_hint = std::nullopt);

// Real parameterization of K x K Hermitian matrices (K^2 parameters: the
// diagonal, then real and imaginary parts of the strict upper triangle).
int hermitian_param_count(int k);
HermitianMatrix hermitian_from_params(const RVector& w, int k);
RVector hermitian_to_params(const HermitianMatrix& m);
/// d/dw of Re tr(G W(w)).
RVector hermitian_param_gradient(const CMatrix& g);
/// Hessian of -ln det(X) in the parameterization, given X^{-1}.
RMatrix logdet_param_hessian(const CMatrix& x_inv);

// ---------------------------------------------------------------------------
// Smooth convex minimization over {p >= 0, sum p <= budget}.
// ---------------------------------------------------------------------------

class SmoothConvexObjective {
public:
    virtual ~SmoothConvexObjective() = default;
    virtual int dim() const = 0;
    /// Returns false outside the domain.
    virtual bool value(const RVector& p, double& v) const = 0;
    /// Value, gradient and Hessian; returns false outside the domain.
    virtual bool derivatives(const RVector& p, double& v, RVector& grad, RMatrix& hess) const = 0;
};

SolveReport<RVector> solve_power_subproblem(const SmoothConvexObjective& obj, double budget,
                                            double tol = kDefaultTol,
                                            const std::optional<RVector>& start = std::nullopt);

}  // namespace cloudradar
