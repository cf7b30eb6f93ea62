#pragma once

// Random instances and independent reference computations shared by the
// unit tests and the acceptance runner.

#include <functional>
#include <string>
#include <vector>

#include "cloudradar/af_opt.hpp"
#include "cloudradar/cf_opt.hpp"
#include "cloudradar/model.hpp"

namespace testsupport {

using namespace cloudradar;

double uniform(Rng& rng, double lo, double hi);
CMatrix random_complex(Rng& rng, int rows, int cols);
/// A A^H / k + floor I with A standard complex Gaussian.
HermitianMatrix random_pd(Rng& rng, int k, double scale = 1.0, double floor = 0.2);
/// Unit-Frobenius-norm Hermitian direction.
HermitianMatrix random_hermitian_direction(Rng& rng, int k);
CVector random_vector(Rng& rng, int k, double power);

/// Scenario with N sensors and code length K; every field drawn at random.
Scenario random_scenario(Rng& rng, int n, int k);
QuantCovSet random_quant(Rng& rng, const Scenario& s);
PowerGains random_gains(Rng& rng, const Scenario& s, double fill = 0.8);

/// log|det M| through an LU factorization (no Cholesky, no eigenvalues).
double lu_logdet(const CMatrix& m);
/// ln det((S1+S0)/2) - (ln det S1 + ln det S0)/2 via lu_logdet.
double oracle_bhattacharyya(const CMatrix& s1, const CMatrix& s0);

/// Full block-diagonal covariances of the quantized CF observation.
void cf_full_covariances(const Scenario& s, const CVector& x, const QuantCovSet& q, CMatrix& s1, CMatrix& s0);
/// Fusion-center covariances of the AF observation for one channel draw.
void af_full_covariances(const Scenario& s, const CVector& x, const RVector& p, const CVector& f, CMatrix& s1,
                         CMatrix& s0);
/// I(r; r + q) under H1 from the full covariances.
double oracle_rate_nats(const Scenario& s, const CVector& x, const CMatrix& q, int n);

/// Long-run projected gradient on {p >= 0, sum p <= budget}.
RVector projected_gradient_oracle(const SmoothConvexObjective& f, double budget, int iterations = 20000);
RVector project_capped_simplex(const RVector& v, double budget);

/// Scalar (K = 1) quantization program by two-stage grid search in ln w.
double scalar_quant_grid_oracle(const QuantSubproblem& p, double& w_best);

/// Summary of one bound family over many random instances.
struct BoundCheck {
    std::string name;
    int instances = 0;
    double max_tightness = 0.0;   // |U(anchor) - f(anchor)|
    double worst_domination = 0.0; // max(f(probe) - U(probe)) / max(1, |f|)
    double max_grad_rel = 0.0;    // relative error of the bound gradient vs central differences of f
    bool pass(double tight_tol, double dom_tol, double grad_tol) const {
        return max_tightness <= tight_tol && worst_domination <= dom_tol && max_grad_rel < grad_tol;
    }
};

/// Checks every majorizer family: CF objective and rate in x, CF rate and
/// objective in Omega_q, AF objective in x and in the power gains.
std::vector<BoundCheck> run_bound_suite(int instances, int probes, std::uint64_t seed, double fd_step = 1e-5);

}  // namespace testsupport
