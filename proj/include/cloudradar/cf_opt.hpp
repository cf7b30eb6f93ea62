#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "cloudradar/convex.hpp"
#include "cloudradar/metrics.hpp"
#include "cloudradar/model.hpp"
#include "cloudradar/trace.hpp"
#include "cloudradar/waveform_bound.hpp"

namespace cloudradar {

/// Negative total Bhattacharyya distance, the quantity minimized by the CF design.
double cf_objective(const Scenario& s, const Waveform& x, const QuantCovSet& q);

/// Majorizer of the CF objective in x with the quantization covariances fixed,
/// plus linearized backhaul-rate constraints.
struct CfWaveformBound {
    std::vector<WaveformBoundTerm> terms;      // one per sensor
    std::vector<QuadraticForm> rate_bounds;    // rate_n upper bound minus cap, in nats (empty when ideal)
    CVector anchor;

    double value(const CVector& x) const;
    CVector gradient(const CVector& x) const;
    /// Collapsed QCQP: sum of the per-sensor quadratics, rate bounds and the power constraint.
    QcqpProblem program(double p_t) const;
};

/// With ideal_backhaul the rate constraints are omitted (used with Omega_q = 0).
CfWaveformBound build_waveform_bound_cf(const Scenario& s, const Waveform& x_anchor, const QuantCovSet& q,
                                        bool ideal_backhaul = false);

/// Per-sensor majorizer of the CF objective in Omega_q,n with x fixed.
struct CfQuantBound {
    QuantSubproblem sub;   // M, G, H, c0, cap
    double constant = 0.0;

    double value(const HermitianMatrix& w) const { return sub.objective(w) + constant; }
    /// Upper bound of the backhaul rate in nats.
    double rate_bound(const HermitianMatrix& w) const { return sub.constraint_lhs(w); }
};

std::vector<CfQuantBound> build_quant_bound_cf(const Scenario& s, const Waveform& x, const QuantCovSet& q_anchor);

enum class QuantSolver { spectral, barrier };

struct CfOptions {
    double tol = kDefaultTol;
    int max_outer = 30;
    int max_inner = 50;
    double outer_rel_tol = 1e-5;
    double inner_rel_tol = 1e-6;
    bool optimize_waveform = true;
    bool optimize_quant = true;
    bool ideal_backhaul = false;   // waveform-only design with Omega_q = 0 and no rate limits
    QuantSolver quant_solver = QuantSolver::spectral;
    bool accelerate = true;        // squared extrapolation of the MM map (each inner step is then one cycle)
};

struct CfDesign {
    Waveform x;
    QuantCovSet q;
};

struct CfResult {
    CfDesign design;
    double objective = 0.0;
    OptTrace trace;
};

/// Largest backhaul-rate excess over the caps, in the scenario rate unit (<= 0 when feasible).
double cf_rate_slack(const Scenario& s, const Waveform& x, const QuantCovSet& q);

/// Alternates waveform and quantization blocks, each solved by repeated
/// majorization. Throws InfeasibleInit when the starting point violates the
/// power or rate constraints.
CfResult optimize_cf(const Scenario& s, const CfDesign& init, const CfOptions& opts = {});

/// Scalar eps with rate(x, eps I) = cap for sensor n (bisection in log eps,
/// returned on the feasible side).
double rate_matching_epsilon(const Scenario& s, const Waveform& x, int sensor);
QuantCovSet rate_matching_quantization(const Scenario& s, const Waveform& x);

enum class CfScheme { no_opt, waveform_opt, quant_opt, joint };

CfScheme cf_scheme_from_string(std::string_view name);
std::string_view to_string(CfScheme s);

/// Reference designs. joint runs the full alternation from each of the other
/// three designs and keeps the best, since block-coordinate descent stalls
/// close to its starting point once every rate constraint is active.
CfDesign cf_baselines(const Scenario& s, CfScheme which, const CfOptions& opts = {});

struct CfSchemeSet {
    CfDesign no_opt;
    CfDesign waveform_opt;
    CfDesign quant_opt;
    CfDesign joint;

    const CfDesign& get(CfScheme which) const;
};

/// All four reference designs, sharing the single-block runs with joint.
CfSchemeSet cf_all_baselines(const Scenario& s, const CfOptions& opts = {});

}  // namespace cloudradar
