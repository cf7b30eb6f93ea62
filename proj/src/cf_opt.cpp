#include "cloudradar/cf_opt.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "cloudradar/errors.hpp"
#include "mm_accel.hpp"

namespace cloudradar {

double cf_objective(const Scenario& s, const Waveform& x, const QuantCovSet& q) {
    return -cf_bhattacharyya(s, x, q).total;
}

double CfWaveformBound::value(const CVector& x) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.value(x);
    return v;
}

CVector CfWaveformBound::gradient(const CVector& x) const {
    CVector g = CVector::Zero(x.size());
    for (const auto& t : terms) g += t.gradient(x);
    return g;
}

QcqpProblem CfWaveformBound::program(double p_t) const {
    const Eigen::Index k = anchor.size();
    CMatrix a = CMatrix::Zero(k, k);
    CVector d = CVector::Zero(k);
    double c = 0.0;
    for (const auto& t : terms) {
        a += t.phi * t.r_inv.mat();
        d += t.d;
        c += t.constant;
    }
    QcqpProblem p{QuadraticForm{HermitianMatrix::symmetrized(a), d, c}, rate_bounds};
    p.constraints.push_back(QuadraticForm{HermitianMatrix::identity(k), CVector::Zero(k), -p_t});
    return p;
}

CfWaveformBound build_waveform_bound_cf(const Scenario& s, const Waveform& x_anchor, const QuantCovSet& q,
                                        bool ideal_backhaul) {
    if (q.size() != static_cast<std::size_t>(s.n_sensors)) {
        throw std::invalid_argument("build_waveform_bound_cf: QuantCovSet length != N");
    }
    CfWaveformBound b;
    b.anchor = x_anchor.x;
    for (int n = 0; n < s.n_sensors; ++n) {
        const auto i = static_cast<std::size_t>(n);
        const HermitianMatrix r = s.omega_w[i] + q.covs[i];
        b.terms.push_back(waveform_bound_term(s.sigma_t_sq[i], s.sigma_c_sq[i], r, x_anchor.x));
        if (ideal_backhaul) continue;
        // ln(1 + t) <= ln(1 + t0) + (t - t0) / (1 + t0) with t = (st + sc) y(x)
        const double bn = s.sigma_t_sq[i] + s.sigma_c_sq[i];
        const WaveformBoundTerm& term = b.terms.back();
        const double t0 = bn * term.y0;
        const double info_noise = CholeskyFactor(r).logdet() - CholeskyFactor(q.covs[i]).logdet();
        QuadraticForm rate{term.r_inv * (bn / (1.0 + t0)), CVector::Zero(x_anchor.size()),
                           info_noise + std::log1p(t0) - t0 / (1.0 + t0) -
                               s.backhaul_cap_nats(n)};
        b.rate_bounds.push_back(std::move(rate));
    }
    return b;
}

std::vector<CfQuantBound> build_quant_bound_cf(const Scenario& s, const Waveform& x, const QuantCovSet& q_anchor) {
    if (q_anchor.size() != static_cast<std::size_t>(s.n_sensors)) {
        throw std::invalid_argument("build_quant_bound_cf: QuantCovSet length != N");
    }
    const CMatrix xx = outer(x.x);
    std::vector<CfQuantBound> out;
    for (int n = 0; n < s.n_sensors; ++n) {
        const auto i = static_cast<std::size_t>(n);
        const double st = s.sigma_t_sq[i];
        const double sc = s.sigma_c_sq[i];
        const CMatrix& w = s.omega_w[i].mat();
        const CMatrix& qp = q_anchor.covs[i].mat();
        const CholeskyFactor s1(CMatrix((st + sc) * xx + w + qp));
        const CholeskyFactor s0(CMatrix(sc * xx + w + qp));
        const CMatrix s1_inv = s1.inverse();
        const CMatrix g = 0.5 * s1_inv + 0.5 * s0.inverse();

        CfQuantBound b;
        b.sub.m = HermitianMatrix::symmetrized((0.5 * st + sc) * xx + w);
        b.sub.g = HermitianMatrix::symmetrized(g);
        b.sub.h = HermitianMatrix::symmetrized(s1_inv);
        b.sub.c0 = s1.logdet() - (s1_inv * qp).trace().real();
        b.sub.cap_nats = s.backhaul_cap_nats(n);
        b.constant = 0.5 * s1.logdet() + 0.5 * s0.logdet() - (g * qp).trace().real();
        out.push_back(std::move(b));
    }
    return out;
}

double cf_rate_slack(const Scenario& s, const Waveform& x, const QuantCovSet& q) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < s.n_sensors; ++n) {
        const auto i = static_cast<std::size_t>(n);
        worst = std::max(worst, cf_backhaul_rate(s, x, q.covs[i], n) - s.backhaul_cap[i]);
    }
    return worst;
}

namespace {

constexpr double kRateFeasTol = 1e-6;  // scenario rate unit

struct CfState {
    const Scenario& s;
    const CfOptions& opts;
    Waveform x;
    QuantCovSet q;
    double obj = 0.0;
    OptTrace trace;
    Stopwatch clock;
    mutable std::vector<double> nu_hint;  // last multipliers of the quantization subproblems

    double slack() const {
        double v = x.power() - s.p_t;
        if (!opts.ideal_backhaul) v = std::max(v, cf_rate_slack(s, x, q));
        return v;
    }

    void record(int outer, int inner, const char* block) {
        trace.rows.push_back(TraceRow{outer, inner, block, obj, slack(), clock.seconds()});
    }

    bool feasible(const Waveform& xc, const QuantCovSet& qc) const {
        if (xc.power() > s.p_t * (1.0 + 1e-9) + 1e-12) return false;
        if (opts.ideal_backhaul) return true;
        return cf_rate_slack(s, xc, qc) <= kRateFeasTol;
    }

    // Each step accepts the minimizer of a tight majorizer; the explicit
    // objective check guards against solver round-off at convergence.
    std::optional<Waveform> waveform_step(const Waveform& anchor) const {
        try {
            const CfWaveformBound bound = build_waveform_bound_cf(s, anchor, q, opts.ideal_backhaul);
            const QcqpProblem prog = bound.program(s.p_t);
            const auto rep = opts.ideal_backhaul
                                 ? solve_ball_qcqp(prog)
                                 : solve_qcqp(prog, opts.tol, CVector(anchor.x * (1.0 - 1e-3)));
            return Waveform{rep.solution};
        } catch (const std::runtime_error&) {
            return std::nullopt;
        }
    }

    std::optional<QuantCovSet> quant_step(const QuantCovSet& anchor) const {
        try {
            const auto bounds = build_quant_bound_cf(s, x, anchor);
            QuantCovSet out = anchor;
            nu_hint.resize(bounds.size(), 0.0);
            for (std::size_t n = 0; n < bounds.size(); ++n) {
                if (opts.quant_solver == QuantSolver::spectral) {
                    auto rep = solve_quant_subproblem_spectral(bounds[n].sub, opts.tol, nu_hint[n]);
                    nu_hint[n] = rep.multiplier;
                    out.covs[n] = std::move(rep.solution);
                } else {
                    out.covs[n] = solve_quant_subproblem(bounds[n].sub, opts.tol, anchor.covs[n]).solution;
                }
            }
            return out;
        } catch (const std::runtime_error&) {
            return std::nullopt;
        }
    }

    double checked_objective(const Waveform& xc, const QuantCovSet& qc) const {
        try {
            if (!feasible(xc, qc)) return std::numeric_limits<double>::infinity();
            return cf_objective(s, xc, qc);
        } catch (const SingularMatrix&) {
            return std::numeric_limits<double>::infinity();
        }
    }

    template <class T>
    void run_block(int outer, const char* name, T& var, const detail::MmMap<T>& map) {
        for (int inner = 1; inner <= opts.max_inner; ++inner) {
            std::optional<detail::MmOutcome<T>> next;
            if (opts.accelerate) {
                next = detail::squarem_cycle(var, obj, map);
            } else if (auto cand = map.step(var)) {
                const double f = map.objective(*cand);
                if (f <= obj) next = detail::MmOutcome<T>{std::move(*cand), f};
            }
            if (!next) return;
            const double rel = relative_drop(obj, next->objective);
            var = std::move(next->point);
            obj = next->objective;
            record(outer, inner, name);
            if (rel < opts.inner_rel_tol) return;
        }
    }

    void waveform_block(int outer) {
        detail::MmMap<Waveform> map{
            [this](const Waveform& a) { return waveform_step(a); },
            [this](const Waveform& c) { return checked_objective(c, q); },
            [](const Waveform& a, double ca, const Waveform& b, double cb) { return Waveform{ca * a.x + cb * b.x}; },
            [](const Waveform& a) { return a.x.norm(); },
            [](const Waveform& a) { return a.x.norm() > 0.0; }};
        run_block(outer, "waveform", x, map);
    }

    void quant_block(int outer) {
        detail::MmMap<QuantCovSet> map{
            [this](const QuantCovSet& a) { return quant_step(a); },
            [this](const QuantCovSet& c) { return checked_objective(x, c); },
            [](const QuantCovSet& a, double ca, const QuantCovSet& b, double cb) {
                QuantCovSet out;
                for (std::size_t n = 0; n < a.size(); ++n) {
                    out.covs.push_back(HermitianMatrix::symmetrized(ca * a.covs[n].mat() + cb * b.covs[n].mat()));
                }
                return out;
            },
            [](const QuantCovSet& a) {
                double v = 0.0;
                for (const auto& c : a.covs) v += c.mat().squaredNorm();
                return std::sqrt(v);
            },
            [](const QuantCovSet& a) {
                Eigen::LLT<CMatrix> llt;
                for (const auto& c : a.covs) {
                    if (!try_cholesky(c.mat(), llt)) return false;
                }
                return true;
            }};
        run_block(outer, "quant", q, map);
    }
};

}  // namespace

CfResult optimize_cf(const Scenario& s, const CfDesign& init, const CfOptions& opts) {
    s.validate();
    if (init.x.size() != s.code_len) throw std::invalid_argument("optimize_cf: waveform length != K");
    CfState st{s, opts, init.x, opts.ideal_backhaul ? QuantCovSet::zeros(s.n_sensors, s.code_len) : init.q,
               0.0, {}, {}, {}};
    if (st.q.size() != static_cast<std::size_t>(s.n_sensors)) {
        throw std::invalid_argument("optimize_cf: QuantCovSet length != N");
    }
    if (st.x.power() > s.p_t * (1.0 + 1e-9) + 1e-12) {
        throw InfeasibleInit("optimize_cf: initial waveform exceeds P_T; rescale x to sqrt(P_T) / ||x||");
    }
    if (!opts.ideal_backhaul) {
        double rate_slack = 0.0;
        try {
            rate_slack = cf_rate_slack(s, st.x, st.q);
        } catch (const SingularMatrix&) {
            rate_slack = std::numeric_limits<double>::infinity();
        }
        if (!(rate_slack <= kRateFeasTol)) {
            throw InfeasibleInit(
                "optimize_cf: initial quantization noise violates the backhaul caps; "
                "repair by scaling Omega_q,n = eps I up until the rates fit (see rate_matching_quantization)");
        }
    }

    st.obj = cf_objective(s, st.x, st.q);
    st.record(0, 0, "init");
    st.trace.termination = "max_outer";
    for (int outer = 1; outer <= opts.max_outer; ++outer) {
        const double before = st.obj;
        if (opts.optimize_waveform) st.waveform_block(outer);
        if (opts.optimize_quant && !opts.ideal_backhaul) st.quant_block(outer);
        st.record(outer, 0, "outer");
        if (relative_drop(before, st.obj) < opts.outer_rel_tol) {
            st.trace.termination = "converged";
            break;
        }
    }
    return CfResult{CfDesign{std::move(st.x), std::move(st.q)}, st.obj, std::move(st.trace)};
}

double rate_matching_epsilon(const Scenario& s, const Waveform& x, int sensor) {
    const double cap = s.backhaul_cap_nats(sensor);
    if (!(cap > 0.0)) throw std::invalid_argument("rate_matching_epsilon: backhaul capacity must be positive");
    const int k = s.code_len;
    auto rate = [&](double log_eps) {
        return cf_backhaul_rate_nats(s, x, HermitianMatrix::identity(k) * std::exp(log_eps), sensor);
    };
    double lo = 0.0;
    double hi = 0.0;
    while (rate(lo) <= cap) lo -= 2.0;
    while (rate(hi) > cap) hi += 2.0;
    // Invariant: rate(lo) > cap >= rate(hi); rate decreases in eps.
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (rate(mid) > cap) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (cap - rate(hi) < 1e-10) break;
    }
    return std::exp(hi);
}

QuantCovSet rate_matching_quantization(const Scenario& s, const Waveform& x) {
    std::vector<double> eps;
    for (int n = 0; n < s.n_sensors; ++n) eps.push_back(rate_matching_epsilon(s, x, n));
    return QuantCovSet::scaled_identity(eps, s.code_len);
}

CfScheme cf_scheme_from_string(std::string_view name) {
    if (name == "no_opt") return CfScheme::no_opt;
    if (name == "waveform_opt") return CfScheme::waveform_opt;
    if (name == "quant_opt") return CfScheme::quant_opt;
    if (name == "joint") return CfScheme::joint;
    throw std::invalid_argument("unknown CF scheme: " + std::string(name));
}

std::string_view to_string(CfScheme s) {
    switch (s) {
        case CfScheme::no_opt: return "no_opt";
        case CfScheme::waveform_opt: return "waveform_opt";
        case CfScheme::quant_opt: return "quant_opt";
        case CfScheme::joint: return "joint";
    }
    return "?";
}

namespace {

CfDesign quant_only(const Scenario& s, const CfDesign& no_opt, const CfOptions& opts) {
    CfOptions o = opts;
    o.optimize_waveform = false;
    o.optimize_quant = true;
    o.ideal_backhaul = false;
    return optimize_cf(s, no_opt, o).design;
}

CfDesign waveform_only(const Scenario& s, const Waveform& barker, const CfOptions& opts) {
    CfOptions o = opts;
    o.ideal_backhaul = true;
    o.optimize_waveform = true;
    o.optimize_quant = false;
    const Waveform x =
        optimize_cf(s, CfDesign{barker, QuantCovSet::zeros(s.n_sensors, s.code_len)}, o).design.x;
    return CfDesign{x, rate_matching_quantization(s, x)};
}

}  // namespace

CfSchemeSet cf_all_baselines(const Scenario& s, const CfOptions& opts) {
    const Waveform barker = barker13(s.p_t);
    CfSchemeSet out;
    out.no_opt = CfDesign{barker, rate_matching_quantization(s, barker)};
    out.waveform_opt = waveform_only(s, barker, opts);
    out.quant_opt = quant_only(s, out.no_opt, opts);

    CfOptions o = opts;
    o.optimize_waveform = true;
    o.optimize_quant = true;
    o.ideal_backhaul = false;
    double best = std::numeric_limits<double>::infinity();
    for (const CfDesign* start : {&out.no_opt, &out.waveform_opt, &out.quant_opt}) {
        CfResult r = optimize_cf(s, *start, o);
        if (r.objective < best) {
            best = r.objective;
            out.joint = std::move(r.design);
        }
    }
    return out;
}

const CfDesign& CfSchemeSet::get(CfScheme which) const {
    switch (which) {
        case CfScheme::no_opt: return no_opt;
        case CfScheme::waveform_opt: return waveform_opt;
        case CfScheme::quant_opt: return quant_opt;
        case CfScheme::joint: return joint;
    }
    throw std::invalid_argument("CfSchemeSet: unknown scheme");
}

CfDesign cf_baselines(const Scenario& s, CfScheme which, const CfOptions& opts) {
    const Waveform barker = barker13(s.p_t);
    switch (which) {
        case CfScheme::no_opt:
            return CfDesign{barker, rate_matching_quantization(s, barker)};
        case CfScheme::quant_opt:
            return quant_only(s, CfDesign{barker, rate_matching_quantization(s, barker)}, opts);
        case CfScheme::waveform_opt:
            return waveform_only(s, barker, opts);
        case CfScheme::joint:
            return cf_all_baselines(s, opts).joint;
    }
    throw std::invalid_argument("cf_baselines: unknown scheme");
}

}  // namespace cloudradar
