#include "cloudradar/af_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "cloudradar/errors.hpp"
#include "mm_accel.hpp"

namespace cloudradar {

double af_objective(const Scenario& s, const Waveform& x, const PowerGains& p, const ChannelDraw& f) {
    return -af_bhattacharyya(s, x, p, f);
}

QcqpProblem AfWaveformBound::program(double p_t) const {
    const Eigen::Index k = term.d.size();
    QcqpProblem prog{QuadraticForm{term.r_inv * term.phi, term.d, term.constant}, {}};
    prog.constraints.push_back(QuadraticForm{HermitianMatrix::identity(k), CVector::Zero(k), -p_t});
    return prog;
}

AfWaveformBound build_waveform_bound_af(const Scenario& s, const Waveform& x_anchor, const PowerGains& p,
                                        const ChannelDraw& f) {
    const AfStatistics st = af_statistics(s, p.p, f);
    return AfWaveformBound{waveform_bound_term(st.signal, st.clutter, st.noise, x_anchor.x)};
}

AfPowerBound::AfPowerBound(HermitianMatrix base, std::vector<CMatrix> slopes, RVector linear, double constant)
    : base_(std::move(base)), slopes_(std::move(slopes)), linear_(std::move(linear)), constant_(constant) {
    if (static_cast<Eigen::Index>(slopes_.size()) != linear_.size()) {
        throw std::invalid_argument("AfPowerBound: slope and linear term counts differ");
    }
}

bool AfPowerBound::value(const RVector& p, double& v) const {
    CMatrix m = base_.mat();
    for (std::size_t n = 0; n < slopes_.size(); ++n) m += p(static_cast<Eigen::Index>(n)) * slopes_[n];
    Eigen::LLT<CMatrix> llt;
    if (!try_cholesky(m, llt)) return false;
    double ld = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) ld += std::log(std::real(llt.matrixLLT()(i, i)));
    v = -2.0 * ld + linear_.dot(p) + constant_;
    return std::isfinite(v);
}

bool AfPowerBound::derivatives(const RVector& p, double& v, RVector& grad, RMatrix& hess) const {
    if (!value(p, v)) return false;
    CMatrix m = base_.mat();
    for (std::size_t n = 0; n < slopes_.size(); ++n) m += p(static_cast<Eigen::Index>(n)) * slopes_[n];
    const CholeskyFactor chol(m);
    const auto n = static_cast<Eigen::Index>(slopes_.size());
    std::vector<CMatrix> w(slopes_.size());
    grad.resize(n);
    hess.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        w[static_cast<std::size_t>(i)] = chol.solve(slopes_[static_cast<std::size_t>(i)]);
        grad(i) = -w[static_cast<std::size_t>(i)].trace().real() + linear_(i);
    }
    // d2/dp_i dp_j of -ln det = tr(M^-1 A_i M^-1 A_j)
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const auto& wi = w[static_cast<std::size_t>(i)];
            const auto& wj = w[static_cast<std::size_t>(j)];
            const double h = (wi.transpose().cwiseProduct(wj)).sum().real();
            hess(i, j) = h;
            hess(j, i) = h;
        }
    }
    return true;
}

double AfPowerBound::operator()(const RVector& p) const {
    double v = 0.0;
    return value(p, v) ? v : std::numeric_limits<double>::infinity();
}

AfPowerBound build_power_bound_af(const Scenario& s, const Waveform& x, const PowerGains& p_anchor,
                                  const ChannelDraw& f) {
    const CMatrix xx = outer(x.x);
    const int n_s = s.n_sensors;
    CMatrix s1 = s.omega_z.mat();
    CMatrix s0 = s.omega_z.mat();
    std::vector<CMatrix> half;
    std::vector<CMatrix> b1;
    std::vector<CMatrix> b0;
    for (int n = 0; n < n_s; ++n) {
        const auto i = static_cast<std::size_t>(n);
        const double g = std::norm(f.f(n));
        const CMatrix& w = s.omega_w[i].mat();
        half.push_back(g * ((0.5 * s.sigma_t_sq[i] + s.sigma_c_sq[i]) * xx + w));
        b1.push_back(g * ((s.sigma_t_sq[i] + s.sigma_c_sq[i]) * xx + w));
        b0.push_back(g * (s.sigma_c_sq[i] * xx + w));
        s1 += p_anchor.p(n) * b1.back();
        s0 += p_anchor.p(n) * b0.back();
    }
    // Concave halves 0.5 ln det(Sigma_1) and 0.5 ln det(Sigma_0) are replaced
    // by their tangent planes at the anchor.
    const CholeskyFactor c1(s1);
    const CholeskyFactor c0(s0);
    RVector lin(n_s);
    for (int n = 0; n < n_s; ++n) {
        const auto i = static_cast<std::size_t>(n);
        lin(n) = 0.5 * c1.solve(b1[i]).trace().real() + 0.5 * c0.solve(b0[i]).trace().real();
    }
    const double constant = 0.5 * c1.logdet() + 0.5 * c0.logdet() - lin.dot(p_anchor.p);
    return AfPowerBound(s.omega_z, std::move(half), std::move(lin), constant);
}

SsumWaveformAverage::SsumWaveformAverage(int k) : a_sum_(CMatrix::Zero(k, k)), d_sum_(CVector::Zero(k)) {}

void SsumWaveformAverage::add(const WaveformBoundTerm& term) {
    a_sum_ += term.phi * term.r_inv.mat();
    d_sum_ += term.d;
    c_sum_ += term.constant;
    terms_.push_back(term);
}

QuadraticForm SsumWaveformAverage::collapsed() const {
    if (terms_.empty()) throw std::logic_error("SsumWaveformAverage: no terms");
    const double w = 1.0 / static_cast<double>(terms_.size());
    return QuadraticForm{HermitianMatrix::symmetrized(w * a_sum_), w * d_sum_, w * c_sum_};
}

double SsumWaveformAverage::term_by_term(const CVector& x) const {
    double v = 0.0;
    for (const auto& t : terms_) v += t.value(x);
    return v / static_cast<double>(terms_.size());
}

bool SsumPowerAverage::value(const RVector& p, double& v) const {
    if (terms_.empty()) return false;
    double sum = 0.0;
    for (const auto& t : terms_) {
        double vi = 0.0;
        if (!t.value(p, vi)) return false;
        sum += vi;
    }
    v = sum / static_cast<double>(terms_.size());
    return true;
}

bool SsumPowerAverage::derivatives(const RVector& p, double& v, RVector& grad, RMatrix& hess) const {
    if (terms_.empty()) return false;
    v = 0.0;
    grad = RVector::Zero(n_);
    hess = RMatrix::Zero(n_, n_);
    double vi = 0.0;
    RVector gi;
    RMatrix hi;
    for (const auto& t : terms_) {
        if (!t.derivatives(p, vi, gi, hi)) return false;
        v += vi;
        grad += gi;
        hess += hi;
    }
    const double w = 1.0 / static_cast<double>(terms_.size());
    v *= w;
    grad *= w;
    hess *= w;
    return true;
}

namespace {

constexpr double kBudgetRelTol = 1e-9;

double power_slack(const Scenario& s, const Waveform& x, const PowerGains& p) {
    double v = std::max(x.power() - s.p_t, p.total() - s.p_r);
    if (p.p.size() > 0) v = std::max(v, -p.p.minCoeff());
    return v;
}

bool within_budgets(const Scenario& s, const Waveform& x, const PowerGains& p) {
    return x.power() <= s.p_t * (1.0 + kBudgetRelTol) + 1e-12 &&
           p.total() <= s.p_r * (1.0 + kBudgetRelTol) + 1e-12 && (p.p.array() >= 0.0).all();
}

void check_init(const Scenario& s, const AfDesign& init, const char* who) {
    s.validate();
    if (init.x.size() != s.code_len) throw std::invalid_argument(std::string(who) + ": waveform length != K");
    if (init.p.p.size() != s.n_sensors) throw std::invalid_argument(std::string(who) + ": gain count != N");
    if (!within_budgets(s, init.x, init.p)) {
        throw InfeasibleInit(std::string(who) +
                             ": initial point violates a power budget; rescale x to sqrt(P_T) / ||x|| and "
                             "clip p to >= 0 with sum(p) <= P_R");
    }
}

// Solver output can sit a hair outside the budgets; pull it back onto the set.
Waveform clamp_waveform(CVector x, double p_t) {
    const double e = x.squaredNorm();
    if (e > p_t) x *= std::sqrt(p_t / e);
    return Waveform{std::move(x)};
}

PowerGains clamp_gains(RVector p, double p_r) {
    p = p.cwiseMax(0.0);
    const double t = p.sum();
    if (t > p_r) p *= p_r / t;
    return PowerGains{std::move(p)};
}

QcqpProblem power_limited(QuadraticForm objective, double p_t) {
    const Eigen::Index k = objective.d.size();
    QcqpProblem prog{std::move(objective), {}};
    prog.constraints.push_back(QuadraticForm{HermitianMatrix::identity(k), CVector::Zero(k), -p_t});
    return prog;
}

struct AfShortState {
    const Scenario& s;
    const ChannelDraw& f;
    const AfOptions& opts;
    Waveform x;
    PowerGains p;
    double obj = 0.0;
    OptTrace trace;
    Stopwatch clock;

    void record(int outer, int inner, const char* block) {
        trace.rows.push_back(TraceRow{outer, inner, block, obj, power_slack(s, x, p), clock.seconds()});
    }

    double checked_objective(const Waveform& xc, const PowerGains& pc) const {
        if (!within_budgets(s, xc, pc)) return std::numeric_limits<double>::infinity();
        try {
            return af_objective(s, xc, pc, f);
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
                const double v = map.objective(*cand);
                if (v <= obj) next = detail::MmOutcome<T>{std::move(*cand), v};
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
        // R(p, f) is fixed within the block; only phi and d change per step.
        const AfStatistics st = af_statistics(s, p.p, f);
        const BallQcqpSolver ball(HermitianMatrix::symmetrized(CholeskyFactor(st.noise).inverse()));
        detail::MmMap<Waveform> map{
            [&](const Waveform& a) -> std::optional<Waveform> {
                const WaveformBoundTerm t = waveform_bound_term(st.signal, st.clutter, st.noise, a.x);
                return clamp_waveform(ball.solve(t.phi, t.d, s.p_t).solution, s.p_t);
            },
            [&](const Waveform& c) { return checked_objective(c, p); },
            [](const Waveform& a, double ca, const Waveform& b, double cb) { return Waveform{ca * a.x + cb * b.x}; },
            [](const Waveform& a) { return a.x.norm(); },
            [](const Waveform& a) { return a.x.norm() > 0.0; }};
        run_block(outer, "waveform", x, map);
    }

    void power_block(int outer) {
        detail::MmMap<PowerGains> map{
            [&](const PowerGains& a) -> std::optional<PowerGains> {
                try {
                    const AfPowerBound bound = build_power_bound_af(s, x, a, f);
                    const RVector start = clamp_gains(a.p, s.p_r).p;
                    return clamp_gains(solve_power_subproblem(bound, s.p_r, opts.tol, start).solution, s.p_r);
                } catch (const std::runtime_error&) {
                    return std::nullopt;
                }
            },
            [&](const PowerGains& c) { return checked_objective(x, c); },
            [](const PowerGains& a, double ca, const PowerGains& b, double cb) { return PowerGains{ca * a.p + cb * b.p}; },
            [](const PowerGains& a) { return a.p.norm(); },
            [](const PowerGains& a) { return (a.p.array() >= 0.0).all(); }};
        run_block(outer, "power", p, map);
    }
};

}  // namespace

AfResult optimize_af_short(const Scenario& s, const ChannelDraw& f, const AfDesign& init, const AfOptions& opts) {
    check_init(s, init, "optimize_af_short");
    if (f.f.size() != s.n_sensors) throw std::invalid_argument("optimize_af_short: channel length != N");
    AfShortState st{s, f, opts, init.x, init.p, 0.0, {}, {}};
    st.obj = af_objective(s, st.x, st.p, f);
    st.record(0, 0, "init");
    st.trace.termination = "max_outer";
    for (int outer = 1; outer <= opts.max_outer; ++outer) {
        const double before = st.obj;
        if (opts.optimize_waveform) st.waveform_block(outer);
        if (opts.optimize_power) st.power_block(outer);
        st.record(outer, 0, "outer");
        if (relative_drop(before, st.obj) < opts.outer_rel_tol) {
            st.trace.termination = "converged";
            break;
        }
    }
    return AfResult{AfDesign{std::move(st.x), std::move(st.p)}, st.obj, std::move(st.trace)};
}

namespace {

struct AfLongState {
    const Scenario& s;
    const AfOptions& opts;
    Rng& rng;
    const ChannelSampler& sampler;
    Waveform x;
    PowerGains p;
    std::vector<ChannelDraw> eval;
    double obj = 0.0;
    OptTrace trace;
    Stopwatch clock;

    ChannelDraw draw() {
        const std::uint64_t seed = rng();
        trace.channel_seeds.push_back(seed);
        Rng local(seed);
        return sampler(local);
    }

    double score(const Waveform& xc, const PowerGains& pc) const {
        return -af_avg_bhattacharyya(s, xc, pc, eval).mean;
    }

    void record(int outer, int inner, const char* block, double value) {
        trace.rows.push_back(TraceRow{outer, inner, block, value, power_slack(s, x, p), clock.seconds()});
    }

    // Running estimate (1/j) sum_l Bbar(x, p; f_l) over the draws of this block.
    double running(const Waveform& xc, const PowerGains& pc, const std::vector<ChannelDraw>& draws) const {
        double v = 0.0;
        try {
            for (const auto& f : draws) v += af_objective(s, xc, pc, f);
        } catch (const SingularMatrix&) {
            return std::numeric_limits<double>::infinity();
        }
        return v / static_cast<double>(draws.size());
    }

    bool stabilized(const std::vector<double>& est) const {
        const auto w = static_cast<std::size_t>(opts.ssum_window);
        if (est.size() < w) return false;
        const auto first = est.end() - static_cast<std::ptrdiff_t>(w);
        const auto [lo, hi] = std::minmax_element(first, est.end());
        double mean = 0.0;
        for (auto it = first; it != est.end(); ++it) mean += *it;
        mean /= static_cast<double>(w);
        return (*hi - *lo) <= opts.ssum_rel_tol * std::max(std::abs(mean), 1e-300);
    }

    // One refreshed step on the block sample; keeps the iterate when no
    // candidate lowers the sample average.
    template <class T>
    void refreshed_step(T& var, const detail::MmMap<T>& map) {
        const double f0 = map.objective(var);
        std::optional<detail::MmOutcome<T>> next;
        if (opts.accelerate) {
            next = detail::squarem_cycle(var, f0, map);
        } else if (auto cand = map.step(var)) {
            const double v = map.objective(*cand);
            if (v <= f0) next = detail::MmOutcome<T>{std::move(*cand), v};
        }
        if (next) var = std::move(next->point);
    }

    void waveform_block(int outer) {
        SsumWaveformAverage avg(s.code_len);
        std::vector<ChannelDraw> draws;
        std::vector<double> est;
        const detail::MmMap<Waveform> map{
            [&](const Waveform& a) -> std::optional<Waveform> {
                SsumWaveformAverage fresh(s.code_len);
                for (const auto& f : draws) fresh.add(build_waveform_bound_af(s, a, p, f).term);
                return clamp_waveform(solve_ball_qcqp(power_limited(fresh.collapsed(), s.p_t)).solution, s.p_t);
            },
            [&](const Waveform& c) { return running(c, p, draws); },
            [](const Waveform& a, double ca, const Waveform& b, double cb) { return Waveform{ca * a.x + cb * b.x}; },
            [](const Waveform& a) { return a.x.norm(); },
            [](const Waveform& a) { return a.x.norm() > 0.0; }};
        for (int j = 1; j <= opts.ssum_max_inner; ++j) {
            draws.push_back(draw());
            if (opts.ssum_refresh) {
                refreshed_step(x, map);
            } else {
                avg.add(build_waveform_bound_af(s, x, p, draws.back()).term);
                x = clamp_waveform(solve_ball_qcqp(power_limited(avg.collapsed(), s.p_t)).solution, s.p_t);
            }
            est.push_back(running(x, p, draws));
            record(outer, j, "waveform", est.back());
            if (stabilized(est)) return;
        }
    }

    void power_block(int outer) {
        SsumPowerAverage avg(s.n_sensors);
        std::vector<ChannelDraw> draws;
        std::vector<double> est;
        const detail::MmMap<PowerGains> map{
            [&](const PowerGains& a) -> std::optional<PowerGains> {
                try {
                    SsumPowerAverage fresh(s.n_sensors);
                    for (const auto& f : draws) fresh.add(build_power_bound_af(s, x, a, f));
                    const RVector start = clamp_gains(a.p, s.p_r).p;
                    return clamp_gains(solve_power_subproblem(fresh, s.p_r, opts.tol, start).solution, s.p_r);
                } catch (const std::runtime_error&) {
                    return std::nullopt;
                }
            },
            [&](const PowerGains& c) { return running(x, c, draws); },
            [](const PowerGains& a, double ca, const PowerGains& b, double cb) { return PowerGains{ca * a.p + cb * b.p}; },
            [](const PowerGains& a) { return a.p.norm(); },
            [](const PowerGains& a) { return (a.p.array() >= 0.0).all(); }};
        for (int j = 1; j <= opts.ssum_max_inner; ++j) {
            draws.push_back(draw());
            if (opts.ssum_refresh) {
                refreshed_step(p, map);
            } else {
                avg.add(build_power_bound_af(s, x, p, draws.back()));
                p = clamp_gains(solve_power_subproblem(avg, s.p_r, opts.tol, p.p).solution, s.p_r);
            }
            est.push_back(running(x, p, draws));
            record(outer, j, "power", est.back());
            if (stabilized(est)) return;
        }
    }
};

}  // namespace

AfResult optimize_af_long(const Scenario& s, const AfDesign& init, const AfOptions& opts, Rng& rng,
                          const ChannelSampler& sampler) {
    check_init(s, init, "optimize_af_long");
    if (opts.eval_draws < 2) throw std::invalid_argument("optimize_af_long: eval_draws must be >= 2");
    AfLongState st{s, opts, rng, sampler, init.x, init.p, {}, 0.0, {}, {}};
    {
        Rng eval_rng(opts.eval_seed ? *opts.eval_seed : rng());
        for (int d = 0; d < opts.eval_draws; ++d) st.eval.push_back(sampler(eval_rng));
    }
    st.obj = st.score(st.x, st.p);
    st.record(0, 0, "init", st.obj);
    // The SSUM iterates are not monotone in the true objective; the design
    // returned is the best outer iterate on the fixed evaluation draws.
    AfDesign best{st.x, st.p};
    double best_obj = st.obj;
    st.trace.termination = "max_outer";
    for (int outer = 1; outer <= opts.long_max_outer; ++outer) {
        const double before = st.obj;
        if (opts.optimize_waveform) st.waveform_block(outer);
        if (opts.optimize_power) st.power_block(outer);
        st.obj = st.score(st.x, st.p);
        st.record(outer, 0, "outer", st.obj);
        if (st.obj < best_obj) {
            best_obj = st.obj;
            best = AfDesign{st.x, st.p};
        }
        if (std::abs(relative_drop(before, st.obj)) < opts.long_outer_rel_tol) {
            st.trace.termination = "converged";
            break;
        }
    }
    return AfResult{std::move(best), best_obj, std::move(st.trace)};
}

AfResult optimize_af_long(const Scenario& s, const AfDesign& init, const AfOptions& opts, Rng& rng) {
    return optimize_af_long(s, init, opts, rng, default_channel_sampler(s));
}

AfScheme af_scheme_from_string(std::string_view name) {
    if (name == "no_opt") return AfScheme::no_opt;
    if (name == "waveform_opt") return AfScheme::waveform_opt;
    if (name == "gain_opt") return AfScheme::gain_opt;
    if (name == "joint") return AfScheme::joint;
    throw std::invalid_argument("unknown AF scheme: " + std::string(name));
}

std::string_view to_string(AfScheme s) {
    switch (s) {
        case AfScheme::no_opt: return "no_opt";
        case AfScheme::waveform_opt: return "waveform_opt";
        case AfScheme::gain_opt: return "gain_opt";
        case AfScheme::joint: return "joint";
    }
    return "?";
}

AfMode af_mode_from_string(std::string_view name) {
    if (name == "short") return AfMode::short_term;
    if (name == "long") return AfMode::long_term;
    throw std::invalid_argument("unknown AF mode: " + std::string(name));
}

std::string_view to_string(AfMode m) { return m == AfMode::short_term ? "short" : "long"; }

AfDesign af_no_opt(const Scenario& s) {
    return AfDesign{barker13(s.p_t), PowerGains::uniform(s.n_sensors, s.p_r)};
}

const AfDesign& AfSchemeSet::get(AfScheme which) const {
    switch (which) {
        case AfScheme::no_opt: return no_opt;
        case AfScheme::waveform_opt: return waveform_opt;
        case AfScheme::gain_opt: return gain_opt;
        case AfScheme::joint: return joint;
    }
    throw std::invalid_argument("AfSchemeSet: unknown scheme");
}

namespace {

AfOptions single_block(const AfOptions& opts, bool waveform) {
    AfOptions o = opts;
    o.optimize_waveform = waveform;
    o.optimize_power = !waveform;
    return o;
}

AfOptions both_blocks(const AfOptions& opts) {
    AfOptions o = opts;
    o.optimize_waveform = true;
    o.optimize_power = true;
    return o;
}

}  // namespace

AfSchemeSet af_all_baselines_short(const Scenario& s, const ChannelDraw& f, const AfOptions& opts) {
    AfSchemeSet out;
    out.no_opt = af_no_opt(s);
    out.waveform_opt = optimize_af_short(s, f, out.no_opt, single_block(opts, true)).design;
    out.gain_opt = optimize_af_short(s, f, out.no_opt, single_block(opts, false)).design;
    double best = std::numeric_limits<double>::infinity();
    for (const AfDesign* start : {&out.no_opt, &out.waveform_opt, &out.gain_opt}) {
        AfResult r = optimize_af_short(s, f, *start, both_blocks(opts));
        if (r.objective < best) {
            best = r.objective;
            out.joint = std::move(r.design);
        }
    }
    return out;
}

AfSchemeSet af_all_baselines_long(const Scenario& s, const AfOptions& opts, Rng& rng) {
    // One evaluation sample shared by all runs so their scores are comparable.
    AfOptions common = opts;
    if (!common.eval_seed) common.eval_seed = rng();
    AfSchemeSet out;
    out.no_opt = af_no_opt(s);
    const AfResult wave = optimize_af_long(s, out.no_opt, single_block(common, true), rng);
    const AfResult gain = optimize_af_long(s, out.no_opt, single_block(common, false), rng);
    out.waveform_opt = wave.design;
    out.gain_opt = gain.design;
    const AfDesign& warm = wave.objective <= gain.objective ? out.waveform_opt : out.gain_opt;
    AfResult joint = optimize_af_long(s, warm, both_blocks(common), rng);
    out.joint = joint.objective <= std::min(wave.objective, gain.objective) ? std::move(joint.design) : warm;
    return out;
}

AfDesign af_baselines(const Scenario& s, AfScheme which, const ChannelDraw& f, const AfOptions& opts) {
    switch (which) {
        case AfScheme::no_opt: return af_no_opt(s);
        case AfScheme::waveform_opt:
            return optimize_af_short(s, f, af_no_opt(s), single_block(opts, true)).design;
        case AfScheme::gain_opt:
            return optimize_af_short(s, f, af_no_opt(s), single_block(opts, false)).design;
        case AfScheme::joint: return af_all_baselines_short(s, f, opts).joint;
    }
    throw std::invalid_argument("af_baselines: unknown scheme");
}

AfDesign af_baselines(const Scenario& s, AfScheme which, const AfOptions& opts, Rng& rng) {
    switch (which) {
        case AfScheme::no_opt: return af_no_opt(s);
        case AfScheme::waveform_opt:
            return optimize_af_long(s, af_no_opt(s), single_block(opts, true), rng).design;
        case AfScheme::gain_opt:
            return optimize_af_long(s, af_no_opt(s), single_block(opts, false), rng).design;
        case AfScheme::joint: return af_all_baselines_long(s, opts, rng).joint;
    }
    throw std::invalid_argument("af_baselines: unknown scheme");
}

}  // namespace cloudradar
