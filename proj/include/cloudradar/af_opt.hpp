#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "cloudradar/convex.hpp"
#include "cloudradar/metrics.hpp"
#include "cloudradar/model.hpp"
#include "cloudradar/trace.hpp"
#include "cloudradar/waveform_bound.hpp"

namespace cloudradar {

/// Negative Bhattacharyya distance at the fusion center for one channel draw.
double af_objective(const Scenario& s, const Waveform& x, const PowerGains& p, const ChannelDraw& f);

/// Majorizer of the AF objective in x with p and f fixed. The aggregate
/// clutter term beta = f^H P Sigma_c f, signal term f^H P Sigma_t f and noise
/// R(p, f) enter a single waveform bound term.
struct AfWaveformBound {
    WaveformBoundTerm term;

    double value(const CVector& x) const { return term.value(x); }
    CVector gradient(const CVector& x) const { return term.gradient(x); }
    QcqpProblem program(double p_t) const;
};

AfWaveformBound build_waveform_bound_af(const Scenario& s, const Waveform& x_anchor, const PowerGains& p,
                                        const ChannelDraw& f);

/// Majorizer of the AF objective in p with x and f fixed:
///   -ln det(Omega_z + sum_n p_n A_n) + c^T p + constant,
/// where A_n = |f_n|^2 ((sig_t/2 + sig_c) x x^H + Omega_w,n) and c collects
/// the linearized ln det of both hypothesis covariances at the anchor.
class AfPowerBound : public SmoothConvexObjective {
public:
    AfPowerBound(HermitianMatrix base, std::vector<CMatrix> slopes, RVector linear, double constant);

    int dim() const override { return static_cast<int>(slopes_.size()); }
    bool value(const RVector& p, double& v) const override;
    bool derivatives(const RVector& p, double& v, RVector& grad, RMatrix& hess) const override;

    /// Value or +inf outside the domain.
    double operator()(const RVector& p) const;
    const RVector& linear() const { return linear_; }
    double constant() const { return constant_; }

private:
    HermitianMatrix base_;
    std::vector<CMatrix> slopes_;
    RVector linear_;
    double constant_ = 0.0;
};

AfPowerBound build_power_bound_af(const Scenario& s, const Waveform& x, const PowerGains& p_anchor,
                                  const ChannelDraw& f);

/// Running average of sampled waveform surrogates. Each term is quadratic in
/// x, so the average is maintained as a single collapsed quadratic; the terms
/// themselves are kept for validation.
class SsumWaveformAverage {
public:
    explicit SsumWaveformAverage(int k);
    void add(const WaveformBoundTerm& term);
    int size() const { return static_cast<int>(terms_.size()); }
    const std::vector<WaveformBoundTerm>& terms() const { return terms_; }
    /// (1/j) sum_l U_l as one quadratic form.
    QuadraticForm collapsed() const;
    /// (1/j) sum_l U_l(x) evaluated term by term.
    double term_by_term(const CVector& x) const;

private:
    CMatrix a_sum_;
    CVector d_sum_;
    double c_sum_ = 0.0;
    std::vector<WaveformBoundTerm> terms_;
};

/// Running average of sampled power surrogates. The log-det terms do not
/// combine, so every term is retained and evaluated.
class SsumPowerAverage : public SmoothConvexObjective {
public:
    explicit SsumPowerAverage(int n) : n_(n) {}
    void add(AfPowerBound term) { terms_.push_back(std::move(term)); }
    int size() const { return static_cast<int>(terms_.size()); }
    const std::vector<AfPowerBound>& terms() const { return terms_; }

    int dim() const override { return n_; }
    bool value(const RVector& p, double& v) const override;
    bool derivatives(const RVector& p, double& v, RVector& grad, RMatrix& hess) const override;

private:
    int n_;
    std::vector<AfPowerBound> terms_;
};

struct AfOptions {
    double tol = kDefaultTol;
    int max_outer = 30;
    int max_inner = 50;
    double outer_rel_tol = 1e-5;
    double inner_rel_tol = 1e-6;
    bool optimize_waveform = true;
    bool optimize_power = true;
    bool accelerate = true;   // squared extrapolation of the short-term MM maps
    // Long-term (stochastic) design.
    int ssum_max_inner = 20;
    int ssum_window = 5;
    double ssum_rel_tol = 1e-3;
    int long_max_outer = 10;
    double long_outer_rel_tol = 1e-3;
    int eval_draws = 200;   // fixed draws used to score outer iterations
    std::optional<std::uint64_t> eval_seed;   // drawn from the run's rng when unset
    // Re-anchor every stored surrogate of the block at the current iterate, so
    // each SSUM step is an MM step on the block's sample average and can be
    // extrapolated (when accelerate is set). false: classic SSUM update.
    bool ssum_refresh = true;
};

struct AfDesign {
    Waveform x;
    PowerGains p;
};

struct AfResult {
    AfDesign design;
    double objective = 0.0;   // short: exact; long: estimate on the fixed evaluation draws
    OptTrace trace;
};

/// Alternating MM on x and p for a known channel draw. Throws InfeasibleInit
/// when the starting point violates a power budget or has negative gains.
AfResult optimize_af_short(const Scenario& s, const ChannelDraw& f, const AfDesign& init,
                           const AfOptions& opts = {});

/// Alternating SSUM on x and p for the channel-averaged objective. Every
/// sampled draw is generated from its own logged seed (trace.channel_seeds),
/// so a run can be replayed exactly.
AfResult optimize_af_long(const Scenario& s, const AfDesign& init, const AfOptions& opts, Rng& rng,
                          const ChannelSampler& sampler);
AfResult optimize_af_long(const Scenario& s, const AfDesign& init, const AfOptions& opts, Rng& rng);

enum class AfScheme { no_opt, waveform_opt, gain_opt, joint };
enum class AfMode { short_term, long_term };

AfScheme af_scheme_from_string(std::string_view name);
std::string_view to_string(AfScheme s);
AfMode af_mode_from_string(std::string_view name);
std::string_view to_string(AfMode m);

/// Barker waveform at full power and uniform gains P_R / N.
AfDesign af_no_opt(const Scenario& s);

struct AfSchemeSet {
    AfDesign no_opt;
    AfDesign waveform_opt;
    AfDesign gain_opt;
    AfDesign joint;

    const AfDesign& get(AfScheme which) const;
};

/// Short-term reference designs for draw f. joint starts from no_opt and
/// from each single-block design and keeps the best.
AfSchemeSet af_all_baselines_short(const Scenario& s, const ChannelDraw& f, const AfOptions& opts = {});
/// Long-term reference designs; joint starts from the better single-block design
/// and falls back to it when SSUM does not improve on it.
AfSchemeSet af_all_baselines_long(const Scenario& s, const AfOptions& opts, Rng& rng);

AfDesign af_baselines(const Scenario& s, AfScheme which, const ChannelDraw& f, const AfOptions& opts = {});
AfDesign af_baselines(const Scenario& s, AfScheme which, const AfOptions& opts, Rng& rng);

}  // namespace cloudradar
