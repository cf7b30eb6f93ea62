#pragma once

#include <span>
#include <vector>

#include "cloudradar/linalg.hpp"
#include "cloudradar/model.hpp"

namespace cloudradar {

/// Quantization-noise covariances Omega_q,n, one per sensor.
struct QuantCovSet {
    std::vector<HermitianMatrix> covs;

    static QuantCovSet scaled_identity(std::span<const double> eps, int k);
    static QuantCovSet zeros(int n, int k);
    std::size_t size() const { return covs.size(); }
};

/// Nonnegative AF power gains p_n = |alpha_n|^2.
struct PowerGains {
    RVector p;

    static PowerGains uniform(int n, double total);
    double total() const { return p.sum(); }
};

/// ln(det(0.5(S1+S2)) / sqrt(det S1 det S2)), in nats.
double bhattacharyya_gaussian(const HermitianMatrix& sigma1, const HermitianMatrix& sigma2);

/// ln((1 + lambda/2) / sqrt(1 + lambda)): distance between CN(0, I) and CN(0, I + lambda u u^H).
double bhattacharyya_from_lambda(double lambda);

struct CfDistance {
    double total = 0.0;               // nats
    std::vector<double> lambda;       // per-sensor SCNR lambda_n
    std::vector<double> per_sensor;   // per-sensor B_n
};

CfDistance cf_bhattacharyya(const Scenario& s, const Waveform& x, const QuantCovSet& q);

/// Backhaul rate I(r_n; r_n + q_n) under H1 in nats. Throws SingularMatrix for singular Omega_q,n.
double cf_backhaul_rate_nats(const Scenario& s, const Waveform& x, const HermitianMatrix& q_n, int sensor);

/// Same rate in the scenario's rate unit.
double cf_backhaul_rate(const Scenario& s, const Waveform& x, const HermitianMatrix& q_n, int sensor);

/// Aggregated AF second-order terms for one channel draw.
struct AfStatistics {
    double signal = 0.0;   // f^H P Sigma_t f
    double clutter = 0.0;  // f^H P Sigma_c f
    HermitianMatrix noise; // sum_n |f_n|^2 p_n Omega_w,n + Omega_z
};

AfStatistics af_statistics(const Scenario& s, const RVector& p, const ChannelDraw& f);

double af_lambda(const Scenario& s, const Waveform& x, const PowerGains& p, const ChannelDraw& f);
double af_bhattacharyya(const Scenario& s, const Waveform& x, const PowerGains& p, const ChannelDraw& f);

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    int n = 0;
};

/// Monte Carlo E_f[B(x, p; f)] over n_draws i.i.d. channel draws.
McEstimate af_avg_bhattacharyya(const Scenario& s, const Waveform& x, const PowerGains& p, int n_draws,
                                Rng& rng);
McEstimate af_avg_bhattacharyya(const Scenario& s, const Waveform& x, const PowerGains& p, int n_draws,
                                Rng& rng, const ChannelSampler& sampler);
/// Average over a fixed set of draws (sample standard error reported).
McEstimate af_avg_bhattacharyya(const Scenario& s, const Waveform& x, const PowerGains& p,
                                std::span<const ChannelDraw> draws);

McEstimate mean_and_stderr(std::span<const double> values);

}  // namespace cloudradar
