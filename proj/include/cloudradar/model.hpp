#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "cloudradar/linalg.hpp"

namespace cloudradar {

using Rng = std::mt19937_64;

enum class Hypothesis { H0, H1 };

/// Unit of the backhaul capacities: natural (nats) or base-2 (bits) logarithm.
enum class RateUnit { nats, bits };

/// Second-order statistics and budgets of a multistatic network with N
/// receive sensors and code length K. All quantities are linear scale.
struct Scenario {
    int n_sensors = 0;
    int code_len = 0;
    std::vector<double> sigma_t_sq;     // target return variance per sensor
    std::vector<double> sigma_c_sq;     // clutter variance per sensor
    std::vector<HermitianMatrix> omega_w;  // interference covariance per sensor (K x K)
    HermitianMatrix omega_z;            // fusion-center noise (AF)
    std::vector<double> sigma_f_sq;     // sensor-to-fusion channel variance (AF)
    std::vector<double> backhaul_cap;   // C-bar_n per K chips, in rate_unit (CF)
    RateUnit rate_unit = RateUnit::nats;
    double p_t = 0.0;                   // transmit power
    double p_r = 0.0;                   // total sensor power (AF)

    /// Throws std::invalid_argument when lengths, dimensions or signs are inconsistent.
    void validate() const;
    double backhaul_cap_nats(int sensor) const;
    /// Converts a rate in nats to rate_unit.
    double rate_in_unit(double nats) const;

    /// Scenario restricted to the given sensors (in the given order).
    Scenario subset(std::span<const int> sensors) const;
};

struct Waveform {
    CVector x;

    double power() const { return x.squaredNorm(); }
    Eigen::Index size() const { return x.size(); }
};

/// Sensor-to-fusion-center channel gains f_n.
struct ChannelDraw {
    CVector f;
};

/// Length-13 Barker code scaled to total power p_t.
Waveform barker13(double p_t);

/// Unscaled +/-1 Barker sequence.
std::vector<int> barker13_sequence();

/// Draws CN(0, Omega) vectors with E[v v^H] = Omega. Omega may be singular PSD.
class ComplexGaussian {
public:
    explicit ComplexGaussian(const HermitianMatrix& cov);
    CVector sample(Rng& rng) const;
    Eigen::Index dim() const { return factor_.rows(); }

private:
    CMatrix factor_;
};

/// Standard complex normal CN(0, 1).
cdouble standard_complex_normal(Rng& rng);

/// Per-sensor received vectors r_n = h_n x [H1] + g_n x + w_n.
class SensorSampler {
public:
    SensorSampler(const Scenario& s, const Waveform& x);
    std::vector<CVector> sample(Hypothesis hyp, Rng& rng) const;

private:
    std::vector<double> sigma_t_;
    std::vector<double> sigma_c_;
    CVector x_;
    std::vector<ComplexGaussian> noise_;
};

std::vector<CVector> sample_sensor_signals(const Scenario& s, const Waveform& x, Hypothesis hyp,
                                           Rng& rng);

/// Superimposed AF signal at the fusion center with amplitude sqrt(p_n) per sensor.
CVector sample_af_fusion(const Scenario& s, const Waveform& x, std::span<const double> p,
                         const ChannelDraw& f, Hypothesis hyp, Rng& rng);

/// Quantized per-sensor vectors r_n + q_n with q_n ~ CN(0, Omega_q,n).
std::vector<CVector> sample_cf_quantized(const Scenario& s, const Waveform& x,
                                         std::span<const HermitianMatrix> q, Hypothesis hyp, Rng& rng);

/// f_n ~ CN(0, sigma_f,n^2), independent across sensors.
ChannelDraw sample_channel(const Scenario& s, Rng& rng);

/// Source of channel realizations for long-term (statistical CSI) designs.
using ChannelSampler = std::function<ChannelDraw(Rng&)>;
ChannelSampler default_channel_sampler(const Scenario& s);

enum class ScenarioName { cf_fig2_3_4, cf_highfreq_fig5, af_fig6_8, af_fig7 };

Scenario paper_scenario(ScenarioName name);
/// Throws UnknownScenario for names outside the four published set-ups.
Scenario paper_scenario(std::string_view name);
ScenarioName scenario_name_from_string(std::string_view name);

}  // namespace cloudradar
