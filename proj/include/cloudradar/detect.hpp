#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "cloudradar/cf_opt.hpp"
#include "cloudradar/metrics.hpp"
#include "cloudradar/model.hpp"

namespace cloudradar {

enum class DetectMode { CF, AF };

/// One independently whitened block of the fusion-center observation:
///   r = (a_t [H1] + a_c) x + n,  a_t ~ CN(0, sig_t), a_c ~ CN(0, sig_c), n ~ CN(0, noise).
/// CF has one block per sensor (noise includes quantization), AF a single
/// block with the channel- and gain-weighted aggregates.
struct DetectBlock {
    CVector x;
    double sig_t = 0.0;
    double sig_c = 0.0;
    HermitianMatrix noise;
    HermitianMatrix d;   // (sig_c x x^H + noise)^{-1/2}
    HermitianMatrix s;   // sig_t x x^H
    HermitianMatrix t;   // D S D (D S D + I)^{-1}
    HermitianMatrix w;   // D T D: statistic r^H W r
    CMatrix noise_factor;
};

struct DetectorSpec {
    DetectMode mode = DetectMode::CF;
    std::vector<DetectBlock> blocks;
    double nu = std::numeric_limits<double>::quiet_NaN();

    double statistic(std::span<const CVector> r) const;
};

struct AfDetectDesign {
    Waveform x;
    PowerGains p;
    ChannelDraw f;
};

/// Throws SingularMatrix when a block's H0 covariance is not PD.
DetectorSpec build_detector(const Scenario& s, const CfDesign& design);
DetectorSpec build_detector(const Scenario& s, const AfDetectDesign& design);

/// Draws per-block observations of the detector's model.
std::vector<CVector> sample_observation(const DetectorSpec& d, Hypothesis hyp, Rng& rng);

/// n_trials test statistics under hyp. Trials are split into fixed-size
/// shards seeded from base_seed and merged in shard order, so the result
/// does not depend on the number of worker threads.
std::vector<double> simulate_statistics(const DetectorSpec& d, Hypothesis hyp, int n_trials,
                                        std::uint64_t base_seed);

/// Threshold such that a fraction floor(pfa n) of the sorted H0 sample lies strictly above it.
double empirical_threshold(std::vector<double> h0, double pfa);

struct ThresholdEstimate {
    double nu = 0.0;
    double achieved_pfa = 0.0;   // on the calibration sample
    double ci_low = 0.0;         // binomial 95% interval around the target
    double ci_high = 0.0;
    int n_trials = 0;
};

/// Throws InsufficientTrials when n_trials < 100 / target_pfa.
ThresholdEstimate calibrate_threshold(DetectorSpec& d, double target_pfa, int n_trials, Rng& rng);

struct RateEstimate {
    double rate = 0.0;
    double stderr_ = 0.0;
    int n = 0;
};

/// Fraction of H1 trials whose statistic exceeds d.nu.
RateEstimate estimate_pd(const DetectorSpec& d, int n_trials, Rng& rng);

struct RocPoint {
    double pfa = 0.0;
    double pd = 0.0;
    double stderr_ = 0.0;
};

/// One shared H0 sample for the thresholds and one shared H1 sample for P_d.
std::vector<RocPoint> roc_curve(const DetectorSpec& d, std::span<const double> pfa_grid, int n_h0, int n_h1,
                                Rng& rng);

struct DistributedRates {
    RateEstimate pfa;
    RateEstimate pd;
};

/// Majority-rule fusion of per-sensor likelihood tests on unquantized data
/// with a common threshold gamma; global H0 iff at least N/2 sensors decide H0.
DistributedRates distributed_detect(const Scenario& s, const Waveform& x, double gamma, int trials, Rng& rng);

/// Common per-sensor threshold giving the target global false-alarm rate
/// on an H0 calibration sample.
double calibrate_distributed_gamma(const Scenario& s, const Waveform& x, double target_pfa, int trials, Rng& rng);

}  // namespace cloudradar
