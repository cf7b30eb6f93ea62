#include "cloudradar/detect.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "cloudradar/errors.hpp"

namespace cloudradar {

namespace {

constexpr int kShardSize = 4096;

CMatrix sampling_factor(const HermitianMatrix& cov) {
    Eigen::LLT<CMatrix> llt(cov.mat());
    if (llt.info() == Eigen::Success) return llt.matrixL();
    return psd_sqrt(cov);
}

DetectBlock make_block(CVector x, double sig_t, double sig_c, HermitianMatrix noise) {
    DetectBlock b;
    b.x = std::move(x);
    b.sig_t = sig_t;
    b.sig_c = sig_c;
    b.noise = std::move(noise);
    const CMatrix xx = outer(b.x);
    const HermitianMatrix h0 = HermitianMatrix::symmetrized(sig_c * xx + b.noise.mat());
    b.d = inv_sqrt(h0);
    b.s = HermitianMatrix::symmetrized(sig_t * xx);
    const CMatrix dsd = b.d.mat() * b.s.mat() * b.d.mat();
    const Eigen::Index k = dsd.rows();
    // M (M + I)^{-1}; M and (M + I)^{-1} commute.
    const CMatrix t = dsd * (dsd + CMatrix::Identity(k, k)).inverse();
    b.t = HermitianMatrix::symmetrized(t);
    b.w = HermitianMatrix::symmetrized(b.d.mat() * b.t.mat() * b.d.mat());
    b.noise_factor = sampling_factor(b.noise);
    return b;
}

// Runs fn(shard_rng, first_trial, count, out) over shards on a worker pool.
template <class Fn>
void run_sharded(int n_trials, std::uint64_t base_seed, Fn fn) {
    const int n_shards = (n_trials + kShardSize - 1) / kShardSize;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(std::max(n_shards, 1))));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int sh = next++; sh < n_shards; sh = next++) {
            std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                              static_cast<std::uint32_t>(sh)};
            Rng rng(seq);
            const int first = sh * kShardSize;
            fn(rng, first, std::min(kShardSize, n_trials - first));
        }
    };
    if (workers <= 1) {
        work();
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
}

// Per-trial, per-block statistics r_b^H W_b r_b, row-major (trial, block).
std::vector<double> simulate_block_statistics(const DetectorSpec& d, Hypothesis hyp, int n_trials,
                                              std::uint64_t base_seed) {
    const std::size_t nb = d.blocks.size();
    std::vector<double> out(static_cast<std::size_t>(n_trials) * nb);
    run_sharded(n_trials, base_seed, [&](Rng& rng, int first, int count) {
        for (int i = 0; i < count; ++i) {
            const auto r = sample_observation(d, hyp, rng);
            for (std::size_t b = 0; b < nb; ++b) {
                out[static_cast<std::size_t>(first + i) * nb + b] = d.blocks[b].w.quad(r[b]);
            }
        }
    });
    return out;
}

RateEstimate binomial_rate(std::size_t hits, std::size_t n) {
    RateEstimate e;
    e.n = static_cast<int>(n);
    if (n == 0) return e;
    e.rate = static_cast<double>(hits) / static_cast<double>(n);
    e.stderr_ = std::sqrt(e.rate * (1.0 - e.rate) / static_cast<double>(n));
    return e;
}

std::size_t count_above(const std::vector<double>& v, double nu) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [nu](double t) { return t > nu; }));
}

}  // namespace

double DetectorSpec::statistic(std::span<const CVector> r) const {
    if (r.size() != blocks.size()) throw std::invalid_argument("DetectorSpec::statistic: block count mismatch");
    double v = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) v += blocks[b].w.quad(r[b]);
    return v;
}

DetectorSpec build_detector(const Scenario& s, const CfDesign& design) {
    if (design.q.size() != static_cast<std::size_t>(s.n_sensors)) {
        throw std::invalid_argument("build_detector: QuantCovSet length != N");
    }
    DetectorSpec d;
    d.mode = DetectMode::CF;
    for (int n = 0; n < s.n_sensors; ++n) {
        const auto i = static_cast<std::size_t>(n);
        d.blocks.push_back(
            make_block(design.x.x, s.sigma_t_sq[i], s.sigma_c_sq[i], s.omega_w[i] + design.q.covs[i]));
    }
    return d;
}

DetectorSpec build_detector(const Scenario& s, const AfDetectDesign& design) {
    const AfStatistics st = af_statistics(s, design.p.p, design.f);
    DetectorSpec d;
    d.mode = DetectMode::AF;
    d.blocks.push_back(make_block(design.x.x, st.signal, st.clutter, st.noise));
    return d;
}

std::vector<CVector> sample_observation(const DetectorSpec& d, Hypothesis hyp, Rng& rng) {
    std::vector<CVector> out;
    out.reserve(d.blocks.size());
    for (const auto& b : d.blocks) {
        // Same draw order under both hypotheses: target, clutter, noise.
        const cdouble at = std::sqrt(b.sig_t) * standard_complex_normal(rng);
        const cdouble ac = std::sqrt(b.sig_c) * standard_complex_normal(rng);
        CVector u(b.x.size());
        for (Eigen::Index k = 0; k < u.size(); ++k) u(k) = standard_complex_normal(rng);
        const cdouble amp = (hyp == Hypothesis::H1 ? at : cdouble{0.0}) + ac;
        out.push_back(amp * b.x + b.noise_factor * u);
    }
    return out;
}

std::vector<double> simulate_statistics(const DetectorSpec& d, Hypothesis hyp, int n_trials,
                                        std::uint64_t base_seed) {
    const auto per_block = simulate_block_statistics(d, hyp, n_trials, base_seed);
    const std::size_t nb = d.blocks.size();
    std::vector<double> out(static_cast<std::size_t>(n_trials), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t b = 0; b < nb; ++b) out[i] += per_block[i * nb + b];
    }
    return out;
}

double empirical_threshold(std::vector<double> h0, double pfa) {
    if (h0.empty()) throw std::invalid_argument("empirical_threshold: empty sample");
    const auto n = h0.size();
    const auto k = static_cast<std::size_t>(std::floor(pfa * static_cast<double>(n)));
    if (k >= n) return -std::numeric_limits<double>::infinity();
    const auto idx = n - k - 1;
    std::nth_element(h0.begin(), h0.begin() + static_cast<std::ptrdiff_t>(idx), h0.end());
    return h0[idx];
}

ThresholdEstimate calibrate_threshold(DetectorSpec& d, double target_pfa, int n_trials, Rng& rng) {
    if (!(target_pfa > 0.0 && target_pfa < 1.0)) {
        throw std::invalid_argument("calibrate_threshold: target_pfa must lie in (0, 1)");
    }
    if (static_cast<double>(n_trials) < 100.0 / target_pfa) {
        throw InsufficientTrials("calibrate_threshold: need at least 100 / target_pfa trials");
    }
    const auto h0 = simulate_statistics(d, Hypothesis::H0, n_trials, rng());
    ThresholdEstimate e;
    e.n_trials = n_trials;
    e.nu = empirical_threshold(h0, target_pfa);
    e.achieved_pfa = static_cast<double>(count_above(h0, e.nu)) / static_cast<double>(n_trials);
    const double half = 1.96 * std::sqrt(target_pfa * (1.0 - target_pfa) / static_cast<double>(n_trials));
    e.ci_low = target_pfa - half;
    e.ci_high = target_pfa + half;
    d.nu = e.nu;
    return e;
}

RateEstimate estimate_pd(const DetectorSpec& d, int n_trials, Rng& rng) {
    if (std::isnan(d.nu)) throw std::invalid_argument("estimate_pd: threshold not calibrated");
    const auto h1 = simulate_statistics(d, Hypothesis::H1, n_trials, rng());
    return binomial_rate(count_above(h1, d.nu), h1.size());
}

std::vector<RocPoint> roc_curve(const DetectorSpec& d, std::span<const double> pfa_grid, int n_h0, int n_h1,
                                Rng& rng) {
    const auto h0 = simulate_statistics(d, Hypothesis::H0, n_h0, rng());
    const auto h1 = simulate_statistics(d, Hypothesis::H1, n_h1, rng());
    std::vector<RocPoint> out;
    for (double pfa : pfa_grid) {
        if (!(pfa > 0.0 && pfa <= 1.0)) throw std::invalid_argument("roc_curve: P_fa grid must lie in (0, 1]");
        const double nu = empirical_threshold(h0, pfa);
        const RateEstimate pd = binomial_rate(count_above(h1, nu), h1.size());
        out.push_back(RocPoint{pfa, pd.rate, pd.stderr_});
    }
    return out;
}

namespace {

// Global H1 iff fewer than N/2 sensors decide H0, i.e. iff at least
// N - ceil(N/2) + 1 per-sensor statistics exceed gamma.
int votes_needed(int n) { return n - (n + 1) / 2 + 1; }

bool majority_h1(const double* stats, int n, double gamma) {
    int h0 = 0;
    for (int i = 0; i < n; ++i) {
        if (!(stats[i] > gamma)) ++h0;
    }
    return 2 * h0 < n;
}

DetectorSpec local_detector(const Scenario& s, const Waveform& x) {
    return build_detector(s, CfDesign{x, QuantCovSet::zeros(s.n_sensors, s.code_len)});
}

}  // namespace

DistributedRates distributed_detect(const Scenario& s, const Waveform& x, double gamma, int trials, Rng& rng) {
    const DetectorSpec d = local_detector(s, x);
    const int n = s.n_sensors;
    DistributedRates out;
    for (Hypothesis hyp : {Hypothesis::H0, Hypothesis::H1}) {
        const auto st = simulate_block_statistics(d, hyp, trials, rng());
        std::size_t hits = 0;
        for (int t = 0; t < trials; ++t) {
            if (majority_h1(st.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(n), n, gamma)) ++hits;
        }
        (hyp == Hypothesis::H0 ? out.pfa : out.pd) = binomial_rate(hits, static_cast<std::size_t>(trials));
    }
    return out;
}

double calibrate_distributed_gamma(const Scenario& s, const Waveform& x, double target_pfa, int trials, Rng& rng) {
    if (!(target_pfa > 0.0 && target_pfa < 1.0)) {
        throw std::invalid_argument("calibrate_distributed_gamma: target_pfa must lie in (0, 1)");
    }
    if (static_cast<double>(trials) < 100.0 / target_pfa) {
        throw InsufficientTrials("calibrate_distributed_gamma: need at least 100 / target_pfa trials");
    }
    const DetectorSpec d = local_detector(s, x);
    const int n = s.n_sensors;
    const auto st = simulate_block_statistics(d, Hypothesis::H0, trials, rng());
    // The global false-alarm map gamma -> P_fa is a step function that jumps
    // exactly at the m-th largest per-sensor statistic of each trial, so the
    // root of the monotone bisection is an empirical quantile of that order
    // statistic.
    const int m = votes_needed(n);
    std::vector<double> order(static_cast<std::size_t>(trials));
    std::vector<double> row(static_cast<std::size_t>(n));
    for (int t = 0; t < trials; ++t) {
        const double* p = st.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(n);
        row.assign(p, p + n);
        std::nth_element(row.begin(), row.begin() + (m - 1), row.end(), std::greater<>());
        order[static_cast<std::size_t>(t)] = row[static_cast<std::size_t>(m - 1)];
    }
    return empirical_threshold(std::move(order), target_pfa);
}

}  // namespace cloudradar
