#include <algorithm>
#include <cmath>
#include <vector>

#include "cloudradar/detect.hpp"
#include "cloudradar/errors.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace testsupport;

namespace {

Scenario single(double st, double sc, int k, double rho) {
    Scenario s;
    s.n_sensors = 1;
    s.code_len = k;
    s.sigma_t_sq = {st};
    s.sigma_c_sq = {sc};
    s.sigma_f_sq = {1.0};
    s.omega_w = {exp_corr_matrix(rho, k)};
    s.omega_z = HermitianMatrix::identity(k);
    s.backhaul_cap = {3.0};
    s.p_t = static_cast<double>(k);
    s.p_r = 1.0;
    return s;
}

CfDesign plain_design(const Scenario& s, double eps) {
    return CfDesign{barker13(s.p_t), QuantCovSet::scaled_identity(std::vector<double>(s.n_sensors, eps), s.code_len)};
}

Scenario thirteen(double st) {
    Scenario s = single(st, 0.3, 13, 0.7);
    s.p_t = 4.0;
    return s;
}

}  // namespace

TEST_CASE("detector structure") {
    SUBCASE("no target gives a zero test") {
        const Scenario s = thirteen(0.0);
        const DetectorSpec d = build_detector(s, plain_design(s, 0.5));
        CHECK(d.blocks[0].t.mat().norm() == 0.0);
        Rng rng(91);
        for (int i = 0; i < 10; ++i) CHECK(d.statistic(sample_observation(d, Hypothesis::H1, rng)) == 0.0);
    }
    SUBCASE("scalar test matrix equals lambda / (1 + lambda)") {
        Scenario s = single(1.3, 0.4, 1, 0.0);
        s.p_t = 2.0;
        const CfDesign design{Waveform{CVector::Constant(1, cdouble(std::sqrt(2.0)))},
                              QuantCovSet{{HermitianMatrix::identity(1) * 0.7}}};
        const DetectorSpec d = build_detector(s, design);
        const double lambda = cf_bhattacharyya(s, design.x, design.q).lambda[0];
        CHECK(std::abs(lambda - 1.3 * 2.0 / (0.4 * 2.0 + 1.0 + 0.7)) < 1e-14);
        CHECK(std::abs(d.blocks[0].t(0, 0).real() - lambda / (1.0 + lambda)) < 1e-12);
        // The whitened signal covariance carries lambda as its only eigenvalue.
        const CMatrix dsd = d.blocks[0].d.mat() * d.blocks[0].s.mat() * d.blocks[0].d.mat();
        CHECK(std::abs(dsd(0, 0).real() - lambda) < 1e-9);
    }
    SUBCASE("test matrix eigenvalues lie in [0, 1) and track lambda") {
        Rng rng(92);
        for (int t = 0; t < 10; ++t) {
            const Scenario s = random_scenario(rng, 2, 4);
            const CfDesign design{Waveform{random_vector(rng, 4, s.p_t)}, random_quant(rng, s)};
            const DetectorSpec d = build_detector(s, design);
            const CfDistance dist = cf_bhattacharyya(s, design.x, design.q);
            for (std::size_t b = 0; b < 2; ++b) {
                const RVector ev = d.blocks[b].t.eigenvalues();
                CHECK(ev.minCoeff() >= -1e-12);
                CHECK(ev.maxCoeff() < 1.0);
                const double lam = dist.lambda[b];
                CHECK(std::abs(ev.maxCoeff() - lam / (1.0 + lam)) < 1e-9);
            }
        }
    }
    SUBCASE("AF detector uses the aggregated statistics") {
        const Scenario s = paper_scenario("af_fig6_8");
        Rng rng(93);
        const AfDetectDesign design{barker13(s.p_t), PowerGains::uniform(3, s.p_r), sample_channel(s, rng)};
        const DetectorSpec d = build_detector(s, design);
        CHECK(d.blocks.size() == 1);
        const double lam = af_lambda(s, design.x, design.p, design.f);
        CHECK(std::abs(d.blocks[0].t.eigenvalues().maxCoeff() - lam / (1.0 + lam)) < 1e-9);
    }
}

TEST_CASE("whitening under H0") {
    Rng rng(94);
    const Scenario s = random_scenario(rng, 2, 3);
    const CfDesign design{Waveform{random_vector(rng, 3, s.p_t)}, random_quant(rng, s)};
    const DetectorSpec d = build_detector(s, design);
    constexpr int kDraws = 100000;
    CMatrix acc = CMatrix::Zero(3, 3);
    double min_stat = 0.0;
    for (int i = 0; i < kDraws; ++i) {
        const auto r = sample_cf_quantized(s, design.x, design.q.covs, Hypothesis::H0, rng);
        const CVector y = d.blocks[1].d.mat() * r[1];
        acc += y * y.adjoint();
        min_stat = std::min(min_stat, d.statistic(r));
    }
    acc /= kDraws;
    CHECK((acc - CMatrix::Identity(3, 3)).norm() / std::sqrt(3.0) < 0.05);
    CHECK(min_stat >= 0.0);
}

TEST_CASE("threshold calibration") {
    const Scenario s = thirteen(1.0);
    DetectorSpec d = build_detector(s, plain_design(s, 0.5));
    SUBCASE("threshold above every sample gives no false alarms") {
        const auto h0 = simulate_statistics(d, Hypothesis::H0, 5000, 1);
        const double top = *std::max_element(h0.begin(), h0.end());
        CHECK(std::count_if(h0.begin(), h0.end(), [&](double v) { return v > top + 1.0; }) == 0);
        CHECK(empirical_threshold(h0, 1e-9) == top);
    }
    SUBCASE("half false-alarm rate is the median") {
        std::vector<double> v{5.0, 1.0, 4.0, 2.0, 3.0, 6.0};
        const double nu = empirical_threshold(v, 0.5);
        CHECK(nu == 3.0);
        CHECK(std::count_if(v.begin(), v.end(), [&](double x) { return x > nu; }) == 3);
    }
    SUBCASE("too few trials") {
        Rng rng(95);
        CHECK_THROWS_AS(calibrate_threshold(d, 0.01, 9999, rng), InsufficientTrials);
    }
    SUBCASE("two disjoint calibrations agree") {
        Rng r1(96);
        Rng r2(97);
        DetectorSpec d1 = d;
        DetectorSpec d2 = d;
        const ThresholdEstimate e1 = calibrate_threshold(d1, 0.01, 100000, r1);
        calibrate_threshold(d2, 0.01, 100000, r2);
        CHECK(e1.achieved_pfa >= e1.ci_low);
        CHECK(e1.achieved_pfa <= e1.ci_high);
        // Cross-evaluate: each threshold on the other calibration's sample.
        Rng r3(98);
        const auto fresh = simulate_statistics(d, Hypothesis::H0, 100000, r3());
        const double se = std::sqrt(0.01 * 0.99 / 100000.0);
        const auto rate = [&](double nu) {
            return static_cast<double>(std::count_if(fresh.begin(), fresh.end(), [&](double v) { return v > nu; })) /
                   1e5;
        };
        CHECK(std::abs(rate(d1.nu) - rate(d2.nu)) < 3.0 * std::sqrt(2.0) * se);
    }
}

TEST_CASE("single-sensor rank-one detection matches the closed form") {
    // r^H W r is exponential with mean (1 + lambda) times its H0 mean, so
    // P_d = P_fa^(1 / (1 + lambda)).
    Rng rng(99);
    for (double st : {0.2, 1.0, 3.0}) {
        const Scenario s = thirteen(st);
        const CfDesign design = plain_design(s, 0.5);
        const double lambda = cf_bhattacharyya(s, design.x, design.q).lambda[0];
        const DetectorSpec d = build_detector(s, design);
        const std::vector<double> grid{0.01, 0.05, 0.2, 0.5};
        const auto roc = roc_curve(d, grid, 200000, 50000, rng);
        for (const RocPoint& pt : roc) {
            const double exact = std::pow(pt.pfa, 1.0 / (1.0 + lambda));
            CHECK(std::abs(pt.pd - exact) < 4.0 * std::sqrt(exact * (1.0 - exact) / 50000.0) + 0.003);
        }
    }
}

TEST_CASE("detection probability") {
    SUBCASE("no target: P_d equals P_fa") {
        const Scenario s = thirteen(0.0);
        DetectorSpec d = build_detector(s, plain_design(s, 0.5));
        // A zero test matrix makes every statistic 0; the threshold sits there too.
        Rng rng(100);
        calibrate_threshold(d, 0.1, 5000, rng);
        const RateEstimate pd = estimate_pd(d, 20000, rng);
        CHECK(pd.rate == 0.0);

        // Same check on a detector built for a real target but fed H0 data.
        const Scenario live = thirteen(1.0);
        DetectorSpec dl = build_detector(live, plain_design(live, 0.5));
        calibrate_threshold(dl, 0.1, 100000, rng);
        DetectorSpec null_target = dl;
        for (auto& b : null_target.blocks) b.sig_t = 0.0;
        const RateEstimate p0 = estimate_pd(null_target, 50000, rng);
        CHECK(std::abs(p0.rate - 0.1) < 3.0 * std::hypot(p0.stderr_, std::sqrt(0.09 / 1e5)));
    }
    SUBCASE("very large SCNR") {
        Scenario s = thirteen(1.0);
        s.sigma_t_sq = {1e3};
        s.sigma_c_sq = {0.0};
        s.omega_w = {HermitianMatrix::identity(13) * 0.1};
        s.p_t = 13.0;
        const CfDesign design = plain_design(s, 0.1);
        CHECK(cf_bhattacharyya(s, design.x, design.q).lambda[0] > 1e3);
        DetectorSpec d = build_detector(s, design);
        Rng rng(101);
        calibrate_threshold(d, 0.01, 20000, rng);
        CHECK(estimate_pd(d, 20000, rng).rate > 0.99);
    }
    SUBCASE("P_d grows with the target variance") {
        double prev = 0.0;
        for (double st : {0.25, 0.5, 1.0, 2.0}) {
            const Scenario s = thirteen(st);
            DetectorSpec d = build_detector(s, plain_design(s, 0.5));
            Rng rng(102);
            calibrate_threshold(d, 0.01, 20000, rng);
            const double pd = estimate_pd(d, 20000, rng).rate;
            CHECK(pd >= prev);
            prev = pd;
        }
    }
    SUBCASE("uncalibrated detector") {
        const Scenario s = thirteen(1.0);
        const DetectorSpec d = build_detector(s, plain_design(s, 0.5));
        Rng rng(103);
        CHECK_THROWS_AS(estimate_pd(d, 10, rng), std::invalid_argument);
    }
}

TEST_CASE("ROC curves") {
    const Scenario s = paper_scenario("cf_fig2_3_4");
    const CfDesign design{barker13(s.p_t), rate_matching_quantization(s, barker13(s.p_t))};
    const DetectorSpec d = build_detector(s, design);
    const std::vector<double> grid{0.001, 0.01, 0.05, 0.1, 0.3, 0.6, 0.9, 1.0};
    Rng rng(104);
    const auto roc = roc_curve(d, grid, 20000, 20000, rng);
    for (std::size_t i = 1; i < roc.size(); ++i) CHECK(roc[i].pd >= roc[i - 1].pd);
    CHECK(roc.back().pd == 1.0);

    // Doubling the target variance never lowers the curve on shared seeds.
    Scenario louder = s;
    for (auto& v : louder.sigma_t_sq) v *= 2.0;
    const DetectorSpec dl = build_detector(louder, design);
    Rng r1(105);
    Rng r2(105);
    const auto base = roc_curve(d, grid, 20000, 20000, r1);
    const auto loud = roc_curve(dl, grid, 20000, 20000, r2);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(loud[i].pd >= base[i].pd - 3.0 * std::hypot(loud[i].stderr_, base[i].stderr_));
    }
}

TEST_CASE("statistics do not depend on the worker count") {
    const Scenario s = paper_scenario("cf_fig2_3_4");
    const DetectorSpec d = build_detector(s, plain_design(s, 0.5));
    const auto a = simulate_statistics(d, Hypothesis::H1, 30000, 7);
    const auto b = simulate_statistics(d, Hypothesis::H1, 30000, 7);
    CHECK(a == b);
    const auto shorter = simulate_statistics(d, Hypothesis::H1, 1000, 7);
    CHECK(std::equal(shorter.begin(), shorter.end(), a.begin()));
}

TEST_CASE("distributed detection") {
    const Scenario s = paper_scenario("cf_fig2_3_4");
    const Waveform x = barker13(s.p_t);
    SUBCASE("negative threshold: every sensor votes H1") {
        Rng rng(106);
        const DistributedRates r = distributed_detect(s, x, -1.0, 2000, rng);
        CHECK(r.pfa.rate == 1.0);
        CHECK(r.pd.rate == 1.0);
    }
    SUBCASE("one sensor is the local test") {
        const int keep[] = {1};
        const Scenario one = s.subset(keep);
        Rng r1(107);
        const double gamma = calibrate_distributed_gamma(one, x, 0.05, 20000, r1);
        DetectorSpec local = build_detector(one, CfDesign{x, QuantCovSet::zeros(1, 13)});
        local.nu = gamma;
        Rng r2(108);
        Rng r3(108);
        const DistributedRates dist = distributed_detect(one, x, gamma, 20000, r2);
        const auto h0 = simulate_statistics(local, Hypothesis::H0, 20000, r3());
        const auto h1 = simulate_statistics(local, Hypothesis::H1, 20000, r3());
        const auto above = [&](const std::vector<double>& v) {
            return static_cast<double>(std::count_if(v.begin(), v.end(), [&](double t) { return t > gamma; })) / 20000.0;
        };
        CHECK(dist.pfa.rate == above(h0));
        CHECK(dist.pd.rate == above(h1));
    }
    SUBCASE("calibrated gamma is the root of the false-alarm bisection") {
        constexpr int kTrials = 20000;
        constexpr std::uint64_t kSeed = 109;
        Rng rc(kSeed);
        const double gamma = calibrate_distributed_gamma(s, x, 0.01, kTrials, rc);
        // Both routes draw their H0 sample from the first output of the same seed.
        const auto pfa = [&](double g) {
            Rng r(kSeed);
            return distributed_detect(s, x, g, kTrials, r).pfa.rate;
        };
        double lo = 0.0;
        double hi = 1.0;
        while (pfa(hi) > 0.01) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (pfa(mid) > 0.01 ? lo : hi) = mid;
        }
        CHECK(std::abs(hi - gamma) <= 1e-9 * gamma);
        CHECK(pfa(gamma) <= 0.01);

        Rng fresh(110);
        const DistributedRates r = distributed_detect(s, x, gamma, 100000, fresh);
        const double half = 1.96 * std::sqrt(0.01 * 0.99 / kTrials) + 1.96 * r.pfa.stderr_;
        CHECK(std::abs(r.pfa.rate - 0.01) <= half);
    }
}
