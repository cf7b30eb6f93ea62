#include <cmath>
#include <vector>

#include "cloudradar/convex.hpp"
#include "cloudradar/errors.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace testsupport;

namespace {

QuadraticForm power_ball(int k, double p) { return {HermitianMatrix::identity(k), CVector::Zero(k), -p}; }

// sum_i a_i p_i^2 / 2 + b_i p_i, separable and strictly convex.
class Quadratic : public SmoothConvexObjective {
public:
    Quadratic(RVector a, RVector b) : a_(std::move(a)), b_(std::move(b)) {}
    int dim() const override { return static_cast<int>(a_.size()); }
    bool value(const RVector& p, double& v) const override {
        v = 0.5 * p.dot(a_.cwiseProduct(p)) + b_.dot(p);
        return true;
    }
    bool derivatives(const RVector& p, double& v, RVector& g, RMatrix& h) const override {
        value(p, v);
        g = a_.cwiseProduct(p) + b_;
        h = a_.asDiagonal();
        return true;
    }

private:
    RVector a_;
    RVector b_;
};

// Scalar quantization program with a reachable interior or boundary optimum.
QuantSubproblem scalar_quant(Rng& rng) {
    QuantSubproblem p;
    const double m = uniform(rng, 0.5, 3.0);
    const double g = uniform(rng, 0.1, 1.0);
    const double h = uniform(rng, 0.1, 1.0);
    const double cap = uniform(rng, 0.5, 4.0);
    p.m = HermitianMatrix::identity(1) * m;
    p.g = HermitianMatrix::identity(1) * g;
    p.h = HermitianMatrix::identity(1) * h;
    p.cap_nats = cap;
    // The constraint's minimum over w is ln h + 1 + c0; keep it below the cap.
    p.c0 = cap - (std::log(h) + 1.0) - uniform(rng, 0.2, 3.0);
    return p;
}

}  // namespace

TEST_CASE("QCQP") {
    SUBCASE("minimum norm") {
        QcqpProblem p{{HermitianMatrix::identity(3), CVector::Zero(3), 0.0}, {power_ball(3, 4.0)}};
        const auto rep = solve_qcqp(p);
        CHECK(rep.solution.norm() < 1e-6);
        CHECK(std::abs(rep.objective) < 1e-7);
    }
    SUBCASE("interior stationary point") {
        CVector d(2);
        d << cdouble(1.0, -0.5), cdouble(0.25, 0.75);
        QcqpProblem p{{HermitianMatrix::identity(2), d, 0.0}, {power_ball(2, 10.0)}};
        CHECK((solve_qcqp(p).solution - d / 2.0).norm() < 1e-6);
        CHECK((solve_ball_qcqp(p).solution - d / 2.0).norm() < 1e-12);
    }
    SUBCASE("active power constraint") {
        CVector d(2);
        d << cdouble(4.0, 1.0), cdouble(-2.0, 3.0);
        const double pt = 1.0;
        QcqpProblem p{{HermitianMatrix::identity(2), d, 0.0}, {power_ball(2, pt)}};
        const CVector expected = std::sqrt(pt) * d / d.norm();
        const auto rep = solve_qcqp(p);
        CHECK((rep.solution - expected).norm() < 1e-6);
        CHECK(rep.max_violation <= 1e-7);
        CHECK((solve_ball_qcqp(p).solution - expected).norm() < 1e-12);
    }
    SUBCASE("closed-form ball solver agrees with the barrier route") {
        Rng rng(51);
        for (int t = 0; t < 25; ++t) {
            const int k = 1 + t % 6;
            const HermitianMatrix a = random_pd(rng, k, uniform(rng, 0.01, 5.0), t % 3 == 0 ? 0.0 : 0.1);
            const CVector d = random_vector(rng, k, uniform(rng, 0.1, 50.0));
            const double pt = uniform(rng, 0.1, 10.0);
            QcqpProblem p{{a, d, 0.0}, {power_ball(k, pt)}};
            const auto barrier = solve_qcqp(p, 1e-10);
            const auto ball = solve_ball_qcqp(p);
            CHECK(ball.max_violation <= 1e-9);
            CHECK(std::abs(ball.objective - barrier.objective) <= 1e-6 * std::max(1.0, std::abs(ball.objective)));
            for (int probe = 0; probe < 100; ++probe) {
                const CVector x = random_vector(rng, k, uniform(rng, 0.0, 1.0) * pt);
                CHECK(ball.objective <= p.objective(x) + 1e-12);
                CHECK(barrier.objective <= p.objective(x) + 1e-7);
            }
        }
    }
    SUBCASE("extra quadratic constraints") {
        Rng rng(52);
        for (int t = 0; t < 10; ++t) {
            const int k = 2 + t % 3;
            QcqpProblem p{{random_pd(rng, k), random_vector(rng, k, 4.0), 0.0}, {power_ball(k, 3.0)}};
            // A linearized-rate-like constraint that holds at x = 0.
            p.constraints.push_back({random_pd(rng, k, 0.5), random_vector(rng, k, 1.0), -1.0});
            const auto rep = solve_qcqp(p);
            CHECK(rep.max_violation <= 1e-7);
            CHECK(rep.kkt_residual <= 1e-6);
            int probes = 0;
            while (probes < 100) {
                const CVector x = random_vector(rng, k, uniform(rng, 0.0, 3.0));
                if (p.constraints[1](x) > 0.0) continue;
                ++probes;
                CHECK(rep.objective <= p.objective(x) + 1e-7);
            }
            const auto again = solve_qcqp(p);
            CHECK(again.solution == rep.solution);
        }
    }
}

TEST_CASE("quantization subproblem") {
    SUBCASE("scalar instance from a unit anchor against the grid oracle") {
        QuantSubproblem p;
        p.m = HermitianMatrix::identity(1);
        p.g = HermitianMatrix::identity(1);
        p.h = HermitianMatrix::identity(1);
        p.c0 = -1.0;   // ln(1) - h * w_prev at w_prev = 1
        p.cap_nats = 3.0 * std::log(2.0);
        double w_grid = 0.0;
        const double ref = scalar_quant_grid_oracle(p, w_grid);
        const auto barrier = solve_quant_subproblem(p);
        const auto spectral = solve_quant_subproblem_spectral(p);
        CHECK(std::abs(barrier.objective - ref) <= 1e-3 * std::abs(ref));
        CHECK(std::abs(spectral.objective - ref) <= 1e-3 * std::abs(ref));
        CHECK(std::abs(barrier.solution(0, 0).real() - w_grid) <= 1e-3 * w_grid);
    }
    SUBCASE("inactive constraint reaches the unconstrained minimizer") {
        QuantSubproblem p;
        p.m = HermitianMatrix::identity(1);
        p.g = HermitianMatrix::identity(1) * 0.25;   // stationary at w = 1/g - m = 3
        p.h = HermitianMatrix::identity(1);
        p.c0 = -1.0;
        p.cap_nats = 1e3 * std::log(2.0);
        CHECK(solve_quant_subproblem(p).solution(0, 0).real() == doctest::Approx(3.0).epsilon(1e-5));
        CHECK(solve_quant_subproblem_spectral(p).solution(0, 0).real() == doctest::Approx(3.0).epsilon(1e-5));
    }
    SUBCASE("random scalar instances against the grid oracle") {
        Rng rng(53);
        for (int t = 0; t < 30; ++t) {
            const QuantSubproblem p = scalar_quant(rng);
            double w = 0.0;
            const double ref = scalar_quant_grid_oracle(p, w);
            const auto rep = solve_quant_subproblem_spectral(p);
            CHECK(std::abs(rep.objective - ref) <= 1e-3 * std::max(std::abs(ref), 1e-3));
            CHECK(rep.objective <= ref + 1e-9);
        }
    }
    SUBCASE("spectral and barrier routes agree on matrix instances") {
        Rng rng(54);
        for (int t = 0; t < 15; ++t) {
            const Scenario s = random_scenario(rng, 1, 2 + t % 4);
            const Waveform x{random_vector(rng, s.code_len, s.p_t)};
            const QuantCovSet q = random_quant(rng, s);
            QuantSubproblem p = build_quant_bound_cf(s, x, q)[0].sub;
            // Cap above the anchor's value so the anchor is strictly feasible.
            p.cap_nats = p.constraint_lhs(q.covs[0]) + uniform(rng, 0.1, 2.0);
            const auto barrier = solve_quant_subproblem(p, 1e-9, q.covs[0]);
            const auto spectral = solve_quant_subproblem_spectral(p, 1e-9);
            CHECK(std::abs(barrier.objective - spectral.objective) <= 1e-6 * std::max(1.0, std::abs(barrier.objective)));
            CHECK(p.constraint_lhs(spectral.solution) <= p.cap_nats + 1e-7);
            CHECK(p.constraint_lhs(barrier.solution) <= p.cap_nats + 1e-7);
            CHECK(spectral.solution.eigenvalues().minCoeff() > 0.0);
            for (int probe = 0; probe < 100; ++probe) {
                const HermitianMatrix w = random_pd(rng, s.code_len, uniform(rng, 0.01, 10.0), 0.05);
                if (p.constraint_lhs(w) > p.cap_nats) continue;
                CHECK(spectral.objective <= p.objective(w) + 1e-9);
            }
        }
    }
    SUBCASE("large noise drives the true rate to zero") {
        Rng rng(55);
        for (int t = 0; t < 5; ++t) {
            const Scenario s = random_scenario(rng, 1, 3);
            const Waveform x{random_vector(rng, 3, s.p_t)};
            CHECK(cf_backhaul_rate_nats(s, x, HermitianMatrix::identity(3) * 1e6, 0) < 1e-4);
            // The bound's own minimizer H^{-1} sits below the bound at the anchor.
            const QuantCovSet q = random_quant(rng, s);
            const QuantSubproblem p = build_quant_bound_cf(s, x, q)[0].sub;
            const HermitianMatrix h_inv = HermitianMatrix::symmetrized(p.h.mat().inverse());
            CHECK(p.constraint_lhs(h_inv) < p.constraint_lhs(q.covs[0]));
        }
    }
    SUBCASE("infeasible cap") {
        QuantSubproblem p;
        p.m = HermitianMatrix::identity(1);
        p.g = HermitianMatrix::identity(1);
        p.h = HermitianMatrix::identity(1);
        p.c0 = 5.0;
        p.cap_nats = 1.0;
        CHECK_THROWS_AS(solve_quant_subproblem_spectral(p), Infeasible);
    }
}

TEST_CASE("power subproblem") {
    SUBCASE("increasing objective sits at zero") {
        const Quadratic f(RVector::Ones(1), RVector::Ones(1));
        CHECK(solve_power_subproblem(f, 5.0).solution(0) < 1e-6);
    }
    SUBCASE("symmetric sensors split evenly") {
        const Quadratic f(RVector::Constant(2, 2.0), RVector::Constant(2, -3.0));
        const auto rep = solve_power_subproblem(f, 2.0, 1e-9);
        CHECK(std::abs(rep.solution(0) - rep.solution(1)) < 1e-6);
        CHECK(rep.solution.sum() == doctest::Approx(2.0).epsilon(1e-6));
    }
    SUBCASE("random power bounds against projected gradient") {
        Rng rng(56);
        for (int t = 0; t < 10; ++t) {
            const Scenario s = random_scenario(rng, 3, 3);
            const Waveform x{random_vector(rng, 3, s.p_t)};
            const ChannelDraw f = sample_channel(s, rng);
            const AfPowerBound b = build_power_bound_af(s, x, random_gains(rng, s), f);
            const auto rep = solve_power_subproblem(b, s.p_r, 1e-9);
            const RVector ref = projected_gradient_oracle(b, s.p_r, 100000);
            const double fr = b(ref);
            CHECK(std::abs(rep.objective - fr) <= 1e-4 * std::max(1.0, std::abs(fr)));
            CHECK(rep.solution.minCoeff() >= -1e-7);
            CHECK(rep.solution.sum() <= s.p_r + 1e-7);
            for (int probe = 0; probe < 100; ++probe) {
                RVector p(3);
                for (int i = 0; i < 3; ++i) p(i) = uniform(rng, 0.0, 1.0);
                p *= uniform(rng, 0.0, 1.0) * s.p_r / p.sum();
                CHECK(rep.objective <= b(p) + 1e-7);
            }
            const auto again = solve_power_subproblem(b, s.p_r, 1e-9);
            CHECK(again.solution == rep.solution);
        }
    }
}

TEST_CASE("capped simplex projection") {
    RVector v(3);
    v << 2.0, -1.0, 0.5;
    const RVector p = project_capped_simplex(v, 1.0);
    CHECK(p.sum() == doctest::Approx(1.0));
    CHECK(p(0) == doctest::Approx(1.0));
    CHECK(p(1) == 0.0);
    CHECK(p(2) == 0.0);
    RVector inside(2);
    inside << 0.2, 0.3;
    CHECK(project_capped_simplex(inside, 1.0) == inside);
}

TEST_CASE("Hermitian parameterization") {
    Rng rng(57);
    for (int k = 1; k <= 5; ++k) {
        const HermitianMatrix a = random_pd(rng, k);
        const RVector w = hermitian_to_params(a);
        CHECK(w.size() == hermitian_param_count(k));
        CHECK((hermitian_from_params(w, k).mat() - a.mat()).norm() < 1e-14);
        // d/dw tr(G W(w)) by central differences.
        const HermitianMatrix g = random_pd(rng, k);
        const RVector grad = hermitian_param_gradient(g.mat());
        for (int i = 0; i < w.size(); ++i) {
            RVector e = RVector::Zero(w.size());
            e(i) = 1e-6;
            const double fd = ((g.mat() * hermitian_from_params(w + e, k).mat()).trace().real() -
                               (g.mat() * hermitian_from_params(w - e, k).mat()).trace().real()) /
                              2e-6;
            CHECK(std::abs(fd - grad(i)) < 1e-6);
        }
    }
}
