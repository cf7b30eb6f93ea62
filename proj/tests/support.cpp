#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cloudradar/metrics.hpp"

namespace testsupport {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

CMatrix random_complex(Rng& rng, int rows, int cols) {
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    CMatrix a(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) a(i, j) = cdouble(g(rng), g(rng));
    }
    return a;
}

HermitianMatrix random_pd(Rng& rng, int k, double scale, double floor) {
    const CMatrix a = random_complex(rng, k, k);
    const CMatrix m = scale * (a * a.adjoint() / static_cast<double>(k) + floor * CMatrix::Identity(k, k));
    return HermitianMatrix::symmetrized(m);
}

HermitianMatrix random_hermitian_direction(Rng& rng, int k) {
    const CMatrix a = random_complex(rng, k, k);
    CMatrix h = 0.5 * (a + a.adjoint());
    h /= h.norm();
    return HermitianMatrix::symmetrized(h);
}

CVector random_vector(Rng& rng, int k, double power) {
    CVector v = random_complex(rng, k, 1).col(0);
    return v * std::sqrt(power) / v.norm();
}

Scenario random_scenario(Rng& rng, int n, int k) {
    Scenario s;
    s.n_sensors = n;
    s.code_len = k;
    for (int i = 0; i < n; ++i) {
        s.sigma_t_sq.push_back(uniform(rng, 0.5, 2.0));
        s.sigma_c_sq.push_back(uniform(rng, 0.05, 1.0));
        s.sigma_f_sq.push_back(uniform(rng, 0.5, 1.5));
        s.omega_w.push_back(random_pd(rng, k, uniform(rng, 0.5, 2.0)));
        s.backhaul_cap.push_back(uniform(rng, 0.5, 6.0));
    }
    s.omega_z = random_pd(rng, k, uniform(rng, 0.3, 1.5));
    s.p_t = uniform(rng, 1.0, 20.0);
    s.p_r = uniform(rng, 1.0, 20.0);
    s.validate();
    return s;
}

QuantCovSet random_quant(Rng& rng, const Scenario& s) {
    QuantCovSet q;
    for (int n = 0; n < s.n_sensors; ++n) q.covs.push_back(random_pd(rng, s.code_len, uniform(rng, 0.1, 3.0)));
    return q;
}

PowerGains random_gains(Rng& rng, const Scenario& s, double fill) {
    RVector p(s.n_sensors);
    for (int n = 0; n < s.n_sensors; ++n) p(n) = uniform(rng, 0.1, 1.0);
    p *= fill * s.p_r / p.sum();
    return PowerGains{p};
}

double lu_logdet(const CMatrix& m) {
    const Eigen::PartialPivLU<CMatrix> lu(m);
    const CMatrix& f = lu.matrixLU();
    double v = 0.0;
    for (Eigen::Index i = 0; i < f.rows(); ++i) v += std::log(std::abs(f(i, i)));
    return v;
}

double oracle_bhattacharyya(const CMatrix& s1, const CMatrix& s0) {
    return lu_logdet(0.5 * (s1 + s0)) - 0.5 * lu_logdet(s1) - 0.5 * lu_logdet(s0);
}

void cf_full_covariances(const Scenario& s, const CVector& x, const QuantCovSet& q, CMatrix& s1, CMatrix& s0) {
    const int k = s.code_len;
    const int dim = s.n_sensors * k;
    s1 = CMatrix::Zero(dim, dim);
    s0 = CMatrix::Zero(dim, dim);
    const CMatrix xx = x * x.adjoint();
    for (int n = 0; n < s.n_sensors; ++n) {
        const auto i = static_cast<std::size_t>(n);
        const CMatrix base = s.sigma_c_sq[i] * xx + s.omega_w[i].mat() + q.covs[i].mat();
        s0.block(n * k, n * k, k, k) = base;
        s1.block(n * k, n * k, k, k) = base + s.sigma_t_sq[i] * xx;
    }
}

void af_full_covariances(const Scenario& s, const CVector& x, const RVector& p, const CVector& f, CMatrix& s1,
                         CMatrix& s0) {
    const CMatrix xx = x * x.adjoint();
    s0 = s.omega_z.mat();
    s1 = s.omega_z.mat();
    for (int n = 0; n < s.n_sensors; ++n) {
        const auto i = static_cast<std::size_t>(n);
        const double a = std::norm(f(n)) * p(n);
        s0 += a * (s.sigma_c_sq[i] * xx + s.omega_w[i].mat());
        s1 += a * ((s.sigma_c_sq[i] + s.sigma_t_sq[i]) * xx + s.omega_w[i].mat());
    }
}

double oracle_rate_nats(const Scenario& s, const CVector& x, const CMatrix& q, int n) {
    const auto i = static_cast<std::size_t>(n);
    const CMatrix r = (s.sigma_t_sq[i] + s.sigma_c_sq[i]) * x * x.adjoint() + s.omega_w[i].mat();
    return lu_logdet(r + q) - lu_logdet(q);
}

RVector project_capped_simplex(const RVector& v, double budget) {
    RVector w = v.cwiseMax(0.0);
    if (w.sum() <= budget) return w;
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cum += u[j];
        const double t = (cum - budget) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

RVector projected_gradient_oracle(const SmoothConvexObjective& f, double budget, int iterations) {
    const int n = f.dim();
    RVector p = RVector::Constant(n, budget / (2.0 * n));
    double fp = 0.0;
    RVector g;
    RMatrix h;
    double t = 1.0;
    for (int it = 0; it < iterations; ++it) {
        f.derivatives(p, fp, g, h);
        t *= 2.0;
        for (;;) {
            const RVector c = project_capped_simplex(p - t * g, budget);
            double fc = 0.0;
            // Sufficient decrease of the standard projected-gradient majorizer.
            if (f.value(c, fc) && fc <= fp + g.dot(c - p) + (c - p).squaredNorm() / (2.0 * t)) {
                p = c;
                break;
            }
            t *= 0.5;
            if (t < 1e-20) return p;
        }
    }
    return p;
}

double scalar_quant_grid_oracle(const QuantSubproblem& p, double& w_best) {
    const auto obj = [&](double w) {
        return -std::log(p.m(0, 0).real() + w) + p.g(0, 0).real() * w;
    };
    const auto feasible = [&](double w) {
        return -std::log(w) + p.h(0, 0).real() * w + p.c0 <= p.cap_nats;
    };
    double best = std::numeric_limits<double>::infinity();
    double t_best = 0.0;
    const auto scan = [&](double lo, double hi, int pts) {
        for (int i = 0; i <= pts; ++i) {
            const double t = lo + (hi - lo) * i / pts;
            const double w = std::exp(t);
            if (!feasible(w)) continue;
            const double v = obj(w);
            if (v < best) {
                best = v;
                t_best = t;
            }
        }
    };
    const double step = 50.0 / 200000;
    scan(-25.0, 25.0, 200000);
    scan(t_best - 2 * step, t_best + 2 * step, 20000);
    w_best = std::exp(t_best);
    return best;
}

// ---------------------------------------------------------------------------

namespace {

struct Accumulator {
    BoundCheck c;
    // NaN compares false, so it is mapped to +inf before entering a max.
    static double finite_or_inf(double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : v; }
    void tight(double u, double f) { c.max_tightness = std::max(c.max_tightness, finite_or_inf(std::abs(u - f))); }
    void dominate(double u, double f) {
        c.worst_domination = std::max(c.worst_domination, finite_or_inf((f - u) / std::max(1.0, std::abs(f))));
    }
    void grad(const std::vector<double>& analytic, const std::vector<double>& numeric) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            num += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
            den += analytic[i] * analytic[i];
        }
        c.max_grad_rel = std::max(c.max_grad_rel, finite_or_inf(std::sqrt(num) / std::max(std::sqrt(den), 1e-12)));
    }
};

// Directional derivatives of f at x along every real and imaginary
// coordinate, and the same components of the complex gradient g.
void complex_gradient_pair(const std::function<double(const CVector&)>& f, const CVector& x, const CVector& g,
                           double h, std::vector<double>& analytic, std::vector<double>& numeric) {
    analytic.clear();
    numeric.clear();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        for (cdouble dir : {cdouble(1.0, 0.0), cdouble(0.0, 1.0)}) {
            CVector e = CVector::Zero(x.size());
            e(i) = dir;
            numeric.push_back((f(x + h * e) - f(x - h * e)) / (2.0 * h));
            analytic.push_back(g.dot(e).real());
        }
    }
}

void matrix_gradient_pair(Rng& rng, const std::function<double(const HermitianMatrix&)>& f, const HermitianMatrix& w,
                          const CMatrix& grad, double h, std::vector<double>& analytic, std::vector<double>& numeric) {
    analytic.clear();
    numeric.clear();
    for (int d = 0; d < 2 * static_cast<int>(w.dim()); ++d) {
        const HermitianMatrix dir = random_hermitian_direction(rng, static_cast<int>(w.dim()));
        numeric.push_back((f(w + dir * h) - f(w - dir * h)) / (2.0 * h));
        analytic.push_back((grad * dir.mat()).trace().real());
    }
}

QuantCovSet with_sensor(QuantCovSet q, int n, const HermitianMatrix& w) {
    q.covs[static_cast<std::size_t>(n)] = w;
    return q;
}

}  // namespace

std::vector<BoundCheck> run_bound_suite(int instances, int probes, std::uint64_t seed, double h) {
    Accumulator a1{{"cf_waveform_objective"}}, a2{{"cf_waveform_rate"}}, a4{{"cf_quant_rate"}},
        a5{{"cf_quant_objective"}}, b1{{"af_waveform"}}, b3{{"af_power"}};
    Rng rng(seed);
    std::vector<double> an;
    std::vector<double> nu;
    for (int inst = 0; inst < instances; ++inst) {
        const int n_sensors = 1 + static_cast<int>(rng() % 3);
        const int k = 2 + static_cast<int>(rng() % 4);
        const Scenario s = random_scenario(rng, n_sensors, k);
        const QuantCovSet q0 = random_quant(rng, s);
        const Waveform x0{random_vector(rng, k, uniform(rng, 0.3, 1.0) * s.p_t)};

        // CF, waveform block.
        const CfWaveformBound wb = build_waveform_bound_cf(s, x0, q0);
        const auto f_cf = [&](const CVector& x) { return cf_objective(s, Waveform{x}, q0); };
        a1.tight(wb.value(x0.x), f_cf(x0.x));
        for (int t = 0; t < probes; ++t) {
            const CVector x = random_vector(rng, k, uniform(rng, 0.0, 1.0) * s.p_t);
            a1.dominate(wb.value(x), f_cf(x));
        }
        complex_gradient_pair(f_cf, x0.x, wb.gradient(x0.x), h, an, nu);
        a1.grad(an, nu);

        for (int n = 0; n < n_sensors; ++n) {
            const QuadraticForm& rb = wb.rate_bounds[static_cast<std::size_t>(n)];
            const HermitianMatrix& qn = q0.covs[static_cast<std::size_t>(n)];
            const auto f_rate = [&](const CVector& x) {
                return cf_backhaul_rate_nats(s, Waveform{x}, qn, n) - s.backhaul_cap_nats(n);
            };
            a2.tight(rb(x0.x), f_rate(x0.x));
            for (int t = 0; t < probes; ++t) {
                const CVector x = random_vector(rng, k, uniform(rng, 0.0, 1.0) * s.p_t);
                a2.dominate(rb(x), f_rate(x));
            }
            complex_gradient_pair(f_rate, x0.x, 2.0 * (rb.a.mat() * x0.x) - rb.d, h, an, nu);
            a2.grad(an, nu);
        }

        // CF, quantization block.
        const auto qb = build_quant_bound_cf(s, x0, q0);
        for (int n = 0; n < n_sensors; ++n) {
            const CfQuantBound& b = qb[static_cast<std::size_t>(n)];
            const HermitianMatrix& w0 = q0.covs[static_cast<std::size_t>(n)];
            const auto f_rate = [&](const HermitianMatrix& w) { return cf_backhaul_rate_nats(s, x0, w, n); };
            const auto f_obj = [&](const HermitianMatrix& w) {
                return -cf_bhattacharyya(s, x0, with_sensor(q0, n, w)).per_sensor[static_cast<std::size_t>(n)];
            };
            a4.tight(b.rate_bound(w0), f_rate(w0));
            a5.tight(b.value(w0), f_obj(w0));
            for (int t = 0; t < probes; ++t) {
                const HermitianMatrix w = random_pd(rng, k, uniform(rng, 0.01, 5.0), uniform(rng, 0.01, 0.5));
                a4.dominate(b.rate_bound(w), f_rate(w));
                a5.dominate(b.value(w), f_obj(w));
            }
            const CMatrix w_inv = w0.mat().inverse();
            matrix_gradient_pair(rng, f_rate, w0, b.sub.h.mat() - w_inv, h, an, nu);
            a4.grad(an, nu);
            const CMatrix mw_inv = (b.sub.m.mat() + w0.mat()).inverse();
            matrix_gradient_pair(rng, f_obj, w0, b.sub.g.mat() - mw_inv, h, an, nu);
            a5.grad(an, nu);
        }

        // AF, both blocks.
        const ChannelDraw f = sample_channel(s, rng);
        const PowerGains p0 = random_gains(rng, s);
        const AfWaveformBound awb = build_waveform_bound_af(s, x0, p0, f);
        const auto f_af_x = [&](const CVector& x) { return af_objective(s, Waveform{x}, p0, f); };
        b1.tight(awb.value(x0.x), f_af_x(x0.x));
        for (int t = 0; t < probes; ++t) {
            const CVector x = random_vector(rng, k, uniform(rng, 0.0, 1.0) * s.p_t);
            b1.dominate(awb.value(x), f_af_x(x));
        }
        complex_gradient_pair(f_af_x, x0.x, awb.gradient(x0.x), h, an, nu);
        b1.grad(an, nu);

        const AfPowerBound pb = build_power_bound_af(s, x0, p0, f);
        const auto f_af_p = [&](const RVector& p) { return af_objective(s, x0, PowerGains{p}, f); };
        b3.tight(pb(p0.p), f_af_p(p0.p));
        for (int t = 0; t < probes; ++t) {
            RVector p(n_sensors);
            for (int i = 0; i < n_sensors; ++i) p(i) = rng() % 4 == 0 ? 0.0 : uniform(rng, 0.0, 1.0);
            if (p.sum() > 0.0) p *= uniform(rng, 0.0, 1.0) * s.p_r / p.sum();
            b3.dominate(pb(p), f_af_p(p));
        }
        double v = 0.0;
        RVector g;
        RMatrix hess;
        pb.derivatives(p0.p, v, g, hess);
        an.assign(g.data(), g.data() + g.size());
        nu.clear();
        for (int i = 0; i < n_sensors; ++i) {
            RVector e = RVector::Zero(n_sensors);
            e(i) = h;
            nu.push_back((f_af_p(p0.p + e) - f_af_p(p0.p - e)) / (2.0 * h));
        }
        b3.grad(an, nu);
    }
    std::vector<BoundCheck> out;
    for (Accumulator* acc : {&a1, &a2, &a4, &a5, &b1, &b3}) {
        acc->c.instances = instances;
        out.push_back(acc->c);
    }
    return out;
}

}  // namespace testsupport
