#include "cloudradar/metrics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cloudradar/errors.hpp"

namespace cloudradar {

QuantCovSet QuantCovSet::scaled_identity(std::span<const double> eps, int k) {
    QuantCovSet q;
    for (double e : eps) q.covs.push_back(HermitianMatrix::identity(k) * e);
    return q;
}

QuantCovSet QuantCovSet::zeros(int n, int k) {
    QuantCovSet q;
    q.covs.assign(static_cast<std::size_t>(n), HermitianMatrix::zero(k));
    return q;
}

PowerGains PowerGains::uniform(int n, double total) {
    return PowerGains{RVector::Constant(n, total / static_cast<double>(n))};
}

double bhattacharyya_gaussian(const HermitianMatrix& sigma1, const HermitianMatrix& sigma2) {
    if (sigma1.dim() != sigma2.dim()) throw std::invalid_argument("bhattacharyya_gaussian: dimension mismatch");
    const double mid = logdet((sigma1 + sigma2) * 0.5);
    return mid - 0.5 * logdet(sigma1) - 0.5 * logdet(sigma2);
}

double bhattacharyya_from_lambda(double lambda) {
    return std::log1p(0.5 * lambda) - 0.5 * std::log1p(lambda);
}

CfDistance cf_bhattacharyya(const Scenario& s, const Waveform& x, const QuantCovSet& q) {
    if (q.size() != static_cast<std::size_t>(s.n_sensors)) {
        throw std::invalid_argument("cf_bhattacharyya: QuantCovSet length != N");
    }
    CfDistance out;
    const CMatrix xx = outer(x.x);
    for (int n = 0; n < s.n_sensors; ++n) {
        const auto i = static_cast<std::size_t>(n);
        const CMatrix cov = s.sigma_c_sq[i] * xx + s.omega_w[i].mat() + q.covs[i].mat();
        const CholeskyFactor chol(cov);
        const double lam = s.sigma_t_sq[i] * chol.inv_quad(x.x);
        const double b = bhattacharyya_from_lambda(lam);
        out.lambda.push_back(lam);
        out.per_sensor.push_back(b);
        out.total += b;
    }
    return out;
}

double cf_backhaul_rate_nats(const Scenario& s, const Waveform& x, const HermitianMatrix& q_n, int sensor) {
    const auto i = static_cast<std::size_t>(sensor);
    const CholeskyFactor q_chol(q_n);
    const CMatrix wq = s.omega_w[i].mat() + q_n.mat();
    const CholeskyFactor wq_chol(wq);
    // ln det(I + Q^{-1} W) = ln det(W + Q) - ln det Q
    const double info_noise = wq_chol.logdet() - q_chol.logdet();
    const double t = (s.sigma_t_sq[i] + s.sigma_c_sq[i]) * wq_chol.inv_quad(x.x);
    return info_noise + std::log1p(t);
}

double cf_backhaul_rate(const Scenario& s, const Waveform& x, const HermitianMatrix& q_n, int sensor) {
    return s.rate_in_unit(cf_backhaul_rate_nats(s, x, q_n, sensor));
}

AfStatistics af_statistics(const Scenario& s, const RVector& p, const ChannelDraw& f) {
    AfStatistics st;
    CMatrix noise = s.omega_z.mat();
    for (int n = 0; n < s.n_sensors; ++n) {
        const auto i = static_cast<std::size_t>(n);
        const double w = std::norm(f.f(n)) * p(n);
        st.signal += w * s.sigma_t_sq[i];
        st.clutter += w * s.sigma_c_sq[i];
        noise += w * s.omega_w[i].mat();
    }
    st.noise = HermitianMatrix::symmetrized(noise);
    return st;
}

double af_lambda(const Scenario& s, const Waveform& x, const PowerGains& p, const ChannelDraw& f) {
    const AfStatistics st = af_statistics(s, p.p, f);
    const CholeskyFactor chol(st.noise);
    // Sherman-Morrison: x^H (beta x x^H + R)^{-1} x = y / (1 + beta y)
    const double y = chol.inv_quad(x.x);
    return st.signal * y / (1.0 + st.clutter * y);
}

double af_bhattacharyya(const Scenario& s, const Waveform& x, const PowerGains& p, const ChannelDraw& f) {
    return bhattacharyya_from_lambda(af_lambda(s, x, p, f));
}

McEstimate mean_and_stderr(std::span<const double> values) {
    McEstimate e;
    e.n = static_cast<int>(values.size());
    if (values.empty()) return e;
    double sum = 0.0;
    for (double v : values) sum += v;
    e.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return e;
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    const double var = ss / static_cast<double>(values.size() - 1);
    e.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
    return e;
}

McEstimate af_avg_bhattacharyya(const Scenario& s, const Waveform& x, const PowerGains& p,
                                std::span<const ChannelDraw> draws) {
    std::vector<double> vals;
    vals.reserve(draws.size());
    for (const auto& f : draws) vals.push_back(af_bhattacharyya(s, x, p, f));
    return mean_and_stderr(vals);
}

McEstimate af_avg_bhattacharyya(const Scenario& s, const Waveform& x, const PowerGains& p, int n_draws,
                                Rng& rng, const ChannelSampler& sampler) {
    if (n_draws < 2) throw std::invalid_argument("af_avg_bhattacharyya: n_draws must be >= 2");
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(n_draws));
    for (int d = 0; d < n_draws; ++d) vals.push_back(af_bhattacharyya(s, x, p, sampler(rng)));
    return mean_and_stderr(vals);
}

McEstimate af_avg_bhattacharyya(const Scenario& s, const Waveform& x, const PowerGains& p, int n_draws,
                                Rng& rng) {
    return af_avg_bhattacharyya(s, x, p, n_draws, rng, default_channel_sampler(s));
}

}  // namespace cloudradar
