#include "cloudradar/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cloudradar/errors.hpp"

namespace cloudradar {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("Scenario: ") + what);
}

}  // namespace

void Scenario::validate() const {
    require(n_sensors > 0, "n_sensors must be positive");
    require(code_len > 0, "code_len must be positive");
    const auto n = static_cast<std::size_t>(n_sensors);
    require(sigma_t_sq.size() == n, "sigma_t_sq length != N");
    require(sigma_c_sq.size() == n, "sigma_c_sq length != N");
    require(omega_w.size() == n, "omega_w length != N");
    require(sigma_f_sq.size() == n, "sigma_f_sq length != N");
    require(backhaul_cap.size() == n, "backhaul_cap length != N");
    for (std::size_t i = 0; i < n; ++i) {
        require(sigma_t_sq[i] >= 0.0, "sigma_t_sq must be nonnegative");
        require(sigma_c_sq[i] >= 0.0, "sigma_c_sq must be nonnegative");
        require(sigma_f_sq[i] >= 0.0, "sigma_f_sq must be nonnegative");
        require(backhaul_cap[i] >= 0.0, "backhaul_cap must be nonnegative");
        require(omega_w[i].dim() == code_len, "omega_w must be K x K");
        Eigen::LLT<CMatrix> llt;
        require(try_cholesky(omega_w[i].mat(), llt), "omega_w must be positive definite");
    }
    require(omega_z.dim() == code_len, "omega_z must be K x K");
    Eigen::LLT<CMatrix> llt;
    require(try_cholesky(omega_z.mat(), llt), "omega_z must be positive definite");
    require(p_t > 0.0, "p_t must be positive");
    require(p_r > 0.0, "p_r must be positive");
}

double Scenario::backhaul_cap_nats(int sensor) const {
    const double c = backhaul_cap.at(static_cast<std::size_t>(sensor));
    return rate_unit == RateUnit::bits ? c * std::numbers::ln2 : c;
}

double Scenario::rate_in_unit(double nats) const {
    return rate_unit == RateUnit::bits ? nats / std::numbers::ln2 : nats;
}

Scenario Scenario::subset(std::span<const int> sensors) const {
    Scenario out;
    out.n_sensors = static_cast<int>(sensors.size());
    out.code_len = code_len;
    out.omega_z = omega_z;
    out.p_t = p_t;
    out.p_r = p_r;
    out.rate_unit = rate_unit;
    for (int idx : sensors) {
        if (idx < 0 || idx >= n_sensors) throw std::out_of_range("Scenario::subset: bad sensor index");
        const auto i = static_cast<std::size_t>(idx);
        out.sigma_t_sq.push_back(sigma_t_sq[i]);
        out.sigma_c_sq.push_back(sigma_c_sq[i]);
        out.omega_w.push_back(omega_w[i]);
        out.sigma_f_sq.push_back(sigma_f_sq[i]);
        out.backhaul_cap.push_back(backhaul_cap[i]);
    }
    return out;
}

std::vector<int> barker13_sequence() { return {1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1}; }

Waveform barker13(double p_t) {
    if (!(p_t > 0.0)) throw std::invalid_argument("barker13: p_t must be positive");
    const auto seq = barker13_sequence();
    const double amp = std::sqrt(p_t / 13.0);
    Waveform w{CVector(13)};
    for (int k = 0; k < 13; ++k) w.x(k) = amp * seq[static_cast<std::size_t>(k)];
    return w;
}

cdouble standard_complex_normal(Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    const double re = n01(rng);
    const double im = n01(rng);
    return {re * M_SQRT1_2, im * M_SQRT1_2};
}

ComplexGaussian::ComplexGaussian(const HermitianMatrix& cov) {
    Eigen::LLT<CMatrix> llt(cov.mat());
    if (llt.info() == Eigen::Success) {
        factor_ = llt.matrixL();
    } else {
        factor_ = psd_sqrt(cov);
    }
}

CVector ComplexGaussian::sample(Rng& rng) const {
    CVector u(factor_.cols());
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = standard_complex_normal(rng);
    return factor_ * u;
}

SensorSampler::SensorSampler(const Scenario& s, const Waveform& x)
    : sigma_t_(s.sigma_t_sq), sigma_c_(s.sigma_c_sq), x_(x.x) {
    noise_.reserve(s.omega_w.size());
    for (const auto& w : s.omega_w) noise_.emplace_back(w);
}

std::vector<CVector> SensorSampler::sample(Hypothesis hyp, Rng& rng) const {
    std::vector<CVector> out;
    out.reserve(noise_.size());
    for (std::size_t n = 0; n < noise_.size(); ++n) {
        // Fixed draw order (target, clutter, noise) keeps H0/H1 streams aligned.
        const cdouble h = std::sqrt(sigma_t_[n]) * standard_complex_normal(rng);
        const cdouble g = std::sqrt(sigma_c_[n]) * standard_complex_normal(rng);
        const cdouble amp = (hyp == Hypothesis::H1 ? h : cdouble{0.0}) + g;
        out.push_back(amp * x_ + noise_[n].sample(rng));
    }
    return out;
}

std::vector<CVector> sample_sensor_signals(const Scenario& s, const Waveform& x, Hypothesis hyp, Rng& rng) {
    return SensorSampler(s, x).sample(hyp, rng);
}

CVector sample_af_fusion(const Scenario& s, const Waveform& x, std::span<const double> p,
                         const ChannelDraw& f, Hypothesis hyp, Rng& rng) {
    const auto r = sample_sensor_signals(s, x, hyp, rng);
    CVector out = ComplexGaussian(s.omega_z).sample(rng);
    for (std::size_t n = 0; n < r.size(); ++n) {
        out += f.f(static_cast<Eigen::Index>(n)) * std::sqrt(p[n]) * r[n];
    }
    return out;
}

std::vector<CVector> sample_cf_quantized(const Scenario& s, const Waveform& x,
                                         std::span<const HermitianMatrix> q, Hypothesis hyp, Rng& rng) {
    auto r = sample_sensor_signals(s, x, hyp, rng);
    for (std::size_t n = 0; n < r.size(); ++n) r[n] += ComplexGaussian(q[n]).sample(rng);
    return r;
}

ChannelDraw sample_channel(const Scenario& s, Rng& rng) {
    ChannelDraw d{CVector(s.n_sensors)};
    for (int n = 0; n < s.n_sensors; ++n) {
        d.f(n) = std::sqrt(s.sigma_f_sq[static_cast<std::size_t>(n)]) * standard_complex_normal(rng);
    }
    return d;
}

ChannelSampler default_channel_sampler(const Scenario& s) {
    return [sc = s](Rng& rng) { return sample_channel(sc, rng); };
}

namespace {

constexpr int kCodeLen = 13;

Scenario base_scenario(std::vector<double> sigma_c, std::vector<double> rho_w, double p_t_db) {
    Scenario s;
    s.n_sensors = static_cast<int>(sigma_c.size());
    s.code_len = kCodeLen;
    const auto n = sigma_c.size();
    s.sigma_t_sq.assign(n, 1.0);
    s.sigma_c_sq = std::move(sigma_c);
    for (double rho : rho_w) s.omega_w.push_back(exp_corr_matrix(rho, kCodeLen));
    s.omega_z = exp_corr_matrix(1.0 - 0.6, kCodeLen);
    s.sigma_f_sq.assign(n, 1.0);
    s.backhaul_cap.assign(n, 5.0);
    s.rate_unit = RateUnit::nats;
    s.p_t = db_to_linear(p_t_db);
    s.p_r = db_to_linear(10.0);
    return s;
}

std::vector<double> low_freq_rhos(int n) {
    std::vector<double> r;
    for (int i = 1; i <= n; ++i) r.push_back(1.0 - 0.12 * i);
    return r;
}

std::vector<double> high_freq_rhos(int n) {
    std::vector<double> r;
    for (int i = 1; i <= n; ++i) r.push_back(-1.0 + 0.12 * i);
    return r;
}

}  // namespace

Scenario paper_scenario(ScenarioName name) {
    switch (name) {
        case ScenarioName::cf_fig2_3_4:
            return base_scenario({0.125, 0.25, 0.5}, low_freq_rhos(3), 10.0);
        case ScenarioName::cf_highfreq_fig5:
            return base_scenario({0.125, 0.25, 0.5}, high_freq_rhos(3), 10.0);
        case ScenarioName::af_fig6_8:
            return base_scenario({0.25, 0.5, 1.0}, low_freq_rhos(3), 5.0);
        case ScenarioName::af_fig7:
            return base_scenario({1.0, 0.9, 0.75, 0.5, 0.35, 0.25, 0.125, 0.05}, low_freq_rhos(8), 5.0);
    }
    throw UnknownScenario("unknown scenario");
}

ScenarioName scenario_name_from_string(std::string_view name) {
    if (name == "cf_fig2_3_4") return ScenarioName::cf_fig2_3_4;
    if (name == "cf_highfreq_fig5") return ScenarioName::cf_highfreq_fig5;
    if (name == "af_fig6_8") return ScenarioName::af_fig6_8;
    if (name == "af_fig7") return ScenarioName::af_fig7;
    throw UnknownScenario("unknown scenario: " + std::string(name));
}

Scenario paper_scenario(std::string_view name) { return paper_scenario(scenario_name_from_string(name)); }

}  // namespace cloudradar
