#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cloudradar/experiment.hpp"

namespace cloudradar {

namespace {

// Direct evaluation of sum_k a_k e^{-j 2 pi i k / bins} for k in [first, last].
// The sequences here have at most 2K - 1 taps, so an FFT would buy nothing.
cdouble dft_bin(const std::vector<cdouble>& a, int first, int i, int bins) {
    cdouble acc{0.0, 0.0};
    for (std::size_t m = 0; m < a.size(); ++m) {
        const int k = first + static_cast<int>(m);
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(i) * static_cast<double>(k) /
                           static_cast<double>(bins);
        acc += a[m] * std::polar(1.0, ang);
    }
    return acc;
}

void check_bins(Eigen::Index len, int bins) {
    if (len < 1) throw std::invalid_argument("spectrum: empty sequence");
    if (bins < len) throw std::invalid_argument("spectrum: bins must be at least the sequence length");
}

}  // namespace

std::vector<double> energy_spectrum(const CVector& x, int bins) {
    check_bins(x.size(), bins);
    std::vector<cdouble> a(x.data(), x.data() + x.size());
    std::vector<double> out(static_cast<std::size_t>(bins));
    // Scaled by 1/bins so the bins sum to ||x||^2.
    for (int i = 0; i < bins; ++i) out[static_cast<std::size_t>(i)] = std::norm(dft_bin(a, 0, i, bins)) / bins;
    return out;
}

std::vector<double> toeplitz_psd(const HermitianMatrix& cov, int bins) {
    const Eigen::Index k = cov.dim();
    check_bins(2 * k - 1, bins);
    // r_{-m} = conj(r_m) makes the transform real.
    std::vector<cdouble> r(static_cast<std::size_t>(2 * k - 1));
    for (Eigen::Index m = 0; m < k; ++m) {
        r[static_cast<std::size_t>(k - 1 + m)] = cov(0, m);
        r[static_cast<std::size_t>(k - 1 - m)] = std::conj(cov(0, m));
    }
    std::vector<double> out(static_cast<std::size_t>(bins));
    for (int i = 0; i < bins; ++i) {
        out[static_cast<std::size_t>(i)] = dft_bin(r, -static_cast<int>(k - 1), i, bins).real();
    }
    return out;
}

SpectraReport spectra_report(const Scenario& s, const Waveform& x, const QuantCovSet& q, int bins) {
    if (s.code_len < 2) throw std::invalid_argument("spectra_report: code length must be at least 2");
    SpectraReport rep;
    rep.bins = bins;
    rep.series.push_back({"waveform", energy_spectrum(x.x, bins)});
    for (std::size_t n = 0; n < q.size(); ++n) {
        rep.series.push_back({"quant_noise_" + std::to_string(n + 1), toeplitz_psd(q.covs[n], bins)});
    }
    for (std::size_t n = 0; n < s.omega_w.size(); ++n) {
        rep.series.push_back({"interference_" + std::to_string(n + 1), toeplitz_psd(s.omega_w[n], bins)});
    }
    return rep;
}

int argmax_bin(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("argmax_bin: empty spectrum");
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace cloudradar
