#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cloudradar/af_opt.hpp"
#include "cloudradar/cf_opt.hpp"
#include "cloudradar/model.hpp"

namespace cloudradar {

inline constexpr std::string_view kLibraryVersion = "0.1.0";

enum class DesignMode { cf, af_short, af_long, spectra };
enum class SweepVariable { backhaul, p_t_db, n_sensors, pfa };
enum class Metric { bhattacharyya, pd };

struct TrialCounts {
    int h0 = 20000;
    int h1 = 50000;
};

struct ExperimentConfig {
    std::string figure;              // output stem
    Scenario scenario;
    std::string scenario_label;      // named set-up, or "inline"
    std::vector<Scenario> extra_scenarios;   // spectra: compared set-ups
    std::vector<std::string> extra_labels;
    std::vector<DesignMode> modes{DesignMode::cf};   // an AF figure may list af_short and af_long
    SweepVariable sweep = SweepVariable::backhaul;
    std::vector<double> grid;
    std::vector<std::string> schemes;
    Metric metric = Metric::bhattacharyya;
    double pfa = 0.01;
    std::uint64_t seed = 0;
    TrialCounts trials;
    int channel_draws = 50;          // short-term AF: designs averaged per point
    int eval_draws = 2000;           // long-term AF: draws scoring a fixed design
    int fft_bins = 256;
    double tol = kDefaultTol;
    nlohmann::json source;           // config as read, echoed into the manifest
};

/// Parses and validates a JSON config; throws ConfigInvalid with the
/// offending key. Physical quantities carry their unit in the key name
/// (p_t_db / p_t_linear, backhaul_nats / backhaul_bits).
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// A set-up name or scenario object as accepted under the "scenario" key.
Scenario scenario_from_json(const nlohmann::json& j, std::string* label = nullptr);

/// Built-in configuration reproducing one of fig2..fig8.
nlohmann::json figure_config_json(std::string_view figure);
std::vector<std::string> figure_names();

std::string_view to_string(DesignMode m);

struct ResultRow {
    double sweep_value = 0.0;
    std::string scheme;
    double metric = 0.0;
    double stderr_ = 0.0;
    std::uint64_t seed = 0;
};

struct ExperimentOutput {
    std::vector<ResultRow> rows;
    std::filesystem::path csv_path;
    std::filesystem::path manifest_path;
};

/// Runs every sweep point (in a worker pool, merged in sweep order) and
/// writes <out_dir>/<figure>.csv plus <figure>.manifest.json. A solver
/// error at a sweep point is rethrown as SolverFailure naming that point.
ExperimentOutput run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Computes rows without touching the filesystem.
std::vector<ResultRow> compute_rows(const ExperimentConfig& cfg);

/// Shortest round-trip decimal representation.
std::string format_double(double v);
std::string rows_to_csv(const std::vector<ResultRow>& rows);

/// Per-point seed derived from the experiment seed, the sweep index and a
/// stream tag; independent of scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

struct SpectrumSeries {
    std::string name;
    std::vector<double> density;   // one value per bin, bins cover [0, 1) cycles/chip
};

struct SpectraReport {
    int bins = 0;
    std::vector<SpectrumSeries> series;

    /// Normalized frequency of bin i.
    double frequency(int i) const { return static_cast<double>(i) / static_cast<double>(bins); }
};

/// |DFT|^2 of x zero-padded to `bins` points.
std::vector<double> energy_spectrum(const CVector& x, int bins);

/// Power spectral density of a Toeplitz covariance: DFT of the two-sided
/// autocorrelation sequence taken from its first row, zero-padded to `bins`.
std::vector<double> toeplitz_psd(const HermitianMatrix& cov, int bins);

/// Energy spectrum of x, PSDs of every Omega_q,n and Omega_w,n.
SpectraReport spectra_report(const Scenario& s, const Waveform& x, const QuantCovSet& q, int bins = 256);

/// Index of the largest bin.
int argmax_bin(const std::vector<double>& v);

}  // namespace cloudradar
