// Command-line front end: single designs, ROC runs and figure campaigns.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "cloudradar/af_opt.hpp"
#include "cloudradar/cf_opt.hpp"
#include "cloudradar/errors.hpp"
#include "cloudradar/experiment.hpp"
#include "cloudradar/metrics.hpp"

using nlohmann::json;
namespace cr = cloudradar;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kSolver = 3 };

struct Common {
    std::string config;
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out = "results";
    std::optional<int> trials;
    std::string mode;
    std::optional<double> tol;
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cr::ConfigInvalid("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw cr::ConfigInvalid("config " + path + " is not valid JSON: " + e.what());
    }
}

// Command-line flags take precedence over the file so the manifest records
// what was actually run.
void apply_overrides(json& j, const Common& c) {
    if (c.seed) j["seed"] = *c.seed;
    if (c.trials) j["trials"] = {{"h0", *c.trials}, {"h1", *c.trials}};
    if (c.tol) j["tol"] = *c.tol;
    if (!c.mode.empty()) {
        const json& d = j.value("design", json());
        const bool af = d == "af_short" || d == "af_long" || d.is_array();
        if (!af) throw cr::ConfigInvalid("--mode only applies to AF experiments");
        j["design"] = c.mode == "short" ? "af_short" : "af_long";
    }
}

json scenario_json(const Common& c) {
    if (!c.config.empty() && !c.scenario.empty()) throw cr::ConfigInvalid("give either --config or --scenario");
    if (!c.config.empty()) return read_json(c.config);
    if (!c.scenario.empty()) return json(c.scenario);
    throw cr::ConfigInvalid("a scenario is required (--scenario NAME or --config PATH)");
}

json vector_json(const cr::CVector& v) {
    json re = json::array();
    json im = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        re.push_back(v[i].real());
        im.push_back(v[i].imag());
    }
    return {{"real", re}, {"imag", im}};
}

json matrix_json(const cr::HermitianMatrix& m) {
    json re = json::array();
    json im = json::array();
    for (Eigen::Index r = 0; r < m.dim(); ++r) {
        json rr = json::array();
        json ri = json::array();
        for (Eigen::Index k = 0; k < m.dim(); ++k) {
            rr.push_back(m(r, k).real());
            ri.push_back(m(r, k).imag());
        }
        re.push_back(rr);
        im.push_back(ri);
    }
    return {{"real", re}, {"imag", im}};
}

void write_json(const fs::path& dir, const std::string& stem, const json& j) {
    fs::create_directories(dir);
    const fs::path p = dir / (stem + ".json");
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << j.dump(2) << "\n";
    if (!f) throw std::runtime_error("cannot write " + p.string());
    std::cout << "wrote " << p.string() << "\n";
}

int optimize_cf(const Common& c, const std::string& scheme) {
    std::string label;
    const cr::Scenario s = cr::scenario_from_json(scenario_json(c), &label);
    cr::CfOptions o;
    if (c.tol) o.tol = *c.tol;
    const cr::CfDesign d = cr::cf_baselines(s, cr::cf_scheme_from_string(scheme), o);
    const cr::CfDistance b = cr::cf_bhattacharyya(s, d.x, d.q);
    json rates = json::array();
    json covs = json::array();
    for (int n = 0; n < s.n_sensors; ++n) {
        rates.push_back(cr::cf_backhaul_rate(s, d.x, d.q.covs[static_cast<std::size_t>(n)], n));
        covs.push_back(matrix_json(d.q.covs[static_cast<std::size_t>(n)]));
    }
    std::cout << label << " " << scheme << ": B = " << cr::format_double(b.total) << " nats\n";
    write_json(c.out, "optimize_cf",
               {{"scenario", label},
                {"scheme", scheme},
                {"bhattacharyya", b.total},
                {"per_sensor", b.per_sensor},
                {"rates", rates},
                {"rate_unit", s.rate_unit == cr::RateUnit::bits ? "bits" : "nats"},
                {"waveform", vector_json(d.x.x)},
                {"quant_covs", covs}});
    return kOk;
}

int optimize_af(const Common& c, const std::string& scheme) {
    if (!c.seed) throw cr::ConfigInvalid("optimize-af draws channels and needs --seed");
    std::string label;
    const cr::Scenario s = cr::scenario_from_json(scenario_json(c), &label);
    cr::AfOptions o;
    if (c.tol) o.tol = *c.tol;
    const auto which = cr::af_scheme_from_string(scheme);
    const bool long_term = c.mode == "long";
    cr::Rng rng(*c.seed);
    json out = {{"scenario", label}, {"scheme", scheme}, {"mode", long_term ? "long" : "short"}, {"seed", *c.seed}};
    cr::AfDesign d;
    if (long_term) {
        d = cr::af_baselines(s, which, o, rng);
        const cr::McEstimate e = cr::af_avg_bhattacharyya(s, d.x, d.p, 2000, rng);
        out["avg_bhattacharyya"] = e.mean;
        out["stderr"] = e.stderr_;
        std::cout << label << " " << scheme << " (long): E_f[B] = " << cr::format_double(e.mean) << " +- "
                  << cr::format_double(e.stderr_) << "\n";
    } else {
        const cr::ChannelDraw f = cr::sample_channel(s, rng);
        d = cr::af_baselines(s, which, f, o);
        const double b = cr::af_bhattacharyya(s, d.x, d.p, f);
        out["bhattacharyya"] = b;
        out["channel"] = vector_json(f.f);
        std::cout << label << " " << scheme << " (short): B = " << cr::format_double(b) << "\n";
    }
    out["waveform"] = vector_json(d.x.x);
    out["gains"] = std::vector<double>(d.p.p.data(), d.p.p.data() + d.p.p.size());
    write_json(c.out, "optimize_af", out);
    return kOk;
}

int run(json j, const Common& c) {
    apply_overrides(j, c);
    const cr::ExperimentConfig cfg = cr::parse_config(j);
    const cr::ExperimentOutput out = cr::run_experiment(cfg, c.out);
    std::cout << "wrote " << out.csv_path.string() << " (" << out.rows.size() << " rows) and "
              << out.manifest_path.string() << "\n";
    return kOk;
}

// ROC run for a named set-up: the CF or AF ROC figure with the scenario swapped in.
json roc_json(const Common& c) {
    if (!c.config.empty()) {
        if (!c.scenario.empty()) throw cr::ConfigInvalid("give either --config or --scenario");
        json j = read_json(c.config);
        const json& sweep = j.value("sweep", json::object());
        if (sweep.value("variable", "") != "pfa") throw cr::ConfigInvalid("roc needs a config with a pfa sweep");
        return j;
    }
    if (c.scenario.empty()) return cr::figure_config_json("fig4");
    std::string label;
    const cr::Scenario s = cr::scenario_from_json(json(c.scenario), &label);
    (void)s;
    json j = cr::figure_config_json(c.scenario.rfind("af_", 0) == 0 ? "fig8" : "fig4");
    j["scenario"] = c.scenario;
    j["figure"] = "roc_" + c.scenario;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Waveform and backhaul design for cloud multistatic radar"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(cr::kLibraryVersion));

    Common c;
    std::string scheme = "joint";
    std::string figure;
    const auto add_common = [&](CLI::App* sub, bool scenario_flag) {
        sub->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
        if (scenario_flag) sub->add_option("--scenario", c.scenario, "named set-up");
        sub->add_option("--seed", c.seed, "base seed (overrides the config)");
        sub->add_option("--out", c.out, "output directory")->capture_default_str();
        sub->add_option("--trials", c.trials, "H0 and H1 Monte Carlo trials")->check(CLI::PositiveNumber);
        sub->add_option("--mode", c.mode, "AF design horizon")->check(CLI::IsMember({"short", "long"}));
        sub->add_option("--tol", c.tol, "solver tolerance")->check(CLI::PositiveNumber);
    };

    auto* ocf = app.add_subcommand("optimize-cf", "design a CF waveform and quantizers for one scenario");
    add_common(ocf, true);
    ocf->add_option("--scheme", scheme, "no_opt | waveform_opt | quant_opt | joint")->capture_default_str();

    auto* oaf = app.add_subcommand("optimize-af", "design an AF waveform and gains for one scenario");
    add_common(oaf, true);
    oaf->add_option("--scheme", scheme, "no_opt | waveform_opt | gain_opt | joint")->capture_default_str();

    auto* roc = app.add_subcommand("roc", "Monte Carlo ROC curves of the reference designs");
    add_common(roc, true);

    auto* fig = app.add_subcommand("figure", "reproduce one figure campaign (fig2..fig8) or run a config");
    add_common(fig, false);
    fig->add_option("name", figure, "figure name")->check(CLI::IsMember(cr::figure_names()));

    auto* spectra_cmd = app.add_subcommand("spectra", "energy and power spectral densities of the joint CF design");
    add_common(spectra_cmd, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ocf) {
            if (!c.mode.empty()) throw cr::ConfigInvalid("--mode only applies to optimize-af");
            return optimize_cf(c, scheme);
        }
        if (*oaf) return optimize_af(c, scheme);
        if (*roc) return run(roc_json(c), c);
        if (*fig) {
            if (figure.empty() == c.config.empty()) throw cr::ConfigInvalid("figure needs a name or --config");
            return run(c.config.empty() ? cr::figure_config_json(figure) : read_json(c.config), c);
        }
        if (*spectra_cmd) return run(c.config.empty() ? cr::figure_config_json("fig5") : read_json(c.config), c);
    } catch (const cr::ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const cr::SolverFailure& e) {
        std::cerr << "solver failure at sweep point " << e.sweep_index() << ": " << e.what() << "\n";
        return kSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
