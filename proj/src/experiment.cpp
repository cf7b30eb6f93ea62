#include "cloudradar/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <climits>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <set>
#include <thread>

#include "cloudradar/detect.hpp"
#include "cloudradar/errors.hpp"
#include "cloudradar/metrics.hpp"

namespace cloudradar {

using nlohmann::json;

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view why) {
    throw ConfigInvalid("config key '" + std::string(key) + "': " + std::string(why));
}

double get_number(const json& j, std::string_view key) {
    if (!j.is_number()) bad(key, "expected a number");
    return j.get<double>();
}

int get_int(const json& j, std::string_view key, int min) {
    if (!j.is_number_integer()) bad(key, "expected an integer");
    const auto v = j.get<long long>();
    if (v < min || v > INT_MAX) bad(key, "must be an integer >= " + std::to_string(min));
    return static_cast<int>(v);
}

std::string get_string(const json& j, std::string_view key) {
    if (!j.is_string()) bad(key, "expected a string");
    return j.get<std::string>();
}

std::vector<double> get_numbers(const json& j, std::string_view key) {
    if (!j.is_array()) bad(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : j) out.push_back(get_number(e, key));
    return out;
}

HermitianMatrix parse_matrix(const json& j, int k, const std::string& key) {
    if (!j.is_object() || j.size() == 0) bad(key, "expected a matrix object");
    if (j.contains("exp_corr_rho")) {
        if (j.size() != 1) bad(key, "exp_corr_rho takes no other keys");
        const double rho = get_number(j.at("exp_corr_rho"), key + ".exp_corr_rho");
        if (!(std::abs(rho) < 1.0)) bad(key + ".exp_corr_rho", "must lie in (-1, 1)");
        return exp_corr_matrix(rho, k);
    }
    if (j.contains("scaled_identity")) {
        if (j.size() != 1) bad(key, "scaled_identity takes no other keys");
        const double v = get_number(j.at("scaled_identity"), key + ".scaled_identity");
        if (!(v > 0.0)) bad(key + ".scaled_identity", "must be positive");
        return HermitianMatrix::identity(k) * v;
    }
    if (!j.contains("real")) bad(key, "expected exp_corr_rho, scaled_identity or real/imag");
    for (const auto& [name, _] : j.items()) {
        if (name != "real" && name != "imag") bad(key + "." + name, "unknown key");
    }
    CMatrix m = CMatrix::Zero(k, k);
    const auto fill = [&](const char* part, bool imag) {
        const json& rows = j.at(part);
        const std::string path = key + "." + part;
        if (!rows.is_array() || static_cast<int>(rows.size()) != k) bad(path, "expected K rows");
        for (int r = 0; r < k; ++r) {
            const auto row = get_numbers(rows[static_cast<std::size_t>(r)], path);
            if (static_cast<int>(row.size()) != k) bad(path, "expected K columns");
            for (int c = 0; c < k; ++c) m(r, c) += imag ? cdouble{0.0, row[c]} : cdouble{row[c], 0.0};
        }
    };
    fill("real", false);
    if (j.contains("imag")) fill("imag", true);
    try {
        return HermitianMatrix(m);
    } catch (const std::exception& e) {
        bad(key, e.what());
    }
}

Scenario parse_scenario(const json& j, std::string& label, const std::string& key) {
    json obj = j.is_string() ? json{{"name", j}} : j;
    if (!obj.is_object()) bad(key, "expected a set-up name or an object");

    Scenario s;
    label = "inline";
    if (obj.contains("name")) {
        label = get_string(obj.at("name"), key + ".name");
        try {
            s = paper_scenario(label);
        } catch (const UnknownScenario&) {
            bad(key + ".name", "unknown set-up '" + label + "'");
        }
    }
    for (const char* unit : {"p_t", "p_r"}) {
        const std::string u = unit;
        if (obj.contains(u + "_db") && obj.contains(u + "_linear")) bad(key + "." + u, "give only one of _db / _linear");
    }
    if (obj.contains("backhaul_nats") && obj.contains("backhaul_bits")) {
        bad(key + ".backhaul", "give only one of backhaul_nats / backhaul_bits");
    }

    const json* omega_w = nullptr;
    const json* omega_z = nullptr;
    const json* backhaul = nullptr;
    for (const auto& [name, val] : obj.items()) {
        const std::string path = key + "." + name;
        if (name == "name") continue;
        if (name == "code_len") {
            s.code_len = get_int(val, path, 1);
        } else if (name == "sigma_t_sq_linear") {
            s.sigma_t_sq = get_numbers(val, path);
        } else if (name == "sigma_c_sq_linear") {
            s.sigma_c_sq = get_numbers(val, path);
        } else if (name == "sigma_f_sq_linear") {
            s.sigma_f_sq = get_numbers(val, path);
        } else if (name == "omega_w") {
            omega_w = &val;
        } else if (name == "omega_z") {
            omega_z = &val;
        } else if (name == "backhaul_nats" || name == "backhaul_bits") {
            backhaul = &val;
            s.rate_unit = name == "backhaul_bits" ? RateUnit::bits : RateUnit::nats;
        } else if (name == "p_t_db") {
            s.p_t = db_to_linear(get_number(val, path));
        } else if (name == "p_t_linear") {
            s.p_t = get_number(val, path);
        } else if (name == "p_r_db") {
            s.p_r = db_to_linear(get_number(val, path));
        } else if (name == "p_r_linear") {
            s.p_r = get_number(val, path);
        } else {
            bad(path, "unknown key");
        }
    }
    s.n_sensors = static_cast<int>(s.sigma_t_sq.size());
    if (omega_w) {
        if (!omega_w->is_array()) bad(key + ".omega_w", "expected one matrix per sensor");
        s.omega_w.clear();
        for (const auto& m : *omega_w) s.omega_w.push_back(parse_matrix(m, s.code_len, key + ".omega_w"));
    }
    if (omega_z) s.omega_z = parse_matrix(*omega_z, s.code_len, key + ".omega_z");
    if (backhaul) {
        const std::string path = key + (s.rate_unit == RateUnit::bits ? ".backhaul_bits" : ".backhaul_nats");
        if (backhaul->is_number()) {
            s.backhaul_cap.assign(static_cast<std::size_t>(s.n_sensors), get_number(*backhaul, path));
        } else {
            s.backhaul_cap = get_numbers(*backhaul, path);
        }
    }
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        bad(key, e.what());
    }
    return s;
}

DesignMode design_from_string(const std::string& v) {
    if (v == "cf") return DesignMode::cf;
    if (v == "af_short") return DesignMode::af_short;
    if (v == "af_long") return DesignMode::af_long;
    if (v == "spectra") return DesignMode::spectra;
    bad("design", "unknown design '" + v + "' (cf, af_short, af_long, spectra)");
}

bool is_af(DesignMode m) { return m == DesignMode::af_short || m == DesignMode::af_long; }

bool contains(const std::vector<std::string>& v, std::string_view x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

const std::set<std::string> kCfSchemes{"no_opt", "waveform_opt", "quant_opt", "joint", "upper_bound", "distributed"};
const std::set<std::string> kAfSchemes{"no_opt", "waveform_opt", "gain_opt", "joint"};

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

Scenario scenario_from_json(const json& j, std::string* label) {
    std::string l;
    Scenario s = parse_scenario(j, l, "scenario");
    if (label) *label = l;
    return s;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t stream) {
    return splitmix64(splitmix64(splitmix64(base) ^ index) ^ (stream * 0xd6e8feb86659fd93ULL));
}

std::string_view to_string(DesignMode m) {
    switch (m) {
        case DesignMode::cf: return "cf";
        case DesignMode::af_short: return "af_short";
        case DesignMode::af_long: return "af_long";
        case DesignMode::spectra: return "spectra";
    }
    return "?";
}

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigInvalid("config: expected a JSON object");
    static const std::set<std::string> known{"figure", "design",  "scenario",      "scenarios",  "sweep",
                                             "schemes", "metric", "pfa",           "seed",       "trials",
                                             "tol",     "fft_bins", "channel_draws", "eval_draws"};
    for (const auto& [name, _] : j.items()) {
        if (!known.contains(name)) bad(name, "unknown key");
    }

    ExperimentConfig c;
    c.source = j;

    if (!j.contains("figure")) bad("figure", "required");
    c.figure = get_string(j.at("figure"), "figure");
    if (c.figure.empty() || !std::all_of(c.figure.begin(), c.figure.end(), [](unsigned char ch) {
            return std::isalnum(ch) || ch == '_' || ch == '-';
        })) {
        bad("figure", "must be a nonempty [A-Za-z0-9_-] file stem");
    }

    if (!j.contains("design")) bad("design", "required");
    c.modes.clear();
    if (j.at("design").is_array()) {
        for (const auto& m : j.at("design")) c.modes.push_back(design_from_string(get_string(m, "design")));
    } else {
        c.modes.push_back(design_from_string(get_string(j.at("design"), "design")));
    }
    if (c.modes.empty()) bad("design", "must name at least one design");
    for (std::size_t a = 0; a < c.modes.size(); ++a) {
        for (std::size_t b = a + 1; b < c.modes.size(); ++b) {
            if (c.modes[a] == c.modes[b]) bad("design", "duplicate entry");
        }
        if (!is_af(c.modes[a]) && c.modes.size() > 1) bad("design", "only af_short and af_long can be combined");
    }
    const bool spectra = c.modes.front() == DesignMode::spectra;
    const bool af = is_af(c.modes.front());

    if (!j.contains("seed")) bad("seed", "required (no implicit entropy)");
    const json& seed = j.at("seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<long long>() < 0)) {
        bad("seed", "expected a nonnegative integer");
    }
    c.seed = j.at("seed").get<std::uint64_t>();

    if (j.contains("tol")) {
        c.tol = get_number(j.at("tol"), "tol");
        if (!(c.tol > 0.0)) bad("tol", "must be positive");
    }
    if (j.contains("fft_bins")) c.fft_bins = get_int(j.at("fft_bins"), "fft_bins", 2);
    if (j.contains("channel_draws")) c.channel_draws = get_int(j.at("channel_draws"), "channel_draws", 1);
    if (j.contains("eval_draws")) c.eval_draws = get_int(j.at("eval_draws"), "eval_draws", 2);

    if (spectra) {
        for (const char* k : {"scenario", "sweep", "schemes", "metric", "pfa", "trials"}) {
            if (j.contains(k)) bad(k, "not used by the spectra design");
        }
        if (!j.contains("scenarios") || !j.at("scenarios").is_array() || j.at("scenarios").empty()) {
            bad("scenarios", "expected a nonempty array of set-ups");
        }
        std::size_t i = 0;
        for (const auto& e : j.at("scenarios")) {
            std::string label;
            Scenario s = parse_scenario(e, label, "scenarios[" + std::to_string(i) + "]");
            if (label == "inline") label = "scenario_" + std::to_string(i + 1);
            if (s.code_len < 2) bad("scenarios", "code length must be at least 2");
            if (c.fft_bins < 2 * s.code_len - 1) bad("fft_bins", "must be at least 2K - 1");
            if (i == 0) {
                c.scenario = std::move(s);
                c.scenario_label = label;
            } else {
                c.extra_scenarios.push_back(std::move(s));
                c.extra_labels.push_back(label);
            }
            ++i;
        }
        return c;
    }

    if (j.contains("scenarios")) bad("scenarios", "only used by the spectra design");
    if (!j.contains("scenario")) bad("scenario", "required");
    c.scenario = parse_scenario(j.at("scenario"), c.scenario_label, "scenario");

    if (j.contains("metric")) {
        const auto m = get_string(j.at("metric"), "metric");
        if (m == "bhattacharyya") {
            c.metric = Metric::bhattacharyya;
        } else if (m == "pd") {
            c.metric = Metric::pd;
        } else {
            bad("metric", "expected bhattacharyya or pd");
        }
    }
    if (j.contains("pfa")) {
        c.pfa = get_number(j.at("pfa"), "pfa");
        if (!(c.pfa > 0.0 && c.pfa < 1.0)) bad("pfa", "must lie in (0, 1)");
    }
    if (j.contains("trials")) {
        const json& t = j.at("trials");
        if (!t.is_object()) bad("trials", "expected {\"h0\": N, \"h1\": N}");
        for (const auto& [name, val] : t.items()) {
            if (name == "h0") {
                c.trials.h0 = get_int(val, "trials.h0", 1);
            } else if (name == "h1") {
                c.trials.h1 = get_int(val, "trials.h1", 1);
            } else {
                bad("trials." + name, "unknown key");
            }
        }
    }

    if (!j.contains("sweep") || !j.at("sweep").is_object()) bad("sweep", "expected {\"variable\": ..., \"grid\": [...]}");
    const json& sw = j.at("sweep");
    for (const auto& [name, _] : sw.items()) {
        if (name != "variable" && name != "grid") bad("sweep." + name, "unknown key");
    }
    if (!sw.contains("variable")) bad("sweep.variable", "required");
    const auto var = get_string(sw.at("variable"), "sweep.variable");
    if (!sw.contains("grid")) bad("sweep.grid", "required");
    c.grid = get_numbers(sw.at("grid"), "sweep.grid");
    if (c.grid.empty()) bad("sweep.grid", "must be nonempty");

    if (var == "backhaul_nats" || var == "backhaul_bits") {
        if (af) bad("sweep.variable", "backhaul capacity only applies to the cf design");
        c.sweep = SweepVariable::backhaul;
        c.scenario.rate_unit = var == "backhaul_bits" ? RateUnit::bits : RateUnit::nats;
        for (double v : c.grid) {
            if (!(v > 0.0)) bad("sweep.grid", "backhaul capacities must be positive");
        }
    } else if (var == "p_t_db") {
        c.sweep = SweepVariable::p_t_db;
        for (double v : c.grid) {
            if (!std::isfinite(v)) bad("sweep.grid", "P_T values must be finite");
        }
    } else if (var == "n_sensors") {
        c.sweep = SweepVariable::n_sensors;
        for (double v : c.grid) {
            if (v != std::floor(v) || v < 1.0 || v > c.scenario.n_sensors) {
                bad("sweep.grid", "sensor counts must be integers in [1, N]");
            }
        }
    } else if (var == "pfa") {
        c.sweep = SweepVariable::pfa;
        for (double v : c.grid) {
            if (!(v > 0.0 && v < 1.0)) bad("sweep.grid", "false-alarm rates must lie in (0, 1)");
        }
        if (!j.contains("metric")) c.metric = Metric::pd;
        if (c.metric != Metric::pd) bad("metric", "a pfa sweep requires metric pd");
    } else {
        bad("sweep.variable", "unknown variable '" + var + "' (backhaul_nats, backhaul_bits, p_t_db, n_sensors, pfa)");
    }

    if (!j.contains("schemes") || !j.at("schemes").is_array() || j.at("schemes").empty()) {
        bad("schemes", "expected a nonempty array");
    }
    for (const auto& e : j.at("schemes")) {
        const auto name = get_string(e, "schemes");
        if (contains(c.schemes, name)) bad("schemes", "duplicate scheme '" + name + "'");
        const auto& allowed = af ? kAfSchemes : kCfSchemes;
        if (!allowed.contains(name)) bad("schemes", "unknown scheme '" + name + "'");
        if (name == "distributed" && c.metric != Metric::pd) bad("schemes", "distributed requires metric pd");
        c.schemes.push_back(name);
    }

    if (c.metric == Metric::pd) {
        const double pmin = c.sweep == SweepVariable::pfa ? *std::min_element(c.grid.begin(), c.grid.end()) : c.pfa;
        if (static_cast<double>(c.trials.h0) * pmin < 100.0) bad("trials.h0", "need at least 100 / pfa H0 trials");
        if (af && c.trials.h0 < c.channel_draws) bad("trials.h0", "need at least one H0 trial per channel draw");
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigInvalid("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

std::vector<std::string> figure_names() { return {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"}; }

json figure_config_json(std::string_view figure) {
    const json cf_schemes = {"no_opt", "waveform_opt", "quant_opt", "joint"};
    const json af_schemes = {"no_opt", "waveform_opt", "gain_opt", "joint"};
    const json backhaul_grid = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const json roc_grid = {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    const json trials = {{"h0", 20000}, {"h1", 50000}};

    if (figure == "fig2") {
        json s = cf_schemes;
        s.push_back("upper_bound");
        return {{"figure", "fig2"},
                {"design", "cf"},
                {"scenario", "cf_fig2_3_4"},
                {"sweep", {{"variable", "backhaul_nats"}, {"grid", backhaul_grid}}},
                {"schemes", s},
                {"metric", "bhattacharyya"},
                {"seed", 1}};
    }
    if (figure == "fig3") {
        json s = cf_schemes;
        s.push_back("upper_bound");
        s.push_back("distributed");
        return {{"figure", "fig3"},
                {"design", "cf"},
                {"scenario", "cf_fig2_3_4"},
                {"sweep", {{"variable", "backhaul_nats"}, {"grid", backhaul_grid}}},
                {"schemes", s},
                {"metric", "pd"},
                {"pfa", 0.01},
                {"trials", trials},
                {"seed", 1}};
    }
    if (figure == "fig4") {
        json s = cf_schemes;
        s.push_back("distributed");
        return {{"figure", "fig4"},
                {"design", "cf"},
                {"scenario", {{"name", "cf_fig2_3_4"}, {"backhaul_nats", 5}}},
                {"sweep", {{"variable", "pfa"}, {"grid", roc_grid}}},
                {"schemes", s},
                {"metric", "pd"},
                {"trials", trials},
                {"seed", 1}};
    }
    if (figure == "fig5") {
        return {{"figure", "fig5"},
                {"design", "spectra"},
                {"scenarios",
                 {{{"name", "cf_fig2_3_4"}, {"backhaul_nats", 5}}, {{"name", "cf_highfreq_fig5"}, {"backhaul_nats", 5}}}},
                {"fft_bins", 256},
                {"seed", 1}};
    }
    if (figure == "fig6") {
        return {{"figure", "fig6"},
                {"design", json::array({"af_short", "af_long"})},
                {"scenario", "af_fig6_8"},
                {"sweep", {{"variable", "p_t_db"}, {"grid", {-10, -5, 0, 5, 10, 15, 20}}}},
                {"schemes", af_schemes},
                {"metric", "bhattacharyya"},
                {"channel_draws", 50},
                {"eval_draws", 2000},
                {"seed", 1}};
    }
    if (figure == "fig7") {
        return {{"figure", "fig7"},
                {"design", json::array({"af_short", "af_long"})},
                {"scenario", "af_fig7"},
                {"sweep", {{"variable", "n_sensors"}, {"grid", {1, 2, 3, 4, 5, 6, 7, 8}}}},
                {"schemes", af_schemes},
                {"metric", "bhattacharyya"},
                {"channel_draws", 50},
                {"eval_draws", 2000},
                {"seed", 1}};
    }
    if (figure == "fig8") {
        return {{"figure", "fig8"},
                {"design", json::array({"af_short", "af_long"})},
                {"scenario", "af_fig6_8"},
                {"sweep", {{"variable", "pfa"}, {"grid", roc_grid}}},
                {"schemes", af_schemes},
                {"metric", "pd"},
                {"channel_draws", 50},
                {"trials", trials},
                {"seed", 1}};
    }
    throw ConfigInvalid("unknown figure '" + std::string(figure) + "' (fig2..fig8)");
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

namespace {

struct Point {
    int index = 0;
    double value = 0.0;
    Scenario s;
    std::vector<double> pfas;
    bool roc = false;   // rows are keyed by P_fa instead of the sweep value
};

std::vector<Point> make_points(const ExperimentConfig& c) {
    std::vector<Point> out;
    if (c.sweep == SweepVariable::pfa) {
        out.push_back(Point{0, 0.0, c.scenario, c.grid, true});
        return out;
    }
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        const double v = c.grid[i];
        Scenario s = c.scenario;
        switch (c.sweep) {
            case SweepVariable::backhaul:
                s.backhaul_cap.assign(static_cast<std::size_t>(s.n_sensors), v);
                break;
            case SweepVariable::p_t_db:
                s.p_t = db_to_linear(v);
                break;
            case SweepVariable::n_sensors: {
                std::vector<int> idx(static_cast<std::size_t>(v));
                for (std::size_t n = 0; n < idx.size(); ++n) idx[n] = static_cast<int>(n);
                s = s.subset(idx);
                break;
            }
            case SweepVariable::pfa:
                break;
        }
        out.push_back(Point{static_cast<int>(i), v, std::move(s), {c.pfa}, false});
    }
    return out;
}

// Runs fn(i) for i < n on a small worker pool. Exceptions are collected per
// index; the one with the lowest index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
    }
}

void push_row(std::vector<ResultRow>& rows, double v, std::string scheme, double metric, double se,
              std::uint64_t seed) {
    rows.push_back(ResultRow{v, std::move(scheme), metric, se, seed});
}

// Rows for one scheme at every P_fa of the point, later interleaved by P_fa.
struct SchemeRows {
    std::string label;
    std::uint64_t seed = 0;
    std::vector<RocPoint> points;
};

std::vector<ResultRow> interleave(const Point& pt, const std::vector<SchemeRows>& per_scheme) {
    std::vector<ResultRow> rows;
    for (std::size_t k = 0; k < pt.pfas.size(); ++k) {
        for (const auto& sr : per_scheme) {
            const RocPoint& r = sr.points[k];
            push_row(rows, pt.roc ? r.pfa : pt.value, sr.label, r.pd, r.stderr_, sr.seed);
        }
    }
    return rows;
}

std::vector<ResultRow> cf_point(const ExperimentConfig& c, const Point& pt) {
    const Scenario& s = pt.s;
    CfOptions o;
    o.tol = c.tol;
    const bool need_joint = contains(c.schemes, "quant_opt") || contains(c.schemes, "joint");
    const bool need_wave = contains(c.schemes, "waveform_opt") || contains(c.schemes, "upper_bound");
    CfSchemeSet set;
    if (need_joint) {
        set = cf_all_baselines(s, o);
    } else {
        set.no_opt = cf_baselines(s, CfScheme::no_opt, o);
        if (need_wave) set.waveform_opt = cf_baselines(s, CfScheme::waveform_opt, o);
    }
    const auto design = [&](const std::string& name) {
        if (name == "upper_bound") return CfDesign{set.waveform_opt.x, QuantCovSet::zeros(s.n_sensors, s.code_len)};
        return set.get(cf_scheme_from_string(name));
    };

    const std::uint64_t point_seed = derive_seed(c.seed, static_cast<std::uint64_t>(pt.index), 0);
    if (c.metric == Metric::bhattacharyya) {
        std::vector<ResultRow> rows;
        for (const auto& name : c.schemes) {
            const CfDesign d = design(name);
            push_row(rows, pt.value, name, cf_bhattacharyya(s, d.x, d.q).total, 0.0, point_seed);
        }
        return rows;
    }

    std::vector<SchemeRows> per_scheme;
    for (std::size_t j = 0; j < c.schemes.size(); ++j) {
        const std::string& name = c.schemes[j];
        SchemeRows sr{name, derive_seed(c.seed, static_cast<std::uint64_t>(pt.index), 1 + j), {}};
        Rng rng(sr.seed);
        if (name == "distributed") {
            // Sensors decide on unquantized data with the uncoded Barker waveform.
            const Waveform& x = set.no_opt.x;
            for (double pfa : pt.pfas) {
                const double gamma = calibrate_distributed_gamma(s, x, pfa, c.trials.h0, rng);
                const DistributedRates r = distributed_detect(s, x, gamma, c.trials.h1, rng);
                sr.points.push_back(RocPoint{pfa, r.pd.rate, r.pd.stderr_});
            }
        } else {
            const DetectorSpec det = build_detector(s, design(name));
            sr.points = roc_curve(det, pt.pfas, c.trials.h0, c.trials.h1, rng);
        }
        per_scheme.push_back(std::move(sr));
    }
    return interleave(pt, per_scheme);
}

std::vector<ChannelDraw> draw_channels(const Scenario& s, int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ChannelDraw> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(sample_channel(s, rng));
    return out;
}

// Detection over random channels: statistics of every draw are pooled and
// compared against one common threshold per P_fa.
std::vector<RocPoint> pooled_af_roc(const Scenario& s, const std::vector<const AfDesign*>& designs,
                                    const std::vector<ChannelDraw>& draws, std::span<const double> pfas,
                                    const TrialCounts& trials, std::uint64_t seed) {
    const auto d = static_cast<int>(draws.size());
    const int n0 = (trials.h0 + d - 1) / d;
    const int n1 = (trials.h1 + d - 1) / d;
    std::vector<double> h0;
    std::vector<double> h1;
    for (int i = 0; i < d; ++i) {
        const auto& des = *designs[static_cast<std::size_t>(i)];
        const DetectorSpec det = build_detector(s, AfDetectDesign{des.x, des.p, draws[static_cast<std::size_t>(i)]});
        const auto a = simulate_statistics(det, Hypothesis::H0, n0, derive_seed(seed, static_cast<std::uint64_t>(i), 0));
        const auto b = simulate_statistics(det, Hypothesis::H1, n1, derive_seed(seed, static_cast<std::uint64_t>(i), 1));
        h0.insert(h0.end(), a.begin(), a.end());
        h1.insert(h1.end(), b.begin(), b.end());
    }
    std::vector<RocPoint> out;
    for (double pfa : pfas) {
        const double nu = empirical_threshold(h0, pfa);
        const auto hits = std::count_if(h1.begin(), h1.end(), [nu](double t) { return t > nu; });
        const double n = static_cast<double>(h1.size());
        const double p = static_cast<double>(hits) / n;
        out.push_back(RocPoint{pfa, p, std::sqrt(p * (1.0 - p) / n)});
    }
    return out;
}

std::vector<ResultRow> af_point(const ExperimentConfig& c, const Point& pt) {
    const Scenario& s = pt.s;
    AfOptions o;
    o.tol = c.tol;
    const auto idx = static_cast<std::uint64_t>(pt.index);
    const bool only_no_opt = c.schemes.size() == 1 && c.schemes.front() == "no_opt";
    const auto designs_for = [&](const ChannelDraw* f, Rng* rng) {
        AfSchemeSet set;
        if (only_no_opt) {
            set.no_opt = af_no_opt(s);
        } else if (f) {
            set = af_all_baselines_short(s, *f, o);
        } else {
            set = af_all_baselines_long(s, o, *rng);
        }
        return set;
    };

    std::vector<ResultRow> rows;
    std::vector<SchemeRows> per_scheme;
    for (DesignMode mode : c.modes) {
        const bool short_term = mode == DesignMode::af_short;
        const std::string suffix = short_term ? "_short" : "_long";
        // Short term: one design per channel draw. Long term: one design,
        // scored on fresh draws it never saw.
        const std::uint64_t draw_seed = derive_seed(c.seed, idx, short_term ? 0 : 2);
        const int n_draws = short_term || c.metric == Metric::pd ? c.channel_draws : c.eval_draws;
        const auto draws = draw_channels(s, n_draws, draw_seed);

        std::vector<AfSchemeSet> sets;
        std::uint64_t design_seed = draw_seed;
        if (short_term) {
            for (const auto& f : draws) sets.push_back(designs_for(&f, nullptr));
        } else {
            design_seed = derive_seed(c.seed, idx, 1);
            Rng rng(design_seed);
            sets.push_back(designs_for(nullptr, &rng));
        }
        const auto design_at = [&](std::size_t draw, AfScheme which) -> const AfDesign& {
            return sets[short_term ? draw : 0].get(which);
        };

        for (std::size_t j = 0; j < c.schemes.size(); ++j) {
            const AfScheme which = af_scheme_from_string(c.schemes[j]);
            const std::string label = c.schemes[j] + suffix;
            if (c.metric == Metric::bhattacharyya) {
                std::vector<double> b;
                for (std::size_t i = 0; i < draws.size(); ++i) {
                    const AfDesign& d = design_at(i, which);
                    b.push_back(af_bhattacharyya(s, d.x, d.p, draws[i]));
                }
                const McEstimate e = mean_and_stderr(b);
                push_row(rows, pt.value, label, e.mean, e.stderr_, design_seed);
            } else {
                std::vector<const AfDesign*> ds;
                for (std::size_t i = 0; i < draws.size(); ++i) ds.push_back(&design_at(i, which));
                const std::uint64_t mc_seed = derive_seed(c.seed, idx, 10 + j + (short_term ? 0 : 100));
                per_scheme.push_back(SchemeRows{label, mc_seed, pooled_af_roc(s, ds, draws, pt.pfas, c.trials, mc_seed)});
            }
        }
    }
    if (c.metric == Metric::pd) return interleave(pt, per_scheme);
    return rows;
}

std::vector<ResultRow> spectra_rows(const ExperimentConfig& c) {
    std::vector<const Scenario*> scen{&c.scenario};
    std::vector<std::string> labels{c.scenario_label};
    for (std::size_t i = 0; i < c.extra_scenarios.size(); ++i) {
        scen.push_back(&c.extra_scenarios[i]);
        labels.push_back(c.extra_labels[i]);
    }
    std::vector<std::vector<ResultRow>> parts(scen.size());
    parallel_for(scen.size(), [&](std::size_t i) {
        try {
            const Scenario& s = *scen[i];
            CfOptions o;
            o.tol = c.tol;
            const CfDesign joint = cf_all_baselines(s, o).joint;
            SpectraReport rep = spectra_report(s, joint.x, joint.q, c.fft_bins);
            rep.series.front().name = "optimal_waveform";
            rep.series.insert(rep.series.begin(),
                              SpectrumSeries{"barker_waveform", energy_spectrum(barker13(s.p_t).x, c.fft_bins)});
            for (const auto& ser : rep.series) {
                for (int b = 0; b < rep.bins; ++b) {
                    push_row(parts[i], rep.frequency(b), labels[i] + "/" + ser.name,
                             ser.density[static_cast<std::size_t>(b)], 0.0, c.seed);
                }
            }
        } catch (const ConfigInvalid&) {
            throw;
        } catch (const std::exception& e) {
            throw SolverFailure(std::string("scenario ") + labels[i] + ": " + e.what(), static_cast<int>(i));
        }
    });
    std::vector<ResultRow> rows;
    for (auto& p : parts) rows.insert(rows.end(), p.begin(), p.end());
    return rows;
}

}  // namespace

std::vector<ResultRow> compute_rows(const ExperimentConfig& c) {
    if (c.modes.empty()) throw ConfigInvalid("config key 'design': required");
    if (c.modes.front() == DesignMode::spectra) return spectra_rows(c);
    if (c.grid.empty()) throw ConfigInvalid("config key 'sweep.grid': must be nonempty");
    if (c.schemes.empty()) throw ConfigInvalid("config key 'schemes': expected a nonempty array");

    const auto points = make_points(c);
    std::vector<std::vector<ResultRow>> parts(points.size());
    parallel_for(points.size(), [&](std::size_t i) {
        const Point& pt = points[i];
        try {
            parts[i] = c.modes.front() == DesignMode::cf ? cf_point(c, pt) : af_point(c, pt);
        } catch (const ConfigInvalid&) {
            throw;
        } catch (const std::exception& e) {
            throw SolverFailure("sweep point " + std::to_string(pt.index) + " (" + format_double(pt.value) +
                                    "): " + e.what(),
                                pt.index);
        }
    });
    std::vector<ResultRow> rows;
    for (auto& p : parts) rows.insert(rows.end(), p.begin(), p.end());
    return rows;
}

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::string out = "sweep_value,scheme,metric,stderr,seed\n";
    for (const auto& r : rows) {
        out += format_double(r.sweep_value);
        out += ',';
        out += r.scheme;
        out += ',';
        out += format_double(r.metric);
        out += ',';
        out += format_double(r.stderr_);
        out += ',';
        out += std::to_string(r.seed);
        out += '\n';
    }
    return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
    ExperimentOutput out;
    out.rows = compute_rows(c);

    std::filesystem::create_directories(out_dir);
    out.csv_path = out_dir / (c.figure + ".csv");
    out.manifest_path = out_dir / (c.figure + ".manifest.json");

    json points = json::array();
    if (c.modes.front() == DesignMode::spectra) {
        points.push_back({{"index", 0}, {"seed", c.seed}});
    } else {
        for (const auto& pt : make_points(c)) {
            points.push_back({{"index", pt.index},
                              {"sweep_value", pt.roc ? json(c.grid) : json(pt.value)},
                              {"seed", derive_seed(c.seed, static_cast<std::uint64_t>(pt.index), 0)}});
        }
    }
    json modes = json::array();
    for (DesignMode m : c.modes) modes.push_back(std::string(to_string(m)));
    const json manifest = {
        {"library", "cloudradar"},
        {"version", std::string(kLibraryVersion)},
        {"figure", c.figure},
        {"config", c.source},
        {"effective",
         {{"design", modes},
          {"seed", c.seed},
          {"tol", c.tol},
          {"trials", {{"h0", c.trials.h0}, {"h1", c.trials.h1}}},
          {"channel_draws", c.channel_draws},
          {"eval_draws", c.eval_draws}}},
        {"points", points},
        {"csv", out.csv_path.filename().string()},
        {"rows", out.rows.size()},
    };

    const auto write = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + p.string());
        f << text;
        if (!f) throw std::runtime_error("failed writing " + p.string());
    };
    write(out.csv_path, rows_to_csv(out.rows));
    write(out.manifest_path, manifest.dump(2) + "\n");
    return out;
}

}  // namespace cloudradar
