// experiments.hpp
// Declarative experiment runner: spectrum scans, P0 traces, M_z saturation,
// the EP transition scan, oscillation tables and the two-qubit EP4 surface.
// Configs are plain key = value text with one [parameters] table; results are
// CSV files that embed the resolved config as a '#'-prefixed echo, so a result
// file round-trips through the same parser. Identical config + seed gives a
// byte-identical file.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nonherm/engine.hpp"
#include "nonherm/errors.hpp"
#include "nonherm/rng.hpp"
#include "nonherm/spectral.hpp"
#include "nonherm/statevector.hpp"

namespace nonherm {

enum class ExperimentKind {
    SpectrumScan,
    P0Trace,
    MzSaturation,
    EpTransitionScan,
    Oscillation,
    Ep4Surface,
};

enum class RunMode { Deterministic, Sampled };

enum class MixedEstimator { EqualWeight, SurvivalWeight };

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::SpectrumScan;
    RunMode mode = RunMode::Deterministic;
    int shots = 0;
    int trials = 0;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::string output;
    MixedEstimator estimator = MixedEstimator::EqualWeight;
    std::map<std::string, std::vector<double>> parameters;

    bool operator==(const ExperimentConfig& other) const {
        return kind == other.kind && mode == other.mode && shots == other.shots &&
               trials == other.trials && seed == other.seed && has_seed == other.has_seed &&
               output == other.output && estimator == other.estimator &&
               parameters == other.parameters;
    }
};

struct ExperimentResult {
    ExperimentConfig config; // echo, with the seed resolved
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    // metadata: kept in memory only, never written to the result file
    double wall_seconds = 0.0;
    long total_attempts = 0;
    std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Names and formatting

namespace detail {

inline const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::SpectrumScan: return "SPECTRUM_SCAN";
        case ExperimentKind::P0Trace: return "P0_TRACE";
        case ExperimentKind::MzSaturation: return "MZ_SATURATION";
        case ExperimentKind::EpTransitionScan: return "EP_TRANSITION_SCAN";
        case ExperimentKind::Oscillation: return "OSCILLATION";
        case ExperimentKind::Ep4Surface: return "EP4_SURFACE";
    }
    return "?";
}

inline std::optional<ExperimentKind> kind_from_name(const std::string& s) {
    for (ExperimentKind k :
         {ExperimentKind::SpectrumScan, ExperimentKind::P0Trace, ExperimentKind::MzSaturation,
          ExperimentKind::EpTransitionScan, ExperimentKind::Oscillation,
          ExperimentKind::Ep4Surface}) {
        if (s == kind_name(k)) return k;
    }
    return std::nullopt;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline bool parse_double_token(const std::string& token, double& out) {
    const std::string t = trim(token);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

// value := number | number, number, ... | linspace(lo, hi, count)
inline std::vector<double> parse_value_list(const std::string& value, const std::string& key) {
    const std::string v = trim(value);
    if (v.rfind("linspace(", 0) == 0 && v.back() == ')') {
        const std::string args = v.substr(9, v.size() - 10);
        std::vector<double> parts;
        std::stringstream ss(args);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            double x;
            if (!parse_double_token(tok, x)) {
                throw validation_error("bad linspace argument in '" + key + "'", {key});
            }
            parts.push_back(x);
        }
        if (parts.size() != 3 || parts[2] < 2 || parts[2] != std::floor(parts[2])) {
            throw validation_error("linspace needs (lo, hi, count>=2) in '" + key + "'", {key});
        }
        const int count = static_cast<int>(parts[2]);
        std::vector<double> out(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            out[static_cast<std::size_t>(i)] = parts[0] + (parts[1] - parts[0]) * i / (count - 1);
        }
        return out;
    }
    std::vector<double> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        double x;
        if (!parse_double_token(tok, x)) {
            throw validation_error("cannot parse number '" + trim(tok) + "' in '" + key + "'",
                                   {key});
        }
        out.push_back(x);
    }
    if (out.empty()) throw validation_error("empty value for '" + key + "'", {key});
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Config text I/O

inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "kind = " << detail::kind_name(cfg.kind) << "\n";
    os << "mode = " << (cfg.mode == RunMode::Sampled ? "sampled" : "deterministic") << "\n";
    os << "shots = " << cfg.shots << "\n";
    os << "trials = " << cfg.trials << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "output = " << cfg.output << "\n";
    os << "mixed_estimator = "
       << (cfg.estimator == MixedEstimator::SurvivalWeight ? "survival" : "equal") << "\n";
    os << "[parameters]\n";
    for (const auto& [key, values] : cfg.parameters) {
        os << key << " = ";
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) os << ", ";
            os << detail::format_double(values[i]);
        }
        os << "\n";
    }
    return os.str();
}

inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::vector<std::string> unknown;
    bool in_parameters = false;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t == "[parameters]") {
                in_parameters = true;
                continue;
            }
            throw validation_error("unknown section " + t, {t});
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw validation_error("expected 'key = value': " + t, {t});
        }
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (in_parameters) {
            cfg.parameters[key] = detail::parse_value_list(value, key);
            continue;
        }
        if (key == "kind") {
            const auto k = detail::kind_from_name(value);
            if (!k) throw validation_error("unknown experiment kind '" + value + "'", {"kind"});
            cfg.kind = *k;
        } else if (key == "mode") {
            if (value == "deterministic") {
                cfg.mode = RunMode::Deterministic;
            } else if (value == "sampled") {
                cfg.mode = RunMode::Sampled;
            } else {
                throw validation_error("mode must be deterministic or sampled", {"mode"});
            }
        } else if (key == "shots" || key == "trials") {
            double parsed = 0.0;
            if (!detail::parse_double_token(value, parsed) || parsed != std::floor(parsed)) {
                throw validation_error(key + " must be an integer", {key});
            }
            (key == "shots" ? cfg.shots : cfg.trials) = static_cast<int>(parsed);
        } else if (key == "seed") {
            char* end = nullptr;
            cfg.seed = std::strtoull(value.c_str(), &end, 10);
            if (end != value.c_str() + value.size() || value.empty()) {
                throw validation_error("seed must be a 64-bit unsigned integer", {"seed"});
            }
            cfg.has_seed = true;
        } else if (key == "output") {
            cfg.output = value;
        } else if (key == "mixed_estimator") {
            if (value == "equal") {
                cfg.estimator = MixedEstimator::EqualWeight;
            } else if (value == "survival") {
                cfg.estimator = MixedEstimator::SurvivalWeight;
            } else {
                throw validation_error("mixed_estimator must be equal or survival",
                                       {"mixed_estimator"});
            }
        } else {
            unknown.push_back(key);
        }
    }
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw validation_error(msg, unknown);
    }
    return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    return parse_config(in);
}

inline void write_result_csv(const ExperimentResult& result, std::ostream& os) {
    std::istringstream echo(serialize_config(result.config));
    std::string line;
    while (std::getline(echo, line)) os << "# " << line << "\n";
    for (std::size_t i = 0; i < result.columns.size(); ++i) {
        if (i) os << ",";
        os << result.columns[i];
    }
    os << "\n";
    for (const auto& row : result.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ",";
            os << detail::format_double(row[i]);
        }
        os << "\n";
    }
}

// Reads the '#'-prefixed config echo back out of a result file.
inline ExperimentConfig parse_result_header(std::istream& in) {
    std::string echo;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] != '#') break;
        std::string body = line.substr(1);
        if (!body.empty() && body[0] == ' ') body.erase(0, 1);
        echo += body + "\n";
    }
    return parse_config_string(echo);
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

struct ParamView {
    const std::map<std::string, std::vector<double>>& params;
    std::vector<std::string>& issues;
    std::vector<std::string> known;

    const std::vector<double>* list(const std::string& key, bool required) {
        known.push_back(key);
        const auto it = params.find(key);
        if (it == params.end()) {
            if (required) issues.push_back(key);
            return nullptr;
        }
        for (double v : it->second) {
            if (!std::isfinite(v)) {
                issues.push_back(key);
                return nullptr;
            }
        }
        return &it->second;
    }

    std::optional<double> scalar(const std::string& key, bool required) {
        const auto* values = list(key, required);
        if (!values) return std::nullopt;
        if (values->size() != 1) {
            issues.push_back(key);
            return std::nullopt;
        }
        return values->front();
    }

    void finish() {
        for (const auto& [key, _] : params) {
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                issues.push_back(key);
            }
        }
    }
};

inline double get_scalar(const ExperimentConfig& cfg, const std::string& key, double fallback) {
    const auto it = cfg.parameters.find(key);
    if (it == cfg.parameters.end() || it->second.size() != 1) return fallback;
    return it->second.front();
}

} // namespace detail

// Throws validation_error naming every offending field.
inline void validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> issues;
    detail::ParamView p{cfg.parameters, issues, {}};

    const bool sampled = cfg.mode == RunMode::Sampled;
    const bool supports_sampling = cfg.kind == ExperimentKind::P0Trace ||
                                   cfg.kind == ExperimentKind::MzSaturation ||
                                   cfg.kind == ExperimentKind::EpTransitionScan;
    if (sampled && !supports_sampling) issues.push_back("mode");
    if (sampled) {
        if (cfg.shots < 1) issues.push_back("shots");
        if (cfg.trials < 2) issues.push_back("trials");
        if (!cfg.has_seed) issues.push_back("seed");
    }
    if (cfg.output.empty()) issues.push_back("output");

    switch (cfg.kind) {
        case ExperimentKind::SpectrumScan: {
            const auto theta = p.scalar("theta", true);
            if (theta && !(*theta > 0.0)) issues.push_back("theta");
            const auto* ratios = p.list("gamma_over_theta", true);
            if (ratios) {
                for (double r : *ratios) {
                    if (r < 0.0) {
                        issues.push_back("gamma_over_theta");
                        break;
                    }
                }
            }
            break;
        }
        case ExperimentKind::P0Trace: {
            p.scalar("theta", true);
            const auto phi = p.scalar("phi", true);
            if (phi && *phi < 0.0) issues.push_back("phi");
            const auto n = p.scalar("n_cycles", true);
            if (n && (*n < 0.0 || *n != std::floor(*n))) issues.push_back("n_cycles");
            p.scalar("max_attempts", false);
            break;
        }
        case ExperimentKind::MzSaturation: {
            const auto phi = p.scalar("phi", true);
            if (phi && !(*phi > 0.0)) issues.push_back("phi");
            const auto* ratios = p.list("gamma_over_theta", true);
            if (ratios) {
                for (double r : *ratios) {
                    if (!(r > 1.0)) { // saturation only exists in the overdamped regime
                        issues.push_back("gamma_over_theta");
                        break;
                    }
                }
            }
            const auto n = p.scalar("n_max", true);
            if (n && (*n < 0.0 || *n != std::floor(*n))) issues.push_back("n_max");
            const auto stride = p.scalar("n_stride", false);
            if (stride && (*stride < 1.0 || *stride != std::floor(*stride)))
                issues.push_back("n_stride");
            p.scalar("max_attempts", false);
            break;
        }
        case ExperimentKind::EpTransitionScan: {
            const auto phi = p.scalar("phi", true);
            if (phi && !(*phi > 0.0)) issues.push_back("phi");
            const auto* ratios = p.list("gamma_over_theta", true);
            if (ratios) {
                bool any_overdamped = false;
                for (double r : *ratios) {
                    if (!(r > 0.0)) {
                        issues.push_back("gamma_over_theta");
                        break;
                    }
                    if (r > 1.0) any_overdamped = true;
                }
                if (!any_overdamped) issues.push_back("gamma_over_theta");
            }
            const auto n = p.scalar("n_cycles", false);
            if (n && (*n < 0.0 || *n != std::floor(*n))) issues.push_back("n_cycles");
            const auto w = p.scalar("window_samples", false);
            if (w && (*w < 2.0 || *w != std::floor(*w))) issues.push_back("window_samples");
            p.scalar("max_attempts", false);
            break;
        }
        case ExperimentKind::Oscillation: {
            const auto theta = p.scalar("theta", true);
            if (theta && !(*theta > 0.0)) issues.push_back("theta");
            const auto gamma = p.scalar("gamma", false);
            const auto phi = p.scalar("phi", false);
            if (gamma.has_value() == phi.has_value()) {
                issues.push_back("gamma"); // exactly one of gamma / phi
            } else {
                const double g = gamma ? *gamma : (*phi) * (*phi) / 8.0;
                if (g < 0.0 || (theta && !(g < *theta))) issues.push_back(gamma ? "gamma" : "phi");
            }
            const auto tmax = p.scalar("t_max", true);
            if (tmax && !(*tmax > 0.0)) issues.push_back("t_max");
            const auto tp = p.scalar("t_points", true);
            if (tp && (*tp < 2.0 || *tp != std::floor(*tp))) issues.push_back("t_points");
            break;
        }
        case ExperimentKind::Ep4Surface: {
            p.list("a", true);
            p.list("b", true);
            const auto g = p.scalar("gamma", false);
            if (g && !(*g > 0.0)) issues.push_back("gamma");
            break;
        }
    }
    p.finish();

    if (!issues.empty()) {
        std::sort(issues.begin(), issues.end());
        issues.erase(std::unique(issues.begin(), issues.end()), issues.end());
        std::string msg = "invalid config fields:";
        for (const auto& f : issues) msg += " " + f;
        throw validation_error(msg, issues);
    }
}

// ---------------------------------------------------------------------------
// Shared machinery

namespace detail {

inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const unsigned workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

// Deterministic mixed-state M_z traces: evolve |0> and |1> for n_max cycles,
// recording the per-initial expectation at every cycle.
struct MixedTrace {
    std::vector<double> mz_zero;
    std::vector<double> mz_one;
    std::vector<double> survival_zero;
    std::vector<double> survival_one;

    double equal_weight(std::size_t n) const { return 0.5 * (mz_zero[n] + mz_one[n]); }

    double survival_weight(std::size_t n) const {
        const double w0 = survival_zero[n], w1 = survival_one[n];
        return (w0 * mz_zero[n] + w1 * mz_one[n]) / (w0 + w1);
    }

    double combined(std::size_t n, MixedEstimator est) const {
        return est == MixedEstimator::EqualWeight ? equal_weight(n) : survival_weight(n);
    }
};

inline MixedTrace mixed_trace_circuit(const UnitSpec& unit, int n_max) {
    MixedTrace tr;
    tr.mz_zero.reserve(static_cast<std::size_t>(n_max) + 1);
    StateVector zero = new_basis_state(1, 0);
    StateVector one = new_basis_state(1, 1);
    CycleWorkspace ws(1, unit);
    double s0 = 1.0, s1 = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        tr.mz_zero.push_back(expectation_sigma_z(zero, 0));
        tr.mz_one.push_back(expectation_sigma_z(one, 0));
        tr.survival_zero.push_back(s0);
        tr.survival_one.push_back(s1);
        if (n == n_max) break;
        ws.load(zero);
        s0 *= ws.advance();
        ws.accept();
        ws.store(zero);
        ws.load(one);
        s1 *= ws.advance();
        ws.accept();
        ws.store(one);
    }
    return tr;
}

// Cycle count needed for the effective-Hamiltonian mixed M_z to *stay* within
// `band` of the stationary value (the approach overshoots, so the last
// excursion out of the band decides). Falls back to 5000 when the decay-rate
// gap vanishes.
inline int auto_saturation_cycles(double theta, double gamma, double band = 0.007,
                                  int cap = 200000) {
    const double gap2 = gamma * gamma - theta * theta;
    if (!(gap2 > 0.0)) return 5000;
    const double gap = std::sqrt(gap2); // |Im lambda_+ - Im lambda_-| = theta sinh(alpha)
    const double target = stationary_mz(theta, gamma);
    const int horizon = std::min(cap, static_cast<int>(std::ceil(40.0 / gap)));

    const UnitSpec unit(theta, std::sqrt(8.0 * gamma));
    const Eigen::MatrixXcd u = cycle_propagator(effective_hamiltonian(unit));
    Eigen::Vector2cd v0, v1;
    v0 << 1.0, 0.0;
    v1 << 0.0, 1.0;
    int last_outside = 0;
    for (int n = 1; n <= horizon; ++n) {
        v0 = u * v0;
        v1 = u * v1;
        const double m0 = (std::norm(v0(0)) - std::norm(v0(1))) / v0.squaredNorm();
        const double m1 = (std::norm(v1(0)) - std::norm(v1(1))) / v1.squaredNorm();
        if (std::abs(0.5 * (m0 + m1) - target) > band) last_outside = n;
    }
    return std::min(cap, std::max(1, last_outside + 1));
}

struct SampledMz {
    double value = 0.0;
    long attempts = 0;
};

// One estimation of M_z after n cycles from the mixed initial state: `shots`
// successful trajectories split evenly between |0> and |1>, each measured in
// the z basis once, combined by the chosen estimator.
inline SampledMz sample_mixed_mz(const UnitSpec& unit, int n_cycles, int shots,
                                 MixedEstimator estimator, RngStream stream, long max_attempts) {
    const int shots_zero = shots - shots / 2;
    const int shots_one = shots / 2;
    double sum[2] = {0.0, 0.0};
    long attempts[2] = {0, 0};
    SampledMz out;
    for (int which = 0; which < 2; ++which) {
        const int count = which == 0 ? shots_zero : shots_one;
        const StateVector initial = new_basis_state(1, static_cast<std::size_t>(which));
        for (int s = 0; s < count; ++s) {
            RngStream traj = stream.substream((static_cast<std::uint64_t>(which) << 32) +
                                              static_cast<std::uint64_t>(s));
            auto rec = run_sampled_core(initial, unit, n_cycles, traj, max_attempts,
                                        NoCycleObserver{});
            attempts[which] += rec.attempts;
            sum[which] += measure(rec.final_state, 0, traj) == 0 ? 1.0 : -1.0;
        }
    }
    const double m0 = shots_zero > 0 ? sum[0] / shots_zero : 0.0;
    const double m1 = shots_one > 0 ? sum[1] / shots_one : 0.0;
    out.attempts = attempts[0] + attempts[1];
    if (estimator == MixedEstimator::EqualWeight) {
        out.value = 0.5 * (m0 + m1);
    } else {
        const double w0 = attempts[0] > 0 ? static_cast<double>(shots_zero) / attempts[0] : 0.0;
        const double w1 = attempts[1] > 0 ? static_cast<double>(shots_one) / attempts[1] : 0.0;
        out.value = (w0 + w1) > 0.0 ? (w0 * m0 + w1 * m1) / (w0 + w1) : 0.0;
    }
    return out;
}

// Windowed long-time average, sampled: the shot budget is pooled across the
// window points (alternating initial states), so one estimation still costs
// exactly `shots` successful trajectories.
inline SampledMz sample_windowed_mz(const UnitSpec& unit, const std::vector<int>& window,
                                    int shots, MixedEstimator estimator, RngStream stream,
                                    long max_attempts) {
    double sum[2] = {0.0, 0.0};
    long attempts[2] = {0, 0};
    int count[2] = {0, 0};
    for (int s = 0; s < shots; ++s) {
        const int which = s % 2;
        const int wi = (s / 2) % static_cast<int>(window.size());
        RngStream traj = stream.substream(static_cast<std::uint64_t>(s));
        auto rec = run_sampled_core(new_basis_state(1, static_cast<std::size_t>(which)), unit,
                                    window[static_cast<std::size_t>(wi)], traj, max_attempts,
                                    NoCycleObserver{});
        attempts[which] += rec.attempts;
        sum[which] += measure(rec.final_state, 0, traj) == 0 ? 1.0 : -1.0;
        ++count[which];
    }
    const double m0 = count[0] > 0 ? sum[0] / count[0] : 0.0;
    const double m1 = count[1] > 0 ? sum[1] / count[1] : 0.0;
    SampledMz out;
    out.attempts = attempts[0] + attempts[1];
    if (estimator == MixedEstimator::EqualWeight) {
        out.value = 0.5 * (m0 + m1);
    } else {
        const double w0 = attempts[0] > 0 ? static_cast<double>(count[0]) / attempts[0] : 0.0;
        const double w1 = attempts[1] > 0 ? static_cast<double>(count[1]) / attempts[1] : 0.0;
        out.value = (w0 + w1) > 0.0 ? (w0 * m0 + w1 * m1) / (w0 + w1) : 0.0;
    }
    return out;
}

inline std::vector<int> window_indices(int n_end, int samples) {
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(samples));
    const double lo = n_end / 2.0;
    for (int i = 0; i < samples; ++i) {
        const int n = static_cast<int>(std::lround(lo + (n_end - lo) * i / (samples - 1)));
        if (idx.empty() || idx.back() != n) idx.push_back(n);
    }
    return idx;
}

inline double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double variance_of(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(xs.size() - 1);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Runners (config must already be validated; seed already resolved)

namespace detail {

inline ExperimentResult run_spectrum_scan(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.columns = {"gamma_over_theta", "re_lambda_plus", "re_lambda_minus", "im_lambda_plus",
                   "im_lambda_minus"};
    const double theta = cfg.parameters.at("theta").front();
    for (double ratio : cfg.parameters.at("gamma_over_theta")) {
        const auto spec = eigensystem_2level(theta, ratio * theta);
        res.rows.push_back({ratio, spec.eigenvalues[0].real(), spec.eigenvalues[1].real(),
                            spec.eigenvalues[0].imag(), spec.eigenvalues[1].imag()});
    }
    return res;
}

inline ExperimentResult run_p0_trace(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.columns = {"n", "p0_mean", "p0_std", "p0_deterministic", "p0_heff"};
    const double theta = cfg.parameters.at("theta").front();
    const double phi = cfg.parameters.at("phi").front();
    const int n_cycles = static_cast<int>(cfg.parameters.at("n_cycles").front());
    const long max_attempts =
        static_cast<long>(get_scalar(cfg, "max_attempts", 1'000'000.0));
    const UnitSpec unit(theta, phi);

    // deterministic circuit trace
    std::vector<double> p0_det;
    p0_det.reserve(static_cast<std::size_t>(n_cycles) + 1);
    {
        StateVector psi = new_basis_state(1, 0);
        CycleWorkspace ws(1, unit);
        for (int n = 0;; ++n) {
            p0_det.push_back(std::norm(psi.amps[0]));
            if (n == n_cycles) break;
            ws.load(psi);
            ws.advance();
            ws.accept();
            ws.store(psi);
        }
    }
    // effective-Hamiltonian trace
    std::vector<double> p0_heff;
    p0_heff.reserve(p0_det.size());
    {
        const Eigen::MatrixXcd u = cycle_propagator(effective_hamiltonian(unit));
        Eigen::Vector2cd v;
        v << 1.0, 0.0;
        for (int n = 0;; ++n) {
            p0_heff.push_back(std::norm(v(0)) / v.squaredNorm());
            if (n == n_cycles) break;
            v = u * v;
        }
    }

    std::vector<double> mean(p0_det.begin(), p0_det.end());
    std::vector<double> stddev(p0_det.size(), 0.0);
    if (cfg.mode == RunMode::Sampled) {
        RngStream root(cfg.seed);
        parallel_for(p0_det.size(), [&](std::size_t i) {
            RngStream stream = root.substream(i);
            const auto est = estimate_p0(new_basis_state(1, 0), unit, static_cast<int>(i),
                                         cfg.shots, cfg.trials, stream, max_attempts);
            mean[i] = est.mean;
            stddev[i] = est.std_dev;
        });
    }
    for (std::size_t i = 0; i < p0_det.size(); ++i) {
        res.rows.push_back(
            {static_cast<double>(i), mean[i], stddev[i], p0_det[i], p0_heff[i]});
    }
    return res;
}

inline ExperimentResult run_mz_saturation(const ExperimentConfig& cfg) {
    ExperimentResult res;
    const double phi = cfg.parameters.at("phi").front();
    const auto& ratios = cfg.parameters.at("gamma_over_theta");
    const int n_max = static_cast<int>(cfg.parameters.at("n_max").front());
    const int stride = static_cast<int>(get_scalar(cfg, "n_stride", 1.0));
    const long max_attempts =
        static_cast<long>(get_scalar(cfg, "max_attempts", 1'000'000.0));
    const double gamma = phi * phi / 8.0;

    res.columns = {"n"};
    for (double r : ratios) {
        char name[48];
        std::snprintf(name, sizeof name, "%g", r);
        res.columns.push_back(std::string("mz_") + name);
        res.columns.push_back(std::string("std_") + name);
    }

    std::vector<int> grid;
    for (int n = 0; n <= n_max; n += stride) grid.push_back(n);

    std::vector<std::vector<double>> mz(ratios.size()), sd(ratios.size());
    RngStream root(cfg.seed);
    for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
        const UnitSpec unit(gamma / ratios[ri], phi);
        mz[ri].resize(grid.size());
        sd[ri].assign(grid.size(), 0.0);
        if (cfg.mode == RunMode::Deterministic) {
            const auto trace = mixed_trace_circuit(unit, n_max);
            for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                mz[ri][gi] = trace.combined(static_cast<std::size_t>(grid[gi]), cfg.estimator);
            }
        } else {
            RngStream point = root.substream(ri);
            std::vector<long> attempts(grid.size(), 0);
            parallel_for(grid.size(), [&](std::size_t gi) {
                std::vector<double> estimates(static_cast<std::size_t>(cfg.trials));
                for (int t = 0; t < cfg.trials; ++t) {
                    const auto est = sample_mixed_mz(
                        unit, grid[gi], cfg.shots, cfg.estimator,
                        point.substream(gi).substream(static_cast<std::uint64_t>(t)),
                        max_attempts);
                    estimates[static_cast<std::size_t>(t)] = est.value;
                    attempts[gi] += est.attempts;
                }
                const double m = mean_of(estimates);
                mz[ri][gi] = m;
                sd[ri][gi] = std::sqrt(variance_of(estimates, m));
            });
            for (long a : attempts) res.total_attempts += a;
        }
    }
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        std::vector<double> row = {static_cast<double>(grid[gi])};
        for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
            row.push_back(mz[ri][gi]);
            row.push_back(sd[ri][gi]);
        }
        res.rows.push_back(std::move(row));
    }
    return res;
}

inline ExperimentResult run_ep_transition_scan(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.columns = {"gamma_over_theta", "n_cycles", "mz_mean", "mz_variance"};
    const double phi = cfg.parameters.at("phi").front();
    const auto& ratios = cfg.parameters.at("gamma_over_theta");
    const int n_config = static_cast<int>(get_scalar(cfg, "n_cycles", 0.0));
    const int window_samples = static_cast<int>(get_scalar(cfg, "window_samples", 200.0));
    const long max_attempts =
        static_cast<long>(get_scalar(cfg, "max_attempts", 1'000'000.0));
    const double gamma = phi * phi / 8.0;

    struct Point {
        double ratio;
        int n;
        std::vector<int> window; // empty for overdamped points
        double mean = 0.0;
        double variance = 0.0;
        long attempts = 0;
        std::string note;
    };
    std::vector<Point> points;
    for (double r : ratios) {
        Point pt;
        pt.ratio = r;
        const double theta = gamma / r;
        if (r > 1.0) {
            pt.n = n_config > 0 ? n_config : auto_saturation_cycles(theta, gamma);
        } else if (r == 1.0) {
            pt.n = n_config > 0 ? n_config : 5000; // no decay-rate gap at the EP
        } else {
            const double alpha = std::asin(r);
            const int t_end = static_cast<int>(std::ceil(50.0 / (theta * std::cos(alpha))));
            pt.n = n_config > 0 ? n_config : t_end;
            pt.window = window_indices(pt.n, window_samples);
        }
        points.push_back(std::move(pt));
    }

    RngStream root(cfg.seed);
    if (cfg.mode == RunMode::Deterministic) {
        for (auto& pt : points) {
            const UnitSpec unit(gamma / pt.ratio, phi);
            const auto trace = mixed_trace_circuit(unit, pt.n);
            if (pt.window.empty()) {
                pt.mean = trace.combined(static_cast<std::size_t>(pt.n), cfg.estimator);
            } else {
                double acc = 0.0;
                for (int n : pt.window) {
                    acc += trace.combined(static_cast<std::size_t>(n), cfg.estimator);
                }
                pt.mean = acc / static_cast<double>(pt.window.size());
            }
        }
    } else {
        // flatten (point, trial) into parallel tasks; substreams are derived
        // from (seed, point, trial) so scheduling cannot change results
        const std::size_t trials = static_cast<std::size_t>(cfg.trials);
        std::vector<double> estimates(points.size() * trials, 0.0);
        std::vector<long> attempts(points.size() * trials, 0);
        std::vector<std::string> errors(points.size() * trials);
        parallel_for(points.size() * trials, [&](std::size_t task) {
            const std::size_t pi = task / trials;
            const int trial = static_cast<int>(task % trials);
            const auto& pt = points[pi];
            const UnitSpec unit(gamma / pt.ratio, phi);
            RngStream stream = root.substream(pi).substream(static_cast<std::uint64_t>(trial));
            try {
                const auto est =
                    pt.window.empty()
                        ? sample_mixed_mz(unit, pt.n, cfg.shots, cfg.estimator, stream,
                                          max_attempts)
                        : sample_windowed_mz(unit, pt.window, cfg.shots, cfg.estimator, stream,
                                             max_attempts);
                estimates[task] = est.value;
                attempts[task] = est.attempts;
            } catch (const exhaustion_error& e) {
                errors[task] = e.what();
                estimates[task] = std::numeric_limits<double>::quiet_NaN();
            }
        });
        for (std::size_t pi = 0; pi < points.size(); ++pi) {
            std::vector<double> ok;
            for (std::size_t t = 0; t < trials; ++t) {
                const std::size_t task = pi * trials + t;
                points[pi].attempts += attempts[task];
                if (!errors[task].empty()) {
                    points[pi].note = errors[task];
                } else {
                    ok.push_back(estimates[task]);
                }
            }
            if (ok.empty()) {
                points[pi].mean = std::numeric_limits<double>::quiet_NaN();
                points[pi].variance = std::numeric_limits<double>::quiet_NaN();
            } else {
                points[pi].mean = mean_of(ok);
                points[pi].variance = variance_of(ok, points[pi].mean);
            }
        }
    }

    for (const auto& pt : points) {
        res.rows.push_back({pt.ratio, static_cast<double>(pt.n), pt.mean, pt.variance});
        res.total_attempts += pt.attempts;
        if (!pt.note.empty()) {
            res.notes.push_back("gamma_over_theta=" + format_double(pt.ratio) + ": " + pt.note);
        }
    }
    return res;
}

inline ExperimentResult run_oscillation(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.columns = {"t", "mz_zero", "mz_one", "mz_mixed", "mz_mixed_heff"};
    const double theta = cfg.parameters.at("theta").front();
    const double gamma = cfg.parameters.count("gamma")
                             ? cfg.parameters.at("gamma").front()
                             : std::pow(cfg.parameters.at("phi").front(), 2) / 8.0;
    const double t_max = cfg.parameters.at("t_max").front();
    const int t_points = static_cast<int>(cfg.parameters.at("t_points").front());
    const auto h = effective_hamiltonian(UnitSpec(theta, std::sqrt(8.0 * gamma)));
    for (int i = 0; i < t_points; ++i) {
        const double t = t_max * i / (t_points - 1);
        const double m0 = mz_oscillation(theta, gamma, t, InitialState::Zero);
        const double m1 = mz_oscillation(theta, gamma, t, InitialState::One);
        double heff_mixed = 0.0;
        for (int init = 0; init < 2; ++init) {
            auto ev = evolve_effective(h, new_basis_state(1, static_cast<std::size_t>(init)), t);
            ev.unnormalized.renormalize();
            heff_mixed += 0.5 * expectation_sigma_z(ev.unnormalized, 0);
        }
        res.rows.push_back({t, m0, m1, 0.5 * (m0 + m1), heff_mixed});
    }
    return res;
}

inline ExperimentResult run_ep4_surface(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.columns = {"a",       "b",       "re_e_pp", "im_e_pp", "re_e_pm", "im_e_pm",
                   "re_e_mp", "im_e_mp", "re_e_mm", "im_e_mm", "min_gap", "max_gap"};
    const double gamma = detail::get_scalar(cfg, "gamma", 1.0);
    for (double a : cfg.parameters.at("a")) {
        for (double b : cfg.parameters.at("b")) {
            const auto e = two_qubit_eigenenergies({a, b, gamma});
            const std::vector<cplx> eigs(e.begin(), e.end());
            res.rows.push_back({a, b, e[0].real(), e[0].imag(), e[1].real(), e[1].imag(),
                                e[2].real(), e[2].imag(), e[3].real(), e[3].imag(),
                                min_pairwise_gap(eigs), max_pairwise_gap(eigs)});
        }
    }
    return res;
}

} // namespace detail

// Validates, dispatches, stamps the echo, and persists the CSV to
// config.output. Deterministic given (config, seed).
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    validate_config(config);
    ExperimentConfig resolved = config;
    resolved.has_seed = true; // echo carries the resolved seed (default 0)

    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult res;
    switch (config.kind) {
        case ExperimentKind::SpectrumScan: res = detail::run_spectrum_scan(resolved); break;
        case ExperimentKind::P0Trace: res = detail::run_p0_trace(resolved); break;
        case ExperimentKind::MzSaturation: res = detail::run_mz_saturation(resolved); break;
        case ExperimentKind::EpTransitionScan:
            res = detail::run_ep_transition_scan(resolved);
            break;
        case ExperimentKind::Oscillation: res = detail::run_oscillation(resolved); break;
        case ExperimentKind::Ep4Surface: res = detail::run_ep4_surface(resolved); break;
    }
    res.config = resolved;
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ofstream out(resolved.output, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + resolved.output);
    write_result_csv(res, out);
    return res;
}

} // namespace nonherm
