// nonherm_cli.cpp
// Command-line front end: spectrum queries, EP search, experiment configs,
// the two-qubit EP4 point and oscillation tables.
//
// Exit codes: 0 success, 1 invalid input or runtime failure, 2 usage errors.

#include <CLI11.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "nonherm/engine.hpp"
#include "nonherm/experiments.hpp"
#include "nonherm/spectral.hpp"

namespace {

using namespace nonherm;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// re+imj with 17 significant digits, e.g. 0.5-0.0062500000000000003j
std::string fmt_complex(cplx z) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g%+.17gj", z.real(), z.imag());
    return buf;
}

struct SpectrumArgs {
    double theta = 0.0;
    std::optional<double> gamma;
    std::optional<double> phi;
    std::string format = "human";
};

int cmd_spectrum(const SpectrumArgs& args) {
    if (args.gamma.has_value() == args.phi.has_value()) {
        std::cerr << "spectrum: give exactly one of --gamma or --phi\n";
        return 2;
    }
    const double gamma = args.gamma ? *args.gamma : (*args.phi) * (*args.phi) / 8.0;
    if (args.phi && !UnitSpec(0.0, *args.phi).within_small_phi_regime()) {
        std::cerr << "warning: phi > 0.5, the effective-Hamiltonian picture degrades\n";
    }
    const auto spec = eigensystem_2level(args.theta, gamma);
    if (args.format == "csv") {
        std::cout << "theta,gamma,regime,alpha,defective,"
                     "re_lambda_plus,im_lambda_plus,re_lambda_minus,im_lambda_minus,"
                     "re_v_plus_0,im_v_plus_0,re_v_plus_1,im_v_plus_1,"
                     "re_v_minus_0,im_v_minus_0,re_v_minus_1,im_v_minus_1\n";
        std::cout << fmt(args.theta) << "," << fmt(gamma) << "," << regime_name(spec.regime) << ","
                  << fmt(spec.alpha) << "," << (spec.defective ? 1 : 0);
        for (const auto& l : spec.eigenvalues) {
            std::cout << "," << fmt(l.real()) << "," << fmt(l.imag());
        }
        for (int col = 0; col < 2; ++col) {
            for (int rowi = 0; rowi < 2; ++rowi) {
                const cplx v = spec.eigenvectors(rowi, col);
                std::cout << "," << fmt(v.real()) << "," << fmt(v.imag());
            }
        }
        std::cout << "\n";
        return 0;
    }
    std::cout << "theta        = " << fmt(args.theta) << "\n";
    std::cout << "gamma        = " << fmt(gamma);
    if (args.phi) std::cout << "   (phi = " << fmt(*args.phi) << ", gamma = phi^2/8)";
    std::cout << "\n";
    std::cout << "regime       = " << regime_name(spec.regime) << "\n";
    std::cout << "alpha        = " << fmt(spec.alpha) << "\n";
    std::cout << "defective    = " << (spec.defective ? "yes (eigenvectors coalesce)" : "no")
              << "\n";
    if (spec.zero_hamiltonian) std::cout << "note         = zero Hamiltonian\n";
    std::cout << "lambda_plus  = " << fmt_complex(spec.eigenvalues[0]) << "\n";
    std::cout << "lambda_minus = " << fmt_complex(spec.eigenvalues[1]) << "\n";
    std::cout << "v_plus       = [" << fmt_complex(spec.eigenvectors(0, 0)) << ", "
              << fmt_complex(spec.eigenvectors(1, 0)) << "]\n";
    std::cout << "v_minus      = [" << fmt_complex(spec.eigenvectors(0, 1)) << ", "
              << fmt_complex(spec.eigenvectors(1, 1)) << "]\n";
    return 0;
}

struct EpFindArgs {
    double lo = 0.0;
    double hi = 0.0;
    double tolerance = 1e-5;
    std::string family = "single-qubit";
    double theta = 0.1;  // single-qubit family: scan gamma at fixed theta
    double gamma = 1.0;  // two-qubit-diagonal family: scan a=b=s at fixed gamma
    std::string format = "human";
};

int cmd_ep_find(const EpFindArgs& args) {
    std::function<Eigen::MatrixXcd(double)> family;
    if (args.family == "single-qubit") {
        const double theta = args.theta;
        family = [theta](double gamma) {
            return effective_hamiltonian(UnitSpec(theta, std::sqrt(8.0 * gamma))).matrix;
        };
    } else {
        const double gamma = args.gamma;
        family = [gamma](double s) {
            return multiqubit_effective_hamiltonian(two_qubit_hamiltonian(s, s), gamma, 2).matrix;
        };
    }
    const double p = find_ep(family, args.lo, args.hi, args.tolerance);
    const auto eigs = eigenvalues_dense(family(p));
    const double gap = distinct_eigenvalue_gap(eigs, 1e-9);
    if (args.format == "csv") {
        std::cout << "parameter,gap\n" << fmt(p) << "," << fmt(gap) << "\n";
    } else {
        std::cout << "ep_parameter = " << fmt(p) << "\n";
        std::cout << "gap          = " << fmt(gap) << "\n";
    }
    return 0;
}

struct Ep4Args {
    long double a = 0.0L;
    long double b = 0.0L;
    long double gamma = 1.0L;
    std::string format = "human";
};

int cmd_ep4(const Ep4Args& args) {
    const auto e = two_qubit_eigenenergies({args.a, args.b, args.gamma});
    const std::vector<cplx> eigs(e.begin(), e.end());
    const double min_gap = min_pairwise_gap(eigs);
    const double spread = max_pairwise_gap(eigs);
    if (args.format == "csv") {
        std::cout << "re_e_pp,im_e_pp,re_e_pm,im_e_pm,re_e_mp,im_e_mp,re_e_mm,im_e_mm,"
                     "min_gap,max_gap\n";
        for (const auto& v : e) std::cout << fmt(v.real()) << "," << fmt(v.imag()) << ",";
        std::cout << fmt(min_gap) << "," << fmt(spread) << "\n";
        return 0;
    }
    static const char* labels[] = {"E(+,+)", "E(+,-)", "E(-,+)", "E(-,-)"};
    for (int i = 0; i < 4; ++i) {
        std::cout << labels[i] << " = " << fmt_complex(e[static_cast<std::size_t>(i)]) << "\n";
    }
    std::cout << "min pairwise gap = " << fmt(min_gap) << "\n";
    std::cout << "spectral spread  = " << fmt(spread) << "\n";
    return 0;
}

struct OscArgs {
    double theta = 0.0;
    std::optional<double> gamma;
    std::optional<double> phi;
    double t_max = 100.0;
    int points = 201;
    std::string format = "human";
};

int cmd_oscillation(const OscArgs& args) {
    if (args.gamma.has_value() == args.phi.has_value()) {
        std::cerr << "oscillation: give exactly one of --gamma or --phi\n";
        return 2;
    }
    const double gamma = args.gamma ? *args.gamma : (*args.phi) * (*args.phi) / 8.0;
    if (args.points < 2) {
        std::cerr << "oscillation: --points must be >= 2\n";
        return 1;
    }
    if (args.format == "csv") {
        std::cout << "t,mz_zero,mz_one,mz_mixed\n";
    } else {
        std::printf("%14s %14s %14s %14s\n", "t", "mz_zero", "mz_one", "mz_mixed");
    }
    for (int i = 0; i < args.points; ++i) {
        const double t = args.t_max * i / (args.points - 1);
        const double m0 = mz_oscillation(args.theta, gamma, t, InitialState::Zero);
        const double m1 = mz_oscillation(args.theta, gamma, t, InitialState::One);
        if (args.format == "csv") {
            std::cout << fmt(t) << "," << fmt(m0) << "," << fmt(m1) << "," << fmt(0.5 * (m0 + m1))
                      << "\n";
        } else {
            std::printf("%14.8f %14.10f %14.10f %14.10f\n", t, m0, m1, 0.5 * (m0 + m1));
        }
    }
    return 0;
}

struct RunArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
};

int cmd_run(const RunArgs& args) {
    ExperimentConfig cfg = parse_config_file(args.config_path);
    if (args.seed_override) {
        cfg.seed = *args.seed_override;
        cfg.has_seed = true;
    }
    // relative output paths land in $NONHERM_OUTDIR when it is set
    if (const char* outdir = std::getenv("NONHERM_OUTDIR")) {
        const std::filesystem::path p(cfg.output);
        if (!cfg.output.empty() && p.is_relative()) {
            cfg.output = (std::filesystem::path(outdir) / p).string();
        }
    }
    const auto it = cfg.parameters.find("phi");
    if (it != cfg.parameters.end() && !it->second.empty() &&
        !UnitSpec(0.0, it->second.front()).within_small_phi_regime()) {
        std::cerr << "warning: phi > 0.5, the effective-Hamiltonian picture degrades\n";
    }
    const auto result = run_experiment(cfg);
    std::cout << "wrote " << result.config.output << ": " << result.rows.size() << " rows, "
              << result.columns.size() << " columns, " << fmt(result.wall_seconds) << " s";
    if (result.total_attempts > 0) std::cout << ", " << result.total_attempts << " attempts";
    std::cout << "\n";
    for (const auto& note : result.notes) std::cout << "note: " << note << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Post-selected non-Hermitian qubit dynamics: spectra, exceptional points and "
                 "experiment tables"};
    app.require_subcommand(1);

    SpectrumArgs spectrum;
    auto* sc_spectrum =
        app.add_subcommand("spectrum", "Closed-form eigensystem of the effective Hamiltonian");
    sc_spectrum->add_option("--theta", spectrum.theta, "Rx angle per cycle (radians)")->required();
    sc_spectrum->add_option("--gamma", spectrum.gamma, "decay rate Gamma");
    sc_spectrum->add_option("--phi", spectrum.phi, "controlled-Rx angle (Gamma = phi^2/8)");
    sc_spectrum->add_option("--format", spectrum.format, "human or csv")
        ->check(CLI::IsMember({"human", "csv"}));

    EpFindArgs epfind;
    auto* sc_epfind = app.add_subcommand("ep-find", "Locate an exceptional point in a family");
    sc_epfind
        ->add_option("--family", epfind.family,
                     "single-qubit (scan gamma) or two-qubit-diagonal (scan a=b)")
        ->check(CLI::IsMember({"single-qubit", "two-qubit-diagonal"}));
    sc_epfind->add_option("--min", epfind.lo, "lower end of the scan range")->required();
    sc_epfind->add_option("--max", epfind.hi, "upper end of the scan range")->required();
    sc_epfind->add_option("--tolerance", epfind.tolerance, "gap tolerance for acceptance");
    sc_epfind->add_option("--theta", epfind.theta, "theta for the single-qubit family");
    sc_epfind->add_option("--gamma", epfind.gamma, "Gamma for the two-qubit family");
    sc_epfind->add_option("--format", epfind.format)->check(CLI::IsMember({"human", "csv"}));

    RunArgs run;
    auto* sc_run = app.add_subcommand("run", "Run an experiment config and write its CSV");
    sc_run->add_option("--config", run.config_path, "config file (key = value text)")->required();
    sc_run->add_option("--seed", run.seed_override, "override the config seed");

    Ep4Args ep4;
    auto* sc_ep4 =
        app.add_subcommand("ep4", "Two-qubit eigenenergies E_{u,v} and their degeneracy gaps");
    sc_ep4->add_option("--a", ep4.a, "coupling a")->required();
    sc_ep4->add_option("--b", ep4.b, "coupling b")->required();
    sc_ep4->add_option("--gamma", ep4.gamma, "decay rate (default 1)");
    sc_ep4->add_option("--format", ep4.format)->check(CLI::IsMember({"human", "csv"}));

    OscArgs osc;
    auto* sc_osc = app.add_subcommand("oscillation", "Closed-form M_z(t) table for Gamma < theta");
    sc_osc->add_option("--theta", osc.theta)->required();
    sc_osc->add_option("--gamma", osc.gamma);
    sc_osc->add_option("--phi", osc.phi);
    sc_osc->add_option("--t-max", osc.t_max, "largest time (in cycles)");
    sc_osc->add_option("--points", osc.points, "number of grid points");
    sc_osc->add_option("--format", osc.format)->check(CLI::IsMember({"human", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (sc_spectrum->parsed()) return cmd_spectrum(spectrum);
        if (sc_epfind->parsed()) return cmd_ep_find(epfind);
        if (sc_run->parsed()) return cmd_run(run);
        if (sc_ep4->parsed()) return cmd_ep4(ep4);
        if (sc_osc->parsed()) return cmd_oscillation(osc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
