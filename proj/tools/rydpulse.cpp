#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rydpulse/blockade.hpp"
#include "rydpulse/runner.hpp"

using namespace rydpulse;

namespace {

constexpr int kConfigError = 2;

// RYDPULSE_SEED wins over the config file and --set.
void apply_seed_env(std::vector<std::string>& overrides) {
    if (const char* env = std::getenv("RYDPULSE_SEED"); env && *env) overrides.push_back(std::string("seed=") + env);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Loads, overrides and validates; prints diagnostics prefixed with the file name.
std::optional<ExperimentConfig> load_checked(const std::string& path, std::vector<std::string> overrides,
                                             ValidationReport* report_out = nullptr) {
    apply_seed_env(overrides);
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return std::nullopt;
    }
    ExperimentConfig config;
    try {
        config = parse_config(text, overrides, path);
    } catch (const ConfigError& e) {
        std::cerr << path << ": error: " << e.what() << '\n';
        return std::nullopt;
    }
    const ValidationReport report = validate_config(config, json_key_lines(text));
    for (const auto& w : report.warnings) std::cerr << path << ": warning: " << w << '\n';
    for (const auto& e : report.errors) std::cerr << path << ": error: " << e.what() << '\n';
    if (report_out) *report_out = report;
    if (!report.ok()) return std::nullopt;
    return config;
}

int cmd_run(const std::string& path, const std::vector<std::string>& sets, bool resume, std::optional<int> workers,
            const std::string& output, bool quiet) {
    std::vector<std::string> overrides = sets;
    if (workers) overrides.push_back("workers=" + std::to_string(*workers));
    if (!output.empty()) overrides.push_back("output_dir=" + nlohmann::json(output).dump());
    const auto config = load_checked(path, overrides);
    if (!config) return kConfigError;
    RunOptions options;
    options.resume = resume;
    options.log = quiet ? nullptr : &std::cerr;
    const RunSummary summary = run_experiment(*config, options);
    std::cout << "config_hash " << summary.config_hash << '\n';
    for (const auto& a : summary.artifacts) {
        std::cout << (std::filesystem::path(config->output_dir) / a.path).string() << " (" << a.kind << ", " << a.rows
                  << " rows)\n";
    }
    return 0;
}

int cmd_validate(const std::string& path, const std::vector<std::string>& sets) {
    ValidationReport report;
    const auto config = load_checked(path, sets, &report);
    if (!config) return kConfigError;
    const SymmetryClass sym = classify_bipartition(report.bipartition);
    std::cout << "experiment    " << to_string(config->kind) << '\n'
              << "config_hash   " << config_hash(*config) << '\n'
              << "bipartition   A = {" << report.bipartition.label() << "}  mask " << report.bipartition.mask()
              << "  symmetry " << to_string(sym.kind()) << '\n'
              << "warnings      " << report.warnings.size() << '\n'
              << "resolved config:\n"
              << to_json(*config).dump(2) << '\n';
    return 0;
}

int cmd_eta(double d, double c6, double omega_max, double delta_max, int grid) {
    const EtaModel m = eta_model_for_spacing(d, c6, omega_max, delta_max);
    std::cout << "spacing       " << d << " um\n"
              << "V_nn          " << m.v << " rad/us\n"
              << "eta_minus     " << m.eta_minus() << '\n'
              << "eta_plus      " << m.eta_plus() << '\n'
              << "regime        "
              << (m.interaction_dominated() ? "A (V > delta_max, plateau density " + std::to_string(m.plateau_density()) + ")"
                                            : std::string("B (V <= delta_max, resonant tail)"))
              << '\n'
              << "d_tilde       " << characteristic_distance(c6, omega_max, delta_max) << " um\n";
    if (grid > 1) {
        const double hi = 3.0 * (std::isfinite(m.eta_plus()) ? std::max(m.eta_plus(), m.eta_minus()) : 5.0 * m.eta_minus());
        std::cout << "eta,pdf,cdf\n";
        for (int i = 0; i < grid; ++i) {
            const double eta = hi * i / (grid - 1);
            std::cout << eta << ',' << eta_pdf(eta, m) << ',' << eta_cdf(eta, m) << '\n';
        }
    }
    return 0;
}

int cmd_grape(const std::string& target_path, const std::string& config_path, const std::vector<std::string>& sets,
              std::optional<double> spacing, const std::string& out_path) {
    ExperimentConfig config;
    std::vector<std::string> overrides = sets;
    apply_seed_env(overrides);
    try {
        config = parse_config(config_path.empty() ? std::string("{}") : read_file(config_path), overrides,
                              config_path.empty() ? "defaults" : config_path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    }
    try {
        validate(config.grape.optimizer);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    }
    const double d = spacing.value_or(config.grape.prep_spacing);
    if (!(d > 0.0)) {
        std::cerr << "error: spacing must be positive\n";
        return kConfigError;
    }

    const SectorBasis basis = dihedral_orbits(config.n_atoms);
    StateVector target = state_from_json(nlohmann::json::parse(read_file(target_path)));
    if (target.basis == BasisTag::full) target = project(target, basis);
    const SectorOperators ops = build_sector_operators(basis, make_params(config.n_atoms, d, config.c6));
    const ControlProblem problem = make_control_problem(ops, basis, target);
    const GrapeResult result = optimize(problem, config.grape.optimizer, config.seed);
    std::cerr << "best infidelity " << result.best_infidelity << " after " << config.grape.optimizer.n_restarts
              << " restarts (" << result.n_converged() << " converged), T_opt = " << result.t_opt << " us\n";
    const std::string text = to_json(result).dump(2);
    if (out_path.empty()) {
        std::cout << text << '\n';
    } else {
        std::ofstream(out_path) << text << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-pulse ensembles, entanglement statistics and GRAPE state preparation for Rydberg rings"};
    app.require_subcommand(1);

    std::string config_path, output, target_path;
    std::vector<std::string> sets;
    bool resume = false, quiet = false;
    std::optional<int> workers;

    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    run->add_flag("--resume", resume, "Skip records already present in the output directory");
    run->add_option("--workers", workers, "Worker threads (0 uses every core)");
    run->add_option("--set", sets, "Override a config leaf, e.g. --set grape.a1=0");
    run->add_option("--output", output, "Output directory (overrides output_dir)");
    run->add_flag("--quiet", quiet, "Suppress progress messages");

    auto* val = app.add_subcommand("validate", "Check a config and print the resolved settings");
    val->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    val->add_option("--set", sets, "Override a config leaf");

    double d = 0.0, c6 = kDefaultC6, omega_max = 12.0, delta_max = 20.0;
    int grid = 0;
    auto* eta = app.add_subcommand("eta", "Print the blockade parameter distribution at a spacing");
    eta->add_option("--d", d, "Nearest-neighbour spacing in µm")->required()->check(CLI::PositiveNumber);
    eta->add_option("--c6", c6, "C6 coefficient in rad µs⁻¹ µm⁶")->check(CLI::PositiveNumber);
    eta->add_option("--omega-max", omega_max, "Rabi bound")->check(CLI::PositiveNumber);
    eta->add_option("--delta-max", delta_max, "Detuning bound")->check(CLI::PositiveNumber);
    eta->add_option("--grid", grid, "Also print pdf and cdf on this many points");

    std::optional<double> spacing;
    auto* grape = app.add_subcommand("grape", "Optimise a pulse sequence towards a target state");
    grape->add_option("--target", target_path, "Target state JSON")->required()->check(CLI::ExistingFile);
    grape->add_option("--config", config_path, "Config file supplying grape settings")->check(CLI::ExistingFile);
    grape->add_option("--set", sets, "Override a config leaf");
    grape->add_option("--spacing", spacing, "Preparation spacing in µm (default grape.prep_spacing)");
    grape->add_option("--out", output, "Write the result JSON here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config_path, sets, resume, workers, output, quiet);
        if (*val) return cmd_validate(config_path, sets);
        if (*eta) return cmd_eta(d, c6, omega_max, delta_max, grid);
        if (*grape) return cmd_grape(target_path, config_path, sets, spacing, output);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
