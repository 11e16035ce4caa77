#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rydpulse/entanglement.hpp"
#include "rydpulse/grape.hpp"
#include "rydpulse/hamiltonian.hpp"
#include "rydpulse/statistics.hpp"

namespace rydpulse {

enum class ExperimentKind {
    ensemble,
    haar_baseline,
    ratio_stats,
    porter_thomas,
    blockade,
    eta_pdf,
    grape_benchmark,
    grape_study,
    bipartition_scan
};

ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

struct AnalysisOptions {
    int entropy_bins = 40;
    int ratio_bins = 40;
    int omega_bins = 60;
    double omega_hi = 12.0;
    double keep_central = kDefaultKeepCentral;
    SmaxConvention smax = SmaxConvention::half_n;
    // "auto" (no induced symmetry), "contiguous", "exchange" or "internal"
    // (first half with only that symmetry), or a site list such as "0,1,3,4".
    std::string bipartition = "auto";
    double gamma = 2.5e-3;
    double delta_s = 0.0309;
};

struct GrapeStudyOptions {
    GrapeConfig optimizer;
    double prep_spacing = 7.0;
    double target_spacing = 10.0;
    std::vector<double> target_t_finals{3.0, 7.0, 10.0, 16.0, 200.0};
    int pool_size = 2000;  // per generation time
    int n_bins = 30;
    int per_bin = 1;
    int n_targets = 10;  // grape-benchmark only
};

struct EtaOptions {
    int grid_points = 400;
    int mc_samples = 1'000'000;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::ensemble;
    std::uint64_t seed = 2024;
    int workers = 1;
    std::string output_dir = "rydpulse-out";

    int n_atoms = 9;
    std::vector<double> spacings{10.0};
    double c6 = kDefaultC6;

    int m_segments = 30;
    std::vector<double> t_finals{1.0, 7.4, 100.0};
    double omega_max = 12.0;
    double delta_max = 20.0;

    int samples = 1000;
    int reference_samples = 1000;  // Haar-sector draws used as the JS reference

    AnalysisOptions analysis;
    GrapeStudyOptions grape;
    EtaOptions eta;
};

// A config problem tied to a key path and, when known, a source line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, int line, const std::string& message);
    const std::string& key() const { return key_; }
    int line() const { return line_; }

private:
    std::string key_;
    int line_;
};

// Line numbers of every value in a JSON text, keyed by dotted path
// ("grape.a1", "physics.spacings[1]").
std::map<std::string, int> json_key_lines(const std::string& text);

// Parses `text`, applies `overrides` ("grape.a1=0", values parsed as JSON
// when possible and as strings otherwise) and reads every field. Unknown keys
// and type errors raise ConfigError with the offending line.
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                              const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

nlohmann::json to_json(const ExperimentConfig& config);

struct ValidationReport {
    std::vector<ConfigError> errors;
    std::vector<std::string> warnings;
    Bipartition bipartition;
    bool ok() const { return errors.empty(); }
};

// Range checks on a parsed config. `lines` maps key paths to source lines for messages.
ValidationReport validate_config(const ExperimentConfig& config, const std::map<std::string, int>& lines = {});

Bipartition resolve_bipartition(const ExperimentConfig& config);

// FNV-1a over the canonical dump of everything that affects data: the
// worker count and output directory are excluded.
std::string config_hash(const ExperimentConfig& config);

struct RunOptions {
    bool resume = false;
    std::ostream* log = nullptr;
};

struct Artifact {
    std::string path;  // relative to the output directory
    std::string kind;
    std::uint64_t rows = 0;
};

struct RunSummary {
    std::string config_hash;
    std::vector<Artifact> artifacts;
    std::uint64_t records_written = 0;
    std::uint64_t records_resumed = 0;
    int grape_failures = 0;
};

// Runs the experiment and writes data files plus manifest.json into
// config.output_dir. Throws on invalid configs or I/O failures.
RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace rydpulse
