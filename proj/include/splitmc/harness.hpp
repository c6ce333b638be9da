#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "splitmc/baselines.hpp"
#include "splitmc/split_sampler.hpp"

namespace splitmc {

enum class ExperimentKind { RareEvent, Evidence, PropertySuite, Trace };
enum class ModelKind { ShortestPath, MixtureCentered, MixtureDecentered };
enum class EstimatorKind { Cmc, Cpp, Ce, Ss, Ns, Dns };

std::string to_string(ExperimentKind k);
std::string to_string(ModelKind k);
std::string to_string(EstimatorKind k);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::RareEvent;
    ModelKind model = ModelKind::ShortestPath;
    EstimatorKind estimator = EstimatorKind::Ss;

    double gamma = 2.0;           // rare-event threshold
    std::uint64_t n = 1000000;    // total kernel/draw budget per replicate
    std::size_t replicates = 100;
    std::uint64_t seed = 1;
    std::size_t threads = 1;

    // split sampler
    double rho = std::exp(-1.0);
    std::size_t n_level = 10000;
    double nu_init = 10000.0;
    std::optional<double> lambda; // default 0.1 (rare event) or 10 (evidence)
    std::size_t t_max = 100;

    // nested sampling
    std::size_t ns_particles = 1000;
    std::size_t ns_steps = 100;
    double ns_eps = 1e-6;

    // conditional-probability product / cross-entropy pilot size
    std::uint64_t n0 = 1000;
    double ce_rho = 0.1;

    DnsConfig dns;

    std::string out;             // empty = stdout
    std::string format = "csv";  // csv | json

    double resolved_lambda() const;
    void validate() const;
};

// One key=value assignment; throws std::invalid_argument on unknown keys or
// unparsable values. Shared by the config-file loader and CLI overrides.
void set_option(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Flat key=value file, one per line, '#' comments.
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path);
ExperimentConfig load_config(const std::string& path);

struct ReplicateRow {
    std::size_t replicate = 0;
    double estimate = 0.0;
    std::string error; // non-empty when the estimator threw
};

struct ReplicateReport {
    ExperimentConfig config;
    double truth = 0.0;
    std::vector<ReplicateRow> rows;

    std::size_t valid_count() const;
    double mean_estimate() const;
    // sqrt(mean((Z_hat - Z)^2)) / Z over successful replicates
    double rel_rmse() const;
    // sqrt(mean((log Z_hat - log Z)^2))
    double log_rms() const;
    double summary_error() const; // dispatches on config.kind
};

// Reference truth constants: P(S > gamma) for the shortest-path network at
// gamma in {2,3,4}, and Z = 101 for the mixture evidence problems.
std::optional<double> truth_value(ModelKind model, ExperimentKind kind, double gamma);

ReplicateReport run_replicates(const ExperimentConfig& cfg);

// Single-replicate dispatch (also used by the trace subcommand).
double run_one(const ExperimentConfig& cfg, Rng& rng);

void emit_csv(const ReplicateReport& report, std::ostream& os);
void emit_json(const ReplicateReport& report, std::ostream& os);
void emit_report(const ReplicateReport& report, const std::string& format,
                 const std::string& path);
ReplicateReport read_json_report(std::istream& is);

// Level-visit trace of a single split-sampler run as CSV rows
// (iteration, level, log_Omega).
void emit_trace(const ExperimentConfig& cfg, std::ostream& os);

} // namespace splitmc
