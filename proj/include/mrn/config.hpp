#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrn/analysis.hpp"
#include "mrn/metrics.hpp"

namespace mrn {

// Configuration problems exit with code 1; runtime failures with code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DatasetConfig {
    bool use_csv = false;
    std::string csv_path;
    bool csv_has_header = false;
    SyntheticSpec synthetic{5000, 20, 3, 0.3, 0, 0};
    Eigen::Index eval_samples = 1000;
};

enum class PartitionKind { Iid, Dirichlet, Labels };

struct PartitionConfig {
    PartitionKind kind = PartitionKind::Iid;
    double beta = 0.3;           // Dirichlet concentration
    int labels_per_client = 3;   // label-restricted partitioning
};

struct ModelConfig {
    ModelKind kind = ModelKind::MlpOneHidden;
    int hidden = 32;
};

struct ProbeConfig {
    bool run_pm = true;
    bool run_q = true;
    bool run_slope = true;
    bool run_drift = true;
    int pm_steps = 10;
    int pm_dim = 1000;
    int pm_trials = 10000;
    int theorem_rounds = 500;
    long drift_steps = 5;
    int drift_rounds = 20;
};

struct RunConfig {
    std::uint64_t master_seed = 1;
    std::string output = "out";
    DatasetConfig dataset;
    PartitionConfig partition;
    ModelConfig model;
    FedConfig fed;
    bool noise_magnitude_set = false;  // defaults depend on the mask mode
    std::vector<CodecId> codecs;
    ProbeConfig probe;

    void validate_and_finalize();  // applies defaults, seeds, invariant checks

    Dataset build_dataset() const;                      // full dataset (train + eval)
    Partition build_partition(const Dataset& train) const;
    Model make_model(const Dataset& data) const;
};

// Parses the documented JSON schema; unknown keys, type mismatches and
// invariant violations raise ConfigError naming the offending key.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Runs every configured codec under the same master seed, data and
// partition; writes one metrics stream per codec plus a summary table.
// Returns the written file paths (metrics files first, summary last).
std::vector<std::filesystem::path> run_compare(const RunConfig& cfg);

// Executes the configured probes and writes the analysis sidecar; also
// appends the report as a comment record to the given metrics file when one
// exists.
AnalysisReport run_probe(const RunConfig& cfg);
std::filesystem::path write_probe_report(const RunConfig& cfg, const AnalysisReport& report);

// Single-codec training driven by a RunConfig; writes one metrics file.
std::filesystem::path run_train(const RunConfig& cfg);

}  // namespace mrn
