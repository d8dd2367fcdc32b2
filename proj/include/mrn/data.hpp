#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mrn {

struct Dataset {
    Eigen::MatrixXd features;  // n_samples x n_features
    std::vector<int> labels;   // each in [0, n_classes)
    int n_classes = 0;

    Eigen::Index n_samples() const { return features.rows(); }
    Eigen::Index n_features() const { return features.cols(); }
};

struct SyntheticSpec {
    int n_samples = 0;
    int n_features = 0;
    int n_classes = 0;
    double cluster_spread = 0.0;
    std::uint64_t seed = 0;
    // Number of leading feature dimensions that carry class signal; the rest
    // are pure noise. 0 means all features are informative.
    int informative = 0;
};

// Gaussian-blob classification data. Class means are distinct sign patterns
// of magnitude 1/sqrt(m) on the informative dimensions, samples are mean +
// spread * N(0, I), class counts are balanced to within rounding, and row
// order is a seeded shuffle. Deterministic in the spec.
Dataset make_synthetic(const SyntheticSpec& spec);

// Comma-separated numeric file, label in the last column. Malformed rows
// raise std::runtime_error naming the line number.
Dataset load_csv(const std::string& path, bool has_header = false);

// Splits off the last `eval_samples` rows as a held-out evaluation set.
std::pair<Dataset, Dataset> split_eval(const Dataset& data, Eigen::Index eval_samples);

// View of a dataset restricted to an index subset.
Dataset subset(const Dataset& data, std::span<const int> indices);

}  // namespace mrn
