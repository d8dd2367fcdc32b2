#pragma once

#include <cstdint>
#include <vector>

#include "mrn/data.hpp"

namespace mrn {

struct Partition {
    std::vector<std::vector<int>> assignments;  // per-client sample indices
    Eigen::ArrayXd weights;                     // p_k = |shard_k| / sum |shard_j|

    int n_clients() const { return static_cast<int>(assignments.size()); }
};

// Equal shard sizes (+/- 1), random disjoint assignment.
Partition partition_iid(const Dataset& data, int n_clients, std::uint64_t seed);

// Per-label client shares drawn from Dirichlet(beta * 1_N); resampled until
// every client is nonempty.
Partition partition_dirichlet(const Dataset& data, int n_clients, double beta,
                              std::uint64_t seed);

// Each client receives exactly labels_per_client distinct labels and an
// equal share of every label it owns.
Partition partition_by_labels(const Dataset& data, int n_clients, int labels_per_client,
                              std::uint64_t seed);

// Uniform sample of k distinct client ids, deterministic in (seed,
// round_index), returned sorted ascending.
std::vector<int> sample_clients(int n_clients, int k, int round_index, std::uint64_t seed);

}  // namespace mrn
