#include "mrn/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mrn/rng.hpp"

namespace mrn {

namespace {

void shuffle_ints(std::vector<int>& v, Prng& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(g.next_u64() % i);
        std::swap(v[i - 1], v[j]);
    }
}

Partition finish(std::vector<std::vector<int>> assignments) {
    Partition p;
    p.assignments = std::move(assignments);
    long total = 0;
    for (const auto& shard : p.assignments) total += static_cast<long>(shard.size());
    p.weights.resize(static_cast<Eigen::Index>(p.assignments.size()));
    for (std::size_t k = 0; k < p.assignments.size(); ++k) {
        std::sort(p.assignments[k].begin(), p.assignments[k].end());
        p.weights[static_cast<Eigen::Index>(k)] =
            static_cast<double>(p.assignments[k].size()) / static_cast<double>(total);
    }
    return p;
}

// Marsaglia-Tsang gamma sampler; the alpha < 1 case boosts alpha by one and
// applies the U^(1/alpha) correction.
double gamma_draw(Prng& g, double alpha) {
    if (alpha < 1.0) {
        const double u = g.next_open(0.0, 1.0);
        return gamma_draw(g, alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = g.next_gaussian(1.0);
        const double v = std::pow(1.0 + c * x, 3);
        if (v <= 0.0) continue;
        const double u = g.next_open(0.0, 1.0);
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
}

std::vector<double> dirichlet_draw(Prng& g, int n, double beta) {
    std::vector<double> shares(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto& s : shares) {
        s = gamma_draw(g, beta);
        sum += s;
    }
    for (auto& s : shares) s /= sum;
    return shares;
}

std::vector<std::vector<int>> indices_by_label(const Dataset& data) {
    std::vector<std::vector<int>> by_label(static_cast<std::size_t>(data.n_classes));
    for (Eigen::Index i = 0; i < data.n_samples(); ++i)
        by_label[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])].push_back(
            static_cast<int>(i));
    return by_label;
}

}  // namespace

Partition partition_iid(const Dataset& data, int n_clients, std::uint64_t seed) {
    if (n_clients < 1 || data.n_samples() < n_clients)
        throw std::invalid_argument("partition_iid: need at least one sample per client");
    Prng g(seed);
    std::vector<int> order(static_cast<std::size_t>(data.n_samples()));
    std::iota(order.begin(), order.end(), 0);
    shuffle_ints(order, g);

    std::vector<std::vector<int>> shards(static_cast<std::size_t>(n_clients));
    const auto n = order.size();
    const std::size_t base = n / static_cast<std::size_t>(n_clients);
    const std::size_t extra = n % static_cast<std::size_t>(n_clients);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < shards.size(); ++k) {
        const std::size_t take = base + (k < extra ? 1 : 0);
        shards[k].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                         order.begin() + static_cast<std::ptrdiff_t>(pos + take));
        pos += take;
    }
    return finish(std::move(shards));
}

Partition partition_dirichlet(const Dataset& data, int n_clients, double beta,
                              std::uint64_t seed) {
    if (!(beta > 0.0)) throw std::invalid_argument("partition_dirichlet: beta must be positive");
    if (n_clients < 1 || data.n_samples() < n_clients)
        throw std::invalid_argument("partition_dirichlet: more clients than samples");

    Prng g(seed);
    const auto by_label = indices_by_label(data);
    constexpr int kMaxAttempts = 1000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        std::vector<std::vector<int>> shards(static_cast<std::size_t>(n_clients));
        for (auto pool : by_label) {
            shuffle_ints(pool, g);
            const auto shares = dirichlet_draw(g, n_clients, beta);
            // Cut the shuffled pool at the cumulative proportions.
            std::size_t start = 0;
            double cum = 0.0;
            for (int k = 0; k < n_clients; ++k) {
                cum += shares[static_cast<std::size_t>(k)];
                const auto end = k == n_clients - 1
                                     ? pool.size()
                                     : std::min(pool.size(),
                                                static_cast<std::size_t>(
                                                    std::llround(cum * static_cast<double>(pool.size()))));
                for (std::size_t i = start; i < end; ++i)
                    shards[static_cast<std::size_t>(k)].push_back(pool[i]);
                start = std::max(start, end);
            }
        }
        const bool all_nonempty =
            std::all_of(shards.begin(), shards.end(), [](const auto& s) { return !s.empty(); });
        if (all_nonempty) return finish(std::move(shards));
    }
    throw std::runtime_error("partition_dirichlet: could not produce nonempty shards");
}

Partition partition_by_labels(const Dataset& data, int n_clients, int labels_per_client,
                              std::uint64_t seed) {
    if (labels_per_client < 1 || labels_per_client > data.n_classes)
        throw std::invalid_argument("partition_by_labels: labels_per_client out of range");

    Prng g(seed);
    const auto by_label = indices_by_label(data);
    constexpr int kMaxAttempts = 1000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        // Each client draws a distinct label set.
        std::vector<std::vector<int>> owned(static_cast<std::size_t>(n_clients));
        std::vector<std::vector<int>> owners(static_cast<std::size_t>(data.n_classes));
        for (int k = 0; k < n_clients; ++k) {
            std::vector<int> labels(static_cast<std::size_t>(data.n_classes));
            std::iota(labels.begin(), labels.end(), 0);
            shuffle_ints(labels, g);
            labels.resize(static_cast<std::size_t>(labels_per_client));
            for (int lab : labels) owners[static_cast<std::size_t>(lab)].push_back(k);
            owned[static_cast<std::size_t>(k)] = std::move(labels);
        }
        // Every label must be owned and every owner must get at least one
        // sample of each owned label.
        bool feasible = true;
        for (std::size_t lab = 0; lab < owners.size(); ++lab)
            if (owners[lab].empty() || owners[lab].size() > by_label[lab].size()) feasible = false;
        if (!feasible) continue;

        std::vector<std::vector<int>> shards(static_cast<std::size_t>(n_clients));
        for (std::size_t lab = 0; lab < owners.size(); ++lab) {
            auto pool = by_label[lab];
            shuffle_ints(pool, g);
            const auto m = owners[lab].size();
            const std::size_t base = pool.size() / m;
            const std::size_t extra = pool.size() % m;
            std::size_t pos = 0;
            for (std::size_t j = 0; j < m; ++j) {
                const std::size_t take = base + (j < extra ? 1 : 0);
                auto& shard = shards[static_cast<std::size_t>(owners[lab][j])];
                shard.insert(shard.end(), pool.begin() + static_cast<std::ptrdiff_t>(pos),
                             pool.begin() + static_cast<std::ptrdiff_t>(pos + take));
                pos += take;
            }
        }
        return finish(std::move(shards));
    }
    throw std::runtime_error("partition_by_labels: could not cover every label");
}

std::vector<int> sample_clients(int n_clients, int k, int round_index, std::uint64_t seed) {
    if (k < 1 || k > n_clients)
        throw std::invalid_argument("sample_clients: k out of range");
    Prng g(seed, static_cast<std::uint64_t>(round_index));
    std::vector<int> ids(static_cast<std::size_t>(n_clients));
    std::iota(ids.begin(), ids.end(), 0);
    // Partial Fisher-Yates: the first k entries are a uniform sample without
    // replacement.
    for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(g.next_u64() %
                                            static_cast<std::uint64_t>(n_clients - i));
        std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
    }
    ids.resize(static_cast<std::size_t>(k));
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace mrn
