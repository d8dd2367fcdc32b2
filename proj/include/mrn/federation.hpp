#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mrn/codecs.hpp"
#include "mrn/model.hpp"
#include "mrn/partition.hpp"

namespace mrn {

// Learning rate: constant, or the inverse schedule base / (offset + t) with
// t the cumulative local step (1-based).
struct LrSchedule {
    double base = 0.1;
    double offset = 0.0;
    bool inverse = false;

    double at(long global_step) const {
        return inverse ? base / (offset + static_cast<double>(global_step)) : base;
    }
};

struct FedConfig {
    int n_clients = 100;
    int clients_per_round = 10;
    int rounds = 100;
    int local_epochs = 10;
    long local_steps = 0;  // > 0 overrides epochs
    int batch_size = 64;
    LrSchedule lr{};
    CodecId codec = CodecId::None;
    NoiseSpec noise{};
    MaskMode mask_mode = MaskMode::Binary;
    int topk_k = 0;  // 0 -> ceil(d/32), the 1-bpp-equivalent budget
    std::uint64_t run_seed = 1;
    int threads = 1;
    // Per-round noise magnitude override (e.g. a schedule tied to the lr);
    // empty means the NoiseSpec magnitude applies to every round.
    std::vector<double> noise_magnitude_schedule;

    void validate() const;
    long steps_for_shard(std::size_t shard_size) const;
};

struct ClientReport {
    int client_id = -1;
    Payload payload;
    long n_samples = 0;
    std::vector<double> local_losses;
    // Diagnostics collected during local training.
    double max_grad_inf = 0.0;
    double max_update_to_noise = 0.0;  // max |u_i / n_i|; meaningful for mrn codecs
};

struct RoundMetrics {
    int round = 0;
    CodecId codec = CodecId::None;
    double train_loss = 0.0;
    double eval_accuracy = 0.0;
    long uplink_bytes = 0;
    long elapsed_ms = 0;  // persisted as written; kept deterministic by the runner
};

// Plain local SGD from the global parameters; the dense update is compressed
// post-training according to the configured codec.
ClientReport local_update_fedavg(const Model& model, const ParamVector& global,
                                 const Dataset& data, std::span<const int> shard,
                                 const FedConfig& cfg, int round, int client_id);

// Masked-random-noise local training: noise is generated from the
// per-(client, round) seed, the zero-initialized update is trained through
// progressive stochastic masking with straight-through gradients, and the
// final stochastic mask plus the seed form the uplink payload.
ClientReport local_update_fedmrn(const Model& model, const ParamVector& global,
                                 const Dataset& data, std::span<const int> shard,
                                 const FedConfig& cfg, int round, int client_id);

// Weighted aggregation: global + sum_k p'_k decode(payload_k), iterating in
// ascending client id. Weights must sum to 1.
ParamVector aggregate(const ParamVector& global, const std::vector<ClientReport>& reports,
                      const Eigen::ArrayXd& weights, const NoiseSpec& noise_spec);

// Per-round observer for probes: (round index, global params after the
// round, reports of the round).
using RoundObserver =
    std::function<void(int, const ParamVector&, const std::vector<ClientReport>&)>;

struct TrainResult {
    std::vector<RoundMetrics> metrics;
    ParamVector final_params;
    double max_grad_inf = 0.0;           // over all clients and rounds
    double max_update_to_noise = 0.0;    // over all mrn client runs
    std::vector<double> round_grad_inf;  // per-round maxima
};

// Executes the full federated loop. Deterministic given the config,
// including across thread counts: every client update is a pure function of
// (global params, shard, derived seeds).
TrainResult run_training(const Model& model, const FedConfig& cfg, const Dataset& train,
                         const Partition& partition, const Dataset& eval,
                         const RoundObserver& observer = nullptr);

// Seed-derivation tags fanned out from the run seed.
enum SeedTag : std::uint64_t {
    kSeedNoise = 1,
    kSeedBatch = 2,
    kSeedMask = 3,
    kSeedCodec = 4,
    kSeedSampling = 5,
    kSeedModelInit = 6,
    kSeedPartition = 7,
};

inline std::uint64_t noise_seed_for(std::uint64_t run_seed, int round, int client_id) {
    return derive_seed(run_seed, {kSeedNoise, static_cast<std::uint64_t>(round),
                                  static_cast<std::uint64_t>(client_id)});
}

}  // namespace mrn
