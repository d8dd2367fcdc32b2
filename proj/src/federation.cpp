#include "mrn/federation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace mrn {

namespace {

// Per-round shuffled index permutation; step tau uses sequential chunk
// (tau-1) mod n_batches.
struct BatchPlan {
    std::vector<int> order;
    int batch_size;

    std::span<const int> batch(long tau) const {
        const auto n = static_cast<long>(order.size());
        const long n_batches = (n + batch_size - 1) / batch_size;
        const long b = (tau - 1) % n_batches;
        const long start = b * batch_size;
        const long len = std::min<long>(batch_size, n - start);
        return {order.data() + start, static_cast<std::size_t>(len)};
    }
};

BatchPlan make_plan(std::span<const int> shard, const FedConfig& cfg, int round,
                    int client_id) {
    BatchPlan plan;
    plan.order.assign(shard.begin(), shard.end());
    plan.batch_size = cfg.batch_size;
    Prng g(derive_seed(cfg.run_seed, {kSeedBatch, static_cast<std::uint64_t>(round),
                                      static_cast<std::uint64_t>(client_id)}));
    for (std::size_t i = plan.order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(g.next_u64() % i);
        std::swap(plan.order[i - 1], plan.order[j]);
    }
    return plan;
}

double noise_magnitude_for(const FedConfig& cfg, int round) {
    if (cfg.noise_magnitude_schedule.empty()) return cfg.noise.magnitude;
    const auto idx = static_cast<std::size_t>(round - 1);
    if (idx >= cfg.noise_magnitude_schedule.size())
        return cfg.noise_magnitude_schedule.back();
    return cfg.noise_magnitude_schedule[idx];
}

}  // namespace

void FedConfig::validate() const {
    if (n_clients < 1) throw std::invalid_argument("config: n_clients must be >= 1");
    if (clients_per_round < 1 || clients_per_round > n_clients)
        throw std::invalid_argument("config: requires 1 <= clients_per_round <= n_clients");
    if (rounds < 1) throw std::invalid_argument("config: rounds must be >= 1");
    if (local_steps < 0 || (local_steps == 0 && local_epochs < 1))
        throw std::invalid_argument("config: need local_steps >= 1 or local_epochs >= 1");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (!(lr.base > 0.0)) throw std::invalid_argument("config: lr must be positive");
    if (!(noise.magnitude > 0.0)) throw std::invalid_argument("config: noise magnitude must be positive");
    if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
}

long FedConfig::steps_for_shard(std::size_t shard_size) const {
    if (local_steps > 0) return local_steps;
    const long n = static_cast<long>(shard_size);
    const long batches = (n + batch_size - 1) / batch_size;
    return static_cast<long>(local_epochs) * std::max<long>(batches, 1);
}

ClientReport local_update_fedavg(const Model& model, const ParamVector& global,
                                 const Dataset& data, std::span<const int> shard,
                                 const FedConfig& cfg, int round, int client_id) {
    if (shard.empty()) throw std::invalid_argument("local_update_fedavg: empty shard");
    const long steps = cfg.steps_for_shard(shard.size());
    const BatchPlan plan = make_plan(shard, cfg, round, client_id);

    ClientReport report;
    report.client_id = client_id;
    report.n_samples = static_cast<long>(shard.size());
    report.local_losses.reserve(static_cast<std::size_t>(steps));

    ParamVector w = global;
    for (long tau = 1; tau <= steps; ++tau) {
        const long t = static_cast<long>(round - 1) * steps + tau;
        const auto lg = model_loss_grad(model, data, plan.batch(tau), w);
        report.local_losses.push_back(lg.loss);
        report.max_grad_inf = std::max(report.max_grad_inf, lg.grad.abs().maxCoeff());
        w -= cfg.lr.at(t) * lg.grad;
    }
    const ParamVector update = w - global;

    switch (cfg.codec) {
        case CodecId::None:
            report.payload = encode_dense(update);
            break;
        case CodecId::SignStochastic: {
            Prng g(derive_seed(cfg.run_seed, {kSeedCodec, static_cast<std::uint64_t>(round),
                                              static_cast<std::uint64_t>(client_id)}));
            report.payload = compress_sign(update, g);
            break;
        }
        case CodecId::TopK: {
            const int k = cfg.topk_k > 0
                              ? cfg.topk_k
                              : static_cast<int>((update.size() + 31) / 32);
            report.payload = compress_topk(update, std::min<int>(k, static_cast<int>(update.size())));
            break;
        }
        case CodecId::TernGrad: {
            Prng g(derive_seed(cfg.run_seed, {kSeedCodec, static_cast<std::uint64_t>(round),
                                              static_cast<std::uint64_t>(client_id)}));
            report.payload = compress_terngrad(update, g);
            break;
        }
        case CodecId::Drive:
            report.payload = compress_drive(
                update, derive_seed(cfg.run_seed, {kSeedCodec, static_cast<std::uint64_t>(round),
                                                   static_cast<std::uint64_t>(client_id)}));
            break;
        default:
            throw std::invalid_argument("local_update_fedavg: mask codec requires local_update_fedmrn");
    }
    return report;
}

ClientReport local_update_fedmrn(const Model& model, const ParamVector& global,
                                 const Dataset& data, std::span<const int> shard,
                                 const FedConfig& cfg, int round, int client_id) {
    if (cfg.codec != CodecId::MrnBinary && cfg.codec != CodecId::MrnSigned)
        throw std::invalid_argument("local_update_fedmrn: codec must be mrn_binary or mrn_signed");
    if (shard.empty()) throw std::invalid_argument("local_update_fedmrn: empty shard");

    const MaskMode mode = cfg.codec == CodecId::MrnBinary ? MaskMode::Binary : MaskMode::Signed;
    const long steps = cfg.steps_for_shard(shard.size());
    const BatchPlan plan = make_plan(shard, cfg, round, client_id);

    const std::uint64_t seed = noise_seed_for(cfg.run_seed, round, client_id);
    NoiseSpec spec = cfg.noise;
    spec.magnitude = noise_magnitude_for(cfg, round);
    const ParamVector noise = generate_noise(spec, seed, global.size());

    Prng mask_rng(derive_seed(cfg.run_seed, {kSeedMask, static_cast<std::uint64_t>(round),
                                             static_cast<std::uint64_t>(client_id)}));

    ClientReport report;
    report.client_id = client_id;
    report.n_samples = static_cast<long>(shard.size());
    report.local_losses.reserve(static_cast<std::size_t>(steps));

    ParamVector u = ParamVector::Zero(global.size());
    for (long tau = 1; tau <= steps; ++tau) {
        const long t = static_cast<long>(round - 1) * steps + tau;
        const auto psm = psm_forward(u, noise, mode, PmSchedule{steps, tau}, mask_rng);
        const auto lg = model_loss_grad(model, data, plan.batch(tau), global + psm.masked_update);
        report.local_losses.push_back(lg.loss);
        report.max_grad_inf = std::max(report.max_grad_inf, lg.grad.abs().maxCoeff());
        u = ste_step(u, lg.grad, cfg.lr.at(t));
        report.max_update_to_noise =
            std::max(report.max_update_to_noise, (u / noise).abs().maxCoeff());
    }

    const MaskVector final_mask = stochastic_mask(u, noise, mode, mask_rng);
    report.payload = encode_mask(final_mask, seed);
    return report;
}

ParamVector aggregate(const ParamVector& global, const std::vector<ClientReport>& reports,
                      const Eigen::ArrayXd& weights, const NoiseSpec& noise_spec) {
    if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
    if (weights.size() != static_cast<Eigen::Index>(reports.size()))
        throw std::invalid_argument("aggregate: weights/reports size mismatch");
    if (std::abs(weights.sum() - 1.0) > 1e-9)
        throw std::invalid_argument("aggregate: weights must sum to 1");

    std::vector<std::size_t> order(reports.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return reports[a].client_id < reports[b].client_id;
    });

    ParamVector sum = ParamVector::Zero(global.size());
    for (std::size_t i : order) {
        const ParamVector update = decode_update(reports[i].payload, noise_spec);
        if (update.size() != global.size())
            throw std::invalid_argument("aggregate: report dimension mismatch");
        sum += weights[static_cast<Eigen::Index>(i)] * update;
    }
    return global + sum;
}

TrainResult run_training(const Model& model, const FedConfig& cfg, const Dataset& train,
                         const Partition& partition, const Dataset& eval,
                         const RoundObserver& observer) {
    cfg.validate();
    if (partition.n_clients() != cfg.n_clients)
        throw std::invalid_argument("run_training: partition size != n_clients");

    const bool is_mrn = cfg.codec == CodecId::MrnBinary || cfg.codec == CodecId::MrnSigned;
    const std::uint64_t sampling_seed = derive_seed(cfg.run_seed, {kSeedSampling});

    TrainResult result;
    result.metrics.reserve(static_cast<std::size_t>(cfg.rounds));
    result.round_grad_inf.reserve(static_cast<std::size_t>(cfg.rounds));
    result.final_params = init_params(model, derive_seed(cfg.run_seed, {kSeedModelInit}));

    for (int round = 1; round <= cfg.rounds; ++round) {
        const std::vector<int> selected =
            sample_clients(cfg.n_clients, cfg.clients_per_round, round, sampling_seed);

        std::vector<ClientReport> reports(selected.size());
        auto run_client = [&](std::size_t i) {
            const int k = selected[i];
            const auto& shard = partition.assignments[static_cast<std::size_t>(k)];
            reports[i] = is_mrn
                             ? local_update_fedmrn(model, result.final_params, train, shard,
                                                   cfg, round, k)
                             : local_update_fedavg(model, result.final_params, train, shard,
                                                   cfg, round, k);
        };
        if (cfg.threads <= 1 || selected.size() <= 1) {
            for (std::size_t i = 0; i < selected.size(); ++i) run_client(i);
        } else {
            std::vector<std::thread> pool;
            std::atomic<std::size_t> next{0};
            const int n_threads = std::min<int>(cfg.threads, static_cast<int>(selected.size()));
            for (int t = 0; t < n_threads; ++t)
                pool.emplace_back([&]() {
                    for (std::size_t i = next.fetch_add(1); i < selected.size();
                         i = next.fetch_add(1))
                        run_client(i);
                });
            for (auto& th : pool) th.join();
        }

        // Weights renormalized over the selected set.
        Eigen::ArrayXd w(static_cast<Eigen::Index>(selected.size()));
        for (std::size_t i = 0; i < selected.size(); ++i)
            w[static_cast<Eigen::Index>(i)] = partition.weights[selected[i]];
        w /= w.sum();

        NoiseSpec spec = cfg.noise;
        spec.magnitude = noise_magnitude_for(cfg, round);
        result.final_params = aggregate(result.final_params, reports, w, spec);

        RoundMetrics rm;
        rm.round = round;
        rm.codec = cfg.codec;
        double loss = 0.0, round_ginf = 0.0;
        long bytes = 0;
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const auto& r = reports[i];
            const double mean_loss =
                std::accumulate(r.local_losses.begin(), r.local_losses.end(), 0.0) /
                static_cast<double>(r.local_losses.size());
            loss += w[static_cast<Eigen::Index>(i)] * mean_loss;
            bytes += static_cast<long>(payload_bytes(r.payload));
            round_ginf = std::max(round_ginf, r.max_grad_inf);
            result.max_update_to_noise =
                std::max(result.max_update_to_noise, r.max_update_to_noise);
        }
        rm.train_loss = loss;
        rm.uplink_bytes = bytes;
        rm.eval_accuracy = model_accuracy(model, eval, result.final_params);
        rm.elapsed_ms = 0;
        result.metrics.push_back(rm);
        result.round_grad_inf.push_back(round_ginf);
        result.max_grad_inf = std::max(result.max_grad_inf, round_ginf);

        if (observer) observer(round, result.final_params, reports);
    }
    return result;
}

}  // namespace mrn
