#include "mrn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mrn {

double estimate_q(const std::vector<ParamVector>& update_samples, const NoiseSpec& spec,
                  MaskMode mode, int trials) {
    if (update_samples.empty()) throw std::invalid_argument("estimate_q: no samples");
    if (trials < 1) throw std::invalid_argument("estimate_q: trials must be >= 1");

    double q_hat = 0.0;
    Prng mask_rng(derive_seed(spec.seed, {0x71}));
    for (const auto& x : update_samples) {
        const double norm = std::sqrt(x.square().sum());
        if (norm == 0.0) continue;  // masking has the exact fixed point 0
        const ParamVector noise = generate_noise(spec, spec.seed, x.size());
        double mean_err = 0.0;
        for (int t = 0; t < trials; ++t) {
            const MaskVector m = stochastic_mask(x, noise, mode, mask_rng);
            mean_err += std::sqrt((apply_mask(m, noise) - x).square().sum());
        }
        mean_err /= static_cast<double>(trials);
        q_hat = std::max(q_hat, mean_err / norm);
    }
    return q_hat;
}

double pm_factor(long total_steps) {
    if (total_steps < 1) throw std::invalid_argument("pm_factor: S must be >= 1");
    const auto s = static_cast<double>(total_steps);
    // (1/S^3) * sum tau^2 = (S+1)(2S+1) / (6 S^2)
    return std::sqrt((s + 1.0) * (2.0 * s + 1.0) / (6.0 * s * s));
}

PmFactorCheck verify_pm_factor(int dim, int total_steps, const NoiseSpec& spec, int trials) {
    if (dim < 1 || total_steps < 1 || trials < 1)
        throw std::invalid_argument("verify_pm_factor: bad arguments");

    const ParamVector noise = generate_noise(spec, spec.seed, dim);
    // Strictly inside the clip interval, and away from the half point where
    // the error norm would be mask-independent.
    const ParamVector x = 0.3 * noise;
    const double x_norm_sq = x.square().sum();

    // The reduction factor describes the gate-averaged deviation
    // (tau/S) * (S(x) - x) per local step; the mask randomness is simulated
    // with an independent draw per (trial, step), the gate enters through
    // its mean.
    Prng gated_rng(derive_seed(spec.seed, {0x72}));
    Prng base_rng(derive_seed(spec.seed, {0x73}));
    const auto s = static_cast<double>(total_steps);

    double gated_sq = 0.0;  // mean over (trial, tau) of ||(tau/S)(S(x) - x)||^2
    for (int t = 0; t < trials; ++t) {
        for (long tau = 1; tau <= total_steps; ++tau) {
            const MaskVector m = stochastic_mask(x, noise, MaskMode::Binary, gated_rng);
            const double p = static_cast<double>(tau) / s;
            gated_sq += p * p * (apply_mask(m, noise) - x).square().sum();
        }
    }
    gated_sq /= static_cast<double>(trials) * s;

    double base_sq = 0.0;  // E ||S(x) - x||^2 from an independent stream
    for (int t = 0; t < trials; ++t) {
        const MaskVector m = stochastic_mask(x, noise, MaskMode::Binary, base_rng);
        base_sq += (apply_mask(m, noise) - x).square().sum();
    }
    base_sq /= static_cast<double>(trials);

    PmFactorCheck out;
    out.q_base = std::sqrt(base_sq / x_norm_sq);
    out.empirical = std::sqrt(gated_sq / x_norm_sq);
    out.analytic = pm_factor(total_steps) * out.q_base;
    return out;
}

double convergence_slope(std::span<const double> curve, int burn_in) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (std::size_t t = static_cast<std::size_t>(std::max(burn_in, 0)); t < curve.size(); ++t) {
        if (!(curve[t] > 0.0)) continue;
        const double lx = std::log(static_cast<double>(t + 1));
        const double ly = std::log(curve[t]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("convergence_slope: fewer than two usable points");
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    return (static_cast<double>(n) * sxy - sx * sy) / denom;
}

// ---------------------------------------------------------------------------

Dataset QuadTestbed::build() const {
    Prng g(seed);
    Eigen::MatrixXd centers(n_clients, dim);
    for (int k = 0; k < n_clients; ++k)
        for (int j = 0; j < dim; ++j)
            centers(k, j) = g.next_unit() < 0.5 ? -center_scale : center_scale;
    centers.rowwise() -= centers.colwise().mean();

    Dataset d;
    d.n_classes = 1;
    d.features.resize(static_cast<Eigen::Index>(n_clients) * per_client, dim);
    d.labels.assign(static_cast<std::size_t>(n_clients) * static_cast<std::size_t>(per_client), 0);
    for (int k = 0; k < n_clients; ++k)
        for (int i = 0; i < per_client; ++i)
            for (int j = 0; j < dim; ++j)
                d.features(static_cast<Eigen::Index>(k) * per_client + i, j) =
                    centers(k, j) +
                    (sample_spread > 0.0 ? g.next_gaussian(sample_spread) : 0.0);
    return d;
}

double QuadTestbed::optimum_value(const Dataset& data) const {
    const Eigen::RowVectorXd mean = data.features.colwise().mean();
    double f = 0.0;
    for (Eigen::Index i = 0; i < data.n_samples(); ++i)
        f += 0.5 * (data.features.row(i) - mean).squaredNorm();
    return f / static_cast<double>(data.n_samples());
}

namespace {

Partition contiguous_partition(int n_clients, int per_client) {
    Partition p;
    p.assignments.resize(static_cast<std::size_t>(n_clients));
    for (int k = 0; k < n_clients; ++k) {
        auto& shard = p.assignments[static_cast<std::size_t>(k)];
        shard.resize(static_cast<std::size_t>(per_client));
        std::iota(shard.begin(), shard.end(), k * per_client);
    }
    p.weights = Eigen::ArrayXd::Constant(n_clients, 1.0 / n_clients);
    return p;
}

double gap_at(const Dataset& data, const ParamVector& w) {
    const Eigen::RowVectorXd mean = data.features.colwise().mean();
    return 0.5 * (w.matrix().transpose() - mean).squaredNorm();
}

}  // namespace

DriftProbeResult gradient_drift_probe(const QuadTestbed& tb, long local_steps, int rounds,
                                      double lr, double noise_magnitude) {
    const Dataset data = tb.build();
    const Model model{ModelKind::Quadratic, tb.dim, 1, 0};
    const Partition part = contiguous_partition(tb.n_clients, tb.per_client);
    const NoiseSpec spec{NoiseDist::Uniform, noise_magnitude, 0};
    const std::uint64_t run_seed = derive_seed(tb.seed, {0xd1});

    DriftProbeResult out;
    std::vector<ParamVector> q_pool;
    ParamVector global = ParamVector::Zero(tb.dim);

    for (int round = 1; round <= rounds; ++round) {
        std::vector<ParamVector> noise(static_cast<std::size_t>(tb.n_clients));
        std::vector<ParamVector> u(static_cast<std::size_t>(tb.n_clients),
                                   ParamVector::Zero(tb.dim));
        std::vector<Prng> mask_rng;
        for (int k = 0; k < tb.n_clients; ++k) {
            noise[static_cast<std::size_t>(k)] = generate_noise(
                spec, noise_seed_for(run_seed, round, k), tb.dim);
            mask_rng.emplace_back(derive_seed(run_seed, {kSeedMask, static_cast<std::uint64_t>(round),
                                                         static_cast<std::uint64_t>(k)}));
        }

        for (long tau = 1; tau <= local_steps; ++tau) {
            // Virtual mean of client parameters before this step.
            ParamVector u_mean = ParamVector::Zero(tb.dim);
            for (const auto& uk : u) u_mean += uk;
            u_mean /= static_cast<double>(tb.n_clients);

            double drift = 0.0;
            std::vector<ParamVector> masked(static_cast<std::size_t>(tb.n_clients));
            for (int k = 0; k < tb.n_clients; ++k) {
                const auto psm = psm_forward(u[static_cast<std::size_t>(k)],
                                             noise[static_cast<std::size_t>(k)],
                                             MaskMode::Binary, PmSchedule{local_steps, tau},
                                             mask_rng[static_cast<std::size_t>(k)]);
                masked[static_cast<std::size_t>(k)] = psm.masked_update;
                drift = std::max(drift,
                                 (u_mean - psm.masked_update).square().sum());
            }
            out.drift_sq.push_back(drift);

            for (int k = 0; k < tb.n_clients; ++k) {
                const auto& shard = part.assignments[static_cast<std::size_t>(k)];
                const auto lg = model_loss_grad(model, data, shard,
                                                global + masked[static_cast<std::size_t>(k)]);
                out.g_hat = std::max(out.g_hat, std::sqrt(lg.grad.square().sum()));
                u[static_cast<std::size_t>(k)] =
                    ste_step(u[static_cast<std::size_t>(k)], lg.grad, lr);
                if (tau > 1 && k == 0) q_pool.push_back(u[0]);
            }
        }

        ParamVector agg = ParamVector::Zero(tb.dim);
        for (int k = 0; k < tb.n_clients; ++k) {
            const MaskVector m = stochastic_mask(u[static_cast<std::size_t>(k)],
                                                 noise[static_cast<std::size_t>(k)],
                                                 MaskMode::Binary,
                                                 mask_rng[static_cast<std::size_t>(k)]);
            agg += apply_mask(m, noise[static_cast<std::size_t>(k)]);
            q_pool.push_back(u[static_cast<std::size_t>(k)]);
        }
        global += agg / static_cast<double>(tb.n_clients);
    }

    NoiseSpec q_spec = spec;
    q_spec.seed = noise_seed_for(run_seed, 1, 0);
    out.q_hat = estimate_q(q_pool, q_spec, MaskMode::Binary, 200);

    const double factor = 4.0 * (1.0 + out.q_hat * out.q_hat) * lr * lr *
                          static_cast<double>((local_steps - 1) * (local_steps - 1)) *
                          out.g_hat * out.g_hat;
    out.bound.assign(out.drift_sq.size(), factor);
    for (std::size_t i = 0; i < out.drift_sq.size(); ++i)
        if (out.drift_sq[i] > out.bound[i]) out.all_within = false;
    return out;
}

TheoremProbeResult theorem_regime_probe(const QuadTestbed& tb, int clients_per_round,
                                        long local_steps, int rounds, double g_margin,
                                        int slope_burn_in) {
    const Dataset data = tb.build();
    const Model model{ModelKind::Quadratic, tb.dim, 1, 0};
    const Partition part = contiguous_partition(tb.n_clients, tb.per_client);

    // mu = L = 1 for the quadratic, so kappa = 1 and gamma = max(8, S) - 1.
    const double gamma = std::max<double>(8.0, static_cast<double>(local_steps)) - 1.0;
    FedConfig base;
    base.n_clients = tb.n_clients;
    base.clients_per_round = clients_per_round;
    base.rounds = rounds;
    base.local_steps = local_steps;
    base.batch_size = tb.per_client;  // full batch
    base.lr = LrSchedule{2.0, gamma, true};
    base.run_seed = derive_seed(tb.seed, {0x7e});

    TheoremProbeResult out;

    FedConfig avg_cfg = base;
    avg_cfg.codec = CodecId::None;
    const auto avg = run_training(model, avg_cfg, data, part, data,
                                  [&](int, const ParamVector& w,
                                      const std::vector<ClientReport>&) {
                                      out.gap_avg.push_back(gap_at(data, w));
                                  });

    // Two-point noise at 2 * eta_(round start) * S * G_round, with G_round the
    // oracle run's per-round max gradient infinity norm.
    FedConfig mrn_cfg = base;
    mrn_cfg.codec = CodecId::MrnSigned;
    mrn_cfg.noise = NoiseSpec{NoiseDist::TwoPoint, 1.0, 0};
    mrn_cfg.noise_magnitude_schedule.resize(static_cast<std::size_t>(rounds));
    for (int r = 1; r <= rounds; ++r) {
        const long t0 = static_cast<long>(r - 1) * local_steps + 1;
        const double g_round = avg.round_grad_inf[static_cast<std::size_t>(r - 1)] * g_margin;
        mrn_cfg.noise_magnitude_schedule[static_cast<std::size_t>(r - 1)] =
            2.0 * base.lr.at(t0) * static_cast<double>(local_steps) * g_round;
    }
    const auto mrn = run_training(model, mrn_cfg, data, part, data,
                                  [&](int, const ParamVector& w,
                                      const std::vector<ClientReport>&) {
                                      out.gap_mrn.push_back(gap_at(data, w));
                                  });

    out.slope_avg = convergence_slope(out.gap_avg, slope_burn_in);
    out.slope_mrn = convergence_slope(out.gap_mrn, slope_burn_in);
    const auto tail = [](const std::vector<double>& v) {
        const std::size_t n = std::min<std::size_t>(10, v.size());
        return std::accumulate(v.end() - static_cast<std::ptrdiff_t>(n), v.end(), 0.0) /
               static_cast<double>(n);
    };
    out.final_gap_avg = tail(out.gap_avg);
    out.final_gap_mrn = tail(out.gap_mrn);
    out.gap_ratio = out.final_gap_mrn / out.final_gap_avg;
    out.max_update_to_noise = mrn.max_update_to_noise;
    return out;
}

std::string AnalysisReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{";
    bool first = true;
    const auto field = [&](const char* name, const auto& opt) {
        if (!opt.has_value()) return;
        if (!first) os << ",";
        first = false;
        os << "\"" << name << "\":" << *opt;
    };
    field("q_hat", q_hat);
    field("pm_factor_analytic", pm_factor_analytic);
    field("pm_factor_empirical", pm_factor_empirical);
    field("slope_hat", slope_hat);
    field("max_update_to_noise", max_update_to_noise);
    if (drift_within_bound.has_value()) {
        if (!first) os << ",";
        first = false;
        os << "\"drift_within_bound\":" << (*drift_within_bound ? "true" : "false");
    }
    const auto arr = [&](const char* name, const std::vector<double>& v) {
        if (v.empty()) return;
        if (!first) os << ",";
        first = false;
        os << "\"" << name << "\":[";
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
        os << "]";
    };
    arr("drift_sq", drift_sq);
    arr("drift_bound", drift_bound);
    os << "}";
    return os.str();
}

}  // namespace mrn
