// Experiment runner: federated training with masked-random-noise updates and
// gradient-compression baselines over a JSON run config.

#include <iostream>

#include <CLI11.hpp>

#include "mrn/config.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> rounds;
    std::optional<int> threads;
    std::optional<std::string> output;
    std::optional<double> lr;
    std::optional<double> noise_magnitude;
    std::vector<std::string> codecs;
};

void add_common(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("-c,--config", ov.config_path, "run config (JSON)")->required();
    cmd->add_option("--seed", ov.seed, "master seed (overrides config)");
    cmd->add_option("--rounds", ov.rounds, "number of rounds (overrides config)");
    cmd->add_option("--threads", ov.threads, "client-update threads (overrides config)");
    cmd->add_option("-o,--output", ov.output, "output directory (overrides config)");
    cmd->add_option("--lr", ov.lr, "learning rate (overrides config)");
    cmd->add_option("--noise-magnitude", ov.noise_magnitude,
                    "noise magnitude (overrides config)");
    cmd->add_option("--codec", ov.codecs, "codec(s) to run (overrides config)");
}

// Flag-wins precedence over config keys.
mrn::RunConfig load(const Overrides& ov) {
    mrn::RunConfig cfg = mrn::parse_config_file(ov.config_path);
    if (ov.seed) cfg.master_seed = *ov.seed;
    if (ov.rounds) cfg.fed.rounds = *ov.rounds;
    if (ov.threads) cfg.fed.threads = *ov.threads;
    if (ov.output) cfg.output = *ov.output;
    if (ov.lr) cfg.fed.lr.base = *ov.lr;
    if (ov.noise_magnitude) {
        cfg.fed.noise.magnitude = *ov.noise_magnitude;
        cfg.noise_magnitude_set = true;
    }
    if (!ov.codecs.empty()) {
        cfg.codecs.clear();
        for (const auto& name : ov.codecs) cfg.codecs.push_back(mrn::codec_from_name(name));
    }
    cfg.validate_and_finalize();
    cfg.fed.validate();
    return cfg;
}

void print_partition(const mrn::RunConfig& cfg) {
    const mrn::Dataset all = cfg.build_dataset();
    auto [train, eval] = mrn::split_eval(all, cfg.dataset.eval_samples);
    (void)eval;
    const mrn::Partition part = cfg.build_partition(train);
    std::cout << "client,size,weight,label_histogram\n";
    for (int k = 0; k < part.n_clients(); ++k) {
        const auto& shard = part.assignments[static_cast<std::size_t>(k)];
        std::vector<long> hist(static_cast<std::size_t>(train.n_classes), 0);
        for (int idx : shard) ++hist[static_cast<std::size_t>(train.labels[static_cast<std::size_t>(idx)])];
        std::cout << k << ',' << shard.size() << ',' << part.weights[k] << ',';
        for (std::size_t c = 0; c < hist.size(); ++c)
            std::cout << (c ? "|" : "") << hist[c];
        std::cout << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"masked-random-noise federated learning simulator"};
    app.require_subcommand(1);

    Overrides ov;
    auto* train = app.add_subcommand("train", "run one codec and write its metrics stream");
    auto* compare = app.add_subcommand(
        "compare", "run every configured codec under shared seeds and write a summary");
    auto* probe = app.add_subcommand("probe", "run the analysis probes and write the report");
    auto* inspect =
        app.add_subcommand("partition-inspect", "print per-client shard sizes and label histograms");
    for (auto* cmd : {train, compare, probe, inspect}) add_common(cmd, ov);

    CLI11_PARSE(app, argc, argv);

    try {
        const mrn::RunConfig cfg = load(ov);
        if (train->parsed()) {
            const auto path = mrn::run_train(cfg);
            std::cout << "metrics: " << path.string() << '\n';
        } else if (compare->parsed()) {
            const auto paths = mrn::run_compare(cfg);
            for (const auto& p : paths) std::cout << "wrote: " << p.string() << '\n';
        } else if (probe->parsed()) {
            const auto report = mrn::run_probe(cfg);
            const auto path = mrn::write_probe_report(cfg, report);
            std::cout << "report: " << path.string() << '\n';
        } else if (inspect->parsed()) {
            print_partition(cfg);
        }
    } catch (const mrn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
