#include "mrn/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace mrn {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.contains(key))
            throw ConfigError("config: unknown key '" + where + key + "'");
    }
}

template <typename T>
T get_or(const json& obj, const std::string& where, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + where + key + "'");
    }
}

NoiseDist noise_dist_from(const std::string& s, const std::string& where) {
    if (s == "uniform") return NoiseDist::Uniform;
    if (s == "gaussian") return NoiseDist::Gaussian;
    if (s == "two_point") return NoiseDist::TwoPoint;
    throw ConfigError("config: bad value for '" + where + "': " + s);
}

ModelKind model_kind_from(const std::string& s, const std::string& where) {
    if (s == "logistic_regression") return ModelKind::LogisticRegression;
    if (s == "mlp_one_hidden") return ModelKind::MlpOneHidden;
    if (s == "quadratic") return ModelKind::Quadratic;
    throw ConfigError("config: bad value for '" + where + "': " + s);
}

}  // namespace

void RunConfig::validate_and_finalize() {
    if (codecs.empty()) throw ConfigError("config: codec list must not be empty");
    if (!noise_magnitude_set)
        fed.noise.magnitude = fed.mask_mode == MaskMode::Binary ? 1e-2 : 5e-3;
    fed.run_seed = master_seed;
    if (dataset.synthetic.seed == 0)
        dataset.synthetic.seed = derive_seed(master_seed, {0xda7a});
    try {
        fed.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (dataset.use_csv && !std::filesystem::exists(dataset.csv_path))
        throw ConfigError("config: csv path not readable: " + dataset.csv_path);
}

Dataset RunConfig::build_dataset() const {
    return dataset.use_csv ? load_csv(dataset.csv_path, dataset.csv_has_header)
                           : make_synthetic(dataset.synthetic);
}

Partition RunConfig::build_partition(const Dataset& train) const {
    const std::uint64_t seed = derive_seed(master_seed, {kSeedPartition});
    switch (partition.kind) {
        case PartitionKind::Iid:
            return partition_iid(train, fed.n_clients, seed);
        case PartitionKind::Dirichlet:
            return partition_dirichlet(train, fed.n_clients, partition.beta, seed);
        case PartitionKind::Labels:
            return partition_by_labels(train, fed.n_clients, partition.labels_per_client, seed);
    }
    throw std::logic_error("build_partition: unknown kind");
}

Model RunConfig::make_model(const Dataset& data) const {
    Model m;
    m.kind = model.kind;
    m.n_features = static_cast<int>(data.n_features());
    m.n_classes = data.n_classes;
    m.hidden = model.hidden;
    return m;
}

RunConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    check_keys(root, "", {"seed", "output", "dataset", "partition", "model", "fed",
                          "codecs", "probe"});

    RunConfig cfg;
    cfg.master_seed = get_or<std::uint64_t>(root, "", "seed", 1);
    cfg.output = get_or<std::string>(root, "", "output", "out");

    if (root.contains("dataset")) {
        const auto& d = root.at("dataset");
        check_keys(d, "dataset.", {"synthetic", "csv", "eval_samples"});
        if (d.contains("synthetic") && d.contains("csv"))
            throw ConfigError("config: dataset is either 'synthetic' or 'csv', not both");
        if (d.contains("csv")) {
            const auto& c = d.at("csv");
            check_keys(c, "dataset.csv.", {"path", "has_header"});
            cfg.dataset.use_csv = true;
            cfg.dataset.csv_path = get_or<std::string>(c, "dataset.csv.", "path", "");
            if (cfg.dataset.csv_path.empty())
                throw ConfigError("config: missing 'dataset.csv.path'");
            cfg.dataset.csv_has_header = get_or<bool>(c, "dataset.csv.", "has_header", false);
        } else if (d.contains("synthetic")) {
            const auto& s = d.at("synthetic");
            check_keys(s, "dataset.synthetic.",
                       {"n_samples", "n_features", "n_classes", "cluster_spread", "seed",
                        "informative"});
            auto& sp = cfg.dataset.synthetic;
            sp.n_samples = get_or<int>(s, "dataset.synthetic.", "n_samples", sp.n_samples);
            sp.n_features = get_or<int>(s, "dataset.synthetic.", "n_features", sp.n_features);
            sp.n_classes = get_or<int>(s, "dataset.synthetic.", "n_classes", sp.n_classes);
            sp.cluster_spread =
                get_or<double>(s, "dataset.synthetic.", "cluster_spread", sp.cluster_spread);
            sp.seed = get_or<std::uint64_t>(s, "dataset.synthetic.", "seed", 0);
            sp.informative = get_or<int>(s, "dataset.synthetic.", "informative", 0);
        }
        cfg.dataset.eval_samples =
            get_or<Eigen::Index>(d, "dataset.", "eval_samples", cfg.dataset.eval_samples);
    }

    if (root.contains("partition")) {
        const auto& p = root.at("partition");
        check_keys(p, "partition.", {"kind", "beta", "labels_per_client"});
        const auto kind = get_or<std::string>(p, "partition.", "kind", "iid");
        if (kind == "iid") cfg.partition.kind = PartitionKind::Iid;
        else if (kind == "dirichlet") cfg.partition.kind = PartitionKind::Dirichlet;
        else if (kind == "labels") cfg.partition.kind = PartitionKind::Labels;
        else throw ConfigError("config: bad value for 'partition.kind': " + kind);
        cfg.partition.beta = get_or<double>(p, "partition.", "beta", cfg.partition.beta);
        if (!(cfg.partition.beta > 0.0))
            throw ConfigError("config: 'partition.beta' must be positive");
        cfg.partition.labels_per_client =
            get_or<int>(p, "partition.", "labels_per_client", cfg.partition.labels_per_client);
    }

    if (root.contains("model")) {
        const auto& m = root.at("model");
        check_keys(m, "model.", {"kind", "hidden"});
        cfg.model.kind = model_kind_from(get_or<std::string>(m, "model.", "kind", "mlp_one_hidden"),
                                         "model.kind");
        cfg.model.hidden = get_or<int>(m, "model.", "hidden", cfg.model.hidden);
        if (cfg.model.kind == ModelKind::MlpOneHidden && cfg.model.hidden < 1)
            throw ConfigError("config: 'model.hidden' must be >= 1");
    }

    if (root.contains("fed")) {
        const auto& f = root.at("fed");
        check_keys(f, "fed.",
                   {"n_clients", "clients_per_round", "rounds", "local_epochs", "local_steps",
                    "batch_size", "lr", "mask_mode", "noise", "topk_k", "threads"});
        auto& fc = cfg.fed;
        fc.n_clients = get_or<int>(f, "fed.", "n_clients", fc.n_clients);
        fc.clients_per_round = get_or<int>(f, "fed.", "clients_per_round", fc.clients_per_round);
        fc.rounds = get_or<int>(f, "fed.", "rounds", fc.rounds);
        fc.local_epochs = get_or<int>(f, "fed.", "local_epochs", fc.local_epochs);
        fc.local_steps = get_or<long>(f, "fed.", "local_steps", fc.local_steps);
        fc.batch_size = get_or<int>(f, "fed.", "batch_size", fc.batch_size);
        fc.lr.base = get_or<double>(f, "fed.", "lr", fc.lr.base);
        fc.topk_k = get_or<int>(f, "fed.", "topk_k", fc.topk_k);
        fc.threads = get_or<int>(f, "fed.", "threads", fc.threads);
        const auto mode = get_or<std::string>(f, "fed.", "mask_mode", "binary");
        if (mode == "binary") fc.mask_mode = MaskMode::Binary;
        else if (mode == "signed") fc.mask_mode = MaskMode::Signed;
        else throw ConfigError("config: bad value for 'fed.mask_mode': " + mode);
        if (f.contains("noise")) {
            const auto& n = f.at("noise");
            check_keys(n, "fed.noise.", {"dist", "magnitude"});
            fc.noise.dist = noise_dist_from(get_or<std::string>(n, "fed.noise.", "dist", "uniform"),
                                            "fed.noise.dist");
            if (n.contains("magnitude")) {
                fc.noise.magnitude = get_or<double>(n, "fed.noise.", "magnitude", 0.0);
                cfg.noise_magnitude_set = true;
            }
        }
    }

    if (root.contains("codecs")) {
        if (!root.at("codecs").is_array())
            throw ConfigError("config: 'codecs' must be an array");
        for (const auto& c : root.at("codecs")) {
            if (!c.is_string()) throw ConfigError("config: 'codecs' entries must be strings");
            try {
                cfg.codecs.push_back(codec_from_name(c.get<std::string>()));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
        }
    }

    if (root.contains("probe")) {
        const auto& p = root.at("probe");
        check_keys(p, "probe.",
                   {"pm", "q", "slope", "drift", "pm_steps", "pm_dim", "pm_trials",
                    "theorem_rounds", "drift_steps", "drift_rounds"});
        cfg.probe.run_pm = get_or<bool>(p, "probe.", "pm", true);
        cfg.probe.run_q = get_or<bool>(p, "probe.", "q", true);
        cfg.probe.run_slope = get_or<bool>(p, "probe.", "slope", true);
        cfg.probe.run_drift = get_or<bool>(p, "probe.", "drift", true);
        cfg.probe.pm_steps = get_or<int>(p, "probe.", "pm_steps", cfg.probe.pm_steps);
        cfg.probe.pm_dim = get_or<int>(p, "probe.", "pm_dim", cfg.probe.pm_dim);
        cfg.probe.pm_trials = get_or<int>(p, "probe.", "pm_trials", cfg.probe.pm_trials);
        cfg.probe.theorem_rounds =
            get_or<int>(p, "probe.", "theorem_rounds", cfg.probe.theorem_rounds);
        cfg.probe.drift_steps = get_or<long>(p, "probe.", "drift_steps", cfg.probe.drift_steps);
        cfg.probe.drift_rounds = get_or<int>(p, "probe.", "drift_rounds", cfg.probe.drift_rounds);
    }

    cfg.validate_and_finalize();
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

namespace {

struct PreparedRun {
    Dataset train;
    Dataset eval;
    Partition partition;
    Model model;
};

PreparedRun prepare(const RunConfig& cfg) {
    PreparedRun r;
    const Dataset all = cfg.build_dataset();
    auto [train, eval] = split_eval(all, cfg.dataset.eval_samples);
    r.train = std::move(train);
    r.eval = std::move(eval);
    r.partition = cfg.build_partition(r.train);
    r.model = cfg.make_model(r.train);
    return r;
}

std::filesystem::path metrics_path(const RunConfig& cfg, CodecId codec) {
    return std::filesystem::path(cfg.output) / (std::string(codec_name(codec)) + ".csv");
}

std::vector<RoundMetrics> run_one(const PreparedRun& prep, const RunConfig& cfg,
                                  CodecId codec) {
    FedConfig fc = cfg.fed;
    fc.codec = codec;
    if (codec == CodecId::MrnSigned) fc.mask_mode = MaskMode::Signed;
    if (codec == CodecId::MrnBinary) fc.mask_mode = MaskMode::Binary;
    return run_training(prep.model, fc, prep.train, prep.partition, prep.eval).metrics;
}

}  // namespace

std::filesystem::path run_train(const RunConfig& cfg) {
    const PreparedRun prep = prepare(cfg);
    std::filesystem::create_directories(cfg.output);
    const CodecId codec = cfg.codecs.front();
    const auto rows = run_one(prep, cfg, codec);
    const auto path = metrics_path(cfg, codec);
    std::ofstream os(path, std::ios::binary);
    write_metrics(os, rows);
    return path;
}

std::vector<std::filesystem::path> run_compare(const RunConfig& cfg) {
    const PreparedRun prep = prepare(cfg);
    std::filesystem::create_directories(cfg.output);

    std::vector<std::filesystem::path> written;
    std::ofstream summary_os;
    const auto summary_path = std::filesystem::path(cfg.output) / "summary.csv";

    struct SummaryRow {
        CodecId codec;
        double final_accuracy;
        long total_uplink;
    };
    std::vector<SummaryRow> summary;

    for (CodecId codec : cfg.codecs) {
        const auto rows = run_one(prep, cfg, codec);
        const auto path = metrics_path(cfg, codec);
        std::ofstream os(path, std::ios::binary);
        write_metrics(os, rows);
        written.push_back(path);

        const std::size_t tail = std::min<std::size_t>(5, rows.size());
        double acc = 0.0;
        long uplink = 0;
        for (std::size_t i = rows.size() - tail; i < rows.size(); ++i)
            acc += rows[i].eval_accuracy;
        for (const auto& r : rows) uplink += r.uplink_bytes;
        summary.push_back({codec, acc / static_cast<double>(tail), uplink});
    }

    summary_os.open(summary_path, std::ios::binary);
    summary_os << "codec,final_accuracy,total_uplink_bytes\n";
    for (const auto& row : summary) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", row.final_accuracy);
        summary_os << codec_name(row.codec) << ',' << buf << ',' << row.total_uplink << '\n';
    }
    summary_os.flush();
    written.push_back(summary_path);
    return written;
}

AnalysisReport run_probe(const RunConfig& cfg) {
    AnalysisReport report;
    const std::uint64_t seed = derive_seed(cfg.master_seed, {0x9b});

    if (cfg.probe.run_pm) {
        report.pm_factor_analytic = pm_factor(cfg.probe.pm_steps);
        const auto check = verify_pm_factor(cfg.probe.pm_dim, cfg.probe.pm_steps,
                                            NoiseSpec{NoiseDist::Uniform, 1e-2, seed},
                                            cfg.probe.pm_trials);
        report.pm_factor_empirical = check.empirical / check.q_base;
    }
    if (cfg.probe.run_q) {
        const NoiseSpec spec{NoiseDist::Uniform, 1e-2, derive_seed(seed, {1})};
        Prng g(derive_seed(seed, {2}));
        std::vector<ParamVector> samples;
        for (int i = 0; i < 8; ++i)
            samples.push_back(rng_uniform(g, 256, -1e-2, 1e-2));
        report.q_hat = estimate_q(samples, spec, cfg.fed.mask_mode, 500);
    }
    QuadTestbed tb;
    tb.seed = derive_seed(seed, {3});
    if (cfg.probe.run_slope) {
        const auto theorem = theorem_regime_probe(tb, 5, 5, cfg.probe.theorem_rounds, 1.5,
                                                  cfg.probe.theorem_rounds / 10);
        report.slope_hat = theorem.slope_mrn;
        report.max_update_to_noise = theorem.max_update_to_noise;
    }
    if (cfg.probe.run_drift) {
        const auto drift = gradient_drift_probe(tb, cfg.probe.drift_steps,
                                                cfg.probe.drift_rounds, 0.05, 1e-2);
        report.drift_sq = drift.drift_sq;
        report.drift_bound = drift.bound;
        report.drift_within_bound = drift.all_within;
    }
    return report;
}

std::filesystem::path write_probe_report(const RunConfig& cfg, const AnalysisReport& report) {
    std::filesystem::create_directories(cfg.output);
    const auto path = std::filesystem::path(cfg.output) / "analysis.json";
    std::ofstream os(path, std::ios::binary);
    os << report.to_json() << '\n';

    // Append the record to any existing metrics stream of this run.
    for (CodecId codec : cfg.codecs) {
        const auto mpath = metrics_path(cfg, codec);
        if (std::filesystem::exists(mpath)) {
            std::ofstream ms(mpath, std::ios::binary | std::ios::app);
            ms << "# analysis " << report.to_json() << '\n';
        }
    }
    return path;
}

}  // namespace mrn
