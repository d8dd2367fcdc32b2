#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mrn/config.hpp"

using namespace mrn;

namespace {

std::string tiny_config(const std::string& extra_fed = "", const std::string& codecs =
                                                              R"(["none","mrn_binary"])") {
    return R"({
      "seed": 5,
      "output": "out_test",
      "dataset": {"synthetic": {"n_samples": 220, "n_features": 6, "n_classes": 3,
                                "cluster_spread": 0.3, "seed": 2}, "eval_samples": 60},
      "partition": {"kind": "iid"},
      "model": {"kind": "logistic_regression"},
      "fed": {"n_clients": 8, "clients_per_round": 4, "rounds": 3,
              "local_epochs": 1, "batch_size": 16, "lr": 0.2)" +
           extra_fed + R"(},
      "codecs": )" + codecs + "}";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing applies mode-dependent noise defaults") {
    const RunConfig cfg = parse_config_text(tiny_config());
    CHECK(cfg.fed.noise.magnitude == 1e-2);  // binary default

    const RunConfig s = parse_config_text(tiny_config(R"(, "mask_mode": "signed")"));
    CHECK(s.fed.noise.magnitude == 5e-3);

    const RunConfig exp = parse_config_text(
        tiny_config(R"(, "noise": {"dist": "two_point", "magnitude": 0.02})"));
    CHECK(exp.fed.noise.magnitude == 0.02);
    CHECK(exp.fed.noise.dist == NoiseDist::TwoPoint);
}

TEST_CASE("config validation names the offending key") {
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"seeeed": 1})"),
                         doctest::Contains("seeeed"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(tiny_config("", "[]")),
                         doctest::Contains("codec"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(tiny_config(R"(, "clients_per_round": 9)")),
                         doctest::Contains("clients_per_round"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(tiny_config("", R"(["warp_drive"])")), ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({"fed": {"lr": "fast"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("not json at all"), ConfigError);
    CHECK_THROWS_AS(
        parse_config_text(R"({"dataset": {"csv": {"path": "/no/such/file.csv"}}})"),
        ConfigError);
}

TEST_CASE("metrics streams round-trip byte-for-byte") {
    std::vector<RoundMetrics> rows;
    for (int r = 1; r <= 4; ++r) {
        RoundMetrics m;
        m.round = r;
        m.codec = CodecId::MrnBinary;
        m.train_loss = 1.0 / r + 1e-17;
        m.eval_accuracy = 0.25 * r;
        m.uplink_bytes = 100 + r;
        m.elapsed_ms = 0;
        rows.push_back(m);
    }
    std::ostringstream os;
    write_metrics(os, rows);
    const std::string text = os.str();

    std::istringstream is(text);
    const auto parsed = parse_metrics(is);
    REQUIRE(parsed.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(parsed[i].round == rows[i].round);
        CHECK(parsed[i].train_loss == rows[i].train_loss);
        CHECK(parsed[i].eval_accuracy == rows[i].eval_accuracy);
        CHECK(parsed[i].uplink_bytes == rows[i].uplink_bytes);
    }

    std::ostringstream os2;
    write_metrics(os2, parsed);
    CHECK(os2.str() == text);

    // '#' records are ignored by the parser
    std::istringstream with_comment(text + "# analysis {\"q_hat\":1}\n");
    CHECK(parse_metrics(with_comment).size() == rows.size());

    std::istringstream garbage("round,nope\n");
    CHECK_THROWS_AS(parse_metrics(garbage), std::runtime_error);
}

TEST_CASE("compare runs every codec once and reproduces files byte-for-byte") {
    RunConfig cfg = parse_config_text(tiny_config());
    cfg.output = "out_test_compare";
    std::filesystem::remove_all(cfg.output);

    const auto paths = run_compare(cfg);
    REQUIRE(paths.size() == 3);  // two codec streams plus the summary
    std::vector<std::string> first;
    for (const auto& p : paths) first.push_back(slurp(p));

    CHECK(first.back().find("none,") != std::string::npos);
    CHECK(first.back().find("mrn_binary,") != std::string::npos);

    // rerun: byte-identical, also with a different thread count
    cfg.fed.threads = 3;
    const auto paths2 = run_compare(cfg);
    for (std::size_t i = 0; i < paths.size(); ++i) CHECK(slurp(paths2[i]) == first[i]);

    // metrics parse back and rounds increase per stream
    std::ifstream in(paths[0]);
    const auto parsed = parse_metrics(in);
    CHECK(parsed.size() == 3);
    std::filesystem::remove_all(cfg.output);
}

TEST_CASE("probe report lands in the sidecar and metrics comment record") {
    RunConfig cfg = parse_config_text(tiny_config());
    cfg.output = "out_test_probe";
    cfg.probe.run_slope = false;  // keep the smoke test fast
    cfg.probe.run_drift = true;
    cfg.probe.drift_rounds = 3;
    cfg.probe.pm_trials = 2000;
    std::filesystem::remove_all(cfg.output);

    const auto path = run_train(cfg);
    const auto report = run_probe(cfg);
    const auto sidecar = write_probe_report(cfg, report);
    CHECK(std::filesystem::exists(sidecar));

    const std::string metrics_text = slurp(path);
    CHECK(metrics_text.find("# analysis {") != std::string::npos);

    std::ifstream in(path);
    CHECK(parse_metrics(in).size() == 3);  // comment record does not break parsing

    CHECK(report.pm_factor_analytic.has_value());
    CHECK(report.drift_within_bound.has_value());
    CHECK(*report.drift_within_bound);
    std::filesystem::remove_all(cfg.output);
}
