#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mrn/analysis.hpp"

using namespace mrn;

TEST_CASE("masking-error ratio is zero on realizable masked patterns") {
    const NoiseSpec spec{NoiseDist::Uniform, 1e-2, 44};
    const Eigen::Index d = 64;
    const ParamVector noise = generate_noise(spec, spec.seed, d);
    ParamVector pattern(d);
    Prng g(1);
    for (Eigen::Index i = 0; i < d; ++i)
        pattern[i] = g.next_unit() < 0.5 ? 0.0 : noise[i];  // each coordinate 0 or n_i
    CHECK(estimate_q({pattern}, spec, MaskMode::Binary, 50) == 0.0);
}

TEST_CASE("masking-error ratio is exactly one at the half-noise point") {
    const NoiseSpec spec{NoiseDist::Uniform, 1e-2, 45};
    const ParamVector noise = generate_noise(spec, spec.seed, 256);
    const ParamVector x = 0.5 * noise;
    // every coordinate errs by |n_i|/2 regardless of the mask draw
    CHECK(estimate_q({x}, spec, MaskMode::Binary, 100) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("masking error shrinks as the noise magnitude approaches the update scale") {
    Prng g(2);
    std::vector<ParamVector> samples{rng_uniform(g, 256, -0.01, 0.01)};
    double prev = 1e300;
    for (double mag : {0.08, 0.04, 0.02, 0.01}) {
        const NoiseSpec spec{NoiseDist::Uniform, mag, 46};
        const double q = estimate_q(samples, spec, MaskMode::Binary, 400);
        CHECK(q < prev);
        prev = q;
    }
}

TEST_CASE("progressive-masking factor has its closed form and limit") {
    CHECK(pm_factor(1) == 1.0);
    CHECK(std::abs(pm_factor(10) - std::sqrt(0.385)) < 1e-12);
    CHECK(std::abs(pm_factor(10000) - std::sqrt(1.0 / 3.0)) < 1e-4);

    double prev = 2.0;
    for (long s = 1; s <= 50; ++s) {
        const double f = pm_factor(s);
        CHECK(f < prev);
        CHECK(f > std::sqrt(1.0 / 3.0));
        prev = f;
    }
    CHECK_THROWS_AS(pm_factor(0), std::invalid_argument);
}

TEST_CASE("simulated gated masking error matches the analytic reduction factor") {
    const NoiseSpec spec{NoiseDist::Uniform, 1e-2, 47};
    const auto check = verify_pm_factor(1000, 10, spec, 10000);
    CHECK(std::abs(check.empirical - check.analytic) / check.analytic < 0.05);
    // at x = 0.3 n the per-coordinate RMS error ratio is sqrt(0.3*0.7)/0.3
    CHECK(check.q_base == doctest::Approx(std::sqrt(0.21) / 0.3).epsilon(0.02));
    // the empirical side is a genuine simulation, not an algebraic identity
    CHECK(check.empirical != check.analytic);
}

TEST_CASE("convergence slope recovers synthetic power laws") {
    std::vector<double> inv_t, inv_sqrt;
    for (int t = 1; t <= 2000; ++t) {
        inv_t.push_back(3.7 / t);
        inv_sqrt.push_back(0.9 / std::sqrt(double(t)));
    }
    CHECK(std::abs(convergence_slope(inv_t, 10) - (-1.0)) < 1e-6);
    CHECK(std::abs(convergence_slope(inv_sqrt, 10) - (-0.5)) < 1e-6);

    // burn-in discards the head of the curve
    std::vector<double> junk_then_power(inv_t);
    for (int t = 0; t < 50; ++t) junk_then_power[static_cast<std::size_t>(t)] = 1e9;
    CHECK(std::abs(convergence_slope(junk_then_power, 50) - (-1.0)) < 1e-6);

    CHECK_THROWS_AS(convergence_slope(std::vector<double>{1.0}, 0), std::invalid_argument);
}

TEST_CASE("drift vanishes in the degenerate single-step and zero-lr cases") {
    const QuadTestbed tb{10, 4, 6, 0.3, 0.0, 51};

    const auto one_step = gradient_drift_probe(tb, 1, 5, 0.05, 1e-2);
    for (double v : one_step.drift_sq) CHECK(v == 0.0);
    for (double b : one_step.bound) CHECK(b == 0.0);
    CHECK(one_step.all_within);

    const auto zero_lr = gradient_drift_probe(tb, 4, 5, 0.0, 1e-2);
    for (double v : zero_lr.drift_sq) CHECK(v == 0.0);
    CHECK(zero_lr.all_within);
}

TEST_CASE("measured drift respects the lemma bound on the convex testbed") {
    const QuadTestbed tb{20, 6, 8, 0.3, 0.1, 52};
    const auto probe = gradient_drift_probe(tb, 5, 20, 0.05, 1e-2);
    CHECK(probe.g_hat > 0.0);
    CHECK(probe.q_hat > 0.0);
    REQUIRE(!probe.drift_sq.empty());
    for (std::size_t i = 0; i < probe.drift_sq.size(); ++i)
        CHECK(probe.drift_sq[i] <= probe.bound[i]);
    CHECK(probe.all_within);
}

TEST_CASE("theorem-style two-point noise keeps clipping inactive over a full run") {
    // Logistic regression has the a-priori stochastic-gradient bound
    // G = sqrt(2 (max ||x||^2 + 1)), valid at every parameter point. With
    // per-round noise magnitude 2 * eta_round_start * S * G and a
    // non-increasing learning rate, |u_i| <= sum eta_t |g_i| < alpha_r holds
    // pathwise, so no coordinate ever leaves the clip interval.
    const Dataset data = make_synthetic({400, 8, 3, 0.5, 71, 0});
    const Model model{ModelKind::LogisticRegression, 8, 3, 0};
    const Partition part = partition_iid(data, 8, 7);

    double max_x_sq = 0.0;
    for (Eigen::Index i = 0; i < data.n_samples(); ++i)
        max_x_sq = std::max(max_x_sq, data.features.row(i).squaredNorm());
    const double g_bound = std::sqrt(2.0 * (max_x_sq + 1.0));

    FedConfig cfg;
    cfg.n_clients = 8;
    cfg.clients_per_round = 4;
    cfg.rounds = 40;
    cfg.local_steps = 5;
    cfg.batch_size = 16;
    cfg.lr = LrSchedule{2.0, 7.0, true};  // 2 / (7 + t), non-increasing
    cfg.codec = CodecId::MrnSigned;
    cfg.mask_mode = MaskMode::Signed;
    cfg.noise = NoiseSpec{NoiseDist::TwoPoint, 1.0, 0};
    cfg.run_seed = 72;
    cfg.noise_magnitude_schedule.resize(40);
    for (int r = 1; r <= 40; ++r) {
        const long t0 = static_cast<long>(r - 1) * 5 + 1;
        cfg.noise_magnitude_schedule[static_cast<std::size_t>(r - 1)] =
            2.0 * cfg.lr.at(t0) * 5.0 * g_bound;
    }

    const auto res = run_training(model, cfg, data, part, data);
    CHECK(res.max_update_to_noise <= 1.0);
    CHECK(res.max_grad_inf <= g_bound);
}

TEST_CASE("analysis report serializes the fields it carries") {
    AnalysisReport r;
    r.q_hat = 0.5;
    r.slope_hat = -1.0;
    r.drift_within_bound = true;
    r.drift_sq = {0.0, 1.5};
    const std::string js = r.to_json();
    CHECK(js.find("\"q_hat\":0.5") != std::string::npos);
    CHECK(js.find("\"slope_hat\":-1") != std::string::npos);
    CHECK(js.find("\"drift_within_bound\":true") != std::string::npos);
    CHECK(js.find("\"drift_sq\":[0,1.5]") != std::string::npos);
    CHECK(js.find("pm_factor") == std::string::npos);
}
