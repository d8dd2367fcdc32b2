#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mrn/federation.hpp"

namespace mrn {

// Empirical masking-error ratio: max over samples of
// (mean over trials of ||S(x, G(s)) - x||) / ||x||. The noise realization is
// fixed by spec.seed; trials redraw only the Bernoulli masks.
double estimate_q(const std::vector<ParamVector>& update_samples, const NoiseSpec& spec,
                  MaskMode mode, int trials);

// Progressive-masking reduction factor sqrt((1/S^3) * sum_{tau=1..S} tau^2).
// Strictly decreasing in S, bounded below by sqrt(1/3).
double pm_factor(long total_steps);

struct PmFactorCheck {
    double empirical = 0.0;  // sqrt of mean squared gated masking error ratio
    double analytic = 0.0;   // pm_factor(S) * q_base
    double q_base = 0.0;     // RMS masking error ratio without the schedule
};

// Monte-Carlo check of the reduction factor: the per-step gated error is the
// gate-expected deviation (tau/S) * (S(x) - x), averaged over steps and mask
// redraws, against pm_factor(S) * q_base.
PmFactorCheck verify_pm_factor(int dim, int total_steps, const NoiseSpec& spec, int trials);

// Least-squares slope of log(curve[t]) against log(t+1) for t >= burn_in;
// non-positive curve values are skipped.
double convergence_slope(std::span<const double> curve, int burn_in);

// ---------------------------------------------------------------------------
// Probe runners on the strongly convex quadratic testbed.
// ---------------------------------------------------------------------------

struct QuadTestbed {
    int dim = 50;
    int n_clients = 10;
    int per_client = 8;
    double center_scale = 0.3;   // per-coordinate magnitude of client centers
    double sample_spread = 0.0;  // within-client spread (0 = deterministic grads)
    std::uint64_t seed = 5;

    Dataset build() const;           // rows are the target points
    double optimum_value(const Dataset& data) const;  // F* = F(mean row)
};

struct DriftProbeResult {
    std::vector<double> drift_sq;  // per local step: max_k ||wbar - x_k||^2
    std::vector<double> bound;     // matching 4 (1+q^2) eta^2 (S-1)^2 G^2
    double g_hat = 0.0;            // max observed stochastic gradient norm
    double q_hat = 0.0;
    bool all_within = true;
};

// Lock-step all-clients run (K = N) with binary masks on the quadratic
// testbed, measuring the client-drift bound per local step.
DriftProbeResult gradient_drift_probe(const QuadTestbed& tb, long local_steps, int rounds,
                                      double lr, double noise_magnitude);

struct TheoremProbeResult {
    std::vector<double> gap_mrn;  // per round F(w) - F*
    std::vector<double> gap_avg;
    double slope_mrn = 0.0;
    double slope_avg = 0.0;
    double final_gap_mrn = 0.0;  // mean of trailing rounds
    double final_gap_avg = 0.0;
    double gap_ratio = 0.0;
    double max_update_to_noise = 0.0;  // clip stays inactive iff <= 1
};

// The strongly convex rate regime: signed masks, two-point noise with
// per-round magnitude 2 * eta_round_start * S * G (G estimated from a
// dense-update oracle run under identical seeds, inflated by `g_margin`),
// learning rate 2 / (mu (gamma + t)) with gamma = max(8 L / mu, S) - 1.
TheoremProbeResult theorem_regime_probe(const QuadTestbed& tb, int clients_per_round,
                                        long local_steps, int rounds, double g_margin,
                                        int slope_burn_in);

struct AnalysisReport {
    std::optional<double> q_hat;
    std::optional<double> pm_factor_analytic;
    std::optional<double> pm_factor_empirical;
    std::optional<double> slope_hat;
    std::vector<double> drift_sq;
    std::vector<double> drift_bound;
    std::optional<bool> drift_within_bound;
    std::optional<double> max_update_to_noise;

    std::string to_json() const;
};

}  // namespace mrn
