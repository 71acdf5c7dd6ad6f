// The watcher's side: threshold and likelihood-ratio detectors over
// inter-arrival sequences, closed-form error bounds and Monte Carlo error
// estimation.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "covren/renewal.hpp"

namespace covren {

struct DetectorConfig {
  double alpha = 0.05;     // target false-alarm bound
  double beta = 0.05;      // target missed-detection bound
  std::int64_t n_obs = 0;  // inter-arrival observations available
  double lambda0 = 1.0;    // null-hypothesis rate
  double sigma2 = 1.0;     // null inter-arrival variance
};

// Threshold offset U = sqrt(n_obs / (lambda0 * alpha)).
double threshold_offset(const DetectorConfig& config);

enum class Decision : std::uint8_t { kH0, kH1 };

struct TestOutcome {
  Decision decision = Decision::kH0;
  double statistic = 0.0;
  double threshold = 0.0;  // decision is H1 iff statistic > threshold
};

// Direction of the alternative the scheme induces on inter-arrivals.
enum class ScalingVariant : std::uint8_t { kStretch, kCompress };

// Sum test: S = sum of inter-arrivals, compared against n/lambda + U.
// Against a stretched alternative the alarm fires on S > n/lambda + U;
// against a compressed one the rule mirrors to S < n/lambda - U (encoded
// with a negated statistic so `decision == H1 iff statistic > threshold`
// holds for both variants).
TestOutcome sum_threshold_test(const Eigen::ArrayXd& interarrivals,
                               const DetectorConfig& config,
                               ScalingVariant variant = ScalingVariant::kStretch);

struct ChebyshevBounds {
  double p_fa_bound = 0.0;
  double p_md_bound = 0.0;
};

// Closed-form error bounds of the sum test at threshold offset
// U = sqrt(n/(lambda alpha)): the false-alarm bound collapses to alpha
// exactly, and the missed-detection bound is sigma^2 lambda^2 / (n rho^2),
// multiplied by (1-rho)^2 for the compressed variant.
ChebyshevBounds chebyshev_bounds(const DetectorConfig& config, double rho,
                                 ScalingVariant variant = ScalingVariant::kStretch);

// Information-theoretic floor on any detector's error sum for n_obs i.i.d.
// observations: max(0, 1 - sqrt(n_obs * D(p0 || p1) / 2)). Infinite
// divergence yields 0 (no covertness guarantee).
double kl_error_lower_bound(const RenewalSpec& spec0, const RenewalSpec& spec1,
                            std::int64_t n_obs);

// Log-likelihood-ratio test at threshold 0 (the error-sum minimizer under
// equal priors). Ties decide H0. Observations with zero density under both
// hypotheses raise std::domain_error.
TestOutcome likelihood_ratio_test(const Eigen::ArrayXd& interarrivals,
                                  const RenewalSpec& spec0,
                                  const RenewalSpec& spec1);

// Generalized LRT over a grid of candidate scaling factors; instrumentation
// for a watcher who does not know rho (not part of the converse analyses).
TestOutcome glrt_grid_test(const Eigen::ArrayXd& interarrivals,
                           const RenewalSpec& spec0,
                           const std::vector<double>& rho_grid,
                           ScalingVariant variant = ScalingVariant::kStretch);

struct ErrorEstimate {
  double p_fa = 0.0;
  double p_md = 0.0;
  std::int64_t trials = 0;
  double ci_halfwidth = 0.0;  // 95%, normal approximation, max over the two
};

using SampleGenerator = std::function<Eigen::ArrayXd(std::uint64_t seed)>;
using Detector = std::function<TestOutcome(const Eigen::ArrayXd&)>;

// Monte Carlo estimate of (P_FA, P_MD): `trials` observations are generated
// under each hypothesis with per-trial derived seeds and pushed through the
// detector. Deterministic per seed; trials run in parallel.
ErrorEstimate estimate_errors(const Detector& test, const SampleGenerator& gen0,
                              const SampleGenerator& gen1, std::int64_t trials,
                              std::uint64_t seed);

}  // namespace covren
