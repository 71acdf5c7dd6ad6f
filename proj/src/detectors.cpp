#include "covren/detectors.hpp"

#include <atomic>
#include <cmath>

namespace covren {

double threshold_offset(const DetectorConfig& config) {
  if (config.n_obs < 1 || !(config.alpha > 0.0 && config.alpha < 1.0) ||
      !(config.lambda0 > 0.0)) {
    throw std::invalid_argument("DetectorConfig: need n_obs >= 1, alpha in (0,1), lambda0 > 0");
  }
  return std::sqrt(static_cast<double>(config.n_obs) /
                   (config.lambda0 * config.alpha));
}

TestOutcome sum_threshold_test(const Eigen::ArrayXd& interarrivals,
                               const DetectorConfig& config,
                               ScalingVariant variant) {
  if (interarrivals.size() != config.n_obs) {
    throw std::invalid_argument("sum_threshold_test: observation count differs from config.n_obs");
  }
  const double u = threshold_offset(config);
  const double expected = static_cast<double>(config.n_obs) / config.lambda0;
  const double s = interarrivals.sum();
  TestOutcome out;
  if (variant == ScalingVariant::kStretch) {
    out.statistic = s;
    out.threshold = expected + u;
  } else {
    out.statistic = -s;
    out.threshold = -(expected - u);
  }
  out.decision = out.statistic > out.threshold ? Decision::kH1 : Decision::kH0;
  return out;
}

ChebyshevBounds chebyshev_bounds(const DetectorConfig& config, double rho,
                                 ScalingVariant variant) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw std::domain_error("chebyshev_bounds: rho must lie in (0, 1)");
  }
  threshold_offset(config);  // validates the config
  ChebyshevBounds b;
  b.p_fa_bound = config.alpha;  // n/(lambda U^2) at the canonical offset
  b.p_md_bound = config.sigma2 * config.lambda0 * config.lambda0 /
                 (static_cast<double>(config.n_obs) * rho * rho);
  if (variant == ScalingVariant::kCompress) {
    b.p_md_bound *= (1.0 - rho) * (1.0 - rho);
  }
  return b;
}

double kl_error_lower_bound(const RenewalSpec& spec0, const RenewalSpec& spec1,
                            std::int64_t n_obs) {
  if (n_obs < 1) throw std::invalid_argument("kl_error_lower_bound: n_obs >= 1");
  const double d = kl_divergence(spec0, spec1);
  if (std::isinf(d)) return 0.0;
  return std::max(0.0, 1.0 - std::sqrt(0.5 * static_cast<double>(n_obs) * d));
}

namespace {

double log_likelihood_ratio(const Eigen::ArrayXd& x, const RenewalSpec& spec0,
                            const RenewalSpec& spec1) {
  double sum = 0.0;
  bool pos_inf = false, neg_inf = false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double l0 = log_density(spec0, x[i]);
    const double l1 = log_density(spec1, x[i]);
    if (l0 == -kInf && l1 == -kInf) {
      throw std::domain_error(
          "likelihood_ratio_test: observation has zero density under both hypotheses");
    }
    if (l1 == -kInf) {
      neg_inf = true;
    } else if (l0 == -kInf) {
      pos_inf = true;
    } else {
      sum += l1 - l0;
    }
  }
  if (pos_inf && neg_inf) {
    throw std::domain_error(
        "likelihood_ratio_test: contradictory support violations in one sample");
  }
  if (pos_inf) return kInf;
  if (neg_inf) return -kInf;
  return sum;
}

}  // namespace

TestOutcome likelihood_ratio_test(const Eigen::ArrayXd& interarrivals,
                                  const RenewalSpec& spec0,
                                  const RenewalSpec& spec1) {
  TestOutcome out;
  out.statistic = log_likelihood_ratio(interarrivals, spec0, spec1);
  out.threshold = 0.0;
  out.decision = out.statistic > 0.0 ? Decision::kH1 : Decision::kH0;
  return out;
}

TestOutcome glrt_grid_test(const Eigen::ArrayXd& interarrivals,
                           const RenewalSpec& spec0,
                           const std::vector<double>& rho_grid,
                           ScalingVariant variant) {
  if (rho_grid.empty()) {
    throw std::invalid_argument("glrt_grid_test: empty rho grid");
  }
  TestOutcome out;
  out.statistic = -kInf;
  out.threshold = 0.0;
  for (double rho : rho_grid) {
    const RenewalSpec alt = variant == ScalingVariant::kStretch
                                ? scale_stretch(spec0, rho)
                                : scale_compress(spec0, rho);
    out.statistic =
        std::max(out.statistic, log_likelihood_ratio(interarrivals, spec0, alt));
  }
  out.decision = out.statistic > 0.0 ? Decision::kH1 : Decision::kH0;
  return out;
}

ErrorEstimate estimate_errors(const Detector& test, const SampleGenerator& gen0,
                              const SampleGenerator& gen1, std::int64_t trials,
                              std::uint64_t seed) {
  if (trials < 100) {
    throw std::invalid_argument("estimate_errors: need at least 100 trials");
  }
  std::atomic<std::int64_t> false_alarms{0};
  std::atomic<std::int64_t> misses{0};
  parallel_for(trials, [&](std::int64_t begin, std::int64_t end) {
    std::int64_t local_fa = 0, local_md = 0;
    for (std::int64_t t = begin; t < end; ++t) {
      const Eigen::ArrayXd null_obs = gen0(derive_seed(seed, 2 * t));
      if (test(null_obs).decision == Decision::kH1) ++local_fa;
      const Eigen::ArrayXd alt_obs = gen1(derive_seed(seed, 2 * t + 1));
      if (test(alt_obs).decision == Decision::kH0) ++local_md;
    }
    false_alarms += local_fa;
    misses += local_md;
  });
  ErrorEstimate e;
  e.trials = trials;
  const double n = static_cast<double>(trials);
  e.p_fa = static_cast<double>(false_alarms.load()) / n;
  e.p_md = static_cast<double>(misses.load()) / n;
  const double se_fa = std::sqrt(e.p_fa * (1.0 - e.p_fa) / n);
  const double se_md = std::sqrt(e.p_md * (1.0 - e.p_md) / n);
  e.ci_halfwidth = 1.96 * std::max(se_fa, se_md);
  return e;
}

}  // namespace covren
