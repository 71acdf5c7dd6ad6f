// Inter-arrival distribution family for renewal packet channels.
//
// Every supported family except Uniform is a member of the generalized
// gamma family GG(a, d, p) with density
//
//     f(x) = p / (a^d Gamma(d/p)) * x^(d-1) * exp(-(x/a)^p),  x > 0,
//
// so Exponential, Gamma, Erlang, Chi-squared, Weibull and Rayleigh are
// thin constructors over one code path. A positive scale_factor s maps
// X -> sX, i.e. density (1/s) f(x/s); stretch/compress scalings are pure
// scale updates.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "covren/math.hpp"
#include "covren/rng.hpp"

namespace covren {

enum class Family {
  kExponential,
  kGamma,
  kWeibull,
  kGeneralizedGamma,
  kRayleigh,
  kErlang,
  kChiSquared,
  kUniform,
};

// Serialized names: "exponential", "gamma", "weibull", "generalized_gamma",
// "rayleigh", "erlang", "chi_squared", "uniform".
std::string family_name(Family family);
Family family_from_name(const std::string& name);

class RenewalSpec {
 public:
  // Validates parameter counts, positivity and finite positive mean;
  // throws std::invalid_argument otherwise.
  RenewalSpec(Family family, std::vector<double> params, double scale_factor = 1.0);

  static RenewalSpec exponential(double lambda, double scale_factor = 1.0) {
    return RenewalSpec(Family::kExponential, {lambda}, scale_factor);
  }
  static RenewalSpec gamma(double shape, double scale, double scale_factor = 1.0) {
    return RenewalSpec(Family::kGamma, {shape, scale}, scale_factor);
  }
  static RenewalSpec weibull(double shape, double scale, double scale_factor = 1.0) {
    return RenewalSpec(Family::kWeibull, {shape, scale}, scale_factor);
  }
  static RenewalSpec generalized_gamma(double a, double d, double p,
                                       double scale_factor = 1.0) {
    return RenewalSpec(Family::kGeneralizedGamma, {a, d, p}, scale_factor);
  }
  static RenewalSpec rayleigh(double sigma, double scale_factor = 1.0) {
    return RenewalSpec(Family::kRayleigh, {sigma}, scale_factor);
  }
  static RenewalSpec erlang(double shape, double lambda, double scale_factor = 1.0) {
    return RenewalSpec(Family::kErlang, {shape, lambda}, scale_factor);
  }
  static RenewalSpec chi_squared(double dof, double scale_factor = 1.0) {
    return RenewalSpec(Family::kChiSquared, {dof}, scale_factor);
  }
  static RenewalSpec uniform(double lo, double hi, double scale_factor = 1.0) {
    return RenewalSpec(Family::kUniform, {lo, hi}, scale_factor);
  }

  Family family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  double scale_factor() const { return scale_factor_; }

  // Canonical view used by all numeric code.
  bool is_uniform() const { return uniform_; }
  // Generalized gamma parameters with scale_factor already folded into a.
  double gg_a() const { return a_; }
  double gg_d() const { return d_; }
  double gg_p() const { return p_; }
  // Uniform support bounds with scale_factor folded in.
  double uniform_lo() const { return lo_; }
  double uniform_hi() const { return hi_; }

 private:
  Family family_;
  std::vector<double> params_;
  double scale_factor_;
  bool uniform_ = false;
  double a_ = 0.0, d_ = 0.0, p_ = 0.0;
  double lo_ = 0.0, hi_ = 0.0;
};

// Numeric verdicts for the conditions the scaled family p1(x, rho) =
// (1 - rho) p0((1 - rho) x) must satisfy. Derivative existence and
// domination are checked on a finite (x, rho) grid with central
// differences (h = 1e-4 in rho); the support condition is symbolic per
// family. Uniform domination over all rho is not machine-checkable on a
// grid, which `note` records.
struct RegularityReport {
  bool smoothness = false;
  bool dominated = false;
  bool vanishing_integrals = false;
  bool support_ok = false;

  double max_abs_dlog1 = 0.0;  // largest |d log p1 / d rho| seen on the grid
  double max_abs_dlog2 = 0.0;
  double max_abs_dlog3 = 0.0;
  double max_int_abs_d1 = 0.0;  // sup over rho of integral |d p1 / d rho| dx
  double max_int_abs_d2 = 0.0;
  double max_int_weighted_d3 = 0.0;  // sup over rho of integral p0 |d^3 log p1| dx
  double vanishing_first = 0.0;      // integral of d p1 / d rho at rho = 0
  double vanishing_second = 0.0;
  std::string note;

  bool all_met() const {
    return smoothness && dominated && vanishing_integrals && support_ok;
  }
};

// Thrown when an operation requires the regularity conditions and the
// spec does not satisfy them.
class RegularityError : public std::runtime_error {
 public:
  RegularityError(const std::string& what, RegularityReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const RegularityReport& report() const { return report_; }

 private:
  RegularityReport report_;
};

// --- moments and pointwise evaluations -------------------------------------

double mean_interarrival(const RenewalSpec& spec);
double rate(const RenewalSpec& spec);      // 1 / mean
double variance(const RenewalSpec& spec);  // of a single inter-arrival

double density(const RenewalSpec& spec, double x);
double log_density(const RenewalSpec& spec, double x);  // -inf outside support
double log_density_dx(const RenewalSpec& spec, double x);
double cdf(const RenewalSpec& spec, double x);
double quantile(const RenewalSpec& spec, double prob);

// True when the two specs describe the same distribution (canonical
// parameters equal up to tiny rounding), e.g. Erlang(1, l) == Exponential(l).
bool distribution_equal(const RenewalSpec& a, const RenewalSpec& b);

// --- scalings ---------------------------------------------------------------

// Lengthens inter-arrivals: p1(x) = (1-rho) p0((1-rho) x); rate -> rate*(1-rho).
RenewalSpec scale_stretch(const RenewalSpec& spec, double rho);
// Shortens inter-arrivals: p1(x) = p0(x/(1-rho))/(1-rho); rate -> rate/(1-rho).
RenewalSpec scale_compress(const RenewalSpec& spec, double rho);

// --- sampling ---------------------------------------------------------------

// n i.i.d. draws, strictly positive, deterministic per (spec, n, seed).
Eigen::ArrayXd sample_interarrivals(const RenewalSpec& spec, std::int64_t n,
                                    std::uint64_t seed);

// Streaming variant drawing from an existing stream (same dispatch rule, so
// a full vector and a stream of single draws from the same seed agree).
template <class Engine>
double sample_one(const RenewalSpec& spec, BasicRng<Engine>& rng) {
  if (spec.is_uniform()) {
    const double u = rng.uniform();
    const double x = spec.uniform_lo() + (spec.uniform_hi() - spec.uniform_lo()) * u;
    return x > 0.0 ? x : std::numeric_limits<double>::min();
  }
  const double a = spec.gg_a(), d = spec.gg_d(), p = spec.gg_p();
  if (p == 1.0) return rng.gamma(d, a);
  if (d == p) return rng.weibull(p, a);
  return a * std::pow(rng.gamma(d / p, 1.0), 1.0 / p);
}

// --- divergence and curvature ------------------------------------------------

// Integral of p0 log(p0/p1). Closed form for an exponential pair, adaptive
// quadrature otherwise. Returns +inf when spec1's support does not cover
// spec0's support.
double kl_divergence(const RenewalSpec& spec0, const RenewalSpec& spec1);

// Curvature constant c of the scaling family at rho = 0:
//   c = -1 + integral p0(x) x^2 (d log p0(x)/dx)^2 dx.
// Closed form (the shape parameter) for the exponential/gamma class,
// quadrature for the other families. Scale-invariant. Throws
// RegularityError for specs that fail the regularity conditions.
double fisher_constant(const RenewalSpec& spec);
// Same integral evaluated by quadrature for every family (verification route).
double fisher_constant_quadrature(const RenewalSpec& spec);

// Small-rho expansion of the scaling-family KL: c rho^2 / 2. rho = 0 gives 0.
double kl_small_rho(const RenewalSpec& spec, double rho);

RegularityReport check_regularity(const RenewalSpec& spec);

}  // namespace covren
