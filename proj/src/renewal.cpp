#include "covren/renewal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace covren {

namespace {

bool close_rel(double u, double v) {
  return std::abs(u - v) <= 1e-12 * std::max({1.0, std::abs(u), std::abs(v)});
}

void require_finite_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw std::invalid_argument(std::string("RenewalSpec: ") + what +
                                " must be finite and positive");
  }
}

}  // namespace

std::string family_name(Family family) {
  switch (family) {
    case Family::kExponential: return "exponential";
    case Family::kGamma: return "gamma";
    case Family::kWeibull: return "weibull";
    case Family::kGeneralizedGamma: return "generalized_gamma";
    case Family::kRayleigh: return "rayleigh";
    case Family::kErlang: return "erlang";
    case Family::kChiSquared: return "chi_squared";
    case Family::kUniform: return "uniform";
  }
  throw std::logic_error("family_name: unknown family");
}

Family family_from_name(const std::string& name) {
  static const std::array<Family, 8> all = {
      Family::kExponential, Family::kGamma,     Family::kWeibull,
      Family::kGeneralizedGamma, Family::kRayleigh, Family::kErlang,
      Family::kChiSquared,  Family::kUniform};
  for (Family f : all) {
    if (family_name(f) == name) return f;
  }
  throw std::invalid_argument("unknown distribution family: " + name);
}

RenewalSpec::RenewalSpec(Family family, std::vector<double> params,
                         double scale_factor)
    : family_(family), params_(std::move(params)), scale_factor_(scale_factor) {
  require_finite_positive(scale_factor_, "scale_factor");
  auto expect = [&](std::size_t n) {
    if (params_.size() != n) {
      throw std::invalid_argument("RenewalSpec: " + family_name(family_) +
                                  " takes " + std::to_string(n) + " parameter(s)");
    }
    for (double v : params_) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("RenewalSpec: parameters must be finite");
      }
    }
  };
  switch (family_) {
    case Family::kExponential:
      expect(1);
      require_finite_positive(params_[0], "rate");
      a_ = 1.0 / params_[0];
      d_ = 1.0;
      p_ = 1.0;
      break;
    case Family::kGamma:
      expect(2);
      require_finite_positive(params_[0], "shape");
      require_finite_positive(params_[1], "scale");
      a_ = params_[1];
      d_ = params_[0];
      p_ = 1.0;
      break;
    case Family::kWeibull:
      expect(2);
      require_finite_positive(params_[0], "shape");
      require_finite_positive(params_[1], "scale");
      a_ = params_[1];
      d_ = params_[0];
      p_ = params_[0];
      break;
    case Family::kGeneralizedGamma:
      expect(3);
      require_finite_positive(params_[0], "a");
      require_finite_positive(params_[1], "d");
      require_finite_positive(params_[2], "p");
      a_ = params_[0];
      d_ = params_[1];
      p_ = params_[2];
      break;
    case Family::kRayleigh:
      expect(1);
      require_finite_positive(params_[0], "sigma");
      a_ = params_[0] * std::numbers::sqrt2;
      d_ = 2.0;
      p_ = 2.0;
      break;
    case Family::kErlang: {
      expect(2);
      require_finite_positive(params_[0], "shape");
      require_finite_positive(params_[1], "rate");
      const double k = params_[0];
      if (k != std::floor(k)) {
        throw std::invalid_argument("RenewalSpec: erlang shape must be an integer");
      }
      a_ = 1.0 / params_[1];
      d_ = k;
      p_ = 1.0;
      break;
    }
    case Family::kChiSquared:
      expect(1);
      require_finite_positive(params_[0], "degrees of freedom");
      a_ = 2.0;
      d_ = 0.5 * params_[0];
      p_ = 1.0;
      break;
    case Family::kUniform:
      expect(2);
      if (!(params_[0] >= 0.0) || !(params_[1] > params_[0])) {
        throw std::invalid_argument(
            "RenewalSpec: uniform needs 0 <= lo < hi");
      }
      uniform_ = true;
      lo_ = params_[0] * scale_factor_;
      hi_ = params_[1] * scale_factor_;
      break;
  }
  if (!uniform_) {
    a_ *= scale_factor_;
  }
}

double mean_interarrival(const RenewalSpec& spec) {
  if (spec.is_uniform()) return 0.5 * (spec.uniform_lo() + spec.uniform_hi());
  const double d = spec.gg_d(), p = spec.gg_p();
  return spec.gg_a() * std::exp(std::lgamma((d + 1.0) / p) - std::lgamma(d / p));
}

double rate(const RenewalSpec& spec) { return 1.0 / mean_interarrival(spec); }

double variance(const RenewalSpec& spec) {
  if (spec.is_uniform()) {
    const double w = spec.uniform_hi() - spec.uniform_lo();
    return w * w / 12.0;
  }
  const double d = spec.gg_d(), p = spec.gg_p(), a = spec.gg_a();
  const double lg0 = std::lgamma(d / p);
  const double m = a * std::exp(std::lgamma((d + 1.0) / p) - lg0);
  const double m2 = a * a * std::exp(std::lgamma((d + 2.0) / p) - lg0);
  return m2 - m * m;
}

double log_density(const RenewalSpec& spec, double x) {
  if (spec.is_uniform()) {
    if (x < spec.uniform_lo() || x > spec.uniform_hi()) return -kInf;
    return -std::log(spec.uniform_hi() - spec.uniform_lo());
  }
  if (!(x > 0.0)) return -kInf;
  const double a = spec.gg_a(), d = spec.gg_d(), p = spec.gg_p();
  return std::log(p) - d * std::log(a) + (d - 1.0) * std::log(x) -
         std::pow(x / a, p) - std::lgamma(d / p);
}

double density(const RenewalSpec& spec, double x) {
  const double l = log_density(spec, x);
  return l == -kInf ? 0.0 : std::exp(l);
}

double log_density_dx(const RenewalSpec& spec, double x) {
  if (spec.is_uniform()) return 0.0;  // flat inside the support
  const double a = spec.gg_a(), d = spec.gg_d(), p = spec.gg_p();
  return (d - 1.0) / x - (p / a) * std::pow(x / a, p - 1.0);
}

double cdf(const RenewalSpec& spec, double x) {
  if (spec.is_uniform()) {
    if (x <= spec.uniform_lo()) return 0.0;
    if (x >= spec.uniform_hi()) return 1.0;
    return (x - spec.uniform_lo()) / (spec.uniform_hi() - spec.uniform_lo());
  }
  if (!(x > 0.0)) return 0.0;
  return gamma_p(spec.gg_d() / spec.gg_p(), std::pow(x / spec.gg_a(), spec.gg_p()));
}

double quantile(const RenewalSpec& spec, double prob) {
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw std::domain_error("quantile: probability outside [0, 1]");
  }
  if (spec.is_uniform()) {
    return spec.uniform_lo() + prob * (spec.uniform_hi() - spec.uniform_lo());
  }
  if (prob == 0.0) return 0.0;
  if (prob == 1.0) return kInf;
  const double y = inverse_gamma_p(spec.gg_d() / spec.gg_p(), prob);
  return spec.gg_a() * std::pow(y, 1.0 / spec.gg_p());
}

bool distribution_equal(const RenewalSpec& a, const RenewalSpec& b) {
  if (a.is_uniform() != b.is_uniform()) return false;
  if (a.is_uniform()) {
    return close_rel(a.uniform_lo(), b.uniform_lo()) &&
           close_rel(a.uniform_hi(), b.uniform_hi());
  }
  return close_rel(a.gg_a(), b.gg_a()) && close_rel(a.gg_d(), b.gg_d()) &&
         close_rel(a.gg_p(), b.gg_p());
}

namespace {

double checked_rho(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw std::domain_error("scaling factor rho must lie in (0, 1)");
  }
  return rho;
}

}  // namespace

RenewalSpec scale_stretch(const RenewalSpec& spec, double rho) {
  checked_rho(rho);
  return RenewalSpec(spec.family(), spec.params(),
                     spec.scale_factor() / (1.0 - rho));
}

RenewalSpec scale_compress(const RenewalSpec& spec, double rho) {
  checked_rho(rho);
  return RenewalSpec(spec.family(), spec.params(),
                     spec.scale_factor() * (1.0 - rho));
}

Eigen::ArrayXd sample_interarrivals(const RenewalSpec& spec, std::int64_t n,
                                    std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_interarrivals: n must be >= 1");
  Rng rng(seed);
  Eigen::ArrayXd out(n);
  for (std::int64_t i = 0; i < n; ++i) out[i] = sample_one(spec, rng);
  return out;
}

namespace {

// Integration window holding all but ~1e-12 of spec's mass (closed-form
// survival via the regularized incomplete gamma).
std::pair<double, double> mass_window(const RenewalSpec& spec, double tail) {
  if (spec.is_uniform()) return {spec.uniform_lo(), spec.uniform_hi()};
  return {std::max(quantile(spec, tail), 1e-300), quantile(spec, 1.0 - tail)};
}

}  // namespace

double kl_divergence(const RenewalSpec& spec0, const RenewalSpec& spec1) {
  if (distribution_equal(spec0, spec1)) return 0.0;
  if (spec1.is_uniform()) {
    // A bounded-support alternative can only cover another uniform nested
    // inside it; anything else has escaping mass.
    if (!spec0.is_uniform() ||
        spec0.uniform_lo() < spec1.uniform_lo() - 1e-15 ||
        spec0.uniform_hi() > spec1.uniform_hi() + 1e-15) {
      return kInf;
    }
  }
  if (!spec0.is_uniform() && !spec1.is_uniform() && spec0.gg_d() == 1.0 &&
      spec0.gg_p() == 1.0 && spec1.gg_d() == 1.0 && spec1.gg_p() == 1.0) {
    // Exponential pair: D(Exp(l0) || Exp(l1)) = log(l0/l1) + l1/l0 - 1.
    const double ratio = spec1.gg_a() / spec0.gg_a();
    return std::log(ratio) + 1.0 / ratio - 1.0;
  }
  const auto [lo, hi] = mass_window(spec0, 5e-13);
  const auto integrand = [&](double x) {
    const double l0 = log_density(spec0, x);
    if (l0 == -kInf) return 0.0;
    return std::exp(l0) * (l0 - log_density(spec1, x));
  };
  const QuadResult q = integrate(integrand, lo, hi, 1e-13, 1e-11);
  return std::max(q.value, 0.0);
}

namespace {

// For the supported families the positive-half-line support condition is
// equivalent to the full regularity verdict, so operations gate on it
// cheaply and only build the detailed report when they are about to throw.
void require_regular(const RenewalSpec& spec, const char* op) {
  if (!spec.is_uniform()) return;
  throw RegularityError(std::string(op) +
                            ": spec fails the scaling-family regularity "
                            "conditions (support is not [0, inf))",
                        check_regularity(spec));
}

double fisher_quadrature_impl(const RenewalSpec& spec) {
  const double a = spec.gg_a(), d = spec.gg_d(), p = spec.gg_p();
  const auto integrand = [&](double x) {
    const double t = (d - 1.0) - p * std::pow(x / a, p);  // x * dlog p0/dx
    return density(spec, x) * t * t;
  };
  const auto [lo, hi] = mass_window(spec, 1e-15);
  const QuadResult q = integrate(integrand, lo, hi, 1e-11, 1e-10);
  return q.value - 1.0;
}

}  // namespace

double fisher_constant(const RenewalSpec& spec) {
  require_regular(spec, "fisher_constant");
  if (spec.gg_p() == 1.0) return spec.gg_d();  // exponential/gamma class
  return fisher_quadrature_impl(spec);
}

double fisher_constant_quadrature(const RenewalSpec& spec) {
  require_regular(spec, "fisher_constant_quadrature");
  return fisher_quadrature_impl(spec);
}

double kl_small_rho(const RenewalSpec& spec, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::domain_error("kl_small_rho: rho must lie in [0, 1)");
  }
  if (rho == 0.0) return 0.0;
  return 0.5 * fisher_constant(spec) * rho * rho;
}

RegularityReport check_regularity(const RenewalSpec& spec) {
  RegularityReport report;
  report.support_ok = !spec.is_uniform();
  report.note =
      "derivative existence and domination verified on a finite (x, rho) "
      "grid; uniform-in-rho domination of |d^3 log p1| is not "
      "machine-checkable and is asserted on the grid only";

  const double h = 1e-4;  // central-difference step in rho
  const std::array<double, 6> rho_grid = {0.05, 0.1, 0.25, 0.5, 0.75, 0.9};

  // Evaluation abscissae spanning the bulk and both tails of p0.
  std::vector<double> xs;
  if (spec.is_uniform()) {
    const double lo = spec.uniform_lo(), hi = spec.uniform_hi();
    const double pad = 1e-9 * (hi - lo);
    for (int i = 0; i < 17; ++i) {
      xs.push_back(lo + pad + (hi - lo - 2 * pad) * i / 16.0);
    }
  } else {
    for (double prob : {1e-6, 1e-5, 1e-4, 1e-3, 0.01, 0.05, 0.1, 0.25, 0.5,
                        0.75, 0.9, 0.95, 0.99, 0.999, 0.9999, 0.99999,
                        1.0 - 1e-6}) {
      xs.push_back(quantile(spec, prob));
    }
  }

  const auto p1 = [&](double x, double rho) {
    return (1.0 - rho) * density(spec, (1.0 - rho) * x);
  };
  const auto log_p1 = [&](double x, double rho) {
    return std::log1p(-rho) + log_density(spec, (1.0 - rho) * x);
  };

  // Existence of the first three rho-derivatives of log p1.
  report.smoothness = true;
  for (double rho : rho_grid) {
    for (double x : xs) {
      const double lm2 = log_p1(x, rho - 2 * h);
      const double lm1 = log_p1(x, rho - h);
      const double l0 = log_p1(x, rho);
      const double lp1 = log_p1(x, rho + h);
      const double lp2 = log_p1(x, rho + 2 * h);
      const double d1 = (lp1 - lm1) / (2 * h);
      const double d2 = (lp1 - 2 * l0 + lm1) / (h * h);
      const double d3 = (lp2 - 2 * lp1 + 2 * lm1 - lm2) / (2 * h * h * h);
      if (!std::isfinite(d1) || !std::isfinite(d2) || !std::isfinite(d3)) {
        report.smoothness = false;
        continue;
      }
      report.max_abs_dlog1 = std::max(report.max_abs_dlog1, std::abs(d1));
      report.max_abs_dlog2 = std::max(report.max_abs_dlog2, std::abs(d2));
      report.max_abs_dlog3 = std::max(report.max_abs_dlog3, std::abs(d3));
    }
  }

  // Dominated-derivative integrals, finite and bounded across the rho grid.
  report.dominated = true;
  for (double rho : rho_grid) {
    double lo_int, hi_int;
    if (spec.is_uniform()) {
      lo_int = std::max(spec.uniform_lo() * (1.0 - 2 * h), 1e-300);
      hi_int = spec.uniform_hi() / (1.0 - rho - 2 * h);
    } else {
      lo_int = std::max(quantile(spec, 1e-12), 1e-300);
      hi_int = quantile(spec, 1.0 - 1e-10) / (1.0 - rho);
    }
    const auto d1_abs = [&](double x) {
      return std::abs(p1(x, rho + h) - p1(x, rho - h)) / (2 * h);
    };
    const auto d2_abs = [&](double x) {
      return std::abs(p1(x, rho + h) - 2 * p1(x, rho) + p1(x, rho - h)) / (h * h);
    };
    const auto d3_weighted = [&](double x) {
      const double v = (log_p1(x, rho + 2 * h) - 2 * log_p1(x, rho + h) +
                        2 * log_p1(x, rho - h) - log_p1(x, rho - 2 * h)) /
                       (2 * h * h * h);
      return density(spec, x) * std::abs(v);
    };
    const QuadResult q1 = integrate(d1_abs, lo_int, hi_int, 1e-8, 1e-6, 600);
    const QuadResult q2 = integrate(d2_abs, lo_int, hi_int, 1e-8, 1e-6, 600);
    const QuadResult q3 = integrate(d3_weighted, lo_int, hi_int, 1e-8, 1e-6, 600);
    for (const QuadResult* q : {&q1, &q2, &q3}) {
      if (!std::isfinite(q->value) || q->value > 1e9) report.dominated = false;
    }
    report.max_int_abs_d1 = std::max(report.max_int_abs_d1, q1.value);
    report.max_int_abs_d2 = std::max(report.max_int_abs_d2, q2.value);
    report.max_int_weighted_d3 = std::max(report.max_int_weighted_d3, q3.value);
  }

  // Both derivative integrals must vanish at rho = 0 (the family preserves
  // total mass). p1(x, -h) = (1+h) p0((1+h) x) is a valid family member.
  {
    double lo_int, hi_int;
    if (spec.is_uniform()) {
      lo_int = std::max(spec.uniform_lo() * (1.0 - 2 * h), 1e-300);
      hi_int = spec.uniform_hi() / (1.0 - 2 * h);
    } else {
      lo_int = std::max(quantile(spec, 1e-12), 1e-300);
      hi_int = quantile(spec, 1.0 - 1e-12);
    }
    const auto v1 = [&](double x) {
      return (p1(x, h) - p1(x, -h)) / (2 * h);
    };
    const auto v2 = [&](double x) {
      return (p1(x, h) - 2 * density(spec, x) + p1(x, -h)) / (h * h);
    };
    report.vanishing_first = integrate(v1, lo_int, hi_int, 1e-9, 1e-7, 600).value;
    report.vanishing_second = integrate(v2, lo_int, hi_int, 1e-9, 1e-7, 600).value;
    report.vanishing_integrals = std::abs(report.vanishing_first) < 1e-6 &&
                                 std::abs(report.vanishing_second) < 1e-6;
  }

  return report;
}

}  // namespace covren
