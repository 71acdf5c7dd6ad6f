#include "covren/math.hpp"

#include <cstdlib>
#include <numbers>
#include <thread>

namespace covren {

namespace {

// Acklam's rational approximation to the inverse normal CDF, |error| < 1.2e-9.
double acklam_inverse_normal(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

constexpr double kTwoOverSqrtPi = 1.1283791670955126;

}  // namespace

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("inverse_normal_cdf: p must lie in (0, 1)");
  }
  double z = acklam_inverse_normal(p);
  // One Halley step against erfc keeps full double precision.
  const double e = 0.5 * std::erfc(-z / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z);
  z -= u / (1.0 + 0.5 * z * u);
  return z;
}

double erf_inv(double y) {
  if (!(y > -1.0 && y < 1.0)) {
    if (y == 1.0 || y == -1.0) return y * kInf;
    throw std::domain_error("erf_inv: argument must lie in (-1, 1)");
  }
  if (y == 0.0) return 0.0;
  double z = acklam_inverse_normal(0.5 * (y + 1.0)) / std::numbers::sqrt2;
  // Newton iterations on erf(z) - y; three passes reach ~1e-16 residual.
  for (int it = 0; it < 3; ++it) {
    const double err = std::erf(z) - y;
    z -= err / (kTwoOverSqrtPi * std::exp(-z * z));
  }
  return z;
}

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw std::domain_error("gamma_p: need a > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) {
    // Series representation.
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int k = 0; k < 500; ++k) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // Continued fraction for Q (modified Lentz).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  return 1.0 - q;
}

double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

double inverse_gamma_p(double a, double p) {
  if (!(a > 0.0) || !(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("inverse_gamma_p: need a > 0, p in [0, 1]");
  }
  if (p == 0.0) return 0.0;
  if (p == 1.0) return kInf;
  // Bracket, then bisect; the geometric midpoint keeps tail quantiles sharp.
  double hi = a + 1.0;
  while (gamma_p(a, hi) < p) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (!(mid > lo) || !(mid < hi)) break;
    (gamma_p(a, mid) < p ? lo : hi) = mid;
  }
  return hi;  // smallest representable x with P(a, x) >= p
}

double kolmogorov_sf(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 1.18) {
    // Jacobi theta form converges fast for small t.
    const double pi = std::numbers::pi;
    const double y = std::exp(-pi * pi / (8.0 * t * t));
    const double cdf = std::sqrt(2.0 * pi) / t *
                       (y + std::pow(y, 9.0) + std::pow(y, 25.0) + std::pow(y, 49.0));
    return 1.0 - cdf;
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * t * t);
    sum += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_p_value(double d, double n_eff) {
  const double rn = std::sqrt(n_eff);
  return kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
}

}  // namespace

KsResult ks_test(const Eigen::ArrayXd& samples,
                 const std::function<double(double)>& cdf) {
  if (samples.size() == 0) throw std::invalid_argument("ks_test: empty sample");
  std::vector<double> s(samples.data(), samples.data() + samples.size());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return {d, ks_p_value(d, n)};
}

KsResult ks_test_two_sample(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  if (a.size() == 0 || b.size() == 0) {
    throw std::invalid_argument("ks_test_two_sample: empty sample");
  }
  std::vector<double> x(a.data(), a.data() + a.size());
  std::vector<double> y(b.data(), b.data() + b.size());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx -
                             static_cast<double>(j) / ny));
  }
  const double n_eff = nx * ny / (nx + ny);
  return {d, ks_p_value(d, n_eff)};
}

int thread_budget() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("COVERT_RENEWAL_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) hw = std::min<long>(hw, cap);
  }
  return hw;
}

void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (n <= 0) return;
  const int workers = std::min<std::int64_t>(thread_budget(), n);
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (std::thread& t : pool) t.join();
}

Eigen::ArrayXd cumulative_sum(const Eigen::ArrayXd& x) {
  Eigen::ArrayXd out(x.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    acc += x[i];
    out[i] = acc;
  }
  return out;
}

}  // namespace covren
