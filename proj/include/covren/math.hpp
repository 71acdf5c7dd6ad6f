// Scalar numerics used across the library: adaptive Gauss-Kronrod
// quadrature, inverse error function, regularized incomplete gamma,
// Kolmogorov-Smirnov tests, seed hashing and a small thread pool helper.
//
// Everything here is deterministic and allocation-light. Eigen is the only
// external math dependency of the project; the special functions below are
// pinned implementations so results are reproducible bit-for-bit.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace covren {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Seed hashing.
// ---------------------------------------------------------------------------

// 64-bit FNV-1a over bytes. Pinned: offset basis 14695981039346656037,
// prime 1099511628211. Used to derive per-trial seeds from textual grid
// point encodings so sweep output is stable across platforms.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// SplitMix64 finalizer step.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stream-splitting helper: distinct salts give statistically independent
// sub-seeds from one master seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return splitmix64(base ^ splitmix64(salt + 0x517cc1b727220a95ull));
}

// ---------------------------------------------------------------------------
// Adaptive quadrature (15-point Gauss-Kronrod, globally adaptive bisection).
// ---------------------------------------------------------------------------

struct QuadResult {
  double value = 0.0;
  double error = 0.0;   // estimated absolute error
  int intervals = 0;
  bool converged = false;
};

namespace detail {

// QUADPACK G7-K15 abscissae and weights on [-1, 1].
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double kGk15WeightsK[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double kGk15WeightsG[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
inline void gk15(const F& f, double a, double b, double* value, double* error) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double result_g = fc * kGk15WeightsG[3];
  double result_k = fc * kGk15WeightsK[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kGk15Nodes[j];
    const double fsum = f(c - dx) + f(c + dx);
    result_k += kGk15WeightsK[j] * fsum;
    if (j % 2 == 1) result_g += kGk15WeightsG[j / 2] * fsum;
  }
  *value = result_k * h;
  const double diff = std::abs(result_k - result_g) * std::abs(h);
  // QUADPACK-style sharpening of the raw K-G difference.
  *error = diff < 1.0 ? std::pow(200.0 * diff, 1.5) : diff;
  if (*error > diff && diff > 0.0) *error = diff;
  if (*error < diff) *error = std::max(*error, diff * 1e-6);
}

}  // namespace detail

// Integrates f over the finite interval [a, b]. Globally adaptive: the
// interval with the largest error estimate is bisected until the summed
// error estimate meets max(abs_tol, rel_tol * |integral|).
template <class F>
QuadResult integrate(const F& f, double a, double b, double abs_tol = 1e-12,
                     double rel_tol = 1e-10, int max_intervals = 4000) {
  struct Interval {
    double a, b, value, error;
  };
  QuadResult out;
  if (!(b > a)) {
    out.converged = true;
    return out;
  }
  std::vector<Interval> intervals;
  intervals.reserve(64);
  Interval first{a, b, 0.0, 0.0};
  detail::gk15(f, a, b, &first.value, &first.error);
  intervals.push_back(first);
  double total_value = first.value;
  double total_error = first.error;
  while (static_cast<int>(intervals.size()) < max_intervals) {
    if (total_error <= std::max(abs_tol, rel_tol * std::abs(total_value))) break;
    std::size_t worst = 0;
    for (std::size_t i = 1; i < intervals.size(); ++i) {
      if (intervals[i].error > intervals[worst].error) worst = i;
    }
    Interval cur = intervals[worst];
    const double mid = 0.5 * (cur.a + cur.b);
    if (mid <= cur.a || mid >= cur.b) break;  // interval exhausted in doubles
    Interval left{cur.a, mid, 0.0, 0.0};
    Interval right{mid, cur.b, 0.0, 0.0};
    detail::gk15(f, left.a, left.b, &left.value, &left.error);
    detail::gk15(f, right.a, right.b, &right.value, &right.error);
    total_value += left.value + right.value - cur.value;
    total_error += left.error + right.error - cur.error;
    intervals[worst] = left;
    intervals.push_back(right);
  }
  total_value = 0.0;
  total_error = 0.0;
  for (const Interval& iv : intervals) {
    total_value += iv.value;
    total_error += iv.error;
  }
  out.value = total_value;
  out.error = total_error;
  out.intervals = static_cast<int>(intervals.size());
  out.converged =
      total_error <= std::max(abs_tol, rel_tol * std::abs(total_value));
  return out;
}

// ---------------------------------------------------------------------------
// Special functions.
// ---------------------------------------------------------------------------

// Inverse of erf on (-1, 1), accurate to ~1e-15 (rational initial guess,
// Newton polish against std::erf).
double erf_inv(double y);

// Inverse standard normal CDF.
double inverse_normal_cdf(double p);

// Regularized incomplete gamma P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Smallest x with P(a, x) >= p. Newton with bisection safeguard.
double inverse_gamma_p(double a, double p);

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov.
// ---------------------------------------------------------------------------

// Kolmogorov survival function Q_KS(t) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 t^2).
double kolmogorov_sf(double t);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

// One-sample KS against a CDF (Stephens' finite-n adjustment for the p-value).
KsResult ks_test(const Eigen::ArrayXd& samples,
                 const std::function<double(double)>& cdf);

// Two-sample KS.
KsResult ks_test_two_sample(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b);

// ---------------------------------------------------------------------------
// Small parallel helper.
// ---------------------------------------------------------------------------

// Worker count: min(hardware_concurrency, COVERT_RENEWAL_THREADS) when the
// environment variable is set, otherwise hardware_concurrency.
int thread_budget();

// Runs body(begin, end) over a static partition of [0, n). The partition
// depends only on n and the worker count, never on scheduling.
void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& body);

// Running sum helper for arrival-time construction.
Eigen::ArrayXd cumulative_sum(const Eigen::ArrayXd& x);

}  // namespace covren
