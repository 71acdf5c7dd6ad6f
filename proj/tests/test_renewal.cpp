#include <doctest.h>

#include <cmath>

#include "covren/renewal.hpp"
#include "oracles.hpp"

using namespace covren;

namespace {

std::vector<RenewalSpec> family_zoo() {
  return {RenewalSpec::exponential(1.0),
          RenewalSpec::exponential(2.0),
          RenewalSpec::gamma(2.0, 1.0),
          RenewalSpec::gamma(0.5, 2.0),
          RenewalSpec::weibull(1.5, 2.0),
          RenewalSpec::generalized_gamma(1.0, 2.0, 1.5),
          RenewalSpec::rayleigh(1.0),
          RenewalSpec::erlang(3, 2.0),
          RenewalSpec::chi_squared(3.0),
          RenewalSpec::uniform(0.5, 1.5)};
}

}  // namespace

TEST_SUITE("renewal") {

TEST_CASE("construction rejects bad parameters") {
  CHECK_THROWS_AS(RenewalSpec::exponential(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(RenewalSpec::gamma(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(RenewalSpec::erlang(2.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(RenewalSpec::uniform(-0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(RenewalSpec::uniform(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(RenewalSpec::exponential(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(RenewalSpec(Family::kGamma, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(family_from_name("cauchy"), std::invalid_argument);
}

TEST_CASE("family names round-trip") {
  for (const RenewalSpec& s : family_zoo()) {
    CHECK(family_from_name(family_name(s.family())) == s.family());
  }
}

TEST_CASE("rate and variance closed forms") {
  CHECK(rate(RenewalSpec::exponential(2.0)) == doctest::Approx(2.0));
  CHECK(variance(RenewalSpec::exponential(2.0)) == doctest::Approx(0.25));
  CHECK(rate(RenewalSpec::gamma(3.0, 2.0)) == doctest::Approx(1.0 / 6.0));
  CHECK(variance(RenewalSpec::gamma(3.0, 2.0)) == doctest::Approx(12.0));
  CHECK(rate(RenewalSpec::uniform(1.0, 3.0)) == doctest::Approx(0.5));
  CHECK(variance(RenewalSpec::uniform(1.0, 3.0)) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("scale identity: rate(spec with s) * s = rate(unscaled)") {
  for (const RenewalSpec& base : family_zoo()) {
    for (double s : {0.5, 2.0, 7.5}) {
      const RenewalSpec scaled(base.family(), base.params(), s);
      CHECK(rate(scaled) * s == doctest::Approx(rate(base)).epsilon(1e-12));
    }
  }
}

TEST_CASE("density integrates to one and matches the mean by quadrature") {
  for (const RenewalSpec& spec : family_zoo()) {
    INFO("family ", family_name(spec.family()));
    CHECK(oracles::moment_quadrature(spec, 0, 1e-11) ==
          doctest::Approx(1.0).epsilon(1e-8));
    CHECK(oracles::moment_quadrature(spec, 1, 1e-11) ==
          doctest::Approx(mean_interarrival(spec)).epsilon(1e-8));
  }
}

TEST_CASE("cdf is consistent with the density") {
  for (const RenewalSpec& spec :
       {RenewalSpec::gamma(2.0, 1.0), RenewalSpec::weibull(1.5, 2.0),
        RenewalSpec::generalized_gamma(1.0, 2.0, 1.5)}) {
    for (double prob : {0.1, 0.5, 0.9}) {
      const double x = quantile(spec, prob);
      CHECK(cdf(spec, x) == doctest::Approx(prob).epsilon(1e-9));
      const double lo = std::max(quantile(spec, 1e-14), 1e-300);
      const double mass = oracles::simpson(
          [&](double t) { return density(spec, t); }, lo, x, 1e-11);
      CHECK(mass == doctest::Approx(prob).epsilon(1e-7));
    }
  }
}

TEST_CASE("sampling: law of large numbers per family") {
  const Eigen::ArrayXd exp_draws =
      sample_interarrivals(RenewalSpec::exponential(1.0), 1000000, 7);
  CHECK(std::abs(exp_draws.mean() - 1.0) < 0.003);

  const Eigen::ArrayXd gamma_draws =
      sample_interarrivals(RenewalSpec::gamma(2.0, 1.0), 1000000, 7);
  CHECK(std::abs(gamma_draws.mean() - 2.0) < 0.005);
}

TEST_CASE("sampling: scale_factor doubles every draw in distribution") {
  const Eigen::ArrayXd scaled =
      sample_interarrivals(RenewalSpec::exponential(1.0, 2.0), 200000, 9);
  CHECK(scaled.mean() == doctest::Approx(2.0).epsilon(0.01));
  // Oracle: resample unscaled, multiply by 2, compare by two-sample KS.
  const Eigen::ArrayXd doubled =
      2.0 * sample_interarrivals(RenewalSpec::exponential(1.0), 200000, 10);
  CHECK(ks_test_two_sample(scaled, doubled).p_value > 0.001);
}

TEST_CASE("sampling: deterministic per seed, strictly positive") {
  const RenewalSpec spec = RenewalSpec::weibull(0.8, 1.0);
  const Eigen::ArrayXd a = sample_interarrivals(spec, 5000, 42);
  const Eigen::ArrayXd b = sample_interarrivals(spec, 5000, 42);
  CHECK((a == b).all());
  CHECK((a > 0.0).all());
  CHECK_THROWS_AS(sample_interarrivals(spec, 0, 1), std::invalid_argument);
}

TEST_CASE("sampling: KS against the closed-form cdf at n = 1e5 per family") {
  std::uint64_t seed = 1000;
  for (const RenewalSpec& spec : family_zoo()) {
    const Eigen::ArrayXd draws = sample_interarrivals(spec, 100000, seed++);
    const KsResult ks = ks_test(draws, [&](double x) { return cdf(spec, x); });
    INFO("family ", family_name(spec.family()));
    CHECK(ks.p_value > 0.001);
  }
}

TEST_CASE("stretch and compress move the rate the right way") {
  const RenewalSpec exp1 = RenewalSpec::exponential(1.0);
  CHECK(rate(scale_stretch(exp1, 0.5)) == doctest::Approx(0.5));
  CHECK(rate(scale_compress(exp1, 0.5)) == doctest::Approx(2.0));

  const RenewalSpec gamma21 = RenewalSpec::gamma(2.0, 1.0);
  CHECK(rate(scale_stretch(gamma21, 0.1)) == doctest::Approx(0.9 * 0.5));
  CHECK(rate(scale_compress(gamma21, 0.01)) == doctest::Approx(0.5 / 0.99));

  // Numeric-mean oracle for the stretched family.
  const Eigen::ArrayXd draws =
      sample_interarrivals(scale_stretch(gamma21, 0.1), 1000000, 3);
  CHECK(draws.mean() == doctest::Approx(2.0 / 0.9).epsilon(0.005));

  // Inverse scalings cancel; tiny rho approaches the identity.
  CHECK(rate(scale_stretch(scale_compress(gamma21, 0.3), 0.3)) ==
        doctest::Approx(rate(gamma21)).epsilon(1e-12));
  CHECK(rate(scale_stretch(exp1, 1e-12)) == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(scale_stretch(exp1, 0.0), std::domain_error);
  CHECK_THROWS_AS(scale_stretch(exp1, 1.0), std::domain_error);
  CHECK_THROWS_AS(scale_compress(exp1, -0.1), std::domain_error);
}

TEST_CASE("kl_divergence: exponential pair closed form") {
  const RenewalSpec exp1 = RenewalSpec::exponential(1.0);
  const double d = kl_divergence(exp1, scale_stretch(exp1, 0.1));
  CHECK(d == doctest::Approx(-std::log(0.9) - 0.1).epsilon(1e-12));
  CHECK(d == doctest::Approx(0.005360).epsilon(1e-3));
}

TEST_CASE("kl_divergence: zero iff distribution-equal") {
  CHECK(kl_divergence(RenewalSpec::exponential(2.0),
                      RenewalSpec::erlang(1, 2.0)) == 0.0);
  CHECK(kl_divergence(RenewalSpec::gamma(1.0, 0.5),
                      RenewalSpec::exponential(2.0)) == 0.0);
  CHECK(kl_divergence(RenewalSpec::chi_squared(4.0),
                      RenewalSpec::gamma(2.0, 2.0)) == 0.0);
  CHECK(kl_divergence(RenewalSpec::exponential(1.0),
                      RenewalSpec::exponential(1.001)) > 0.0);
}

TEST_CASE("kl_divergence: quadrature against independent oracles") {
  // Same-shape gamma pair has a closed form the library does not use.
  const double got = kl_divergence(RenewalSpec::gamma(2.0, 1.0),
                                   RenewalSpec::gamma(2.0, 1.0 / 0.9));
  CHECK(got == doctest::Approx(oracles::kl_gamma_pair(2.0, 1.0, 1.0 / 0.9))
                   .epsilon(1e-9));

  const double cross = kl_divergence(RenewalSpec::exponential(1.0),
                                     RenewalSpec::gamma(2.0, 1.0));
  CHECK(cross > 0.0);
  CHECK(cross == doctest::Approx(oracles::kl_quadrature(
                     RenewalSpec::exponential(1.0), RenewalSpec::gamma(2.0, 1.0),
                     1e-11))
                     .epsilon(1e-8));
}

TEST_CASE("kl_divergence: support mismatch is infinite") {
  const RenewalSpec uni = RenewalSpec::uniform(0.5, 1.5);
  CHECK(std::isinf(kl_divergence(RenewalSpec::exponential(1.0), uni)));
  CHECK(std::isinf(kl_divergence(RenewalSpec::uniform(0.2, 2.0), uni)));
  // Nested uniform is finite: log of the width ratio.
  CHECK(kl_divergence(RenewalSpec::uniform(0.75, 1.25), uni) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-9));
  // Unbounded support always covers.
  CHECK(std::isfinite(kl_divergence(uni, RenewalSpec::exponential(1.0))));
}

TEST_CASE("kl nonnegativity across the zoo") {
  const auto zoo = family_zoo();
  for (const RenewalSpec& p0 : zoo) {
    for (const RenewalSpec& p1 : zoo) {
      const double d = kl_divergence(p0, p1);
      CHECK(d >= 0.0);
      if (distribution_equal(p0, p1)) CHECK(d == 0.0);
    }
  }
}

TEST_CASE("fisher constant closed forms and quadrature agree") {
  for (double lambda : {0.5, 1.0, 2.0}) {
    CHECK(fisher_constant(RenewalSpec::exponential(lambda)) == 1.0);
    CHECK(fisher_constant_quadrature(RenewalSpec::exponential(lambda)) ==
          doctest::Approx(1.0).epsilon(1e-6));
  }
  for (double k : {0.5, 1.0, 2.0, 5.0}) {
    CHECK(fisher_constant(RenewalSpec::gamma(k, 1.5)) == doctest::Approx(k));
    CHECK(fisher_constant_quadrature(RenewalSpec::gamma(k, 1.5)) ==
          doctest::Approx(k).epsilon(1e-6));
  }
  CHECK(fisher_constant(RenewalSpec::erlang(1, 3.0)) == 1.0);

  // Weibull, Rayleigh and the generalized family only have the quadrature
  // path in the library; the closed form d*p is the oracle.
  for (const RenewalSpec& spec :
       {RenewalSpec::weibull(1.5, 2.0), RenewalSpec::weibull(3.0, 0.7),
        RenewalSpec::rayleigh(2.0),
        RenewalSpec::generalized_gamma(1.0, 2.0, 1.5)}) {
    CHECK(fisher_constant(spec) ==
          doctest::Approx(oracles::fisher_closed_form(spec)).epsilon(1e-6));
  }

  // Scale invariance.
  CHECK(fisher_constant(RenewalSpec::weibull(2.0, 1.0, 5.0)) ==
        doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("fisher constant rejects irregular specs with a report") {
  try {
    fisher_constant(RenewalSpec::uniform(1.0, 2.0));
    FAIL("expected RegularityError");
  } catch (const RegularityError& e) {
    CHECK_FALSE(e.report().support_ok);
    CHECK_FALSE(e.report().all_met());
  }
}

TEST_CASE("kl_small_rho") {
  CHECK(kl_small_rho(RenewalSpec::exponential(1.0), 0.01) ==
        doctest::Approx(5e-5).epsilon(1e-12));
  const double exact = -std::log(0.99) - 0.01;
  CHECK(exact == doctest::Approx(5.034e-5).epsilon(1e-3));
  CHECK(exact / kl_small_rho(RenewalSpec::exponential(1.0), 0.01) ==
        doctest::Approx(1.0).epsilon(0.01));
  CHECK(kl_small_rho(RenewalSpec::gamma(4.0, 1.0), 0.02) ==
        doctest::Approx(8e-4).epsilon(1e-12));
  CHECK(kl_small_rho(RenewalSpec::exponential(1.0), 0.0) == 0.0);
  CHECK_THROWS_AS(kl_small_rho(RenewalSpec::exponential(1.0), 1.0),
                  std::domain_error);
}

TEST_CASE("kl asymptotics: ratio error shrinks with rho") {
  for (const RenewalSpec& spec :
       {RenewalSpec::exponential(1.0), RenewalSpec::gamma(2.0, 1.0),
        RenewalSpec::gamma(5.0, 0.3)}) {
    double prev = kInf;
    for (double rho : {0.1, 0.05, 0.02, 0.01}) {
      const double exact = kl_divergence(spec, scale_stretch(spec, rho));
      const double err = std::abs(exact / kl_small_rho(spec, rho) - 1.0);
      CHECK(err < prev);
      prev = err;
      if (rho == 0.01) CHECK(err < 0.1);
    }
  }
}

TEST_CASE("compress direction shares the same curvature constant") {
  for (const RenewalSpec& spec :
       {RenewalSpec::exponential(1.0), RenewalSpec::gamma(2.0, 1.0)}) {
    const double rho = 0.01;
    const double d_compress = kl_divergence(spec, scale_compress(spec, rho));
    CHECK(d_compress / kl_small_rho(spec, rho) == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("regularity verdicts per family") {
  const RegularityReport exp_report =
      check_regularity(RenewalSpec::exponential(1.0));
  CHECK(exp_report.all_met());

  const RegularityReport gg_report =
      check_regularity(RenewalSpec::generalized_gamma(1.0, 2.0, 1.5));
  CHECK(gg_report.all_met());

  const RegularityReport weibull_report =
      check_regularity(RenewalSpec::weibull(1.5, 1.0));
  CHECK(weibull_report.all_met());

  const RegularityReport uni_report =
      check_regularity(RenewalSpec::uniform(1.0, 2.0));
  CHECK_FALSE(uni_report.support_ok);
  CHECK_FALSE(uni_report.all_met());
  CHECK_FALSE(uni_report.note.empty());
}

TEST_CASE("distribution_equal recognizes family coincidences") {
  CHECK(distribution_equal(RenewalSpec::erlang(1, 2.0), RenewalSpec::exponential(2.0)));
  CHECK(distribution_equal(RenewalSpec::gamma(1.0, 0.5), RenewalSpec::exponential(2.0)));
  CHECK(distribution_equal(RenewalSpec::rayleigh(1.0),
                           RenewalSpec::weibull(2.0, std::sqrt(2.0))));
  CHECK_FALSE(distribution_equal(RenewalSpec::exponential(1.0),
                                 RenewalSpec::exponential(1.0, 1.001)));
}

}  // TEST_SUITE
