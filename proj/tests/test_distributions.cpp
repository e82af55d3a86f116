#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <vector>

#include "spectail/distributions.hpp"
#include "spectail/stats.hpp"

using namespace spectail;

namespace {

std::vector<double> draws(std::size_t n, auto&& f) {
  std::vector<double> v(n);
  for (auto& x : v) x = f();
  return v;
}

// 2 * int_a^inf f, with f set to 0 where it overflows into NaN
double two_sided_tail(auto&& f, double a) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return 2.0 * integrator.integrate([&](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : 0.0;
  }, a, std::numeric_limits<double>::infinity());
}

// cdf of the (symmetric) tilted density by quadrature; the upper tail is
// integrated directly so heavy tails stay accurate
double tilted_cdf_quadrature(const TiltedInnovationSpec& spec, double x) {
  auto h = [&](double v) { return tilted_innovation_pdf(spec, v); };
  const double a = std::fabs(x);
  const double half = a <= 1.0 ? boost::math::quadrature::gauss_kronrod<double, 61>::integrate(h, 0.0, a, 15, 1e-13)
                               : 0.5 - 0.5 * two_sided_tail(h, a);
  return x < 0.0 ? 0.5 - half : 0.5 + half;
}

}  // namespace

TEST(StudentT, CdfAtZeroIsHalf) { EXPECT_DOUBLE_EQ(student_t_cdf(4.0, 0.0), 0.5); }

TEST(StudentT, CdfTableQuantile) { EXPECT_NEAR(student_t_cdf(4.0, 2.1318), 0.95, 5e-5); }

TEST(StudentT, CdfNuFiveAgainstQuadrature) {
  auto pdf = [](double v) { return student_t_pdf(5.0, v); };
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double oracle = 0.5 + integrator.integrate(pdf, 0.0, 2.8868);
  EXPECT_NEAR(student_t_cdf(5.0, 2.8868), oracle, 1e-10);
  EXPECT_NEAR(oracle, 0.9827, 2e-4);
}

TEST(StudentT, MatchesBoostOnGrid) {
  for (double nu : {0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 7.5, 20.0, 200.0}) {
    boost::math::students_t dist(nu);
    for (double x = -30.0; x <= 30.0; x += 0.37) {
      EXPECT_NEAR(student_t_cdf(nu, x), boost::math::cdf(dist, x), 1e-12) << nu << ' ' << x;
      EXPECT_NEAR(student_t_pdf(nu, x), boost::math::pdf(dist, x), 1e-12) << nu << ' ' << x;
    }
  }
}

TEST(StudentT, FarTailSurvivalRelativeAccuracy) {
  for (double nu : {2.0, 4.0, 9.0}) {
    boost::math::students_t dist(nu);
    for (double x : {50.0, 1e3, 1e6}) {
      const double ref = boost::math::cdf(boost::math::complement(dist, x));
      EXPECT_NEAR(student_t_sf(nu, x) / ref, 1.0, 1e-10);
    }
  }
}

TEST(StudentT, CdfSymmetryAndMonotone) {
  double prev = 0.0;
  for (double x = -20.0; x <= 20.0; x += 0.05) {
    const double c = student_t_cdf(3.0, x);
    EXPECT_GE(c, prev);
    EXPECT_NEAR(student_t_cdf(3.0, -x), 1.0 - c, 1e-15);
    prev = c;
  }
}

TEST(StudentT, NonFiniteInputRejected) {
  EXPECT_THROW(student_t_cdf(4.0, std::nan("")), DomainError);
  EXPECT_THROW(student_t_cdf(-1.0, 1.0), DomainError);
}

TEST(StudentT, QuantileTableValues) {
  EXPECT_NEAR(student_t_quantile(4.0, 0.975), 2.7764, 5e-5);
  EXPECT_NEAR(student_t_quantile(4.0, 0.95), 2.1318, 5e-5);
  EXPECT_EQ(student_t_quantile(4.0, 0.5), 0.0);
}

TEST(StudentT, QuantileRoundTrip) {
  for (double nu : {3.0, 4.0, 5.0, 20.0}) {
    for (double p = 0.001; p < 0.999; p += 0.0037) {
      const double q = student_t_quantile(nu, p);
      EXPECT_NEAR(student_t_cdf(nu, q), p, 1e-9) << nu << ' ' << p;
      EXPECT_NEAR(student_t_quantile(nu, 1.0 - p), -q, 1e-9 * std::max(1.0, std::fabs(q)));
    }
  }
}

TEST(StudentT, QuantileMatchesBoost) {
  for (double nu : {1.0, 2.0, 2.5, 4.0, 11.0}) {
    boost::math::students_t dist(nu);
    for (double p : {1e-9, 1e-4, 0.02, 0.3, 0.61, 0.9, 0.999, 1 - 1e-7}) {
      const double ref = boost::math::quantile(dist, p);
      EXPECT_NEAR(student_t_quantile(nu, p), ref, 1e-9 * std::max(1.0, std::fabs(ref))) << nu << ' ' << p;
    }
  }
}

TEST(StudentT, QuantileDomain) {
  EXPECT_THROW(student_t_quantile(4.0, 0.0), DomainError);
  EXPECT_THROW(student_t_quantile(4.0, 1.0), DomainError);
  EXPECT_THROW(student_t_quantile(4.0, 1.5), DomainError);
}

TEST(Innovation, StandardizedTVariance) {
  Stream s(11);
  const auto spec = InnovationSpec::standardized_t(4.0);
  const std::size_t n = 2'000'000;
  const auto v = draws(n, [&] { return sample_innovation(spec, s); });
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = v[i] * v[i];
  // the fourth moment is infinite at nu = 4; batch means give an honest SE
  const auto est = stats::batch_mean(sq, 200);
  EXPECT_NEAR(est.value, 1.0, 3.0 * est.std_error);
}

TEST(Innovation, NormalMean) {
  Stream s(12);
  const std::size_t n = 10'000'000;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += sample_innovation(InnovationSpec::standard_normal(), s);
  EXPECT_NEAR(sum / n, 0.0, 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Innovation, StandardizedTRescaledMatchesT4) {
  Stream s(13);
  const auto spec = InnovationSpec::standardized_t(4.0);
  const auto v = draws(1'000'000, [&] { return sample_innovation(spec, s) * std::sqrt(2.0); });
  EXPECT_LT(stats::ks_distance(v, [](double x) { return student_t_cdf(4.0, x); }), 0.002);
}

TEST(Innovation, RequiresNuAboveTwo) { EXPECT_THROW(InnovationSpec::standardized_t(2.0), DomainError); }

TEST(Innovation, AbsMomentMatchesQuadrature) {
  for (auto spec : {InnovationSpec::standard_normal(), InnovationSpec::standardized_t(4.0)}) {
    for (double p : {0.5, 1.0, 2.0, 2.6}) {
      const double q = two_sided_tail([&](double x) { return std::pow(x, p) * innovation_pdf(spec, x); }, 0.0);
      EXPECT_NEAR(innovation_abs_moment(spec, p), q, 1e-7 * q);
    }
  }
  EXPECT_DOUBLE_EQ(innovation_abs_moment(InnovationSpec::standard_normal(), 2.0), 1.0);
  EXPECT_TRUE(std::isinf(innovation_abs_moment(InnovationSpec::standardized_t(4.0), 4.0)));
}

TEST(Tilted, NormalSecondMomentIsThree) {
  Stream s(21);
  const TiltedInnovationSpec spec{InnovationSpec::standard_normal(), 2.0};
  const auto v = draws(1'000'000, [&] {
    const double e = sample_tilted_innovation(spec, s);
    return e * e;
  });
  const auto est = stats::mean_with_error(v);
  EXPECT_NEAR(est.value, 3.0, 3.0 * est.std_error);
}

TEST(Tilted, SmallAlphaApproachesBase) {
  for (auto base : {InnovationSpec::standard_normal(), InnovationSpec::standardized_t(4.0)}) {
    Stream s(22);
    const TiltedInnovationSpec spec{base, 0.001};
    const auto v = draws(1'000'000, [&] { return sample_tilted_innovation(spec, s); });
    EXPECT_LT(stats::ks_distance(v, [&](double x) { return innovation_cdf(base, x); }), 0.005);
  }
}

TEST(Tilted, TailProbabilityMatchesQuadrature) {
  const TiltedInnovationSpec spec{InnovationSpec::standard_normal(), 4.02};
  const double p = two_sided_tail([&](double x) { return tilted_innovation_pdf(spec, x); }, 2.0);
  Stream s(23);
  const std::size_t n = 1'000'000;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += std::fabs(sample_tilted_innovation(spec, s)) > 2.0;
  const double se = std::sqrt(p * (1.0 - p) / n);
  EXPECT_NEAR(static_cast<double>(hits) / n, p, 3.0 * se);
}

TEST(Tilted, EmpiricalCdfMatchesQuadrature) {
  for (auto base : {InnovationSpec::standard_normal(), InnovationSpec::standardized_t(4.0)}) {
    for (double alpha : {1.0, 2.6, 3.5}) {
      if (!base.is_normal() && alpha >= base.nu) continue;
      const TiltedInnovationSpec spec{base, alpha};
      Stream s(24);
      auto v = draws(1'000'000, [&] { return sample_tilted_innovation(spec, s); });
      // tabulate the quadrature cdf once on a grid, then interpolate
      std::sort(v.begin(), v.end());
      double d = 0.0;
      const double n = static_cast<double>(v.size());
      for (std::size_t i = 0; i < v.size(); i += 997) {
        const double f = tilted_cdf_quadrature(spec, v[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
      }
      EXPECT_LT(d, 0.002) << base.describe() << ' ' << alpha;
    }
  }
}

TEST(Tilted, NormalBaseAtPaperIndex) {
  const TiltedInnovationSpec spec{InnovationSpec::standard_normal(), 4.02};
  Stream s(25);
  auto v = draws(1'000'000, [&] { return sample_tilted_innovation(spec, s); });
  std::sort(v.begin(), v.end());
  double d = 0.0;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); i += 997) {
    const double f = tilted_cdf_quadrature(spec, v[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  EXPECT_LT(d, 0.002);
}

TEST(Tilted, InfiniteNormalizerRejected) {
  Stream s(26);
  EXPECT_THROW(sample_tilted_innovation({InnovationSpec::standardized_t(4.0), 4.0}, s), DomainError);
  EXPECT_THROW(sample_tilted_innovation({InnovationSpec::standardized_t(4.0), 5.0}, s), DomainError);
}

TEST(Pareto, InverseCdfIdentity) {
  EXPECT_DOUBLE_EQ(standard_pareto_from_uniform(1.0, 0.25), 4.0);
  EXPECT_DOUBLE_EQ(standard_pareto_from_uniform(2.0, 0.25), 2.0);
  EXPECT_THROW(standard_pareto_from_uniform(0.0, 0.25), DomainError);
  EXPECT_THROW(standard_pareto_from_uniform(-1.0, 0.25), DomainError);
}

TEST(Pareto, TailFraction) {
  Stream s(31);
  const std::size_t n = 1'000'000;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = sample_standard_pareto(4.0, s);
    ASSERT_GE(y, 1.0);
    hits += y > 2.0;
  }
  const double p = 0.0625, se = std::sqrt(p * (1 - p) / n);
  EXPECT_NEAR(static_cast<double>(hits) / n, p, 3.0 * se);
}

TEST(Gamma, ExponentialCase) {
  Stream s(41);
  const auto v = draws(1'000'000, [&] { return gamma_sample(1.0, 2.0, s); });
  EXPECT_NEAR(stats::mean(v), 2.0, 3.0 * 2.0 / 1e3);
}

TEST(Gamma, MomentFormula) {
  Stream s(42);
  const auto v = draws(1'000'000, [&] { return gamma_sample(2.51, 2.0, s); });
  const auto est = stats::mean_with_error(v);
  EXPECT_NEAR(est.value, 5.02, 3.0 * est.std_error);
  EXPECT_NEAR(stats::variance(v), 2.51 * 4.0, 0.05);
}

TEST(Gamma, HalfShapeIsChiSquareOne) {
  Stream s(43);
  const auto v = draws(1'000'000, [&] { return gamma_sample(0.5, 2.0, s); });
  boost::math::chi_squared chi(1.0);
  EXPECT_LT(stats::ks_distance(v, [&](double x) { return boost::math::cdf(chi, x); }), 0.002);
}

TEST(Gamma, RejectsNonPositive) {
  Stream s(44);
  EXPECT_THROW(gamma_sample(0.0, 1.0, s), DomainError);
  EXPECT_THROW(gamma_sample(1.0, -1.0, s), DomainError);
}

TEST(Samplers, DeterministicGivenSeed) {
  Stream a(99), b(99);
  const TiltedInnovationSpec tilt{InnovationSpec::standardized_t(4.0), 2.6};
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(sample_innovation(InnovationSpec::standardized_t(4.0), a),
              sample_innovation(InnovationSpec::standardized_t(4.0), b));
    EXPECT_EQ(sample_tilted_innovation(tilt, a), sample_tilted_innovation(tilt, b));
    EXPECT_EQ(gamma_sample(0.7, 1.3, a), gamma_sample(0.7, 1.3, b));
    EXPECT_EQ(sample_standard_pareto(2.0, a), sample_standard_pareto(2.0, b));
  }
}
