#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "bilayer/numerics.hpp"

using namespace bilayer;

TEST(GaussLegendre, WeightsSumToTwo) {
  for (int n : {1, 2, 5, 32, 129}) {
    const auto& rule = gauss_legendre(n);
    double s = 0.0;
    for (double w : rule.weights) s += w;
    EXPECT_NEAR(s, 2.0, 1e-13) << n;
  }
}

TEST(GaussLegendre, ExactForPolynomialsUpToDegree2nMinus1) {
  for (int n : {2, 4, 8, 16}) {
    for (int k = 0; k < 2 * n; ++k) {
      const double got = gauss_integrate([k](double x) { return std::pow(x, k); }, -1.0, 1.0, n);
      const double expect = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
      EXPECT_NEAR(got, expect, 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

TEST(GaussLegendre, SmoothIntegrand) {
  const double got = gauss_integrate([](double x) { return std::exp(x); }, 0.0, 1.0, 16);
  EXPECT_NEAR(got, std::numbers::e - 1.0, 1e-14);
}

TEST(GaussLegendre, RejectsZeroNodes) { EXPECT_THROW(gauss_legendre(0), Error); }

TEST(CompensatedSum, RecoversCancelledTerms) {
  CompensatedSum s;
  s += 1e16;
  s += 1.0;
  s += -1e16;
  EXPECT_EQ(s.value(), 1.0);
  std::vector<double> terms(1000, 0.1);
  EXPECT_NEAR(ordered_sum(terms), 100.0, 1e-13);
}

TEST(SafeguardedNewton, CubeRoot) {
  const auto r = safeguarded_newton(
      [](double x) { return std::pair{x * x * x - 2.0, 3.0 * x * x}; }, 0.0, 2.0, 1.0, 1e-15);
  EXPECT_NEAR(r.x, std::cbrt(2.0), 1e-14);
  EXPECT_LT(r.iterations, 20);
}

TEST(SafeguardedNewton, FlatDerivativeFallsBackToBisection) {
  // Zero slope at the start point forces a bisection step.
  const auto r = safeguarded_newton(
      [](double x) { return std::pair{x * x * x, 3.0 * x * x}; }, -1.0, 2.0, 0.0 + 1e-300, 1e-12);
  EXPECT_NEAR(r.x, 0.0, 1e-8);
}

TEST(SafeguardedNewton, ReportsNonConvergence) {
  EXPECT_THROW(safeguarded_newton([](double x) { return std::pair{x - 0.3, 0.0}; }, 0.0, 1.0, 0.5,
                                  0.0, 5),
               Error);
}

TEST(ParallelFor, ResultsIndependentOfThreadCount) {
  std::vector<double> a(1000);
  std::vector<double> b(1000);
  setenv("BILAYER_THREADS", "1", 1);
  parallel_for(a.size(), [&](std::size_t i) { a[i] = std::sin(0.1 * i); });
  setenv("BILAYER_THREADS", "3", 1);
  EXPECT_EQ(thread_count(), 3);
  parallel_for(b.size(), [&](std::size_t i) { b[i] = std::sin(0.1 * i); });
  unsetenv("BILAYER_THREADS");
  EXPECT_EQ(a, b);
  EXPECT_EQ(thread_count(), 1);
}

TEST(ParallelFor, PropagatesExceptions) {
  setenv("BILAYER_THREADS", "2", 1);
  EXPECT_THROW(parallel_for(10,
                            [](std::size_t i) {
                              if (i == 7) throw Error(ErrorKind::quadrature, "boom");
                            }),
               Error);
  unsetenv("BILAYER_THREADS");
}
