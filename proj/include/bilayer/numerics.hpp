#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "bilayer/error.hpp"

namespace bilayer {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached n-point rule; the returned reference stays valid for the program lifetime.
const GaussRule& gauss_legendre(int n);

/// Neumaier-compensated running sum. The result depends on the order of the
/// terms, so reductions always feed terms in node order.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double ordered_sum(std::span<const double> terms);

/// Integral of f over [a, b] with the n-point Gauss-Legendre rule.
template <class F>
double gauss_integrate(F&& f, double a, double b, int n) {
  const GaussRule& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  CompensatedSum sum;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
  }
  return half * sum.value();
}

struct RootResult {
  double x;
  int iterations;
};

/// Newton iteration for an increasing function on [lo, hi] with
/// f(lo) <= 0 <= f(hi). Steps leaving the current bracket fall back to
/// bisection. `f_df(x)` returns {f(x), f'(x)}.
template <class F>
RootResult safeguarded_newton(F&& f_df, double lo, double hi, double x0, double abs_tol,
                              int max_iter = 200) {
  double x = (x0 > lo && x0 < hi) ? x0 : 0.5 * (lo + hi);
  for (int it = 1; it <= max_iter; ++it) {
    const auto [f, df] = f_df(x);
    if (f == 0.0) return {x, it};
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next = (df > 0.0) ? x - f / df : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step <= abs_tol || hi - lo <= abs_tol) return {x, it};
  }
  throw Error(ErrorKind::root_solve, "safeguarded Newton did not converge in " +
                                         std::to_string(max_iter) + " iterations");
}

/// Worker count from BILAYER_THREADS (default 1).
int thread_count();

/// Runs body(i) for i in [0, n) over contiguous chunks. Results must be
/// written to per-index slots; an exception from the lowest failing chunk is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace bilayer
