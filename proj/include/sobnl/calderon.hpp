#pragma once

#include <string>
#include <vector>

#include "sobnl/geometry.hpp"
#include "sobnl/jet.hpp"

namespace sobnl {

struct LocalFit {
  std::vector<MultiIndex> basis;  // |alpha| <= degree
  std::vector<double> coeff;      // for the basis (x-y)^alpha / alpha!
  double residual = 0.0;          // (avg_B |f - P|^p)^{1/p} over the sample points
  int iterations = 0;             // 1 when p == 2
  int64_t points = 0;
};

// Best degree-`degree` polynomial centered at y, fit to f0 over the active
// lattice cells in the open ball B(y, eps): exact least squares for p = 2,
// IRLS (tol 1e-8, max 100 iterations, ridge 1e-12) otherwise. Throws when
// the ball holds fewer points than the basis or the system is
// rank-deficient.
LocalFit best_local_polynomial(const Jet& F, const Vec& y, double eps, int degree,
                               double p, const Grid& grid);

double local_fit_value(const LocalFit& fit, const Vec& y, const Vec& x);

// sup over the admissible epsilons (B(y, eps) inside the domain) of
// eps^{-m} * residual of the degree-(m-1) fit.
struct MaximalValue {
  double value = 0.0;
  double argmax_eps = 0.0;
  bool growing = false;  // value keeps rising as eps shrinks (unbounded suspect)
  int admissible = 0;
};

MaximalValue maximal_function(const Jet& F, const Vec& y, int m, double p,
                              const std::vector<double>& eps_grid, const Grid& grid);

struct MaximalProfile {
  std::vector<Vec> centers;
  std::vector<double> values;
  std::vector<double> argmax_eps;
  std::vector<int> growing;
  std::vector<double> eps_grid;
  int fit_degree = 0;
  double lp_norm = 0.0;  // discrete L^p norm of the values over the centers
  double max_value = 0.0;
};

// Centers on a spacing-`center_spacing` lattice, keeping those with at
// least one admissible epsilon; the fit sees a spacing-`h` lattice.
MaximalProfile maximal_profile(const Jet& F, int m, double p,
                               const std::vector<double>& eps_grid, const Domain& dom,
                               double h, double center_spacing, int threads);

std::string maximal_profile_csv(const MaximalProfile& prof, int dim);

}  // namespace sobnl
