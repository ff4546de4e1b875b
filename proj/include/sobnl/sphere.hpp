#pragma once

#include <cstdint>
#include <numbers>
#include <vector>

#include "sobnl/geometry.hpp"
#include "sobnl/jet.hpp"
#include "sobnl/multiindex.hpp"

namespace sobnl {

// Quadrature on the unit sphere S^{n-1}.
//   n=1: the two points {-1, +1} with unit weights (counting measure).
//   n=2: uniform midpoint rule in the angle, weights 2 pi / N.
//   n=3: Gauss-Legendre in the polar cosine times uniform azimuth.
// Weights sum to the sphere measure omega_{n-1} = 2, 2 pi, 4 pi.
struct SphereRule {
  int dim = 1;
  std::vector<Vec> nodes;
  std::vector<double> weights;

  static SphereRule make(int n, int polar = 32, int azimuth = 64);

  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

inline double sphere_measure(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
  }
  throw std::invalid_argument("sphere_measure: n must be 1..3");
}

// Coefficient vector indexed by the multi-indices of order exactly m.
struct CoefficientVector {
  int dim = 1;
  int m = 1;
  std::vector<double> v;  // aligned with multiindices_of_order(dim, m)
};

// ( int_{S^{n-1}} | sum_{|a|=m} v_a e^a / a! |^p de )^{1/p} under the rule.
double coeff_sphere_norm(const CoefficientVector& c, double p, const SphereRule& rule);

// Limit the remainder sweeps converge to:
//   int_Omega int_{S^{n-1}} | sum_{|a|=m} D^a F(x) e^a / a! |^p de dx,
// with the x-integral on the midpoint lattice of `grid`. Needs a jet of
// order >= m.
double sphere_limit_target(const Jet& F, int m, double p, const SphereRule& rule,
                           const Grid& grid);

// Sampled equivalence constants between the sphere norm and the Euclidean
// norm on coefficient space: extremes of ||v||_sphere over |v|_2 = 1.
struct NormEquivalence {
  double c_lower = 0.0;
  double c_upper = 0.0;
};
NormEquivalence norm_equivalence_probe(int n, int m, double p, const SphereRule& rule,
                                       int samples, uint64_t seed = 0x5eed5eed);

}  // namespace sobnl
