#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "sobnl/mollifier.hpp"
#include "sobnl/multiindex.hpp"

namespace sobnl {

// Radial kernel kappa(r) >= 0 supported on (0, support), smooth between
// cuts. `flat` marks kernels constant on their support (power-mollifier
// remainder kernel, ball indicator), which take an exact fast path.
struct RadialKernel {
  double support = 0.0;
  bool flat = false;
  double flat_value = 0.0;
  bool singular_origin = false;
  std::vector<double> cuts;  // interior breakpoints, ascending
  std::function<double(double)> value;
  std::function<double(double)> deriv;

  static RadialKernel indicator(double eps);
  // r^{q} restricted to the ball (0, eps); q = 0 degrades to the indicator.
  static RadialKernel monomial_ball(double q, double eps);
  // rho_eps(r) / r^{s} for the given mollifier family.
  static RadialKernel remainder(const MollifierFamily& mol, double eps, double s);
};

// Exact mass of the product hat over the centered ball:
//   V(R) = int_{|u| < R} prod_d (h_d - |u_d - c_d|)_+ du,
// the double integral of the ball indicator over a pair of lattice cells
// whose centers differ by c. Piecewise Gauss after a trig substitution;
// accurate to ~1e-14 relative.
double cellpair_ball_overlap(int dim, const Vec& c, const Vec& h, double R);

// One lattice offset with its integrated kernel mass
//   w = int kappa(|u|) prod_d (h_d - |u_d - delta_d h_d|)_+ du.
// Offsets whose cell pair touches the diagonal get the midpoint-regularized
// value kappa(|delta h|) (prod h)^2 when the kernel is singular at 0.
struct OffsetWeight {
  std::array<int32_t, kMaxDim> delta{0, 0, 0};
  double w = 0.0;
  double dist = 0.0;  // center distance
};

// All nonzero offsets whose cell pair meets the kernel support, with
// weights; deterministic enumeration order.
std::vector<OffsetWeight> pair_weights(int dim, const Vec& h, const RadialKernel& kernel);

}  // namespace sobnl
