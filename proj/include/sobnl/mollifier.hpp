#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sobnl/multiindex.hpp"

namespace sobnl {

// Radial mollifier family rho_eps normalized by
//   int_0^inf rho_eps(r) r^{n-1} dr = 1  for every eps.
//
// Kinds:
//   power:     rho_eps(r) = (n + mp) r^{mp} / eps^{n+mp} on (0, eps).
//              Divided by r^{mp} the kernel is exactly flat, so the
//              remainder functional loses its singularity.
//   log_type:  rho_eps(r) = eps r^{-n+eps} on (0, 1); the sweep parameter
//              enters as the exponent, support stays (0, 1).
//   gaussian:  truncated gaussian e^{-(r/eps)^2/2} on (0, 5 eps),
//              normalized numerically once per dimension.
//   table:     piecewise-linear shape rho_hat on given radii, scaled as
//              rho_eps(r) = eps^{-n} rho_hat(r/eps); renormalized at load.
class MollifierFamily {
 public:
  enum class Kind { Power, LogType, Gaussian, Table };

  static MollifierFamily power(int n, int m, double p);
  static MollifierFamily log_type(int n);
  static MollifierFamily gaussian(int n);
  static MollifierFamily table(int n, std::vector<double> r, std::vector<double> rho);

  Kind kind() const { return kind_; }
  int dim() const { return n_; }
  std::string kind_name() const;

  double density(double eps, double r) const;
  // Smallest radius beyond which the density vanishes.
  double support_radius(double eps) const;
  // For the Power kind, the exponent mp such that rho_eps(r)/r^{mp} is flat.
  double power_exponent() const;

  // Radii (within the support) where the density or its derivative jumps;
  // includes the support endpoint. Used by the kernel-weight quadrature.
  std::vector<double> breakpoints(double eps) const;
  // d(rho_eps)/dr away from breakpoints.
  double density_derivative(double eps, double r) const;
  // True when rho_eps(r)/r^s is unbounded as r -> 0 for the exponent s used
  // by the remainder kernels.
  bool kernel_singular_at_origin(double s) const;

 private:
  MollifierFamily() = default;

  Kind kind_ = Kind::Power;
  int n_ = 1;
  double mp_ = 0.0;          // power kind
  double gauss_norm_ = 0.0;  // gaussian kind
  std::vector<double> tr_, trho_;  // table kind, renormalized shape
};

struct MollifierReport {
  double normalization = 0.0;  // int_0^inf rho_eps r^{n-1} dr
  double tail_mass = 0.0;      // same integral over (delta, inf)
  bool converged = false;
  // int_0^inf r^p rho_eps(r) r^{n-1} dr when a p is supplied; the sweep
  // limits assume this vanishes as eps -> 0.
  std::optional<double> moment_p;
};

MollifierReport check_mollifier(const MollifierFamily& mol, double eps, double delta,
                                std::optional<double> p = std::nullopt);

}  // namespace sobnl
