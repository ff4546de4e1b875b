#pragma once

#include <memory>
#include <vector>

#include "sobnl/catalog.hpp"
#include "sobnl/geometry.hpp"
#include "sobnl/multiindex.hpp"

namespace sobnl {

// A Whitney jet of order k: one scalar field per multi-index |alpha| <= k.
// Analytic jets evaluate catalog derivatives exactly; sampled jets hold node
// values on a uniform lattice and interpolate multilinearly (second-class
// path with O(h^2) bias, kept for data that only exists as samples).
class Jet {
 public:
  static Jet analytic(CatalogEntryPtr f, int order);
  // Sample all components of f at the nodes of a lattice with spacing ~h
  // over `box` (nodes include the box faces so interpolation covers it).
  static Jet sampled(const CatalogEntryPtr& f, int order, const Box& box, double h);

  int dim() const { return dim_; }
  int order() const { return order_; }
  bool is_analytic() const { return analytic_ != nullptr; }
  const CatalogEntry* analytic_source() const { return analytic_.get(); }

  // alpha must satisfy |alpha| <= order().
  double component(const MultiIndex& alpha, const Vec& x) const;

  double f0(const Vec& x) const { return component(MultiIndex::zero(dim_), x); }

  const std::vector<MultiIndex>& indices() const { return indices_; }

 private:
  Jet() = default;
  int rank_of(const MultiIndex& alpha) const;

  int dim_ = 0;
  int order_ = 0;
  std::vector<MultiIndex> indices_;
  CatalogEntryPtr analytic_;

  // sampled source
  Box box_{};
  Vec h_{0, 0, 0};
  std::array<int32_t, kMaxDim> nodes_{1, 1, 1};
  std::vector<std::vector<double>> values_;  // per component, node-major
};

// Taylor polynomial of order k of the jet centered at y, evaluated at x:
//   sum_{|alpha| <= k} f_alpha(y) (x - y)^alpha / alpha!
double taylor_polynomial(const Jet& F, const Vec& y, const Vec& x, int k);

// R^k F(x, y) = f_0(x) - T_y^k F(x).
double taylor_remainder(const Jet& F, const Vec& x, const Vec& y, int k);

// Shifted remainder of the component family:
//   R_j^{k-|j|} F(x, y) = f_j(x) - sum_{|j + alpha| <= k} f_{j+alpha}(y) (x-y)^alpha / alpha!
double shifted_remainder(const Jet& F, const Vec& x, const Vec& y,
                         const MultiIndex& j, int k);

// m-th order difference along the segment from x to y:
//   sum_{i=0}^m (-1)^i binom(m, i) f((m-i)/m x + i/m y)
// The overload with a domain throws if any sample point leaves it.
double mth_difference(const Jet& F, const Vec& x, const Vec& y, int m);
double mth_difference(const Jet& F, const Vec& x, const Vec& y, int m, const Domain& dom);

}  // namespace sobnl
