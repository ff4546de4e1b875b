#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sobnl/multiindex.hpp"

namespace sobnl {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct Box {
  Vec lo{0, 0, 0};
  Vec hi{0, 0, 0};
  int dim = 0;

  double side(int d) const { return hi[d] - lo[d]; }
  double volume() const {
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= side(d);
    return v;
  }
  bool contains(const Vec& x, double pad = 0.0) const {
    for (int d = 0; d < dim; ++d)
      if (x[d] < lo[d] - pad || x[d] > hi[d] + pad) return false;
    return true;
  }
  bool contains_strictly(const Vec& x) const {
    for (int d = 0; d < dim; ++d)
      if (x[d] <= lo[d] || x[d] >= hi[d]) return false;
    return true;
  }
  Vec center() const {
    return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])};
  }
};

// Open set built from axis-aligned pieces: a disjoint union of components,
// each a box minus at most one closed hole box, shrunk by an optional
// Euclidean inner margin. This family is closed under the margin operation
// and admits exact distance-to-complement values and exact distance ranges
// over axis-aligned cubes, which the Whitney construction relies on.
class Domain {
 public:
  struct Component {
    Box box;
    std::optional<Box> hole;
  };

  static Domain box(const Vec& lo, const Vec& hi, int dim);
  static Domain interval(double a, double b) { return box(vec1(a), vec1(b), 1); }
  static Domain square(double a, double b) { return box(vec2(a, a), vec2(b, b), 2); }
  static Domain with_hole(const Box& outer, const Box& hole);
  static Domain disjoint_union(const std::vector<Component>& comps, int dim);

  // L-shape: unit square minus its closed upper-right quarter.
  static Domain l_shape();
  // Unit square minus a centered closed hole of half-width `a`.
  static Domain square_with_hole(double a = 0.25);

  int dim() const { return dim_; }
  const std::vector<Component>& components() const { return comps_; }
  double margin() const { return margin_; }

  // Same solid with the membership threshold pushed inward by `extra`.
  Domain inner(double extra) const;

  Box bounding_box() const;

  bool contains(const Vec& x) const;

  // dist(x, complement of the open set); zero outside.
  double boundary_distance(const Vec& x) const;

  // Exact range of boundary_distance over an axis-aligned cube.
  Interval distance_range(const Box& cube) const;

  // Index of the component whose closure contains x, or -1.
  int component_of(const Vec& x) const;

 private:
  int dim_ = 0;
  double margin_ = 0.0;
  std::vector<Component> comps_;
};

// Midpoint-rule lattice over the bounding box of a domain. Cell counts are
// rounded so the cells tile the box exactly; per-axis spacing may differ
// from the requested h by the rounding (reported via spacing()).
class Grid {
 public:
  Grid(const Domain& dom, double h);

  int dim() const { return dim_; }
  const Domain& domain() const { return dom_; }
  const Vec& spacing() const { return h_; }
  double max_spacing() const;
  double cell_volume() const;

  int64_t active_count() const { return static_cast<int64_t>(active_.size()); }
  // Cell multi-coordinates and center of the a-th active cell.
  const std::array<int32_t, kMaxDim>& cell(int64_t a) const { return active_[a]; }
  Vec center(int64_t a) const;

  // Active index of the cell at integer coords, or -1 (also -1 off-lattice).
  int64_t active_at(const std::array<int32_t, kMaxDim>& c) const;

  int32_t cells_along(int d) const { return counts_[d]; }

  // All active cells whose center lies in `dom` (a sub-domain selector).
  std::vector<int64_t> active_in(const Domain& dom) const;

 private:
  int dim_;
  Domain dom_;
  Vec h_{0, 0, 0};
  Vec origin_{0, 0, 0};
  std::array<int32_t, kMaxDim> counts_{1, 1, 1};
  std::vector<std::array<int32_t, kMaxDim>> active_;
  std::vector<int64_t> index_;  // dense cell -> active id, -1 if inactive
};

}  // namespace sobnl
