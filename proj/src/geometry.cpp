#include "sobnl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sobnl {

namespace {

// dist(x, hole box) as a set distance, exact.
double box_exterior_distance(const Box& b, const Vec& x) {
  double s = 0.0;
  for (int d = 0; d < b.dim; ++d) {
    double g = std::max({0.0, b.lo[d] - x[d], x[d] - b.hi[d]});
    s += g * g;
  }
  return std::sqrt(s);
}

// Signed inner distance to the faces of `b`: min over axes of the distance
// to the two facing hyperplanes; negative outside.
double box_inner_distance(const Box& b, const Vec& x) {
  double m = std::numeric_limits<double>::infinity();
  for (int d = 0; d < b.dim; ++d)
    m = std::min({m, x[d] - b.lo[d], b.hi[d] - x[d]});
  return m;
}

// Smallest distance between two boxes (0 if they touch or overlap).
double box_box_distance(const Box& a, const Box& b) {
  double s = 0.0;
  for (int d = 0; d < a.dim; ++d) {
    double g = std::max({0.0, b.lo[d] - a.hi[d], a.lo[d] - b.hi[d]});
    s += g * g;
  }
  return std::sqrt(s);
}

// Largest distance from any point of box `a` to box `b` as a set.
double box_box_max_distance(const Box& a, const Box& b) {
  double s = 0.0;
  for (int d = 0; d < a.dim; ++d) {
    double g = std::max({0.0, b.lo[d] - a.lo[d], a.hi[d] - b.hi[d]});
    s += g * g;
  }
  return std::sqrt(s);
}

// Max over the interval [lo, hi] of the tent min(t - a, b - t); the tent is
// concave, so the max sits at the clamped apex.
double tent_max(double a, double b, double lo, double hi) {
  double apex = 0.5 * (a + b);
  double t = std::clamp(apex, lo, hi);
  return std::min(t - a, b - t);
}

bool boxes_closure_disjoint(const Box& a, const Box& b) {
  return box_box_distance(a, b) > 0.0;
}

}  // namespace

Domain Domain::box(const Vec& lo, const Vec& hi, int dim) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Domain: dimension must be 1..3");
  for (int d = 0; d < dim; ++d)
    if (!(lo[d] < hi[d])) throw std::invalid_argument("Domain: box with empty side");
  Domain dom;
  dom.dim_ = dim;
  dom.comps_.push_back({Box{lo, hi, dim}, std::nullopt});
  return dom;
}

Domain Domain::with_hole(const Box& outer, const Box& hole) {
  Domain dom = box(outer.lo, outer.hi, outer.dim);
  if (hole.dim != outer.dim) throw std::invalid_argument("Domain: hole dimension mismatch");
  for (int d = 0; d < outer.dim; ++d)
    if (!(hole.lo[d] < hole.hi[d])) throw std::invalid_argument("Domain: hole with empty side");
  dom.comps_[0].hole = hole;
  return dom;
}

Domain Domain::disjoint_union(const std::vector<Component>& comps, int dim) {
  if (comps.empty()) throw std::invalid_argument("Domain: empty union");
  Domain dom;
  dom.dim_ = dim;
  for (const auto& c : comps) {
    if (c.box.dim != dim) throw std::invalid_argument("Domain: component dimension mismatch");
    dom.comps_.push_back(c);
  }
  for (size_t i = 0; i < comps.size(); ++i)
    for (size_t j = i + 1; j < comps.size(); ++j)
      if (!boxes_closure_disjoint(comps[i].box, comps[j].box))
        throw std::invalid_argument("Domain: union components must have disjoint closures");
  return dom;
}

Domain Domain::l_shape() {
  return with_hole(Box{vec2(0, 0), vec2(1, 1), 2}, Box{vec2(0.5, 0.5), vec2(1, 1), 2});
}

Domain Domain::square_with_hole(double a) {
  if (!(a > 0.0 && a < 0.5)) throw std::invalid_argument("Domain: hole half-width out of range");
  return with_hole(Box{vec2(0, 0), vec2(1, 1), 2},
                   Box{vec2(0.5 - a, 0.5 - a), vec2(0.5 + a, 0.5 + a), 2});
}

Domain Domain::inner(double extra) const {
  if (extra < 0.0) throw std::invalid_argument("Domain: negative margin");
  Domain dom = *this;
  dom.margin_ += extra;
  return dom;
}

Box Domain::bounding_box() const {
  Box bb = comps_[0].box;
  for (const auto& c : comps_) {
    for (int d = 0; d < dim_; ++d) {
      bb.lo[d] = std::min(bb.lo[d], c.box.lo[d]);
      bb.hi[d] = std::max(bb.hi[d], c.box.hi[d]);
    }
  }
  if (margin_ > 0.0) {
    for (int d = 0; d < dim_; ++d) {
      bb.lo[d] += margin_;
      bb.hi[d] -= margin_;
      if (!(bb.lo[d] < bb.hi[d]))
        throw std::invalid_argument("Domain: margin exhausts the domain");
    }
  }
  return bb;
}

bool Domain::contains(const Vec& x) const { return boundary_distance(x) > 0.0; }

double Domain::boundary_distance(const Vec& x) const {
  double best = 0.0;
  for (const auto& c : comps_) {
    double g = box_inner_distance(c.box, x);
    if (c.hole) g = std::min(g, box_exterior_distance(*c.hole, x));
    best = std::max(best, g);
  }
  return std::max(0.0, best - margin_);
}

int Domain::component_of(const Vec& x) const {
  for (size_t i = 0; i < comps_.size(); ++i)
    if (comps_[i].box.contains(x)) return static_cast<int>(i);
  return -1;
}

Interval Domain::distance_range(const Box& cube) const {
  // Per component: raw distance g_c = min(inner box distance, hole distance),
  // clamped at 0. The domain distance is max over components (disjoint
  // closures make the max exact for both inf and sup, see below).
  double lo = 0.0, hi = 0.0;
  for (const auto& c : comps_) {
    // inf over the cube: min of per-piece infima (inf of a min).
    double inf_box = std::numeric_limits<double>::infinity();
    for (int d = 0; d < dim_; ++d)
      inf_box = std::min({inf_box,
                          cube.lo[d] - c.box.lo[d],
                          c.box.hi[d] - cube.hi[d]});
    double inf_c = inf_box;
    if (c.hole) inf_c = std::min(inf_c, box_box_distance(cube, *c.hole));
    inf_c = std::max(0.0, inf_c);

    // sup over the cube. Without a hole the inner distance is separable:
    // max over the cube of min_d tent_d = min_d (per-axis tent max).
    double sup_c;
    double sup_box = std::numeric_limits<double>::infinity();
    for (int d = 0; d < dim_; ++d)
      sup_box = std::min(sup_box, tent_max(c.box.lo[d], c.box.hi[d], cube.lo[d], cube.hi[d]));
    if (!c.hole) {
      sup_c = std::max(0.0, sup_box);
    } else {
      // Bisect on t: is there a cube point with inner distance >= t and hole
      // distance >= t? The first constraint shrinks the cube to an exact
      // sub-box; the second asks for the farthest sub-box point from the
      // hole, which is separable per axis.
      double t_lo = 0.0, t_hi = std::max(0.0, sup_box);
      for (int it = 0; it < 80 && t_hi - t_lo > 1e-15 * (1.0 + t_hi); ++it) {
        double t = 0.5 * (t_lo + t_hi);
        Box shrunk;
        shrunk.dim = dim_;
        bool feasible = true;
        for (int d = 0; d < dim_; ++d) {
          shrunk.lo[d] = std::max(cube.lo[d], c.box.lo[d] + t);
          shrunk.hi[d] = std::min(cube.hi[d], c.box.hi[d] - t);
          if (shrunk.lo[d] > shrunk.hi[d]) feasible = false;
        }
        if (feasible) feasible = box_box_max_distance(shrunk, *c.hole) >= t;
        if (feasible)
          t_lo = t;
        else
          t_hi = t;
      }
      sup_c = t_lo;
    }
    lo = std::max(lo, inf_c);  // max over components of per-component inf
    hi = std::max(hi, sup_c);
  }
  lo = std::max(0.0, lo - margin_);
  hi = std::max(0.0, hi - margin_);
  return {lo, hi};
}

Grid::Grid(const Domain& dom, double h) : dim_(dom.dim()), dom_(dom) {
  if (!(h > 0.0)) throw std::invalid_argument("Grid: spacing must be positive");
  Box bb = dom.bounding_box();
  int64_t total = 1;
  for (int d = 0; d < dim_; ++d) {
    double len = bb.side(d);
    auto count = static_cast<int32_t>(std::llround(len / h));
    count = std::max<int32_t>(count, 1);
    counts_[d] = count;
    h_[d] = len / count;
    origin_[d] = bb.lo[d];
    total *= count;
  }
  if (total > (int64_t(1) << 24))
    throw std::invalid_argument("Grid: lattice too large");
  index_.assign(total, -1);
  std::array<int32_t, kMaxDim> c{0, 0, 0};
  for (int32_t i0 = 0; i0 < counts_[0]; ++i0) {
    c[0] = i0;
    for (int32_t i1 = 0; i1 < counts_[1]; ++i1) {
      c[1] = i1;
      for (int32_t i2 = 0; i2 < counts_[2]; ++i2) {
        c[2] = i2;
        Vec x = origin_;
        for (int d = 0; d < dim_; ++d) x[d] = origin_[d] + (c[d] + 0.5) * h_[d];
        if (dom_.contains(x)) {
          int64_t flat = (int64_t(i0) * counts_[1] + i1) * counts_[2] + i2;
          index_[flat] = static_cast<int64_t>(active_.size());
          active_.push_back(c);
        }
      }
    }
  }
  if (active_.empty()) throw std::invalid_argument("Grid: no cell centers inside the domain");
}

double Grid::max_spacing() const {
  double m = 0.0;
  for (int d = 0; d < dim_; ++d) m = std::max(m, h_[d]);
  return m;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int d = 0; d < dim_; ++d) v *= h_[d];
  return v;
}

Vec Grid::center(int64_t a) const {
  Vec x{0, 0, 0};
  for (int d = 0; d < dim_; ++d) x[d] = origin_[d] + (active_[a][d] + 0.5) * h_[d];
  return x;
}

int64_t Grid::active_at(const std::array<int32_t, kMaxDim>& c) const {
  for (int d = 0; d < dim_; ++d)
    if (c[d] < 0 || c[d] >= counts_[d]) return -1;
  int64_t flat = (int64_t(c[0]) * counts_[1] + c[1]) * counts_[2] + c[2];
  return index_[flat];
}

std::vector<int64_t> Grid::active_in(const Domain& dom) const {
  std::vector<int64_t> out;
  for (int64_t a = 0; a < active_count(); ++a)
    if (dom.contains(center(a))) out.push_back(a);
  return out;
}

}  // namespace sobnl
