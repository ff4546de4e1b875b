#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sobnl/geometry.hpp"
#include "sobnl/jet.hpp"

namespace sobnl {

// Closed dyadic cube [c 2^{-l}, (c+1) 2^{-l}]^n with the exact range of the
// boundary distance over it, recorded at construction time.
struct WhitneyCube {
  int level = 0;
  std::array<int64_t, kMaxDim> coord{0, 0, 0};
  double dist_lo = 0.0;
  double dist_hi = 0.0;

  double side() const;
  double diameter(int dim) const;
  Box box(int dim) const;
  Box dilated(int dim) const;  // (9/8)Q
};

// Dyadic cover of a bounded open set at coarse scale 2^{-k}: the region
// deeper than sqrt(n) 2^{-k+1} is covered by mesh-k cubes, and each shell
//   { sqrt(n) 2^{-l+1} < dist <= sqrt(n) 2^{-l+2} },  l > k,
// by the maximal mesh-l cubes meeting it. The recursion descends only
// through unselected cubes, so maximality is automatic. Refinement stops at
// `max_level`; points closer to the complement than resolved_distance()
// stay uncovered (reported via truncated_count).
class WhitneyDecomposition {
 public:
  WhitneyDecomposition(const Domain& omega, int k, int max_level);

  const Domain& domain() const { return om_; }
  int dim() const { return om_.dim(); }
  int coarse_level() const { return k_; }
  int max_level() const { return max_level_; }
  double resolved_distance() const;
  int64_t truncated_count() const { return truncated_; }

  const std::vector<WhitneyCube>& cubes() const { return cubes_; }

  // Index of the cube whose half-open box [lo, hi) contains x, or -1.
  int locate(const Vec& x) const;

  // Ascending indices of all cubes whose closed dilate contains x.
  std::vector<int> dilates_containing(const Vec& x) const;

 private:
  Domain om_;
  int k_ = 0;
  int max_level_ = 0;
  int64_t truncated_ = 0;
  std::vector<WhitneyCube> cubes_;

  struct CoordHash {
    size_t operator()(const std::array<int64_t, kMaxDim>& c) const;
  };
  using LevelMap = std::unordered_map<std::array<int64_t, kMaxDim>, int, CoordHash>;
  std::vector<std::pair<int, LevelMap>> by_level_;  // ascending level

  void index_cubes();
};

// Structural checks on a decomposition (exact where the distance ranges
// are exact; probe-based for the contact searches).
struct WhitneyCheck {
  bool inside = false;       // every cube closure lies in the set
  bool size_bound = false;   // diam <= sqrt(n) 2^{-k} for every cube
  bool band = false;         // diam <= dist(Q, complement) <= 4 diam for fine cubes
  bool disjoint = false;     // no duplicate and no ancestor pairs
  bool covering = false;     // sampled points deeper than resolved_distance are covered
  int max_overlap = 0;       // max count of dilates containing a probe point
  bool overlap_bound = false;    // max_overlap <= 2^n
  double max_dilate_ratio = 0.0; // max side ratio among dilate-sharing cubes
  bool ratio_bound = false;      // max_dilate_ratio <= 4
  bool all() const {
    return inside && size_bound && band && disjoint && covering && overlap_bound &&
           ratio_bound;
  }
};

WhitneyCheck check_whitney(const WhitneyDecomposition& dec, int covering_samples = 4096,
                           uint64_t seed = 0x77171e5u);

// Smooth partition subordinate to the dilated cubes: per-axis plateau bumps
// equal to 1 on Q, supported on (9/8)Q, normalized by their sum.
class PartitionOfUnity {
 public:
  explicit PartitionOfUnity(const WhitneyDecomposition& dec);

  struct Term {
    int cube;
    double phi;
  };
  // All nonzero phi_i(x), ascending cube index; throws when the
  // unnormalized sum falls below 1e-8 (x escapes the covered region).
  std::vector<Term> at(const Vec& x) const;

  double phi(int cube, const Vec& x) const;

  // All partials D^beta phi_cube(x), |beta| <= ord (ord <= 4), aligned with
  // enumerate_multiindices(dim, ord). The bumps factor per axis, so these
  // come from truncated Taylor arithmetic, not finite differences.
  std::vector<double> phi_derivatives(int cube, const Vec& x, int ord) const;

  // Unnormalized bump of one cube (1 on the cube, 0 outside its dilate).
  double bump(int cube, const Vec& x) const;

  const WhitneyDecomposition& decomposition() const { return *dec_; }

 private:
  const WhitneyDecomposition* dec_;
};

// Average over the active lattice cells of `grid` whose centers lie in
// `cell` of the Taylor polynomial of F centered there, evaluated at x.
// Requires at least 2^n such centers ("unresolved cube" otherwise).
double averaged_taylor(const Jet& F, const Box& cell, const Grid& grid, const Vec& x,
                       int order);

// w(x) = sum_i phi_i(x) avg_{(9/8)Q_i} T_y F(x): per-cube averaged Taylor
// polynomials recentered at the dilate centers, blended by the partition.
class Reconstruction {
 public:
  Reconstruction(const Jet& F, const WhitneyDecomposition& dec, const Grid& grid);

  // NaN when x is outside the covered region.
  double value(const Vec& x) const;

  // Values at the centers of the given active cells (NaN when uncovered);
  // slots are independent, so threading cannot change the output.
  std::vector<double> sample(const Grid& grid, const std::vector<int64_t>& cells,
                             int threads) const;

  const PartitionOfUnity& partition() const { return pou_; }

 private:
  const WhitneyDecomposition* dec_;
  PartitionOfUnity pou_;
  std::vector<MultiIndex> idx_;
  std::vector<Vec> center_;                 // dilate centers
  std::vector<std::vector<double>> coeff_;  // recentered averaged coefficients
};

// L^p convergence table of the reconstruction sequence over coarse levels:
// for |alpha| < m the distance ||f_alpha - D^alpha w^k||, for |alpha| = m
// the bare norm ||D^alpha w^k||; derivatives by central differences on the
// sampling lattice. The evaluation region is fixed across levels.
struct RateTable {
  std::vector<int> levels;
  std::vector<MultiIndex> alphas;
  std::vector<std::vector<double>> norms;  // [level][alpha]
  std::vector<double> slopes;              // log2 LSQ slope per alpha, |alpha| < m
  std::vector<bool> exact;                 // norm below 1e-13 everywhere
  bool mth_bounded = false;  // last <= 1.25 * first for every |alpha| = m
  int max_level = 0;
  double resolved_distance = 0.0;
  int64_t eval_cells = 0;
};

RateTable reconstruction_rates(const Jet& F, const Domain& omega, int m, double p,
                               const std::vector<int>& levels, double h, int threads);

std::string whitney_cubes_json(const WhitneyDecomposition& dec);

}  // namespace sobnl
