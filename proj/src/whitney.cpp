#include "sobnl/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace sobnl {

double WhitneyCube::side() const { return std::ldexp(1.0, -level); }

double WhitneyCube::diameter(int dim) const {
  return std::sqrt(static_cast<double>(dim)) * side();
}

Box WhitneyCube::box(int dim) const {
  Box b;
  b.dim = dim;
  for (int d = 0; d < dim; ++d) {
    b.lo[d] = std::ldexp(static_cast<double>(coord[d]), -level);
    b.hi[d] = std::ldexp(static_cast<double>(coord[d] + 1), -level);
  }
  return b;
}

Box WhitneyCube::dilated(int dim) const {
  Box b = box(dim);
  const double w = side() / 16.0;
  for (int d = 0; d < dim; ++d) {
    b.lo[d] -= w;
    b.hi[d] += w;
  }
  return b;
}

size_t WhitneyDecomposition::CoordHash::operator()(
    const std::array<int64_t, kMaxDim>& c) const {
  uint64_t h = 0x9e3779b97f4a7c15ull;
  for (int d = 0; d < kMaxDim; ++d) {
    uint64_t v = static_cast<uint64_t>(c[d]) + 0x9e3779b97f4a7c15ull;
    v ^= v >> 30;
    v *= 0xbf58476d1ce4e5b9ull;
    v ^= v >> 27;
    h = h * 0x100000001b3ull ^ v;
  }
  return static_cast<size_t>(h);
}

namespace {

struct Builder {
  const Domain& om;
  int k, cap, dim;
  double sqn;
  std::vector<WhitneyCube>* out;
  int64_t truncated = 0;

  void visit(int level, const std::array<int64_t, kMaxDim>& c) {
    WhitneyCube q{level, c, 0.0, 0.0};
    const Interval r = om.distance_range(q.box(dim));
    if (!(r.hi > 0.0)) return;  // cube misses the set
    const double diam = sqn * q.side();
    const bool selected =
        level == k ? r.hi > 2.0 * diam : (r.hi > 2.0 * diam && r.lo <= 4.0 * diam);
    if (selected) {
      q.dist_lo = r.lo;
      q.dist_hi = r.hi;
      out->push_back(q);
      if (out->size() > size_t(1) << 22)
        throw std::invalid_argument("whitney: cube budget exceeded; lower max_level");
      return;
    }
    if (level == cap) {
      ++truncated;
      return;
    }
    std::array<int64_t, kMaxDim> cc{0, 0, 0};
    for (int bits = 0; bits < (1 << dim); ++bits) {
      for (int d = 0; d < dim; ++d) cc[d] = 2 * c[d] + ((bits >> d) & 1);
      visit(level + 1, cc);
    }
  }
};

}  // namespace

WhitneyDecomposition::WhitneyDecomposition(const Domain& omega, int k, int max_level)
    : om_(omega), k_(k), max_level_(max_level) {
  if (k < -8 || k > 26) throw std::invalid_argument("whitney: level k must be -8..26");
  if (max_level < k || max_level > 26)
    throw std::invalid_argument("whitney: max_level must be k..26");
  const Box bb = omega.bounding_box();
  Builder b{om_, k_, max_level_, om_.dim(), std::sqrt(static_cast<double>(om_.dim())),
            &cubes_};
  std::array<int64_t, kMaxDim> lo{0, 0, 0}, hi{0, 0, 0}, c{0, 0, 0};
  for (int d = 0; d < om_.dim(); ++d) {
    lo[d] = static_cast<int64_t>(std::floor(std::ldexp(bb.lo[d], k)));
    hi[d] = static_cast<int64_t>(std::floor(std::ldexp(bb.hi[d], k)));
  }
  for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0])
    for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1])
      for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2]) b.visit(k, c);
  truncated_ = b.truncated;
  if (cubes_.empty())
    throw std::invalid_argument(
        "whitney: no cube fits the set at these levels (margin too large or k too "
        "coarse)");
  index_cubes();
}

double WhitneyDecomposition::resolved_distance() const {
  return std::sqrt(static_cast<double>(dim())) * std::ldexp(1.0, -max_level_ + 1);
}

void WhitneyDecomposition::index_cubes() {
  for (int i = 0; i < static_cast<int>(cubes_.size()); ++i) {
    const auto& q = cubes_[static_cast<size_t>(i)];
    auto it = std::find_if(by_level_.begin(), by_level_.end(),
                           [&](const auto& p) { return p.first == q.level; });
    if (it == by_level_.end()) {
      by_level_.push_back({q.level, {}});
      it = std::prev(by_level_.end());
    }
    if (!it->second.emplace(q.coord, i).second)
      throw std::logic_error("whitney: duplicate cube");
  }
  std::sort(by_level_.begin(), by_level_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
}

int WhitneyDecomposition::locate(const Vec& x) const {
  std::array<int64_t, kMaxDim> c{0, 0, 0};
  for (const auto& [level, map] : by_level_) {
    for (int d = 0; d < dim(); ++d)
      c[d] = static_cast<int64_t>(std::floor(std::ldexp(x[d], level)));
    const auto it = map.find(c);
    if (it != map.end()) return it->second;
  }
  return -1;
}

std::vector<int> WhitneyDecomposition::dilates_containing(const Vec& x) const {
  std::vector<int> out;
  std::array<int64_t, kMaxDim> base{0, 0, 0}, c{0, 0, 0};
  for (const auto& [level, map] : by_level_) {
    for (int d = 0; d < dim(); ++d)
      base[d] = static_cast<int64_t>(std::floor(std::ldexp(x[d], level)));
    // dilate margin < side, so +-1 around the containing coord suffices
    int span_total = 1;
    for (int d = 0; d < dim(); ++d) span_total *= 3;
    for (int t = 0; t < span_total; ++t) {
      int tt = t;
      for (int d = 0; d < dim(); ++d, tt /= 3) c[d] = base[d] + tt % 3 - 1;
      const auto it = map.find(c);
      if (it == map.end()) continue;
      if (cubes_[static_cast<size_t>(it->second)].dilated(dim()).contains(x))
        out.push_back(it->second);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

WhitneyCheck check_whitney(const WhitneyDecomposition& dec, int covering_samples,
                           uint64_t seed) {
  WhitneyCheck ck;
  const int n = dec.dim();
  const auto& cubes = dec.cubes();
  const Domain& om = dec.domain();
  const double slack = 1.0 + 1e-12;

  ck.inside = true;
  ck.size_bound = true;
  ck.band = true;
  for (const auto& q : cubes) {
    const double diam = q.diameter(n);
    if (!(q.dist_lo > 0.0)) ck.inside = false;
    if (q.level < dec.coarse_level()) ck.size_bound = false;
    if (!(q.dist_lo * slack >= diam)) ck.band = false;
    if (q.level > dec.coarse_level() && !(q.dist_lo <= 4.0 * diam * slack))
      ck.band = false;
  }

  // ancestors present would overlap this cube (dyadic nesting)
  ck.disjoint = true;
  for (const auto& q : cubes) {
    std::array<int64_t, kMaxDim> c = q.coord;
    for (int lev = q.level - 1; lev >= dec.coarse_level(); --lev) {
      for (int d = 0; d < kMaxDim; ++d) c[d] >>= 1;
      Vec probe = {0, 0, 0};
      for (int d = 0; d < n; ++d)
        probe[d] = std::ldexp(static_cast<double>(c[d]) + 0.5, -lev);
      const int hit = dec.locate(probe);
      if (hit >= 0 && cubes[static_cast<size_t>(hit)].level == lev &&
          cubes[static_cast<size_t>(hit)].coord == c) {
        ck.disjoint = false;
        break;
      }
    }
    if (!ck.disjoint) break;
  }

  // probe points: cube corners, centers, face centers, random interior points
  std::vector<Vec> probes;
  for (const auto& q : cubes) {
    const Box b = q.box(n);
    probes.push_back(b.center());
    for (int bits = 0; bits < (1 << n); ++bits) {
      Vec v{0, 0, 0};
      for (int d = 0; d < n; ++d) v[d] = ((bits >> d) & 1) ? b.hi[d] : b.lo[d];
      probes.push_back(v);
    }
    for (int d = 0; d < n; ++d) {
      Vec v = b.center();
      v[d] = b.lo[d];
      probes.push_back(v);
      v[d] = b.hi[d];
      probes.push_back(v);
    }
  }
  const Box bb = om.bounding_box();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double resolved = dec.resolved_distance();
  ck.covering = true;
  int found = 0, attempts = 0;
  while (found < covering_samples && attempts < covering_samples * 400) {
    ++attempts;
    Vec x{0, 0, 0};
    for (int d = 0; d < n; ++d) x[d] = bb.lo[d] + uni(rng) * (bb.hi[d] - bb.lo[d]);
    if (!(om.boundary_distance(x) > resolved * (1.0 + 1e-9))) continue;
    ++found;
    const int cube = dec.locate(x);
    if (cube < 0 || !cubes[static_cast<size_t>(cube)].box(n).contains(x, 1e-12))
      ck.covering = false;
    probes.push_back(x);
  }
  if (found == 0) ck.covering = false;

  ck.max_overlap = 0;
  ck.max_dilate_ratio = 0.0;
  for (const auto& x : probes) {
    const auto ids = dec.dilates_containing(x);
    ck.max_overlap = std::max(ck.max_overlap, static_cast<int>(ids.size()));
    for (size_t a = 0; a < ids.size(); ++a)
      for (size_t b = a + 1; b < ids.size(); ++b) {
        const double sa = cubes[static_cast<size_t>(ids[a])].side();
        const double sb = cubes[static_cast<size_t>(ids[b])].side();
        ck.max_dilate_ratio = std::max(ck.max_dilate_ratio, std::max(sa, sb) / std::min(sa, sb));
      }
  }
  ck.overlap_bound = ck.max_overlap <= (1 << n);
  ck.ratio_bound = ck.max_dilate_ratio <= 4.0 * slack;
  return ck;
}

// ---------------------------------------------------------------------------
// smooth plateau bumps, evaluated as order-4 truncated Taylor series so the
// reconstruction diagnostics can see exact derivatives of the bumps alone

namespace {

constexpr int kSer = 5;

struct Ser {
  std::array<double, kSer> c{};  // c[i] = f^(i)/i!
  static Ser cst(double v) {
    Ser s;
    s.c[0] = v;
    return s;
  }
};

Ser operator+(const Ser& a, const Ser& b) {
  Ser r;
  for (int i = 0; i < kSer; ++i) r.c[i] = a.c[i] + b.c[i];
  return r;
}

Ser operator*(const Ser& a, const Ser& b) {
  Ser r;
  for (int i = 0; i < kSer; ++i)
    for (int j = 0; i + j < kSer; ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

Ser divser(const Ser& nu, const Ser& de) {
  Ser q;
  for (int i = 0; i < kSer; ++i) {
    double s = nu.c[i];
    for (int j = 1; j <= i; ++j) s -= de.c[j] * q.c[i - j];
    q.c[i] = s / de.c[0];
  }
  return q;
}

Ser expser(const Ser& a) {
  Ser b;
  b.c[0] = std::exp(a.c[0]);
  for (int i = 1; i < kSer; ++i) {
    double s = 0.0;
    for (int j = 1; j <= i; ++j) s += j * a.c[j] * b.c[i - j];
    b.c[i] = s / i;
  }
  return b;
}

// exp(-1/u); flushed to an exact zero near u = 0 where it underflows anyway
Ser efun(const Ser& u) {
  if (u.c[0] < 1e-6) return Ser{};
  Ser inv;  // -1/u, from (u * inv)' == 0 order by order
  inv.c[0] = -1.0 / u.c[0];
  for (int i = 1; i < kSer; ++i) {
    double s = 0.0;
    for (int j = 1; j <= i; ++j) s += u.c[j] * inv.c[i - j];
    inv.c[i] = -s / u.c[0];
  }
  return expser(inv);
}

// C^inf step: 0 for u <= 0, 1 for u >= 1
Ser sstep(const Ser& u) {
  if (u.c[0] <= 0.0) return Ser::cst(0.0);
  if (u.c[0] >= 1.0) return Ser::cst(1.0);
  Ser one_minus;
  one_minus.c[0] = 1.0 - u.c[0];
  for (int i = 1; i < kSer; ++i) one_minus.c[i] = -u.c[i];
  const Ser e1 = efun(u), e2 = efun(one_minus);
  return divser(e1, e1 + e2);
}

// 1 on [a, b], 0 outside (a - w, b + w), rising/falling over width w
Ser plateau(double x, double a, double b, double w) {
  if (x <= a - w || x >= b + w) return Ser::cst(0.0);
  if (x >= a && x <= b) return Ser::cst(1.0);
  Ser u;
  if (x < a) {
    u.c[0] = (x - (a - w)) / w;
    u.c[1] = 1.0 / w;
  } else {
    u.c[0] = ((b + w) - x) / w;
    u.c[1] = -1.0 / w;
  }
  return sstep(u);
}

double multi_binomial(const MultiIndex& a, const MultiIndex& b) {
  double r = 1.0;
  for (int d = 0; d < a.dim(); ++d) r *= binomial(a[d], b[d]);
  return r;
}

double plateau_value(double x, double a, double b, double w) {
  if (x <= a - w || x >= b + w) return 0.0;
  if (x >= a && x <= b) return 1.0;
  const double u = x < a ? (x - (a - w)) / w : ((b + w) - x) / w;
  if (u < 1e-6) return 0.0;
  const double e1 = std::exp(-1.0 / u), e2 = std::exp(-1.0 / (1.0 - u));
  return e1 / (e1 + e2);
}

double bump_value(const WhitneyCube& q, int dim, const Vec& x) {
  const Box b = q.box(dim);
  const double w = q.side() / 16.0;
  double v = 1.0;
  for (int d = 0; d < dim && v != 0.0; ++d)
    v *= plateau_value(x[d], b.lo[d], b.hi[d], w);
  return v;
}

}  // namespace

PartitionOfUnity::PartitionOfUnity(const WhitneyDecomposition& dec) : dec_(&dec) {}

double PartitionOfUnity::bump(int cube, const Vec& x) const {
  return bump_value(dec_->cubes()[static_cast<size_t>(cube)], dec_->dim(), x);
}

std::vector<PartitionOfUnity::Term> PartitionOfUnity::at(const Vec& x) const {
  const auto ids = dec_->dilates_containing(x);
  std::vector<Term> terms;
  terms.reserve(ids.size());
  double sum = 0.0;
  for (int i : ids) {
    const double v = bump(i, x);
    if (v > 0.0) {
      terms.push_back({i, v});
      sum += v;
    }
  }
  if (sum < 1e-8)
    throw std::runtime_error("partition of unity: point outside the covered region");
  for (auto& t : terms) t.phi /= sum;
  return terms;
}

double PartitionOfUnity::phi(int cube, const Vec& x) const {
  const double v = bump(cube, x);
  if (v == 0.0) return 0.0;
  double sum = 0.0;
  for (int i : dec_->dilates_containing(x)) sum += bump(i, x);
  if (sum < 1e-8)
    throw std::runtime_error("partition of unity: point outside the covered region");
  return v / sum;
}

std::vector<double> PartitionOfUnity::phi_derivatives(int cube, const Vec& x,
                                                      int ord) const {
  if (ord < 0 || ord >= kSer)
    throw std::invalid_argument("phi_derivatives: order must be 0..4");
  const int n = dec_->dim();
  const auto idx = enumerate_multiindices(n, ord);
  const auto ids = dec_->dilates_containing(x);

  // raw partials of each candidate bump from its per-axis series:
  // D^b chi = prod_d b_d! * ser_d.c[b_d]
  const auto chi_partials = [&](int i) {
    const auto& q = dec_->cubes()[static_cast<size_t>(i)];
    const Box b = q.box(n);
    const double w = q.side() / 16.0;
    std::array<Ser, kMaxDim> ax;
    for (int d = 0; d < n; ++d) ax[d] = plateau(x[d], b.lo[d], b.hi[d], w);
    std::vector<double> out(idx.size());
    for (size_t r = 0; r < idx.size(); ++r) {
      double v = 1.0;
      for (int d = 0; d < n; ++d) {
        double fact = 1.0;
        for (int t = 2; t <= idx[r][d]; ++t) fact *= t;
        v *= fact * ax[d].c[static_cast<size_t>(idx[r][d])];
      }
      out[r] = v;
    }
    return out;
  };

  std::vector<double> den(idx.size(), 0.0), num(idx.size(), 0.0);
  bool cube_in = false;
  for (int i : ids) {
    const auto ci = chi_partials(i);
    for (size_t r = 0; r < idx.size(); ++r) den[r] += ci[r];
    if (i == cube) {
      num = ci;
      cube_in = true;
    }
  }
  if (den[0] < 1e-8)
    throw std::runtime_error("partition of unity: point outside the covered region");
  std::vector<double> q(idx.size(), 0.0);
  if (!cube_in) return q;  // phi vanishes on a neighborhood of x
  // quotient recursion: N_b = sum_{g<=b} C(b,g) q_g D_{b-g}
  const auto rank_of = [&](const MultiIndex& a) {
    for (size_t r = 0; r < idx.size(); ++r)
      if (idx[r] == a) return static_cast<int>(r);
    throw std::logic_error("phi_derivatives: rank lookup failed");
  };
  for (size_t r = 0; r < idx.size(); ++r) {
    const MultiIndex& b = idx[r];
    double s = num[r];
    MultiIndex g = MultiIndex::zero(n);
    for (;;) {
      if (g != b) {
        const size_t rg = static_cast<size_t>(rank_of(g));
        s -= multi_binomial(b, g) * q[rg] * den[static_cast<size_t>(rank_of(b.minus(g)))];
      }
      int d = 0;
      for (; d < n; ++d) {
        if (g[d] < b[d]) {
          ++g.at(d);
          break;
        }
        g.at(d) = 0;
      }
      if (d == n) break;
    }
    q[r] = s / den[0];
  }
  return q;
}

// ---------------------------------------------------------------------------

namespace {

Vec grid_origin(const Grid& g) {
  if (g.active_count() == 0) throw std::invalid_argument("grid holds no active cells");
  const auto& c0 = g.cell(0);
  const Vec x0 = g.center(0);
  Vec o{0, 0, 0};
  for (int d = 0; d < g.dim(); ++d) o[d] = x0[d] - (c0[d] + 0.5) * g.spacing()[d];
  return o;
}

// active cell ids whose centers lie in the box
std::vector<int64_t> cells_in_box(const Grid& g, const Box& b) {
  const Vec o = grid_origin(g);
  std::array<int32_t, kMaxDim> lo{0, 0, 0}, hi{0, 0, 0};
  for (int d = 0; d < g.dim(); ++d) {
    lo[d] = static_cast<int32_t>(
        std::max<double>(0, std::ceil((b.lo[d] - o[d]) / g.spacing()[d] - 0.5)));
    hi[d] = static_cast<int32_t>(std::min<double>(
        g.cells_along(d) - 1, std::floor((b.hi[d] - o[d]) / g.spacing()[d] - 0.5)));
  }
  std::vector<int64_t> out;
  std::array<int32_t, kMaxDim> c{0, 0, 0};
  for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0])
    for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1])
      for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2]) {
        const int64_t a = g.active_at(c);
        if (a >= 0 && b.contains(g.center(a), 1e-12)) out.push_back(a);
      }
  return out;
}

}  // namespace

double averaged_taylor(const Jet& F, const Box& cell, const Grid& grid, const Vec& x,
                       int order) {
  const auto pts = cells_in_box(grid, cell);
  if (pts.size() < (size_t(1) << grid.dim()))
    throw std::invalid_argument(
        "averaged_taylor: unresolved cube (needs at least 2^dim lattice points)");
  double s = 0.0;
  for (int64_t a : pts) s += taylor_polynomial(F, grid.center(a), x, order);
  return s / static_cast<double>(pts.size());
}

Reconstruction::Reconstruction(const Jet& F, const WhitneyDecomposition& dec,
                               const Grid& grid)
    : dec_(&dec), pou_(dec) {
  const int n = dec.dim();
  if (F.dim() != n) throw std::invalid_argument("reconstruction: dimension mismatch");
  idx_ = enumerate_multiindices(n, F.order());
  const auto rank_of = [&](const MultiIndex& a) {
    for (size_t r = 0; r < idx_.size(); ++r)
      if (idx_[r] == a) return static_cast<int>(r);
    throw std::logic_error("reconstruction: rank lookup failed");
  };
  center_.resize(dec.cubes().size());
  coeff_.assign(dec.cubes().size(), std::vector<double>(idx_.size(), 0.0));
  for (size_t i = 0; i < dec.cubes().size(); ++i) {
    const Box dil = dec.cubes()[i].dilated(n);
    const auto pts = cells_in_box(grid, dil);
    if (pts.size() < (size_t(1) << n))
      throw std::invalid_argument(
          "reconstruction: grid too coarse for the finest cubes (needs >= 2^dim "
          "lattice points per dilated cube)");
    const Vec z = dil.center();
    center_[i] = z;
    auto& co = coeff_[i];
    for (int64_t a : pts) {
      const Vec y = grid.center(a);
      const Vec zy = sub(z, y);
      for (const auto& alpha : idx_) {
        const double fa = F.component(alpha, y) / alpha.factorial();
        // (x-y)^alpha = sum_{beta<=alpha} C(alpha,beta) (x-z)^beta (z-y)^(alpha-beta)
        MultiIndex beta = MultiIndex::zero(n);
        for (;;) {
          co[static_cast<size_t>(rank_of(beta))] +=
              fa * multi_binomial(alpha, beta) * alpha.minus(beta).pow(zy);
          int d = 0;
          for (; d < n; ++d) {
            if (beta[d] < alpha[d]) {
              ++beta.at(d);
              break;
            }
            beta.at(d) = 0;
          }
          if (d == n) break;
        }
      }
    }
    for (auto& v : co) v /= static_cast<double>(pts.size());
  }
}

double Reconstruction::value(const Vec& x) const {
  const auto ids = dec_->dilates_containing(x);
  double denom = 0.0, num = 0.0;
  for (int i : ids) {
    const double chi = pou_.bump(i, x);
    if (chi == 0.0) continue;
    const Vec dx = sub(x, center_[static_cast<size_t>(i)]);
    double t = 0.0;
    const auto& co = coeff_[static_cast<size_t>(i)];
    for (size_t r = 0; r < idx_.size(); ++r) t += co[r] * idx_[r].pow(dx);
    num += chi * t;
    denom += chi;
  }
  if (denom < 1e-8) return std::numeric_limits<double>::quiet_NaN();
  return num / denom;
}

std::vector<double> Reconstruction::sample(const Grid& grid,
                                           const std::vector<int64_t>& cells,
                                           int threads) const {
  std::vector<double> out(cells.size());
  auto work = [&](size_t lo, size_t hi) {
    for (size_t t = lo; t < hi; ++t) out[t] = value(grid.center(cells[t]));
  };
  if (threads <= 1 || cells.size() < 128) {
    work(0, cells.size());
  } else {
    const size_t nt = std::min<size_t>(static_cast<size_t>(threads), 64);
    std::vector<std::thread> pool;
    const size_t chunk = (cells.size() + nt - 1) / nt;
    for (size_t t = 0; t < nt; ++t) {
      const size_t lo = t * chunk, hi = std::min(cells.size(), lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// central-difference weights per axis derivative order (unit spacing)
const std::vector<std::pair<int, double>>& fd_stencil(int q) {
  static const std::vector<std::vector<std::pair<int, double>>> k = {
      {{0, 1.0}},
      {{-1, -0.5}, {1, 0.5}},
      {{-1, 1.0}, {0, -2.0}, {1, 1.0}},
      {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}},
      {{-2, 1.0}, {-1, -4.0}, {0, 6.0}, {1, -4.0}, {2, 1.0}},
  };
  return k[static_cast<size_t>(q)];
}

}  // namespace

RateTable reconstruction_rates(const Jet& F, const Domain& omega, int m, double p,
                               const std::vector<int>& levels, double h, int threads) {
  if (m < 1 || m > 4) throw std::invalid_argument("reconstruction_rates: m must be 1..4");
  if (levels.size() < 3)
    throw std::invalid_argument("reconstruction_rates: need at least 3 levels");
  if (!std::is_sorted(levels.begin(), levels.end()))
    throw std::invalid_argument("reconstruction_rates: levels must ascend");
  if (F.order() != m - 1)
    throw std::invalid_argument("reconstruction_rates: jet order must be m-1");
  const int n = omega.dim();
  Grid g(omega, h);
  const int cap =
      static_cast<int>(std::floor(std::log2(1.0 / (4.0 * g.max_spacing()))));
  if (levels.back() > cap)
    throw std::invalid_argument(
        "reconstruction_rates: finest level unresolvable by the grid (needs side >= "
        "4h)");

  RateTable t;
  t.levels = levels;
  t.max_level = cap;
  t.resolved_distance =
      std::sqrt(static_cast<double>(n)) * std::ldexp(1.0, -cap + 1);
  t.alphas = enumerate_multiindices(n, m);

  const double margin =
      t.resolved_distance + 3.0 * std::sqrt(static_cast<double>(n)) * g.max_spacing();
  std::vector<int64_t> eval;
  for (int64_t a = 0; a < g.active_count(); ++a)
    if (omega.boundary_distance(g.center(a)) > margin) eval.push_back(a);
  if (eval.empty())
    throw std::invalid_argument("reconstruction_rates: evaluation region is empty");
  t.eval_cells = static_cast<int64_t>(eval.size());

  std::vector<int64_t> all(static_cast<size_t>(g.active_count()));
  for (int64_t a = 0; a < g.active_count(); ++a) all[static_cast<size_t>(a)] = a;

  for (int k : levels) {
    WhitneyDecomposition dec(omega, k, cap);
    Reconstruction rec(F, dec, g);
    const std::vector<double> w = rec.sample(g, all, threads);

    std::vector<double> row(t.alphas.size(), 0.0);
    for (int64_t a : eval) {
      const auto& ci = g.cell(a);
      for (size_t r = 0; r < t.alphas.size(); ++r) {
        const MultiIndex& al = t.alphas[r];
        // tensor central difference of w at the cell
        double fd = 0.0;
        const auto& s0 = fd_stencil(al[0]);
        const auto& s1 = fd_stencil(n >= 2 ? al[1] : 0);
        const auto& s2 = fd_stencil(n >= 3 ? al[2] : 0);
        for (const auto& [o0, w0] : s0)
          for (const auto& [o1, w1] : s1)
            for (const auto& [o2, w2] : s2) {
              std::array<int32_t, kMaxDim> c = ci;
              c[0] += o0;
              if (n >= 2) c[1] += o1;
              if (n >= 3) c[2] += o2;
              const int64_t j = g.active_at(c);
              if (j < 0)
                throw std::runtime_error(
                    "reconstruction_rates: stencil left the active lattice");
              fd += w0 * w1 * w2 * w[static_cast<size_t>(j)];
            }
        for (int d = 0; d < n; ++d)
          fd /= std::pow(g.spacing()[d], al[d]);
        if (!std::isfinite(fd))
          throw std::runtime_error("reconstruction_rates: uncovered cell in a stencil");
        const double err =
            al.order() < m ? fd - F.component(al, g.center(a)) : fd;
        row[r] += std::pow(std::fabs(err), p) * g.cell_volume();
      }
    }
    for (auto& v : row) v = std::pow(v, 1.0 / p);
    t.norms.push_back(row);
  }

  // log2 least-squares slopes for the converging components
  t.slopes.assign(t.alphas.size(), 0.0);
  t.exact.assign(t.alphas.size(), false);
  const double kbar = [&] {
    double s = 0.0;
    for (int k : levels) s += k;
    return s / static_cast<double>(levels.size());
  }();
  for (size_t r = 0; r < t.alphas.size(); ++r) {
    if (t.alphas[r].order() >= m) continue;
    bool exact = true;
    for (const auto& row : t.norms)
      if (row[r] > 1e-13) exact = false;
    t.exact[r] = exact;
    if (exact) continue;
    double num = 0.0, den = 0.0, ybar = 0.0;
    for (const auto& row : t.norms) ybar += std::log2(row[r]);
    ybar /= static_cast<double>(levels.size());
    for (size_t i = 0; i < levels.size(); ++i) {
      const double dx = levels[i] - kbar;
      num += dx * (std::log2(t.norms[i][r]) - ybar);
      den += dx * dx;
    }
    t.slopes[r] = num / den;
  }

  t.mth_bounded = true;
  for (size_t r = 0; r < t.alphas.size(); ++r)
    if (t.alphas[r].order() == m &&
        !(t.norms.back()[r] <= 1.25 * t.norms.front()[r] + 1e-12))
      t.mth_bounded = false;
  return t;
}

std::string whitney_cubes_json(const WhitneyDecomposition& dec) {
  nlohmann::json j;
  j["k"] = dec.coarse_level();
  j["max_level"] = dec.max_level();
  j["dim"] = dec.dim();
  j["resolved_distance"] = dec.resolved_distance();
  j["truncated_chains"] = dec.truncated_count();
  auto arr = nlohmann::json::array();
  for (const auto& q : dec.cubes()) {
    nlohmann::json c;
    c["level"] = q.level;
    const Box b = q.box(dec.dim());
    auto ctr = nlohmann::json::array();
    for (int d = 0; d < dec.dim(); ++d) ctr.push_back(0.5 * (b.lo[d] + b.hi[d]));
    c["center"] = ctr;
    c["side"] = q.side();
    arr.push_back(c);
  }
  j["cubes"] = arr;
  return j.dump(2);
}

}  // namespace sobnl
