#include "sobnl/functional.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "sobnl/sphere.hpp"

namespace sobnl {

std::vector<double> EpsSchedule::values() const {
  if (!(eps0 > 0.0)) throw std::invalid_argument("EpsSchedule: eps0 must be positive");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("EpsSchedule: ratio must lie in (0, 1)");
  if (count < 1 || count > 64) throw std::invalid_argument("EpsSchedule: count must be 1..64");
  std::vector<double> out(count);
  double e = eps0;
  for (int i = 0; i < count; ++i, e *= ratio) out[i] = e;
  return out;
}

FunctionalSweep run_sweep(const std::function<double(double)>& value_at_eps,
                          const EpsSchedule& sched) {
  FunctionalSweep s;
  s.epsilons = sched.values();
  s.values.reserve(s.epsilons.size());
  for (double e : s.epsilons) s.values.push_back(value_at_eps(e));

  const auto& v = s.values;
  const size_t K = v.size() - 1;
  s.monotone = true;  // sign-consistent steps, zeros allowed
  for (size_t i = 0; i + 2 < v.size(); ++i)
    if ((v[i + 1] - v[i]) * (v[i + 2] - v[i + 1]) < 0.0) s.monotone = false;
  if (v.size() < 3) {
    s.limit = v.back();
    s.note = "short";
    return s;
  }
  const double d1 = v[K - 1] - v[K - 2];
  const double d2 = v[K] - v[K - 1];
  const double scale = std::max(std::fabs(v[K]), 1e-300);
  if (std::fabs(d1) <= 1e-13 * scale && std::fabs(d2) <= 1e-13 * scale) {
    s.limit = v[K];
    s.note = "constant";
    return s;
  }
  if (d1 * d2 > 0.0) {
    const double rho = d2 / d1;
    if (rho < 1.0 - 1e-6) {
      // geometric tail: remaining error after v[K] is d2 * rho / (1 - rho)
      s.limit = v[K] + d2 * rho / (1.0 - rho);
      s.extrapolated = true;
      s.note = "extrapolated";
      return s;
    }
    s.limit = v[K];
    s.note = "no-decay";
    return s;
  }
  s.limit = v[K];
  s.monotone = false;
  s.note = "non-monotone";
  return s;
}

namespace detail {

double pow_p(double v, double p) {
  v = std::fabs(v);
  if (p == 2.0) return v * v;
  if (p == 1.0) return v;
  if (p == 3.0) return v * v * v;
  if (p == 4.0) {
    const double w = v * v;
    return w * w;
  }
  return std::pow(v, p);
}

PairSum::PairSum(const Grid& grid, const std::vector<OffsetWeight>& weights, int threads,
                 std::vector<int64_t> xs)
    : grid_(grid), weights_(weights), threads_(threads), xs_(std::move(xs)) {
  if (threads_ < 1 || threads_ > 256)
    throw std::invalid_argument("PairSum: threads must be 1..256");
  if (xs_.empty()) {
    xs_.resize(static_cast<size_t>(grid.active_count()));
    for (int64_t a = 0; a < grid.active_count(); ++a) xs_[static_cast<size_t>(a)] = a;
  }
}

double PairSum::run(const std::function<double(int64_t, int64_t, size_t)>& term) const {
  // Fixed-size blocks summed independently and combined in block order, so
  // the result does not depend on the thread count.
  constexpr int64_t kBlock = 512;
  const int64_t nx = static_cast<int64_t>(xs_.size());
  const int64_t nblocks = (nx + kBlock - 1) / kBlock;
  std::vector<double> partial(static_cast<size_t>(nblocks), 0.0);
  std::vector<int64_t> seen(static_cast<size_t>(nblocks), 0);
  std::vector<int64_t> skipped(static_cast<size_t>(nblocks), 0);

  auto do_block = [&](int64_t b) {
    double acc = 0.0;
    int64_t ns = 0, nk = 0;
    const int64_t lo = b * kBlock;
    const int64_t hi = std::min(nx, lo + kBlock);
    for (int64_t t = lo; t < hi; ++t) {
      const int64_t i = xs_[static_cast<size_t>(t)];
      const auto& ci = grid_.cell(i);
      for (size_t k = 0; k < weights_.size(); ++k) {
        std::array<int32_t, kMaxDim> cj = ci;
        for (int d = 0; d < grid_.dim(); ++d) cj[d] += weights_[k].delta[d];
        const int64_t j = grid_.active_at(cj);
        if (j < 0) {
          ++nk;
          continue;
        }
        ++ns;
        acc += term(i, j, k);
      }
    }
    partial[static_cast<size_t>(b)] = acc;
    seen[static_cast<size_t>(b)] = ns;
    skipped[static_cast<size_t>(b)] = nk;
  };

  if (threads_ == 1 || nblocks == 1) {
    for (int64_t b = 0; b < nblocks; ++b) do_block(b);
  } else {
    std::atomic<int64_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const int64_t b = next.fetch_add(1);
        if (b >= nblocks) return;
        do_block(b);
      }
    };
    std::vector<std::thread> pool;
    const int nt = static_cast<int>(std::min<int64_t>(threads_, nblocks));
    pool.reserve(static_cast<size_t>(nt));
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  double total = 0.0;
  pairs_seen_ = 0;
  pairs_skipped_ = 0;
  for (int64_t b = 0; b < nblocks; ++b) {
    total += partial[static_cast<size_t>(b)];
    pairs_seen_ += seen[static_cast<size_t>(b)];
    pairs_skipped_ += skipped[static_cast<size_t>(b)];
  }
  return total;
}

}  // namespace detail

namespace {

// Jet components tabulated on the active cells, plus the Taylor monomial
// row for a lattice offset. With y = x + delta.h the remainder is
//   R(x_i, y_j) = f_0(x_i) - sum_r comp[r][j] * mono[r],
// mono[r] = (-delta.h)^{alpha_r} / alpha_r!.
struct ComponentTable {
  std::vector<MultiIndex> idx;
  std::vector<std::vector<double>> comp;

  ComponentTable(const Jet& F, const Grid& g, int order) {
    if (F.order() < order)
      throw std::invalid_argument("functional: jet order too small for the requested m");
    idx = enumerate_multiindices(g.dim(), order);
    comp.assign(idx.size(), std::vector<double>(static_cast<size_t>(g.active_count())));
    for (int64_t a = 0; a < g.active_count(); ++a) {
      const Vec x = g.center(a);
      for (size_t r = 0; r < idx.size(); ++r)
        comp[r][static_cast<size_t>(a)] = F.component(idx[r], x);
    }
  }

  std::vector<double> monomials(const Vec& h, const std::array<int32_t, kMaxDim>& delta,
                                int dim) const {
    Vec d{0, 0, 0};
    for (int k = 0; k < dim; ++k) d[k] = -delta[k] * h[k];
    std::vector<double> mono(idx.size());
    for (size_t r = 0; r < idx.size(); ++r)
      mono[r] = idx[r].pow(d) / idx[r].factorial();
    return mono;
  }
};

RadialKernel apply_cutoff(RadialKernel k, double cutoff) {
  if (cutoff > 0.0 && cutoff < k.support) {
    k.support = cutoff;
    k.cuts.erase(std::remove_if(k.cuts.begin(), k.cuts.end(),
                                [&](double c) { return c >= cutoff; }),
                 k.cuts.end());
  }
  return k;
}

// The double-integral functionals factor their integrand as
//   [ |numerator(x,y)|^p / |x-y|^{mp} ] * [ radial mass ],
// where the first factor extends continuously across the diagonal (it tends
// to the sphere-limit integrand) and is sampled at cell midpoints, while the
// radial mass is integrated exactly against the cell-pair hat. Sampling the
// singular power at midpoints instead would add an O((h/eps)^2) bias that
// poisons the eps-sweeps. For the power family the mass is an exact scalar
// multiple of the ball monomial r^{mp} 1_{(0,eps)}, so the same weight table
// ties the mollified energy to the eps-normalized ball condition through the
// exact factor (n+mp).
RadialKernel mass_kernel(const MollifierFamily& mol, double eps, double mp, int n,
                         double* scale) {
  *scale = 1.0;
  if (mol.kind() == MollifierFamily::Kind::Power && mol.power_exponent() == mp) {
    *scale = (n + mp) * std::pow(eps, -(n + mp));
    return RadialKernel::monomial_ball(mp, eps);
  }
  return RadialKernel::remainder(mol, eps, 0.0);
}

// Per-offset weight with the midpoint 1/|x-y|^{mp} factor folded in.
std::vector<double> fold_midpoint_power(const std::vector<OffsetWeight>& wts,
                                        double mp) {
  std::vector<double> out(wts.size());
  for (size_t k = 0; k < wts.size(); ++k)
    out[k] = wts[k].w * std::pow(wts[k].dist, -mp);
  return out;
}

void require_resolved(const char* who, double support, const Grid& g) {
  if (!(support >= 2.0 * g.max_spacing()))
    throw std::invalid_argument(std::string(who) +
                                ": kernel support must be at least twice the lattice "
                                "spacing; refine h or stop the schedule earlier");
}

double ball_volume(int n, double r) {
  return sphere_measure(n) / n * std::pow(r, n);
}

}  // namespace

double bbm_functional(const Jet& F, int m, double p, const MollifierFamily& mol,
                      double eps, const Domain& dom, const QuadratureConfig& cfg) {
  if (m < 1 || m > 4) throw std::invalid_argument("bbm_functional: m must be 1..4");
  if (!(p >= 1.0)) throw std::invalid_argument("bbm_functional: p must be >= 1");
  Grid g(dom, cfg.h);
  const double mp = m * p;
  double scale = 1.0;
  const RadialKernel kernel =
      apply_cutoff(mass_kernel(mol, eps, mp, g.dim(), &scale), cfg.cutoff);
  require_resolved("bbm_functional", kernel.support, g);
  const ComponentTable tab(F, g, m - 1);
  const auto wts = pair_weights(g.dim(), g.spacing(), kernel);
  const auto wmp = fold_midpoint_power(wts, mp);

  std::vector<std::vector<double>> mono(wts.size());
  for (size_t k = 0; k < wts.size(); ++k)
    mono[k] = tab.monomials(g.spacing(), wts[k].delta, g.dim());

  const auto& f0 = tab.comp[0];
  detail::PairSum sum(g, wts, cfg.threads);
  return scale * sum.run([&](int64_t i, int64_t j, size_t k) {
    const auto& mk = mono[k];
    double r = f0[static_cast<size_t>(i)];
    for (size_t t = 0; t < mk.size(); ++t)
      r -= tab.comp[t][static_cast<size_t>(j)] * mk[t];
    return detail::pow_p(r, p) * wmp[k];
  });
}

double difference_functional(const Jet& F, int m, double p, const MollifierFamily& mol,
                             double eps, const Domain& dom, const QuadratureConfig& cfg,
                             DifferenceDiagnostics* diag) {
  if (m < 1 || m > 4) throw std::invalid_argument("difference_functional: m must be 1..4");
  if (!(p >= 1.0)) throw std::invalid_argument("difference_functional: p must be >= 1");
  Grid g(dom, cfg.h);
  const double mp = m * p;
  double scale = 1.0;
  const RadialKernel kernel =
      apply_cutoff(mass_kernel(mol, eps, mp, g.dim(), &scale), cfg.cutoff);
  require_resolved("difference_functional", kernel.support, g);
  const auto wts = pair_weights(g.dim(), g.spacing(), kernel);
  const auto wmp = fold_midpoint_power(wts, mp);

  // A single box (with or without the margin shrink) is convex, so the
  // segment samples never leave it and the per-pair check can be skipped.
  const bool convex =
      dom.components().size() == 1 && !dom.components()[0].hole.has_value();

  std::atomic<int64_t> skipped{0};
  detail::PairSum sum(g, wts, cfg.threads);
  const double value = sum.run([&](int64_t i, int64_t j, size_t k) {
    const Vec x = g.center(i), y = g.center(j);
    if (!convex) {
      for (int s = 1; s < m; ++s) {
        Vec z{0, 0, 0};
        const double t = static_cast<double>(s) / m;
        for (int d = 0; d < g.dim(); ++d) z[d] = (1.0 - t) * x[d] + t * y[d];
        if (!dom.contains(z)) {
          skipped.fetch_add(1, std::memory_order_relaxed);
          return 0.0;
        }
      }
    }
    return detail::pow_p(mth_difference(F, x, y, m), p) * wmp[k];
  });
  if (diag) {
    diag->pairs_total = sum.pairs_seen();
    diag->pairs_skipped = skipped.load();
  }
  return scale * value;
}

SingularIntegral singular_remainder_integral(const Jet& F, int m, double p,
                                             const Domain& dom, const QuadratureConfig& cfg) {
  if (m < 1 || m > 4)
    throw std::invalid_argument("singular_remainder_integral: m must be 1..4");
  SingularIntegral out;
  const int n = dom.dim();
  for (int level = 0; level < 3; ++level) {
    const double h = cfg.h / (1 << level);
    Grid g(dom, h);
    if (g.active_count() > 46340)
      throw std::invalid_argument(
          "singular_remainder_integral: too many cells for the all-pairs sum; "
          "use a coarser base spacing");
    const ComponentTable tab(F, g, m - 1);
    const auto& f0 = tab.comp[0];
    const int64_t na = g.active_count();
    const double vol2 = g.cell_volume() * g.cell_volume();
    const double expo = m * p + n;

    // all-pairs midpoint sum, diagonal excluded; blocked like PairSum
    constexpr int64_t kBlock = 256;
    const int64_t nblocks = (na + kBlock - 1) / kBlock;
    std::vector<double> partial(static_cast<size_t>(nblocks), 0.0);
    auto do_block = [&](int64_t b) {
      double acc = 0.0;
      for (int64_t i = b * kBlock; i < std::min(na, (b + 1) * kBlock); ++i) {
        const Vec x = g.center(i);
        for (int64_t j = 0; j < na; ++j) {
          if (i == j) continue;
          const Vec y = g.center(j);
          double r = f0[static_cast<size_t>(i)];  // base point of the expansion is y
          Vec dxy = sub(x, y);
          for (size_t t = 0; t < tab.idx.size(); ++t)
            r -= tab.comp[t][static_cast<size_t>(j)] * tab.idx[t].pow(dxy) /
                 tab.idx[t].factorial();
          acc += detail::pow_p(r, p) * std::pow(norm2(dxy, n), -0.5 * expo);
        }
      }
      partial[static_cast<size_t>(b)] = acc;
    };
    if (cfg.threads <= 1) {
      for (int64_t b = 0; b < nblocks; ++b) do_block(b);
    } else {
      std::atomic<int64_t> next{0};
      std::vector<std::thread> pool;
      for (int t = 0; t < std::min<int64_t>(cfg.threads, nblocks); ++t)
        pool.emplace_back([&]() {
          for (;;) {
            const int64_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            do_block(b);
          }
        });
      for (auto& th : pool) th.join();
    }
    double v = 0.0;
    for (double pb : partial) v += pb;
    out.spacings.push_back(h);
    out.values.push_back(v * vol2);
  }
  // Divergence diagnostic: the h-regularized values must keep growing with no
  // sign of saturation.  The integrand of interest blows up like log(1/h) at
  // threshold order, so the per-halving ratio drifts toward 1; what stays
  // measurable is the growth across the whole three-level window.  Flag
  // divergent when the sequence is strictly increasing and the total growth
  // exceeds the 1.5 ratio threshold.  The 1e-12 floor keeps exact-zero
  // (polynomial) sequences from tripping on roundoff.
  const auto& v = out.values;
  out.divergent = v[2] > 1e-12 && v[1] > v[0] && v[2] > v[1] && v[2] > 1.5 * v[0];
  return out;
}

double jet_condition_value(const Jet& F, double p, double eps, const Domain& dom,
                           const QuadratureConfig& cfg) {
  if (!(p >= 1.0)) throw std::invalid_argument("jet_condition_value: p must be >= 1");
  const int m = F.order() + 1;
  Grid g(dom, cfg.h);
  const double mp = m * p;
  // same split as the mollified energy: smooth factor at midpoints, ball
  // monomial mass integrated exactly, so the power-kernel identity holds to
  // rounding
  const RadialKernel kernel = RadialKernel::monomial_ball(mp, eps);
  require_resolved("jet_condition_value", kernel.support, g);
  const ComponentTable tab(F, g, F.order());
  const auto wts = pair_weights(g.dim(), g.spacing(), kernel);
  const auto wmp = fold_midpoint_power(wts, mp);

  std::vector<std::vector<double>> mono(wts.size());
  for (size_t k = 0; k < wts.size(); ++k)
    mono[k] = tab.monomials(g.spacing(), wts[k].delta, g.dim());

  const auto& f0 = tab.comp[0];
  detail::PairSum sum(g, wts, cfg.threads);
  const double s = sum.run([&](int64_t i, int64_t j, size_t k) {
    const auto& mk = mono[k];
    double r = f0[static_cast<size_t>(i)];
    for (size_t t = 0; t < mk.size(); ++t)
      r -= tab.comp[t][static_cast<size_t>(j)] * mk[t];
    return detail::pow_p(r, p) * wmp[k];
  });
  return s * std::pow(eps, -(dom.dim() + mp));
}

double shifted_jet_condition(const Jet& F, const MultiIndex& j, double p, double eps,
                             const Domain& dom, double margin, const QuadratureConfig& cfg) {
  if (!(p >= 1.0)) throw std::invalid_argument("shifted_jet_condition: p must be >= 1");
  if (j.dim() != dom.dim())
    throw std::invalid_argument("shifted_jet_condition: index dimension mismatch");
  const int m = F.order() + 1;
  if (j.order() > F.order())
    throw std::invalid_argument("shifted_jet_condition: |j| exceeds the jet order");
  Grid g(dom, cfg.h);
  if (!(margin >= eps + 2.0 * g.max_spacing()))
    throw std::invalid_argument(
        "shifted_jet_condition: margin must exceed eps + 2h so every averaging "
        "ball stays on the active lattice");
  require_resolved("shifted_jet_condition", eps, g);

  const ComponentTable tab(F, g, F.order());
  const auto wts = pair_weights(g.dim(), g.spacing(), RadialKernel::indicator(eps));

  // ranks and scaled monomial factors for f_{j+alpha}, |alpha| <= order - |j|
  const int jr = [&] {
    for (size_t r = 0; r < tab.idx.size(); ++r)
      if (tab.idx[r] == j) return static_cast<int>(r);
    throw std::logic_error("shifted_jet_condition: index rank not found");
  }();
  std::vector<int> ranks;
  std::vector<MultiIndex> alphas;
  for (size_t r = 0; r < tab.idx.size(); ++r) {
    const MultiIndex& t = tab.idx[r];
    if (!j.leq(t)) continue;
    ranks.push_back(static_cast<int>(r));
    alphas.push_back(t.minus(j));
  }
  std::vector<std::vector<double>> mono(wts.size());
  for (size_t k = 0; k < wts.size(); ++k) {
    Vec d{0, 0, 0};
    for (int dd = 0; dd < g.dim(); ++dd) d[dd] = -wts[k].delta[dd] * g.spacing()[dd];
    mono[k].resize(alphas.size());
    for (size_t t = 0; t < alphas.size(); ++t)
      mono[k][t] = alphas[t].pow(d) / alphas[t].factorial();
  }

  const auto xs = g.active_in(dom.inner(margin));
  if (xs.empty())
    throw std::invalid_argument("shifted_jet_condition: the shrunk domain holds no cells");

  detail::PairSum sum(g, wts, cfg.threads, xs);
  const double s = sum.run([&](int64_t i, int64_t jj, size_t k) {
    const auto& mk = mono[k];
    double r = tab.comp[static_cast<size_t>(jr)][static_cast<size_t>(i)];
    for (size_t t = 0; t < mk.size(); ++t)
      r -= tab.comp[static_cast<size_t>(ranks[t])][static_cast<size_t>(jj)] * mk[t];
    return detail::pow_p(r, p) * wts[k].w;
  });
  if (sum.pairs_skipped() > 0)
    throw std::runtime_error(
        "shifted_jet_condition: an averaging ball left the active lattice");
  return s * std::pow(eps, -(m - j.order()) * p) / ball_volume(g.dim(), eps);
}

}  // namespace sobnl
