#include "sobnl/jet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sobnl {

Jet Jet::analytic(CatalogEntryPtr f, int order) {
  if (!f) throw std::invalid_argument("Jet: null catalog entry");
  if (order < 0) throw std::invalid_argument("Jet: negative order");
  Jet j;
  j.dim_ = f->dim();
  j.order_ = order;
  j.indices_ = enumerate_multiindices(j.dim_, order);
  j.analytic_ = std::move(f);
  return j;
}

Jet Jet::sampled(const CatalogEntryPtr& f, int order, const Box& box, double h) {
  if (!f) throw std::invalid_argument("Jet: null catalog entry");
  if (!(h > 0.0)) throw std::invalid_argument("Jet: sample spacing must be positive");
  Jet j;
  j.dim_ = f->dim();
  j.order_ = order;
  j.indices_ = enumerate_multiindices(j.dim_, order);
  j.box_ = box;
  int64_t total = 1;
  for (int d = 0; d < j.dim_; ++d) {
    auto cells = static_cast<int32_t>(std::max<int64_t>(1, std::llround(box.side(d) / h)));
    j.nodes_[d] = cells + 1;
    j.h_[d] = box.side(d) / cells;
    total *= j.nodes_[d];
  }
  if (total > (int64_t(1) << 24)) throw std::invalid_argument("Jet: sample lattice too large");
  j.values_.resize(j.indices_.size());
  for (size_t c = 0; c < j.indices_.size(); ++c) {
    auto& vals = j.values_[c];
    vals.resize(total);
    std::array<int32_t, kMaxDim> node{0, 0, 0};
    for (int64_t flat = 0; flat < total; ++flat) {
      int64_t rem = flat;
      for (int d = j.dim_ - 1; d >= 0; --d) {
        node[d] = static_cast<int32_t>(rem % j.nodes_[d]);
        rem /= j.nodes_[d];
      }
      Vec x{0, 0, 0};
      for (int d = 0; d < j.dim_; ++d) x[d] = box.lo[d] + node[d] * j.h_[d];
      vals[flat] = f->derivative(j.indices_[c], x);
    }
  }
  return j;
}

int Jet::rank_of(const MultiIndex& alpha) const {
  for (size_t r = 0; r < indices_.size(); ++r)
    if (indices_[r] == alpha) return static_cast<int>(r);
  throw std::invalid_argument("Jet: component " + alpha.str() + " beyond jet order");
}

double Jet::component(const MultiIndex& alpha, const Vec& x) const {
  if (alpha.dim() != dim_) throw std::invalid_argument("Jet: multi-index dimension mismatch");
  if (alpha.order() > order_)
    throw std::invalid_argument("Jet: component " + alpha.str() + " beyond jet order");
  if (analytic_) return analytic_->derivative(alpha, x);

  const auto& vals = values_[rank_of(alpha)];
  // multilinear interpolation on the node lattice
  std::array<int32_t, kMaxDim> base{0, 0, 0};
  Vec t{0, 0, 0};
  for (int d = 0; d < dim_; ++d) {
    double s = (x[d] - box_.lo[d]) / h_[d];
    if (s < -1e-9 || s > nodes_[d] - 1 + 1e-9)
      throw std::invalid_argument("Jet: evaluation point outside the sampled box");
    s = std::clamp(s, 0.0, double(nodes_[d] - 1));
    base[d] = static_cast<int32_t>(std::min<double>(std::floor(s), nodes_[d] - 2));
    base[d] = std::max(base[d], 0);
    t[d] = s - base[d];
  }
  double v = 0.0;
  int corners = 1 << dim_;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    int64_t flat = 0;
    for (int d = 0; d < dim_; ++d) {
      int bit = (c >> d) & 1;
      w *= bit ? t[d] : (1.0 - t[d]);
      flat = flat * nodes_[d] + (base[d] + bit);
    }
    v += w * vals[flat];
  }
  return v;
}

double taylor_polynomial(const Jet& F, const Vec& y, const Vec& x, int k) {
  if (k > F.order()) throw std::invalid_argument("taylor_polynomial: order beyond jet");
  Vec d = sub(x, y);
  double v = 0.0;
  for (const auto& a : F.indices()) {
    if (a.order() > k) continue;
    v += F.component(a, y) * a.pow(d) / a.factorial();
  }
  return v;
}

double taylor_remainder(const Jet& F, const Vec& x, const Vec& y, int k) {
  return F.f0(x) - taylor_polynomial(F, y, x, k);
}

double shifted_remainder(const Jet& F, const Vec& x, const Vec& y,
                         const MultiIndex& j, int k) {
  if (j.dim() != F.dim()) throw std::invalid_argument("shifted_remainder: index dimension mismatch");
  if (j.order() > k) throw std::invalid_argument("shifted_remainder: |j| exceeds order");
  Vec d = sub(x, y);
  double v = F.component(j, x);
  for (const auto& a : enumerate_multiindices(F.dim(), k - j.order())) {
    MultiIndex ja = j + a;
    v -= F.component(ja, y) * a.pow(d) / a.factorial();
  }
  return v;
}

double mth_difference(const Jet& F, const Vec& x, const Vec& y, int m) {
  if (m < 1) throw std::invalid_argument("mth_difference: m must be positive");
  double v = 0.0;
  for (int i = 0; i <= m; ++i) {
    Vec pt{0, 0, 0};
    double tx = double(m - i) / m, ty = double(i) / m;
    for (int d = 0; d < F.dim(); ++d) pt[d] = tx * x[d] + ty * y[d];
    double sgn = (i % 2 == 0) ? 1.0 : -1.0;
    v += sgn * binomial(m, i) * F.f0(pt);
  }
  return v;
}

double mth_difference(const Jet& F, const Vec& x, const Vec& y, int m, const Domain& dom) {
  for (int i = 0; i <= m; ++i) {
    Vec pt{0, 0, 0};
    for (int d = 0; d < F.dim(); ++d) pt[d] = (double(m - i) * x[d] + double(i) * y[d]) / m;
    if (!dom.contains(pt))
      throw std::invalid_argument("mth_difference: sample point outside the domain");
  }
  return mth_difference(F, x, y, m);
}

}  // namespace sobnl
