#include "sobnl/mollifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sobnl {

namespace {

constexpr double kGaussCut = 5.0;  // support of the truncated gaussian in units of eps

// Adaptive Simpson on [a, b]; integrands here are smooth between the
// breakpoints the callers split at.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, int depth,
                        bool* ok) {
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  struct Rec {
    double a, b, fa, fm, fb, whole;
    int depth;
  };
  std::vector<Rec> stack{{a, b, fa, fm, fb, whole, depth}};
  double total = 0.0;
  while (!stack.empty()) {
    Rec r = stack.back();
    stack.pop_back();
    double mid = 0.5 * (r.a + r.b);
    double lm = 0.5 * (r.a + mid), rm = 0.5 * (mid + r.b);
    double flm = f(lm), frm = f(rm);
    double left = (mid - r.a) / 6.0 * (r.fa + 4.0 * flm + r.fm);
    double right = (r.b - mid) / 6.0 * (r.fm + 4.0 * frm + r.fb);
    double err = left + right - r.whole;
    if (std::fabs(err) <= 15.0 * tol || r.depth <= 0) {
      if (r.depth <= 0 && std::fabs(err) > 15.0 * tol && ok) *ok = false;
      total += left + right + err / 15.0;
      continue;
    }
    stack.push_back({r.a, mid, r.fa, flm, r.fm, left, r.depth - 1});
    stack.push_back({mid, r.b, r.fm, frm, r.fb, right, r.depth - 1});
  }
  return total;
}

}  // namespace

MollifierFamily MollifierFamily::power(int n, int m, double p) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("mollifier: n must be 1..3");
  if (m < 1) throw std::invalid_argument("mollifier: m must be positive");
  if (!(p >= 1.0)) throw std::invalid_argument("mollifier: p must be >= 1");
  MollifierFamily f;
  f.kind_ = Kind::Power;
  f.n_ = n;
  f.mp_ = m * p;
  return f;
}

MollifierFamily MollifierFamily::log_type(int n) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("mollifier: n must be 1..3");
  MollifierFamily f;
  f.kind_ = Kind::LogType;
  f.n_ = n;
  return f;
}

MollifierFamily MollifierFamily::gaussian(int n) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("mollifier: n must be 1..3");
  MollifierFamily f;
  f.kind_ = Kind::Gaussian;
  f.n_ = n;
  bool ok = true;
  f.gauss_norm_ = adaptive_simpson(
      [n](double s) { return std::exp(-0.5 * s * s) * std::pow(s, n - 1); }, 0.0,
      kGaussCut, 1e-14, 48, &ok);
  return f;
}

MollifierFamily MollifierFamily::table(int n, std::vector<double> r, std::vector<double> rho) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("mollifier: n must be 1..3");
  if (r.size() != rho.size() || r.size() < 2)
    throw std::invalid_argument("mollifier: table needs matching r/rho arrays of length >= 2");
  for (size_t i = 0; i < r.size(); ++i) {
    if (i && !(r[i] > r[i - 1]))
      throw std::invalid_argument("mollifier: table radii must be strictly increasing");
    if (rho[i] < 0.0) throw std::invalid_argument("mollifier: table density must be nonnegative");
  }
  if (!(r.front() >= 0.0)) throw std::invalid_argument("mollifier: table radii must be nonnegative");

  // Exact mass of the piecewise-linear shape against r^{n-1}, then rescale
  // so the family is normalized for every eps.
  double mass = 0.0;
  for (size_t i = 0; i + 1 < r.size(); ++i) {
    double a = r[i], b = r[i + 1];
    double fa = rho[i], fb = rho[i + 1];
    double slope = (fb - fa) / (b - a);
    double c0 = fa - slope * a;  // rho_hat(s) = c0 + slope s on [a, b]
    auto I = [&](double t) {
      // int (c0 + slope s) s^{n-1} ds
      return c0 * std::pow(t, n) / n + slope * std::pow(t, n + 1) / (n + 1);
    };
    mass += I(b) - I(a);
  }
  if (!(mass > 0.0)) throw std::invalid_argument("mollifier: table has zero mass");
  for (auto& v : rho) v /= mass;

  MollifierFamily f;
  f.kind_ = Kind::Table;
  f.n_ = n;
  f.tr_ = std::move(r);
  f.trho_ = std::move(rho);
  return f;
}

std::string MollifierFamily::kind_name() const {
  switch (kind_) {
    case Kind::Power: return "power";
    case Kind::LogType: return "log";
    case Kind::Gaussian: return "gaussian";
    case Kind::Table: return "table";
  }
  return "?";
}

double MollifierFamily::density(double eps, double r) const {
  if (!(eps > 0.0)) throw std::invalid_argument("mollifier: eps must be positive");
  if (r <= 0.0) return 0.0;
  switch (kind_) {
    case Kind::Power:
      if (r >= eps) return 0.0;
      return (n_ + mp_) * std::pow(r, mp_) / std::pow(eps, n_ + mp_);
    case Kind::LogType:
      if (!(eps < 1.0)) throw std::invalid_argument("mollifier: log kind needs eps in (0,1)");
      if (r >= 1.0) return 0.0;
      return eps * std::pow(r, -n_ + eps);
    case Kind::Gaussian:
      if (r >= kGaussCut * eps) return 0.0;
      return std::exp(-0.5 * (r / eps) * (r / eps)) / (gauss_norm_ * std::pow(eps, n_));
    case Kind::Table: {
      double s = r / eps;
      if (s <= tr_.front() || s >= tr_.back()) {
        // shape extends to the first node by constant continuation at r=0 edge
        if (s <= tr_.front() && tr_.front() == 0.0) s = tr_.front();
        else return 0.0;
      }
      auto it = std::upper_bound(tr_.begin(), tr_.end(), s);
      size_t i = std::max<size_t>(1, it - tr_.begin()) - 1;
      i = std::min(i, tr_.size() - 2);
      double t = (s - tr_[i]) / (tr_[i + 1] - tr_[i]);
      return (trho_[i] * (1.0 - t) + trho_[i + 1] * t) / std::pow(eps, n_);
    }
  }
  return 0.0;
}

double MollifierFamily::support_radius(double eps) const {
  switch (kind_) {
    case Kind::Power: return eps;
    case Kind::LogType: return 1.0;
    case Kind::Gaussian: return kGaussCut * eps;
    case Kind::Table: return eps * tr_.back();
  }
  return 0.0;
}

double MollifierFamily::power_exponent() const {
  if (kind_ != Kind::Power)
    throw std::invalid_argument("mollifier: power_exponent only defined for the power kind");
  return mp_;
}

std::vector<double> MollifierFamily::breakpoints(double eps) const {
  switch (kind_) {
    case Kind::Power: return {eps};
    case Kind::LogType: return {1.0};
    case Kind::Gaussian: return {kGaussCut * eps};
    case Kind::Table: {
      std::vector<double> b;
      for (double s : tr_) if (s > 0.0) b.push_back(eps * s);
      return b;
    }
  }
  return {};
}

double MollifierFamily::density_derivative(double eps, double r) const {
  switch (kind_) {
    case Kind::Power:
      if (r <= 0.0 || r >= eps) return 0.0;
      if (mp_ == 0.0) return 0.0;
      return (n_ + mp_) * mp_ * std::pow(r, mp_ - 1.0) / std::pow(eps, n_ + mp_);
    case Kind::LogType:
      if (r <= 0.0 || r >= 1.0) return 0.0;
      return eps * (-n_ + eps) * std::pow(r, -n_ + eps - 1.0);
    case Kind::Gaussian: {
      if (r <= 0.0 || r >= kGaussCut * eps) return 0.0;
      double s = r / eps;
      return -s / eps * std::exp(-0.5 * s * s) / (gauss_norm_ * std::pow(eps, n_));
    }
    case Kind::Table: {
      double s = r / eps;
      if (s <= tr_.front() || s >= tr_.back()) return 0.0;
      auto it = std::upper_bound(tr_.begin(), tr_.end(), s);
      size_t i = std::max<size_t>(1, it - tr_.begin()) - 1;
      i = std::min(i, tr_.size() - 2);
      return (trho_[i + 1] - trho_[i]) / (tr_[i + 1] - tr_[i]) / std::pow(eps, n_ + 1);
    }
  }
  return 0.0;
}

bool MollifierFamily::kernel_singular_at_origin(double s) const {
  switch (kind_) {
    case Kind::Power: return s > mp_;  // rho/r^s ~ r^{mp-s} near 0
    case Kind::LogType: return true;
    case Kind::Gaussian: return s > 0.0;
    case Kind::Table: return s > 0.0 && tr_.front() == 0.0 && trho_.front() > 0.0;
  }
  return false;
}

MollifierReport check_mollifier(const MollifierFamily& mol, double eps, double delta,
                                std::optional<double> p) {
  if (!(eps > 0.0)) throw std::invalid_argument("check_mollifier: eps must be positive");
  if (delta < 0.0) throw std::invalid_argument("check_mollifier: negative delta");
  MollifierReport rep;
  rep.converged = true;
  double R = mol.support_radius(eps);
  int n = mol.dim();

  auto piecewise = [&](double lo, double hi, auto&& weight) {
    if (hi <= lo) return 0.0;
    std::vector<double> cuts{lo};
    for (double b : mol.breakpoints(eps))
      if (b > lo && b < hi) cuts.push_back(b);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      bool ok = true;
      total += adaptive_simpson(
          [&](double r) { return mol.density(eps, r) * weight(r); }, cuts[i],
          cuts[i + 1], 1e-12, 40, &ok);
      if (!ok) rep.converged = false;
    }
    return total;
  };

  // The log-type density integrates to an exact power of r; the adaptive rule
  // struggles only at the origin where the integrand is r^{eps-1}. Start the
  // numeric part at a tiny radius and add the analytic head.
  double head = 0.0, lo = 0.0;
  if (mol.kind() == MollifierFamily::Kind::LogType) {
    lo = std::min(1e-6, R);
    head = std::pow(lo, eps);  // int_0^lo eps r^{eps-1} dr
  }
  rep.normalization = head + piecewise(lo, R, [n](double r) { return std::pow(r, n - 1); });
  if (delta < R) {
    double tail_head = 0.0, tlo = std::max(delta, lo);
    if (mol.kind() == MollifierFamily::Kind::LogType && delta < lo)
      tail_head = std::pow(lo, eps) - std::pow(delta, eps);
    rep.tail_mass = tail_head + piecewise(tlo, R, [n](double r) { return std::pow(r, n - 1); });
  } else {
    rep.tail_mass = 0.0;
  }
  if (p) {
    double mhead = 0.0;
    if (mol.kind() == MollifierFamily::Kind::LogType)
      mhead = eps / (eps + *p) * std::pow(lo, eps + *p);
    rep.moment_p = mhead + piecewise(lo, R, [&](double r) { return std::pow(r, n - 1 + *p); });
  }
  return rep;
}

}  // namespace sobnl
