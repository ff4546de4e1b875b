#include "sobnl/pair_weights.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace sobnl {

namespace {

// 24-point Gauss-Legendre nodes/weights on (-1, 1), enough for machine
// precision on the analytic pieces below.
constexpr int kGN = 24;
const double kGx[kGN] = {
    -0.9951872199970213, -0.9747285559713095, -0.9382745520027328,
    -0.8864155270044011, -0.8200019859739029, -0.7401241915785544,
    -0.6480936519369755, -0.5454214713888396, -0.4337935076260451,
    -0.3150426796961634, -0.1911188674736163, -0.0640568928626056,
    0.0640568928626056,  0.1911188674736163,  0.3150426796961634,
    0.4337935076260451,  0.5454214713888396,  0.6480936519369755,
    0.7401241915785544,  0.8200019859739029,  0.8864155270044011,
    0.9382745520027328,  0.9747285559713095,  0.9951872199970213};
const double kGw[kGN] = {
    0.0123412297999872, 0.0285313886289337, 0.0442774388174198,
    0.0592985849154368, 0.0733464814110803, 0.0861901615319533,
    0.0976186521041139, 0.1074442701159656, 0.1155056680537256,
    0.1216704729278034, 0.1258374563468283, 0.1279381953467522,
    0.1279381953467522, 0.1258374563468283, 0.1216704729278034,
    0.1155056680537256, 0.1074442701159656, 0.0976186521041139,
    0.0861901615319533, 0.0733464814110803, 0.0592985849154368,
    0.0442774388174198, 0.0285313886289337, 0.0123412297999872};

template <class F>
double gauss(const F& f, double a, double b) {
  if (!(b > a)) return 0.0;
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < kGN; ++i) s += kGw[i] * f(mid + half * kGx[i]);
  return s * half;
}

// int_lo^hi (h - |u - c|)_+ du, exact.
double hat_integral(double c, double h, double lo, double hi) {
  double a = std::max(lo, c - h), b = std::min(hi, c + h);
  if (!(b > a)) return 0.0;
  auto phi = [&](double t) { return h * t - 0.5 * t * std::fabs(t); };  // int_0^t (h-|s|) ds
  return phi(b - c) - phi(a - c);
}

double hat(double u, double c, double h) { return std::max(0.0, h - std::fabs(u - c)); }

// Radii where V1(l; c, h) = hat_integral(c, h, -l, l) changes formula.
void v1_kinks(double c, double h, std::vector<double>& out) {
  out.push_back(std::fabs(c - h));
  out.push_back(std::fabs(c));
  out.push_back(c + h);
}

double V1(double R, double c, double h) { return hat_integral(c, h, -R, R); }

// Shared driver: integrate f(u) * H_{c,h}(u) over [-R, R] with the trig
// substitution u = R sin(theta); `radius_kinks` hold radii t where
// f(sqrt(R^2 - u^2)) switches pieces, `extra_u` direct u-space cuts.
template <class F>
double hat_times_radial(double R, double c, double h, const std::vector<double>& radius_kinks,
                        const F& f_of_ell) {
  double lo = std::max(-R, c - h), hi = std::min(R, c + h);
  if (!(hi > lo)) return 0.0;
  std::vector<double> cuts{lo, hi, std::clamp(c, lo, hi), std::clamp(0.0, lo, hi)};
  for (double t : radius_kinks) {
    if (t < 0.0 || t >= R) continue;
    double u = std::sqrt(std::max(0.0, R * R - t * t));
    if (u > lo && u < hi) cuts.push_back(u);
    if (-u > lo && -u < hi) cuts.push_back(-u);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [&](double a, double b) { return std::fabs(a - b) < 1e-15 * (1.0 + R); }),
             cuts.end());
  double total = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    double ta = std::asin(std::clamp(cuts[i] / R, -1.0, 1.0));
    double tb = std::asin(std::clamp(cuts[i + 1] / R, -1.0, 1.0));
    total += gauss(
        [&](double th) {
          double u = R * std::sin(th), ell = R * std::cos(th);
          return hat(u, c, h) * f_of_ell(ell) * ell;  // du = R cos(th) dth = ell dth
        },
        ta, tb);
  }
  return total;
}

double V2(double R, double c1, double h1, double c2, double h2) {
  std::vector<double> rk;
  v1_kinks(c2, h2, rk);
  return hat_times_radial(R, c1, h1, rk, [&](double ell) { return V1(ell, c2, h2); });
}

void v2_kinks(double c1, double h1, double c2, double h2, std::vector<double>& out) {
  std::vector<double> k1, k2;
  v1_kinks(c1, h1, k1);
  v1_kinks(c2, h2, k2);
  k1.push_back(0.0);
  k2.push_back(0.0);
  for (double a : k1) {
    out.push_back(a);
    for (double b : k2) out.push_back(std::sqrt(a * a + b * b));
  }
  for (double b : k2) out.push_back(b);
}

double V3(double R, const Vec& c, const Vec& h) {
  std::vector<double> rk;
  v2_kinks(c[0], h[0], c[1], h[1], rk);
  return hat_times_radial(R, c[2], h[2], rk,
                          [&](double ell) { return V2(ell, c[0], h[0], c[1], h[1]); });
}

double ball_overlap(int dim, const Vec& c, const Vec& h, double R) {
  if (!(R > 0.0)) return 0.0;
  switch (dim) {
    case 1: return V1(R, c[0], h[0]);
    case 2: return V2(R, c[0], h[0], c[1], h[1]);
    case 3: return V3(R, c, h);
  }
  throw std::invalid_argument("cellpair_ball_overlap: dim must be 1..3");
}

// Kink radii of V(r) for the full offset, superset.
std::vector<double> overlap_kinks(int dim, const Vec& c, const Vec& h) {
  std::vector<double> out;
  if (dim == 1) {
    v1_kinks(c[0], h[0], out);
  } else if (dim == 2) {
    v2_kinks(c[0], h[0], c[1], h[1], out);
  } else {
    std::vector<double> k12, k3;
    v2_kinks(c[0], h[0], c[1], h[1], k12);
    v1_kinks(c[2], h[2], k3);
    k12.push_back(0.0);
    k3.push_back(0.0);
    for (double a : k12) {
      out.push_back(a);
      for (double b : k3) out.push_back(std::sqrt(a * a + b * b));
    }
    for (double b : k3) out.push_back(b);
  }
  return out;
}

}  // namespace

double cellpair_ball_overlap(int dim, const Vec& c, const Vec& h, double R) {
  Vec ca{0, 0, 0};
  for (int d = 0; d < dim; ++d) ca[d] = std::fabs(c[d]);
  return ball_overlap(dim, ca, h, R);
}

RadialKernel RadialKernel::indicator(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("RadialKernel: eps must be positive");
  RadialKernel k;
  k.support = eps;
  k.flat = true;
  k.flat_value = 1.0;
  k.value = [eps](double r) { return (r > 0.0 && r < eps) ? 1.0 : 0.0; };
  k.deriv = [](double) { return 0.0; };
  return k;
}

RadialKernel RadialKernel::monomial_ball(double q, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("RadialKernel: eps must be positive");
  if (!(q >= 0.0)) throw std::invalid_argument("RadialKernel: monomial degree must be >= 0");
  if (q == 0.0) return indicator(eps);
  RadialKernel k;
  k.support = eps;
  k.value = [q, eps](double r) { return (r > 0.0 && r < eps) ? std::pow(r, q) : 0.0; };
  k.deriv = [q](double r) { return r > 0.0 ? q * std::pow(r, q - 1.0) : 0.0; };
  return k;
}

RadialKernel RadialKernel::remainder(const MollifierFamily& mol, double eps, double s) {
  RadialKernel k;
  k.support = mol.support_radius(eps);
  k.singular_origin = mol.kernel_singular_at_origin(s);
  if (mol.kind() == MollifierFamily::Kind::Power && s == mol.power_exponent()) {
    int n = mol.dim();
    double mp = mol.power_exponent();
    k.flat = true;
    k.flat_value = (n + mp) / std::pow(eps, n + mp);
    k.value = [k2 = k.flat_value, eps](double r) { return (r > 0.0 && r < eps) ? k2 : 0.0; };
    k.deriv = [](double) { return 0.0; };
    return k;
  }
  for (double b : mol.breakpoints(eps))
    if (b > 0.0 && b < k.support) k.cuts.push_back(b);
  k.value = [mol, eps, s](double r) {
    return r > 0.0 ? mol.density(eps, r) / std::pow(r, s) : 0.0;
  };
  k.deriv = [mol, eps, s](double r) {
    if (r <= 0.0) return 0.0;
    double rho = mol.density(eps, r), drho = mol.density_derivative(eps, r);
    return (drho - s * rho / r) / std::pow(r, s);
  };
  return k;
}

std::vector<OffsetWeight> pair_weights(int dim, const Vec& h, const RadialKernel& kernel) {
  if (!(kernel.support > 0.0)) throw std::invalid_argument("pair_weights: empty kernel support");
  double vol = 1.0;
  for (int d = 0; d < dim; ++d) {
    if (!(h[d] > 0.0)) throw std::invalid_argument("pair_weights: bad spacing");
    vol *= h[d];
  }

  auto weight_abs = [&](const Vec& c) -> double {
    // radial extent of the cell-pair box around this offset
    double rmin2 = 0.0, rmax2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      double lo = std::max(0.0, c[d] - h[d]);
      rmin2 += lo * lo;
      double hi = c[d] + h[d];
      rmax2 += hi * hi;
    }
    double rmin = std::sqrt(rmin2);
    if (rmin >= kernel.support) return 0.0;

    double cdist = std::sqrt(norm2(c, dim));
    if (kernel.singular_origin && rmin <= 0.0) {
      // the |R|^p factor that tames the kernel is frozen at the midpoint;
      // regularize by the midpoint kernel value
      return kernel.value(cdist) * vol * vol;
    }
    double hi_r = std::min(kernel.support, std::sqrt(rmax2));
    if (kernel.flat) return kernel.flat_value * ball_overlap(dim, c, h, hi_r);

    // Stieltjes by parts on each smooth kernel piece:
    //   int kappa dV = kappa(b-) V(b) - kappa(a+) V(a) - int kappa' V dr
    std::vector<double> cuts{rmin, hi_r};
    for (double b : kernel.cuts)
      if (b > rmin && b < hi_r) cuts.push_back(b);
    std::vector<double> vk = overlap_kinks(dim, c, h);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      double a = cuts[i], b = cuts[i + 1];
      if (!(b - a > 1e-14 * (1.0 + b))) continue;
      double va = ball_overlap(dim, c, h, a), vb = ball_overlap(dim, c, h, b);
      double nudge = 1e-12 * (b - a);
      total += kernel.value(b - nudge) * vb - kernel.value(a + nudge) * va;
      // subtract int_a^b kappa' V, split at overlap kinks
      std::vector<double> sub{a, b};
      for (double t : vk)
        if (t > a && t < b) sub.push_back(t);
      std::sort(sub.begin(), sub.end());
      for (size_t j = 0; j + 1 < sub.size(); ++j)
        total -= gauss(
            [&](double r) { return kernel.deriv(r) * ball_overlap(dim, c, h, r); },
            sub[j], sub[j + 1]);
    }
    return total;
  };

  // canonical cache on |delta|
  std::map<std::array<int32_t, kMaxDim>, double> cache;
  std::array<int32_t, kMaxDim> reach{0, 0, 0};
  for (int d = 0; d < dim; ++d)
    reach[d] = static_cast<int32_t>(std::ceil(kernel.support / h[d])) + 1;

  std::vector<OffsetWeight> out;
  std::array<int32_t, kMaxDim> delta{0, 0, 0};
  for (int32_t a0 = -reach[0]; a0 <= reach[0]; ++a0) {
    delta[0] = a0;
    for (int32_t a1 = -reach[1]; a1 <= reach[1]; ++a1) {
      delta[1] = a1;
      for (int32_t a2 = -reach[2]; a2 <= reach[2]; ++a2) {
        delta[2] = a2;
        if (a0 == 0 && a1 == 0 && a2 == 0) continue;
        std::array<int32_t, kMaxDim> key{std::abs(a0), std::abs(a1), std::abs(a2)};
        Vec c{0, 0, 0};
        for (int d = 0; d < dim; ++d) c[d] = key[d] * h[d];
        auto it = cache.find(key);
        double w;
        if (it != cache.end()) {
          w = it->second;
        } else {
          w = weight_abs(c);
          cache.emplace(key, w);
        }
        if (w == 0.0) continue;
        OffsetWeight ow;
        ow.delta = delta;
        ow.w = w;
        ow.dist = std::sqrt(norm2(c, dim));
        out.push_back(ow);
      }
    }
  }
  return out;
}

}  // namespace sobnl
