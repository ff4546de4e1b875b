#include "sobnl/sphere.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sobnl {

namespace {

// Gauss-Legendre nodes/weights on (-1, 1) by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev-based initial guess, standard for this iteration.
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (t * p1 - p0) / (t * t - 1.0);
      double step = p1 / dp;
      t -= step;
      if (std::fabs(step) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

}  // namespace

SphereRule SphereRule::make(int n, int polar, int azimuth) {
  SphereRule rule;
  rule.dim = n;
  switch (n) {
    case 1:
      rule.nodes = {vec1(-1.0), vec1(1.0)};
      rule.weights = {1.0, 1.0};
      break;
    case 2: {
      if (azimuth < 4) throw std::invalid_argument("SphereRule: need at least 4 angles");
      double w = 2.0 * M_PI / azimuth;
      for (int i = 0; i < azimuth; ++i) {
        double th = 2.0 * M_PI * (i + 0.5) / azimuth;
        rule.nodes.push_back(vec2(std::cos(th), std::sin(th)));
        rule.weights.push_back(w);
      }
      break;
    }
    case 3: {
      if (polar < 2 || azimuth < 4)
        throw std::invalid_argument("SphereRule: rule too small");
      std::vector<double> ct, cw;
      gauss_legendre(polar, ct, cw);
      double wphi = 2.0 * M_PI / azimuth;
      for (int i = 0; i < polar; ++i) {
        double c = ct[i], s = std::sqrt(std::max(0.0, 1.0 - c * c));
        for (int j = 0; j < azimuth; ++j) {
          double phi = 2.0 * M_PI * (j + 0.5) / azimuth;
          rule.nodes.push_back(vec3(s * std::cos(phi), s * std::sin(phi), c));
          rule.weights.push_back(cw[i] * wphi);
        }
      }
      break;
    }
    default:
      throw std::invalid_argument("SphereRule: n must be 1..3");
  }
  return rule;
}

double coeff_sphere_norm(const CoefficientVector& c, double p, const SphereRule& rule) {
  if (rule.dim != c.dim) throw std::invalid_argument("coeff_sphere_norm: dimension mismatch");
  if (!(p >= 1.0)) throw std::invalid_argument("coeff_sphere_norm: p must be >= 1");
  auto idx = multiindices_of_order(c.dim, c.m);
  if (idx.size() != c.v.size())
    throw std::invalid_argument("coeff_sphere_norm: coefficient count mismatch");
  double acc = 0.0;
  for (size_t q = 0; q < rule.nodes.size(); ++q) {
    double s = 0.0;
    for (size_t r = 0; r < idx.size(); ++r)
      s += c.v[r] * idx[r].pow(rule.nodes[q]) / idx[r].factorial();
    acc += rule.weights[q] * std::pow(std::fabs(s), p);
  }
  return std::pow(acc, 1.0 / p);
}

double sphere_limit_target(const Jet& F, int m, double p, const SphereRule& rule,
                           const Grid& grid) {
  if (F.order() < m)
    throw std::invalid_argument("sphere_limit_target: jet order below m");
  if (rule.dim != F.dim())
    throw std::invalid_argument("sphere_limit_target: rule dimension mismatch");
  auto idx = multiindices_of_order(F.dim(), m);
  double vol = grid.cell_volume();
  double total = 0.0;
  for (int64_t a = 0; a < grid.active_count(); ++a) {
    Vec x = grid.center(a);
    double at_x = 0.0;
    for (size_t q = 0; q < rule.nodes.size(); ++q) {
      double s = 0.0;
      for (const auto& al : idx)
        s += F.component(al, x) * al.pow(rule.nodes[q]) / al.factorial();
      at_x += rule.weights[q] * std::pow(std::fabs(s), p);
    }
    total += at_x * vol;
  }
  return total;
}

NormEquivalence norm_equivalence_probe(int n, int m, double p, const SphereRule& rule,
                                       int samples, uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("norm_equivalence_probe: need samples");
  auto idx = multiindices_of_order(n, m);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  NormEquivalence eq;
  eq.c_lower = std::numeric_limits<double>::infinity();
  eq.c_upper = 0.0;
  CoefficientVector c;
  c.dim = n;
  c.m = m;
  c.v.resize(idx.size());
  for (int s = 0; s < samples; ++s) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& v : c.v) {
        v = gauss(rng);
        norm += v * v;
      }
    } while (!(norm > 1e-12));
    norm = std::sqrt(norm);
    for (auto& v : c.v) v /= norm;
    double val = coeff_sphere_norm(c, p, rule);
    eq.c_lower = std::min(eq.c_lower, val);
    eq.c_upper = std::max(eq.c_upper, val);
  }
  return eq;
}

}  // namespace sobnl
