#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "sobnl/catalog.hpp"
#include "sobnl/geometry.hpp"
#include "sobnl/jet.hpp"
#include "sobnl/mollifier.hpp"
#include "sobnl/sphere.hpp"

using namespace sobnl;
using std::numbers::pi;

namespace {

// Composite two-point Gauss over (a, b): nodes stay strictly inside the
// panels, so densities with jumps at the piece boundaries are sampled on
// the correct side. This is the independent quadrature the mollifier
// checks are measured against.
double gauss2(const std::function<double(double)>& f, double a, double b, int panels) {
  const double t = 0.5 / std::numbers::sqrt3;
  double h = (b - a) / panels, s = 0.0;
  for (int i = 0; i < panels; ++i) {
    double mid = a + (i + 0.5) * h;
    s += 0.5 * h * (f(mid - t * h) + f(mid + t * h));
  }
  return s;
}

double radial_mass(const MollifierFamily& mol, double eps, int n) {
  double R = mol.support_radius(eps);
  // integrate between breakpoints; the density is smooth inside each piece
  std::vector<double> cuts = mol.breakpoints(eps);
  double lo = 1e-12 * R, s = 0.0;
  for (double c : cuts) {
    s += gauss2([&](double r) { return mol.density(eps, r) * std::pow(r, n - 1); }, lo,
                c, 4000);
    lo = c;
  }
  return s;
}

}  // namespace

TEST_CASE("mollifier families integrate to one against independent quadrature") {
  for (int n = 1; n <= 3; ++n) {
    for (double eps : {0.5, 0.1, 0.02}) {
      CHECK(radial_mass(MollifierFamily::power(n, 2, 2.0), eps, n) ==
            doctest::Approx(1.0).epsilon(1e-9));
      CHECK(radial_mass(MollifierFamily::gaussian(n), eps, n) ==
            doctest::Approx(1.0).epsilon(1e-9));
      // log-type: the r^{eps-1} spike at zero defeats uniform panels, so
      // compare the mass over (delta, 1) with the closed form 1 - delta^eps.
      auto lg = MollifierFamily::log_type(n);
      double tail =
          gauss2([&](double r) { return lg.density(eps, r) * std::pow(r, n - 1); }, 0.01,
                 1.0, 4000);
      CHECK(tail == doctest::Approx(1.0 - std::pow(0.01, eps)).epsilon(1e-9));
    }
    auto tab = MollifierFamily::table(n, {0.0, 0.5, 1.0}, {1.0, 0.8, 0.0});
    CHECK(radial_mass(tab, 0.3, n) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("power mollifier: flat remainder kernel and closed-form moments") {
  const int n = 1, m = 2;
  const double p = 2.0, eps = 0.25;
  auto mol = MollifierFamily::power(n, m, p);
  CHECK(mol.power_exponent() == doctest::Approx(m * p));
  // rho_eps(r) / r^{mp} == (n + mp) / eps^{n+mp} on (0, eps)
  const double flat = (n + m * p) / std::pow(eps, n + m * p);
  for (double r : {0.01, 0.1, 0.2, 0.2499})
    CHECK(mol.density(eps, r) / std::pow(r, m * p) == doctest::Approx(flat).epsilon(1e-13));
  CHECK(mol.density(eps, 0.26) == 0.0);
  CHECK_FALSE(mol.kernel_singular_at_origin(m * p));
  CHECK(mol.kernel_singular_at_origin(m * p + 1.0));

  // int r^p rho r^{n-1} dr = (n+mp)/(n+mp+p) eps^p
  auto rep = check_mollifier(mol, eps, eps / 2, p);
  CHECK(rep.converged);
  CHECK(rep.normalization == doctest::Approx(1.0).epsilon(1e-10));
  REQUIRE(rep.moment_p.has_value());
  const double mp_ = n + m * p;
  CHECK(*rep.moment_p == doctest::Approx(mp_ / (mp_ + p) * std::pow(eps, p)).epsilon(1e-9));
  // mass beyond eps/2: 1 - (1/2)^{n+mp}
  CHECK(rep.tail_mass == doctest::Approx(1.0 - std::pow(0.5, mp_)).epsilon(1e-9));
}

TEST_CASE("log-type mollifier keeps unit support and loses mass near zero slowly") {
  auto mol = MollifierFamily::log_type(2);
  CHECK(mol.support_radius(0.5) == doctest::Approx(1.0));
  CHECK(mol.support_radius(0.01) == doctest::Approx(1.0));
  // rho_eps(r) r^{n-1} = eps r^{eps-1}; mass below delta is delta^eps
  auto rep = check_mollifier(mol, 0.2, 0.5);
  CHECK(rep.tail_mass == doctest::Approx(1.0 - std::pow(0.5, 0.2)).epsilon(1e-6));
  CHECK(mol.kernel_singular_at_origin(1.0));
}

TEST_CASE("density derivative agrees with finite differences inside each piece") {
  for (auto mol : {MollifierFamily::power(2, 1, 2.0), MollifierFamily::gaussian(1),
                   MollifierFamily::table(1, {0.0, 0.4, 1.0}, {0.2, 1.0, 0.0})}) {
    const double eps = 0.3;
    for (double r : {0.02, 0.05, 0.08}) {
      double fd = (mol.density(eps, r + 1e-6) - mol.density(eps, r - 1e-6)) / 2e-6;
      CHECK(mol.density_derivative(eps, r) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("sphere rules: exact total measure") {
  // |S^0| = 2 (counting), |S^1| = 2 pi, |S^2| = 4 pi
  for (int n = 1; n <= 3; ++n) {
    auto rule = SphereRule::make(n);
    CHECK(rule.total_weight() ==
          doctest::Approx(sphere_measure(n)).epsilon(1e-12));
    for (size_t i = 0; i < rule.nodes.size(); ++i)
      CHECK(norm2(rule.nodes[i], n) == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("sphere rules integrate low moments exactly enough") {
  // int_{S^1} e0^2 = pi, int_{S^1} e0^4 = 3 pi / 4
  auto r2 = SphereRule::make(2);
  double m2 = 0.0, m4 = 0.0;
  for (size_t i = 0; i < r2.nodes.size(); ++i) {
    double c = r2.nodes[i][0];
    m2 += c * c * r2.weights[i];
    m4 += c * c * c * c * r2.weights[i];
  }
  CHECK(m2 == doctest::Approx(pi).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(0.75 * pi).epsilon(1e-12));

  // int_{S^2} e0^2 = 4 pi / 3, int_{S^2} e0^2 e1^2 = 4 pi / 15
  auto r3 = SphereRule::make(3);
  double s2 = 0.0, s22 = 0.0;
  for (size_t i = 0; i < r3.nodes.size(); ++i) {
    double a = r3.nodes[i][0], b = r3.nodes[i][1];
    s2 += a * a * r3.weights[i];
    s22 += a * a * b * b * r3.weights[i];
  }
  CHECK(s2 == doctest::Approx(4 * pi / 3).epsilon(1e-10));
  CHECK(s22 == doctest::Approx(4 * pi / 15).epsilon(1e-10));
}

TEST_CASE("coefficient sphere norm against closed forms") {
  auto rule2 = SphereRule::make(2);
  // v = (1, 0), m = 1: (int |e0|^2)^{1/2} = sqrt(pi)
  CoefficientVector v{2, 1, {1.0, 0.0}};
  CHECK(coeff_sphere_norm(v, 2.0, rule2) == doctest::Approx(std::sqrt(pi)).epsilon(1e-12));

  // n = 1, m = 2: sum is c e^2/2 = c/2 at both poles -> norm = 2^{1/p} |c|/2
  auto rule1 = SphereRule::make(1);
  CoefficientVector c1{1, 2, {3.0}};
  CHECK(coeff_sphere_norm(c1, 2.0, rule1) ==
        doctest::Approx(std::pow(2.0, 0.5) * 1.5).epsilon(1e-13));
  CHECK(coeff_sphere_norm(c1, 1.0, rule1) == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("norm axioms hold on random coefficient vectors") {
  std::mt19937_64 rng(0x90210);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int n = 1; n <= 2; ++n)
    for (int m = 1; m <= 2; ++m)
      for (double p : {1.0, 2.0}) {
        auto rule = SphereRule::make(n);
        const size_t k = multiindices_of_order(n, m).size();
        for (int rep = 0; rep < 200; ++rep) {
          CoefficientVector u{n, m, {}}, v{n, m, {}};
          for (size_t i = 0; i < k; ++i) {
            u.v.push_back(g(rng));
            v.v.push_back(g(rng));
          }
          double nu = coeff_sphere_norm(u, p, rule);
          double nv = coeff_sphere_norm(v, p, rule);
          CoefficientVector w = u;
          for (size_t i = 0; i < k; ++i) w.v[i] += v.v[i];
          CHECK(coeff_sphere_norm(w, p, rule) <= nu + nv + 1e-12 * (nu + nv + 1));
          CoefficientVector s = u;
          for (size_t i = 0; i < k; ++i) s.v[i] *= -2.5;
          CHECK(coeff_sphere_norm(s, p, rule) == doctest::Approx(2.5 * nu).epsilon(1e-12));
          CHECK(nu > 0.0);  // positive-definite on nonzero vectors
        }
      }
}

TEST_CASE("norm equivalence probe brackets the sampled norms") {
  // n=1, m=1: every |c|=1 has sphere norm 2^{1/p}, so the bracket collapses.
  auto rule1 = SphereRule::make(1);
  auto eq = norm_equivalence_probe(1, 1, 2.0, rule1, 500);
  CHECK(eq.c_lower == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(eq.c_upper == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  auto rule2 = SphereRule::make(2);
  auto eq2 = norm_equivalence_probe(2, 2, 2.0, rule2, 500);
  CHECK(eq2.c_lower > 0.0);
  CHECK(eq2.c_lower <= eq2.c_upper);
}

TEST_CASE("sphere limit targets match hand-computed energies") {
  auto rule1 = SphereRule::make(1);
  auto rule2 = SphereRule::make(2);

  // f = x, m=1, p=2 on (0,1): 2 int_0^1 1 = 2 (exact on the midpoint lattice)
  {
    Grid g(Domain::interval(0, 1), 1.0 / 64);
    Jet F = Jet::analytic(catalog_lookup("x"), 1);
    CHECK(sphere_limit_target(F, 1, 2.0, rule1, g) == doctest::Approx(2.0).epsilon(1e-13));
  }
  // f = x^2: 2 int_0^1 4x^2 = 8/3
  {
    Grid g(Domain::interval(0, 1), 1.0 / 512);
    Jet F = Jet::analytic(catalog_lookup("x^2"), 1);
    CHECK(sphere_limit_target(F, 1, 2.0, rule1, g) ==
          doctest::Approx(8.0 / 3).epsilon(1e-5));
  }
  // f = sin, m=1: 2 int_0^1 cos^2 = 1 + sin(2)/2
  {
    Grid g(Domain::interval(0, 1), 1.0 / 512);
    Jet F = Jet::analytic(catalog_lookup("sin"), 1);
    CHECK(sphere_limit_target(F, 1, 2.0, rule1, g) ==
          doctest::Approx(1.0 + std::sin(2.0) / 2).epsilon(1e-5));
  }
  // f = xy, m=1 on (0,1)^2: pi int (x^2 + y^2) = 2 pi / 3
  {
    Grid g(Domain::square(0, 1), 1.0 / 128);
    Jet F = Jet::analytic(catalog_lookup("xy"), 1);
    CHECK(sphere_limit_target(F, 1, 2.0, rule2, g) ==
          doctest::Approx(2 * pi / 3).epsilon(1e-4));
  }
  // f = sin x sin y, m=1: pi int (cos^2 sin^2 + sin^2 cos^2) = 2 pi (1/4 - sin^2(2)/16)
  {
    Grid g(Domain::square(0, 1), 1.0 / 128);
    Jet F = Jet::analytic(catalog_lookup("sinsin"), 1);
    double sin2 = std::sin(2.0);
    CHECK(sphere_limit_target(F, 1, 2.0, rule2, g) ==
          doctest::Approx(2 * pi * (0.25 - sin2 * sin2 / 16)).epsilon(1e-4));
  }
  // f = x^3, m=2, p=2: at |alpha|=2 the sum is 3x e^2; 2 int_0^1 9x^2 = 6
  {
    Grid g(Domain::interval(0, 1), 1.0 / 512);
    Jet F = Jet::analytic(catalog_lookup("x^3"), 2);
    CHECK(sphere_limit_target(F, 2, 2.0, rule1, g) == doctest::Approx(6.0).epsilon(1e-5));
  }
}
