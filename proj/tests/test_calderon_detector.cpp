#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "sobnl/calderon.hpp"
#include "sobnl/catalog.hpp"
#include "sobnl/detector.hpp"
#include "sobnl/functional.hpp"
#include "sobnl/geometry.hpp"
#include "sobnl/jet.hpp"

using namespace sobnl;

namespace {

// Replicates the sample-point rule of the fits: centers of active cells in
// the open ball B(y, eps).
std::vector<Vec> ball_centers(const Grid& g, const Vec& y, double eps) {
  std::vector<Vec> out;
  for (int64_t a = 0; a < g.active_count(); ++a) {
    Vec c = g.center(a);
    if (norm2(sub(c, y), g.dim()) < eps * eps) out.push_back(c);
  }
  return out;
}

// (avg over pts of |f - P|^p)^{1/p}, the objective the fits report.
double avg_residual(const Jet& F, const LocalFit& fit, const Vec& y,
                    const std::vector<Vec>& pts, double p) {
  double s = 0.0;
  for (const Vec& x : pts) s += std::pow(std::abs(F.f0(x) - local_fit_value(fit, y, x)), p);
  return std::pow(s / static_cast<double>(pts.size()), 1.0 / p);
}

// Two unrelated affine pieces, one per component of a disconnected domain.
class SplitEntry : public CatalogEntry {
 public:
  int dim() const override { return 1; }
  std::string name() const override { return "split-affine"; }
  double derivative(const MultiIndex& alpha, const Vec& x) const override {
    const bool left = x[0] < 0.5;
    if (alpha.order() == 0) return left ? 1.0 + 2.0 * x[0] : 3.0 - x[0];
    if (alpha.order() == 1) return left ? 2.0 : -1.0;
    return 0.0;
  }
};

}  // namespace

TEST_CASE("local least-squares fits recover Taylor coefficients of polynomial data") {
  // 1-D quadratic: the reported coefficients are in the (x-y)^alpha / alpha!
  // basis, so they must equal the derivatives of f at the center.
  {
    const auto f = catalog_lookup("poly:1 + 2x - 0.5x^2");
    const Jet F = Jet::analytic(f, 0);
    Grid grid(Domain::interval(0.0, 1.0), 1.0 / 256);
    const Vec y = vec1(0.7);
    const LocalFit fit = best_local_polynomial(F, y, 0.2, 2, 2.0, grid);
    REQUIRE(fit.basis.size() == 3);
    CHECK(fit.iterations == 1);
    CHECK(fit.points >= 3);
    for (size_t j = 0; j < fit.basis.size(); ++j)
      CHECK(std::fabs(fit.coeff[j] - f->derivative(fit.basis[j], y)) <= 1e-9);
    CHECK(fit.residual <= 1e-12);
    for (double t : {0.55, 0.7, 0.85})
      CHECK(local_fit_value(fit, y, vec1(t)) == doctest::Approx((*f)(vec1(t))).epsilon(1e-11));
  }

  // 2-D dense quadratic, same statement.
  {
    const auto f = canonical_polynomial(2, 2);
    const Jet F = Jet::analytic(f, 0);
    Grid grid(Domain::square(0.0, 1.0), 1.0 / 64);
    const Vec y = vec2(0.5, 0.5);
    const LocalFit fit = best_local_polynomial(F, y, 0.25, 2, 2.0, grid);
    REQUIRE(fit.basis.size() == 6);
    for (size_t j = 0; j < fit.basis.size(); ++j)
      CHECK(std::fabs(fit.coeff[j] - f->derivative(fit.basis[j], y)) <= 1e-8);
    CHECK(fit.residual <= 1e-11);
  }

  // Input validation: degree range, p range, eps sign, and balls that hold
  // fewer sample points than the basis.
  {
    const Jet F = Jet::analytic(catalog_lookup("sin"), 0);
    Grid grid(Domain::interval(0.0, 1.0), 1.0 / 64);
    CHECK_THROWS_AS(best_local_polynomial(F, vec1(0.5), 0.2, -1, 2.0, grid),
                    std::invalid_argument);
    CHECK_THROWS_AS(best_local_polynomial(F, vec1(0.5), 0.2, 7, 2.0, grid),
                    std::invalid_argument);
    CHECK_THROWS_AS(best_local_polynomial(F, vec1(0.5), 0.2, 1, 0.5, grid),
                    std::invalid_argument);
    CHECK_THROWS_AS(best_local_polynomial(F, vec1(0.5), 0.0, 1, 2.0, grid),
                    std::invalid_argument);
    // the open ball of radius 2h about a lattice node holds 4 cell centers,
    // one short of the quartic basis
    CHECK_THROWS_AS(best_local_polynomial(F, vec1(0.5), 2.0 / 64, 4, 2.0, grid),
                    std::invalid_argument);
  }
}

TEST_CASE("widening the basis never worsens the least-squares residual") {
  const Jet F = Jet::analytic(catalog_lookup("sin"), 0);
  Grid grid(Domain::interval(0.0, 3.0), 3.0 / 1024);
  const Vec y = vec1(1.2);
  std::vector<double> res;
  for (int deg = 0; deg <= 4; ++deg)
    res.push_back(best_local_polynomial(F, y, 0.4, deg, 2.0, grid).residual);
  for (size_t d = 1; d < res.size(); ++d) CHECK(res[d] <= res[d - 1] + 1e-14);
  CHECK(res[3] < 0.01 * res[0]);  // sin is far from constant on a 0.4-ball
}

TEST_CASE("fitted coefficients minimize the sampled objective") {
  const Jet F = Jet::analytic(catalog_lookup("sin"), 0);
  Grid grid(Domain::interval(0.0, 3.0), 3.0 / 1024);
  const Vec y = vec1(1.2);
  const double eps = 0.4;
  const auto pts = ball_centers(grid, y, eps);
  REQUIRE(!pts.empty());

  // p = 2: the report must equal the replicated objective, and random
  // coefficient perturbations must never beat it.
  {
    const LocalFit fit = best_local_polynomial(F, y, eps, 2, 2.0, grid);
    CHECK(avg_residual(F, fit, y, pts, 2.0) ==
          doctest::Approx(fit.residual).epsilon(1e-12));
    std::mt19937 rng(0x5EED01);
    std::uniform_real_distribution<double> dir(-1.0, 1.0);
    for (double mag : {1e-3, 1e-1}) {
      for (int trial = 0; trial < 20; ++trial) {
        LocalFit bent = fit;
        for (double& c : bent.coeff) c += mag * dir(rng) * std::max(1.0, std::fabs(c));
        CHECK(avg_residual(F, bent, y, pts, 2.0) >= fit.residual * (1.0 - 1e-12));
      }
    }
  }

  // p = 1.5 goes through reweighted iterations; the result must still match
  // the replicated objective, beat the p = 2 coefficients in its own norm,
  // and resist perturbation.
  {
    const LocalFit fit = best_local_polynomial(F, y, eps, 1, 1.5, grid);
    CHECK(fit.iterations >= 2);
    CHECK(fit.iterations <= 100);
    CHECK(avg_residual(F, fit, y, pts, 1.5) ==
          doctest::Approx(fit.residual).epsilon(1e-12));
    const LocalFit ls = best_local_polynomial(F, y, eps, 1, 2.0, grid);
    CHECK(fit.residual <= avg_residual(F, ls, y, pts, 1.5) + 1e-9);
    std::mt19937 rng(0x5EED02);
    std::uniform_real_distribution<double> dir(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      LocalFit bent = fit;
      for (double& c : bent.coeff) c += 1e-2 * dir(rng) * std::max(1.0, std::fabs(c));
      CHECK(avg_residual(F, bent, y, pts, 1.5) >= fit.residual * (1.0 - 1e-6));
    }
  }

  // even data on a symmetric ball: the odd coefficient stays zero under IRLS
  {
    const Jet C = Jet::analytic(catalog_lookup("sqrtabs"), 0);
    Grid sym(Domain::interval(-1.0, 1.0), 1.0 / 256);
    const LocalFit fit = best_local_polynomial(C, vec1(0.0), 0.25, 1, 1.5, sym);
    CHECK(std::fabs(fit.coeff[1]) <= 1e-6);
  }
}

TEST_CASE("square-root cusp drives the maximal function like the inverse square root") {
  // f = |x|^{1/2} on (-1,1), centered on the cusp, m = 1, p = 2. The best
  // constant over B(0,eps) is avg sqrt|x| = (2/3) sqrt(eps) and the residual
  // is sqrt(eps/18), so N(eps) = eps^{-1} residual = eps^{-1/2} / sqrt(18):
  // unbounded as eps -> 0.
  const Jet F = Jet::analytic(catalog_lookup("sqrtabs"), 0);
  Grid grid(Domain::interval(-1.0, 1.0), 1.0 / 512);
  const std::vector<double> eps_grid = {0.5, 0.25, 0.125, 0.0625};

  for (double eps : eps_grid) {
    const LocalFit fit = best_local_polynomial(F, vec1(0.0), eps, 0, 2.0, grid);
    CHECK(fit.coeff[0] == doctest::Approx(2.0 / 3.0 * std::sqrt(eps)).epsilon(0.015));
    CHECK(fit.residual == doctest::Approx(std::sqrt(eps / 18.0)).epsilon(0.025));
  }

  const MaximalValue mv = maximal_function(F, vec1(0.0), 1, 2.0, eps_grid, grid);
  CHECK(mv.admissible == 4);
  CHECK(mv.argmax_eps == doctest::Approx(0.0625));
  CHECK(mv.value == doctest::Approx(1.0 / (std::sqrt(0.0625) * std::sqrt(18.0))).epsilon(0.025));
  CHECK(mv.growing);

  // a smooth function has a bounded maximal function: no growth flag
  const Jet S = Jet::analytic(catalog_lookup("sin"), 0);
  Grid sgrid(Domain::interval(0.0, 3.0), 3.0 / 1024);
  const MaximalValue sv = maximal_function(S, vec1(1.0), 1, 2.0, eps_grid, sgrid);
  CHECK(sv.admissible == 4);
  CHECK(!sv.growing);

  // validation: under-resolved epsilons and centers with no admissible ball
  CHECK_THROWS_AS(maximal_function(F, vec1(0.0), 1, 2.0, {1.0 / 1024}, grid),
                  std::invalid_argument);
  CHECK_THROWS_AS(maximal_function(S, vec1(2.9), 1, 2.0, {0.5}, sgrid),
                  std::invalid_argument);
}

TEST_CASE("the maximal function annihilates polynomial jets of fitting degree") {
  const std::vector<double> eps_grid = {0.25, 0.125};
  for (int n : {1, 2}) {
    Grid grid(n == 1 ? Domain::interval(0.0, 1.0) : Domain::square(0.0, 1.0),
              n == 1 ? 1.0 / 64 : 1.0 / 32);
    const Vec y = n == 1 ? vec1(0.5) : vec2(0.5, 0.5);
    for (int m = 1; m <= 3; ++m) {
      const Jet P = Jet::analytic(canonical_polynomial(n, m - 1), 0);
      const MaximalValue mv = maximal_function(P, y, m, 2.0, eps_grid, grid);
      CHECK(mv.value <= 1e-8);
      CHECK(!mv.growing);
    }
  }
}

TEST_CASE("maximal profiles serialize deterministically across thread counts") {
  const Jet F = Jet::analytic(catalog_lookup("sqrtabs"), 0);
  const Domain dom = Domain::interval(-1.0, 1.0);
  const std::vector<double> eps_grid = {0.25, 0.125};

  const MaximalProfile prof = maximal_profile(F, 1, 2.0, eps_grid, dom, 1.0 / 128, 1.0 / 8, 1);
  REQUIRE(!prof.centers.empty());
  CHECK(prof.fit_degree == 0);

  // centers keep a margin of the smallest ball, values agree with the
  // pointwise evaluation, and the aggregates match their definitions
  Grid grid(dom, 1.0 / 128);
  double maxv = 0.0, sum = 0.0;
  for (size_t i = 0; i < prof.centers.size(); ++i) {
    CHECK(dom.boundary_distance(prof.centers[i]) > 0.125);
    maxv = std::max(maxv, prof.values[i]);
    sum += std::pow(prof.values[i], 2.0);
    CHECK((prof.growing[i] == 0 || prof.growing[i] == 1));
  }
  CHECK(prof.max_value == maxv);
  CHECK(prof.lp_norm == doctest::Approx(std::sqrt(sum * 0.125)).epsilon(1e-12));
  {
    const MaximalValue mv =
        maximal_function(F, prof.centers[1], 1, 2.0, prof.eps_grid, grid);
    CHECK(prof.values[1] == mv.value);
    CHECK(prof.argmax_eps[1] == mv.argmax_eps);
  }

  // CSV: one header plus one row per center, parseable numbers
  const std::string csv = maximal_profile_csv(prof, 1);
  REQUIRE(csv.rfind("y0,N,argmax_eps,growing\n", 0) == 0);
  size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == prof.centers.size() + 1);
  {
    double y0 = 0.0, v = 0.0, ae = 0.0;
    int gr = -1;
    const std::string row = csv.substr(csv.find('\n') + 1);
    REQUIRE(std::sscanf(row.c_str(), "%lf,%lf,%lf,%d", &y0, &v, &ae, &gr) == 4);
    CHECK(y0 == prof.centers[0][0]);
    CHECK(v == prof.values[0]);
    CHECK(ae == prof.argmax_eps[0]);
    CHECK(gr == prof.growing[0]);
  }

  // byte-identical output regardless of the thread count
  const MaximalProfile par = maximal_profile(F, 1, 2.0, eps_grid, dom, 1.0 / 128, 1.0 / 8, 4);
  CHECK(maximal_profile_csv(par, 1) == csv);
}

TEST_CASE("polynomial detection separates polynomials from smooth functions at threshold order") {
  const Domain dom = Domain::interval(0.0, 1.0);
  QuadratureConfig cfg;
  cfg.h = 1.0 / 8;
  const EpsSchedule sched{0.5, 0.5, 2};

  // x^{m-1} is degree m-1: a polynomial at order m, not one at order m-1
  for (int m : {2, 3}) {
    const auto f = catalog_lookup(m == 2 ? "x" : "x^2");

    const DetectionReport hit = detect_polynomial(Jet::analytic(f, m - 1), m, 2.0, dom, sched, cfg);
    CHECK(hit.verdict == "polynomial");
    CHECK(hit.channel_a_polynomial);
    CHECK(hit.channel_b_polynomial);
    CHECK(!hit.singular.divergent);
    REQUIRE(hit.coeffs.size() == 1);
    REQUIRE(hit.coeffs[0].size() == hit.basis.size());
    for (size_t j = 0; j < hit.basis.size(); ++j)
      CHECK(std::fabs(hit.coeffs[0][j] - f->derivative(hit.basis[j], hit.fit_center)) <= 1e-8);
    CHECK(hit.residuals[0] <= hit.fit_tolerance);
    CHECK(hit.global_residual <= hit.fit_tolerance);
    CHECK(!hit.per_component);

    const DetectionReport miss =
        detect_polynomial(Jet::analytic(f, m - 2), m - 1, 2.0, dom, sched, cfg);
    CHECK(miss.verdict == "not-polynomial");
    CHECK(!miss.channel_a_polynomial);
    CHECK(!miss.channel_b_polynomial);
    CHECK(miss.singular.divergent);
    CHECK(miss.coeffs.empty());
  }

  // a smooth non-polynomial at m = 2
  {
    QuadratureConfig fine;
    fine.h = 1.0 / 16;
    const DetectionReport rep = detect_polynomial(Jet::analytic(catalog_lookup("sin"), 1), 2,
                                                  2.0, dom, EpsSchedule{0.25, 0.5, 2}, fine);
    CHECK(rep.verdict == "not-polynomial");
    CHECK(std::fabs(rep.sweep.limit) > rep.theta_zero);
    CHECK(rep.singular.divergent);
  }

  // validation: jet order below m-1, p below 1, dimension mismatch
  const Jet F0 = Jet::analytic(catalog_lookup("x"), 0);
  CHECK_THROWS_AS(detect_polynomial(F0, 3, 2.0, dom, sched, cfg), std::invalid_argument);
  CHECK_THROWS_AS(detect_polynomial(F0, 1, 0.5, dom, sched, cfg), std::invalid_argument);
  CHECK_THROWS_AS(detect_polynomial(F0, 1, 2.0, Domain::square(0.0, 1.0), sched, cfg),
                  std::invalid_argument);
}

TEST_CASE("components carrying different polynomials are flagged piecewise") {
  // two intervals, each affine with its own coefficients: every probe sees a
  // polynomial, but no single affine function explains both components
  Domain::Component left, right;
  left.box = Box{vec1(0.0), vec1(0.4), 1};
  right.box = Box{vec1(0.6), vec1(1.0), 1};
  const Domain dom = Domain::disjoint_union({left, right}, 1);
  const Jet F = Jet::analytic(std::make_shared<SplitEntry>(), 1);

  QuadratureConfig cfg;
  cfg.h = 1.0 / 32;
  const DetectionReport rep = detect_polynomial(F, 2, 2.0, dom, EpsSchedule{0.15, 0.5, 2}, cfg);

  CHECK(rep.verdict == "polynomial");
  CHECK(rep.per_component);
  REQUIRE(rep.coeffs.size() == 2);
  CHECK(rep.fit_center[0] == doctest::Approx(0.5));
  // rows are Taylor coefficients of each piece about the shared center
  CHECK(rep.coeffs[0][0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(rep.coeffs[0][1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(rep.coeffs[1][0] == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(rep.coeffs[1][1] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(rep.residuals[0] <= rep.fit_tolerance);
  CHECK(rep.residuals[1] <= rep.fit_tolerance);
  CHECK(rep.global_residual > 10.0 * std::max(rep.residuals[0], rep.residuals[1]));
}

TEST_CASE("detection reports round-trip through JSON") {
  const Domain dom = Domain::interval(0.0, 1.0);
  QuadratureConfig cfg;
  cfg.h = 1.0 / 8;
  const EpsSchedule sched{0.5, 0.5, 2};

  const DetectionReport hit = detect_polynomial(
      Jet::analytic(catalog_lookup("poly:1 + 2x"), 1), 2, 2.0, dom, sched, cfg);
  REQUIRE(hit.verdict == "polynomial");
  const nlohmann::json j = nlohmann::json::parse(detection_report_json(hit, 1));
  CHECK(j.at("verdict") == "polynomial");
  CHECK(j.at("channel_a").at("polynomial") == true);
  CHECK(j.at("channel_a").at("theta_zero").get<double>() == hit.theta_zero);
  CHECK(j.at("channel_b").at("divergent") == false);
  REQUIRE(j.contains("fit"));
  CHECK(j.at("fit").at("per_component") == false);
  REQUIRE(j.at("fit").at("coefficients").size() == 1);
  CHECK(j.at("fit").at("coefficients")[0][0].get<double>() ==
        doctest::Approx(hit.coeffs[0][0]).epsilon(1e-15));
  CHECK(j.at("fit").at("coefficients")[0][1].get<double>() ==
        doctest::Approx(hit.coeffs[0][1]).epsilon(1e-15));
  CHECK(j.at("fit").at("basis")[0] == "(0)");
  CHECK(j.at("fit").at("basis")[1] == "(1)");

  const DetectionReport miss =
      detect_polynomial(Jet::analytic(catalog_lookup("x"), 0), 1, 2.0, dom, sched, cfg);
  REQUIRE(miss.verdict == "not-polynomial");
  const nlohmann::json k = nlohmann::json::parse(detection_report_json(miss, 1));
  CHECK(k.at("verdict") == "not-polynomial");
  CHECK(!k.contains("fit"));
  CHECK(k.at("channel_b").at("values").size() == miss.singular.values.size());
}
