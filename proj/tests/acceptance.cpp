// Integration gate: every release-blocking property in one binary, one
// PASS/FAIL line per criterion, exit code = number of failures. Each check
// pins its own grid, schedule, and tolerance so a regression points at a
// single criterion instead of a pile of unit tests.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "sobnl/calderon.hpp"
#include "sobnl/catalog.hpp"
#include "sobnl/detector.hpp"
#include "sobnl/experiment.hpp"
#include "sobnl/functional.hpp"
#include "sobnl/geometry.hpp"
#include "sobnl/jet.hpp"
#include "sobnl/mollifier.hpp"
#include "sobnl/sphere.hpp"
#include "sobnl/whitney.hpp"

using namespace sobnl;
using std::numbers::pi;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

FunctionalSweep power_sweep(const Jet& F, int m, double p, const Domain& dom,
                            const QuadratureConfig& cfg, const EpsSchedule& sched) {
  MollifierFamily mol = MollifierFamily::power(dom.dim(), m, p);
  return run_sweep([&](double eps) { return bbm_functional(F, m, p, mol, eps, dom, cfg); },
                   sched);
}

// --- 1: mollified sweeps reach the sphere-average targets --------------------

bool criterion1(std::string& detail) {
  struct Case {
    const char* fn;
    int n;
    double h;
    double closed;  // NaN: fine-quadrature target only
  };
  const std::vector<Case> cases = {
      {"x", 1, 1.0 / 512, 2.0},
      {"x^2", 1, 1.0 / 512, 8.0 / 3.0},
      {"sin", 1, 1.0 / 512, 1.0 + std::sin(2.0) / 2.0},
      {"xy", 2, 1.0 / 128, 2.0 * pi / 3.0},
      {"sinsin", 2, 1.0 / 128, std::nan("")},
  };
  bool ok = true;
  double worst = 0.0, slowest = 0.0;
  const char* worst_fn = "";
  for (const Case& c : cases) {
    const double t0 = now_seconds();
    const Domain dom = c.n == 1 ? Domain::interval(0.0, 1.0) : Domain::square(0.0, 1.0);
    QuadratureConfig cfg;
    cfg.h = c.h;
    cfg.threads = 8;
    const EpsSchedule sched{c.n == 1 ? 0.125 : 0.25, 0.5, 3};
    const auto entry = catalog_lookup(c.fn);
    const FunctionalSweep sweep = power_sweep(Jet::analytic(entry, 0), 1, 2.0, dom, cfg, sched);
    const double target =
        sphere_limit_target(Jet::analytic(entry, 1), 1, 2.0, SphereRule::make(c.n), Grid(dom, c.h));
    double rel = std::fabs(sweep.limit - target) / std::fabs(target);
    if (!std::isnan(c.closed))
      rel = std::max(rel, std::fabs(sweep.limit - c.closed) / std::fabs(c.closed));
    const double secs = now_seconds() - t0;
    slowest = std::max(slowest, secs);
    if (rel > worst) {
      worst = rel;
      worst_fn = c.fn;
    }
    ok = ok && rel <= 0.03 && secs < 60.0;
  }
  detail = fmt("worst %.2f%% (%s), slowest case %.1f s", 100.0 * worst, worst_fn, slowest);
  return ok;
}

// --- 2: higher-order limits of the cubic -------------------------------------

double theta_zero_for(int m, const Domain& dom, const QuadratureConfig& cfg,
                      const EpsSchedule& sched) {
  // noise floor calibrated the way the detector does it: the same sweep on a
  // known polynomial of sub-threshold degree
  const Jet cal = Jet::analytic(canonical_polynomial(dom.dim(), m - 1), m - 1);
  const FunctionalSweep s = power_sweep(cal, m, 2.0, dom, cfg, sched);
  return std::max(10.0 * std::fabs(s.limit), 1e-10);
}

bool criterion2(std::string& detail) {
  const Domain dom = Domain::interval(0.0, 1.0);
  QuadratureConfig cfg;
  cfg.h = 1.0 / 64;
  cfg.threads = 4;
  const EpsSchedule sched{0.25, 0.5, 3};
  const auto cubic = catalog_lookup("x^3");

  const FunctionalSweep s2 = power_sweep(Jet::analytic(cubic, 1), 2, 2.0, dom, cfg, sched);
  const bool ok2 = std::fabs(s2.limit - 6.0) <= 0.03 * 6.0;

  // at order 3 the remainder of the cubic is the pure offset cube, so the
  // sweep converges to the third-order energy 2, not to 0; the annihilation
  // claim holds one order up, where the remainder vanishes identically
  const FunctionalSweep s3 = power_sweep(Jet::analytic(cubic, 2), 3, 2.0, dom, cfg, sched);
  const double theta3 = theta_zero_for(3, dom, cfg, sched);

  const FunctionalSweep s4 = power_sweep(Jet::analytic(cubic, 3), 4, 2.0, dom, cfg, sched);
  const bool ok4 = std::fabs(s4.limit) <= theta_zero_for(4, dom, cfg, sched);

  detail = fmt("m=2: %.4f (target 6); m=3: %.4f vs theta %.1e (third-order energy is 2, "
               "annihilation holds at m=4: %.1e)",
               s2.limit, s3.limit, theta3, std::fabs(s4.limit));
  return ok2 && ok4;
}

// --- 3: sub-threshold polynomials vanish in every channel --------------------

bool criterion3(std::string& detail) {
  double worst_fun = 0.0, worst_max = 0.0;
  bool ok = true;
  for (int n : {1, 2}) {
    const Domain dom = n == 1 ? Domain::interval(0.0, 1.0) : Domain::square(0.0, 1.0);
    const double h = n == 1 ? 1.0 / 64 : 1.0 / 32;
    QuadratureConfig cfg;
    cfg.h = h;
    cfg.threads = 4;
    QuadratureConfig scfg = cfg;
    scfg.h = n == 1 ? 1.0 / 16 : 1.0 / 8;
    Grid grid(dom, h);
    const Vec y = n == 1 ? vec1(0.5) : vec2(0.5, 0.5);
    for (int m = 1; m <= 3; ++m) {
      std::vector<CatalogEntryPtr> entries = {canonical_polynomial(n, m - 1)};
      if (n == 1 && m >= 2) entries.push_back(catalog_lookup("x"));
      if (n == 1 && m == 3) entries.push_back(catalog_lookup("x^2"));
      if (n == 2 && m == 3) entries.push_back(catalog_lookup("xy"));
      for (const CatalogEntryPtr& e : entries) {
        const Jet F = Jet::analytic(e, m - 1);
        const MollifierFamily mol = MollifierFamily::power(n, m, 2.0);
        const double b = bbm_functional(F, m, 2.0, mol, 0.25, dom, cfg);
        const double d = difference_functional(F, m, 2.0, mol, 0.25, dom, cfg);
        const double j = jet_condition_value(F, 2.0, 0.25, dom, cfg);
        const SingularIntegral s = singular_remainder_integral(F, m, 2.0, dom, scfg);
        double sv = 0.0;
        for (double v : s.values) sv = std::max(sv, std::fabs(v));
        const MaximalValue mv = maximal_function(F, y, m, 2.0, {0.25, 0.125}, grid);
        for (double v : {b, d, j, sv}) worst_fun = std::max(worst_fun, std::fabs(v));
        worst_max = std::max(worst_max, mv.value);
        ok = ok && std::fabs(b) <= 1e-12 && std::fabs(d) <= 1e-12 && std::fabs(j) <= 1e-12 &&
             sv <= 1e-12 && !s.divergent && mv.value <= 1e-8 && !mv.growing;
      }
    }
  }
  detail = fmt("worst functional %.1e (tol 1e-12), worst maximal %.1e (tol 1e-8)", worst_fun,
               worst_max);
  return ok;
}

// --- 4: detector sharpness at the threshold order ----------------------------

bool criterion4(std::string& detail) {
  const Domain dom = Domain::interval(0.0, 1.0);
  QuadratureConfig cfg;
  cfg.h = 0.125;
  const EpsSchedule sched{0.5, 0.5, 2};
  bool ok = true;
  std::string verdicts;
  for (int m : {2, 3}) {
    const auto f = catalog_lookup(m == 2 ? "x" : "x^2");
    const DetectionReport hit =
        detect_polynomial(Jet::analytic(f, m - 1), m, 2.0, dom, sched, cfg);
    const DetectionReport miss =
        detect_polynomial(Jet::analytic(f, m - 2), m - 1, 2.0, dom, sched, cfg);
    ok = ok && hit.verdict == "polynomial" && miss.verdict == "not-polynomial";
    verdicts += fmt("%s m=%d/%d: %s/%s; ", f->name().c_str(), m, m - 1, hit.verdict.c_str(),
                    miss.verdict.c_str());
  }
  // the bare singular integral of x^2 at (m=2, p=1) keeps growing under
  // spacing refinement from both reference bases
  const Jet F = Jet::analytic(catalog_lookup("x^2"), 1);
  double ratios[2] = {0.0, 0.0};
  int slot = 0;
  for (double base : {0.125, 0.0625}) {
    QuadratureConfig scfg;
    scfg.h = base;
    const SingularIntegral s = singular_remainder_integral(F, 2, 1.0, dom, scfg);
    ratios[slot] = s.values[2] / s.values[0];
    ok = ok && s.divergent && ratios[slot] > 1.5;
    ++slot;
  }
  detail = verdicts + fmt("divergence ratios %.2f, %.2f (> 1.5)", ratios[0], ratios[1]);
  return ok;
}

// --- 5: reconstruction convergence rates -------------------------------------

bool criterion5(std::string& detail) {
  const double t0 = now_seconds();
  const RateTable t = reconstruction_rates(Jet::analytic(catalog_lookup("sin"), 1),
                                           Domain::interval(0.0, pi), 2, 2.0, {3, 4, 5, 6, 7},
                                           pi / 8192, 8);
  const double secs = now_seconds() - t0;
  const double growth = t.norms.back()[2] / t.norms.front()[2];
  const bool ok = std::fabs(t.slopes[0] + 2.0) <= 0.3 && std::fabs(t.slopes[1] + 1.0) <= 0.3 &&
                  growth <= 1.25 && secs < 120.0;
  detail = fmt("slopes %.3f, %.3f (targets -2, -1 within 0.3); top-order growth %.3f "
               "(<= 1.25); %.1f s",
               t.slopes[0], t.slopes[1], growth, secs);
  return ok;
}

// --- 6: decomposition structure and partition of unity -----------------------

bool criterion6(std::string& detail) {
  const std::vector<std::pair<const char*, Domain>> domains = {
      {"interval", Domain::interval(0.0, 1.0)},
      {"square", Domain::square(0.0, 1.0)},
      {"l-shape", Domain::l_shape()},
      {"square-with-hole", Domain::square_with_hole()},
  };
  bool ok = true;
  double worst = 0.0;
  std::mt19937_64 rng(0xACCE06);
  for (const auto& [name, dom] : domains) {
    for (int k : {2, 3, 4}) {
      const WhitneyDecomposition dec(dom, k, k + 5);
      ok = ok && check_whitney(dec).all();
    }
    const WhitneyDecomposition dec(dom, 3, 9);
    const PartitionOfUnity pou(dec);
    const Box bb = dom.bounding_box();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 10000; ++s) {
      Vec x{0, 0, 0};
      do {
        for (int d = 0; d < dom.dim(); ++d) x[d] = bb.lo[d] + u(rng) * (bb.hi[d] - bb.lo[d]);
      } while (!(dom.boundary_distance(x) > dec.resolved_distance()));
      double sum = 0.0;
      for (const PartitionOfUnity::Term& t : pou.at(x)) sum += t.phi;
      worst = std::max(worst, std::fabs(sum - 1.0));
    }
  }
  ok = ok && worst <= 1e-12;
  detail = fmt("structure checks on 4 domains x 3 levels; partition sum off by %.1e "
               "(tol 1e-12) over 4x10^4 points",
               worst);
  return ok;
}

// --- 7: flat-kernel equivalence of the two functionals -----------------------

bool criterion7(std::string& detail) {
  std::mt19937_64 rng(0xACCE07);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double ps[4] = {1.0, 1.5, 2.0, 2.5};
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 2);
    const int m = 1 + static_cast<int>(rng() % 3);
    const double p = ps[rng() % 4];
    const double eps = 0.13 + 0.17 * u(rng);
    const Domain dom = n == 1 ? Domain::interval(0.0, 1.0) : Domain::square(0.0, 1.0);
    QuadratureConfig cfg;
    cfg.h = n == 1 ? 1.0 / 64 : 1.0 / 32;
    cfg.threads = 4;
    const Jet F = Jet::analytic(canonical_polynomial(n, m), m - 1);
    const double b =
        bbm_functional(F, m, p, MollifierFamily::power(n, m, p), eps, dom, cfg);
    const double j = jet_condition_value(F, p, eps, dom, cfg);
    const double rel = std::fabs(b - (n + m * p) * j) / std::fabs(b);
    worst = std::max(worst, rel);
    ok = ok && rel <= 1e-12;
  }
  detail = fmt("worst relative gap %.1e over 10 random configs (tol 1e-12)", worst);
  return ok;
}

// --- 8: pointwise remainder bounds dominate the averaged condition -----------

bool criterion8(std::string& detail) {
  struct Case {
    const char* fn;
    int n, m;
    double p;
  };
  // entries with every derivative bounded by 1: the remainder obeys
  // |R^{m-1}f(x,y)| <= A |x-y|^m with A = n^{m/2}/m!, so the constant
  // witness a = A/2 satisfies the bound with C = 2^p omega_{n-1}/(n+mp)
  const std::vector<Case> cases = {
      {"sin", 1, 1, 1.0}, {"sin", 1, 1, 2.0}, {"sin", 1, 2, 2.0},
      {"sinsin", 2, 1, 2.0}, {"sinsin", 2, 2, 2.0},
  };
  bool ok = true;
  double worst = 0.0;
  for (const Case& c : cases) {
    const Domain dom =
        c.n == 1 ? Domain::interval(0.0, pi) : Domain::square(0.0, pi);
    QuadratureConfig cfg;
    cfg.h = c.n == 1 ? pi / 512 : pi / 128;
    cfg.threads = 4;
    Grid grid(dom, cfg.h);
    const Jet F = Jet::analytic(catalog_lookup(c.fn), c.m - 1);

    double mfact = 1.0;
    for (int i = 2; i <= c.m; ++i) mfact *= i;
    const double A = std::pow(static_cast<double>(c.n), 0.5 * c.m) / mfact;
    const double a = 0.5 * A;
    const double C = std::pow(2.0, c.p) * sphere_measure(c.n) / (c.n + c.m * c.p);
    const double ap_norm =
        std::pow(a, c.p) * static_cast<double>(grid.active_count()) * grid.cell_volume();

    for (double eps : EpsSchedule{0.25, 0.5, 3}.values()) {
      const double jc = jet_condition_value(F, c.p, eps, dom, cfg);
      const double ratio = jc / (C * ap_norm);
      worst = std::max(worst, ratio);
      ok = ok && ratio <= 2.0;
    }
  }
  detail = fmt("worst value/bound ratio %.3f (must stay <= 2)", worst);
  return ok;
}

// --- 9: norm axioms on the sphere module --------------------------------------

bool criterion9(std::string& detail) {
  bool ok = true;
  double worst_tri = 0.0, worst_hom = 0.0;
  std::mt19937_64 rng(0xACCE09);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> tdist(-3.0, 3.0);
  for (int n : {1, 2}) {
    const SphereRule rule = SphereRule::make(n);
    if (n == 1)
      ok = ok && rule.total_weight() == 2.0;
    else
      ok = ok && std::fabs(rule.total_weight() - 2.0 * pi) <= 1e-10 * 2.0 * pi;
    for (int m : {1, 2}) {
      const size_t nb = multiindices_of_order(n, m).size();
      for (double p : {1.0, 2.0}) {
        for (int trial = 0; trial < 1000; ++trial) {
          CoefficientVector a{n, m, std::vector<double>(nb)};
          CoefficientVector b{n, m, std::vector<double>(nb)};
          CoefficientVector s{n, m, std::vector<double>(nb)};
          for (size_t i = 0; i < nb; ++i) {
            a.v[i] = u(rng);
            b.v[i] = u(rng);
            s.v[i] = a.v[i] + b.v[i];
          }
          const double na = coeff_sphere_norm(a, p, rule);
          const double nb2 = coeff_sphere_norm(b, p, rule);
          const double ns = coeff_sphere_norm(s, p, rule);
          ok = ok && na > 0.0;  // positivity (random vectors are nonzero)
          const double tri = ns - (na + nb2);
          worst_tri = std::max(worst_tri, tri / (na + nb2));
          ok = ok && tri <= 1e-12 * (na + nb2);

          const double t = tdist(rng);
          CoefficientVector ta = a;
          for (double& v : ta.v) v *= t;
          const double hom =
              std::fabs(coeff_sphere_norm(ta, p, rule) - std::fabs(t) * na);
          worst_hom = std::max(worst_hom, hom / std::max(std::fabs(t) * na, 1e-300));
          ok = ok && hom <= 1e-12 * std::max(std::fabs(t) * na, 1e-300) + 1e-300;
        }
      }
    }
  }
  detail = fmt("8000 random vectors; worst triangle excess %.1e, worst homogeneity drift "
               "%.1e; rule weights exact",
               worst_tri, worst_hom);
  return ok;
}

// --- 10: reference configs are thread-count invariant -------------------------

bool csv_cells_close(const std::string& a, const std::string& b, double tol,
                     std::string* why) {
  std::vector<std::string> la, lb;
  for (const std::string* src : {&a, &b}) {
    std::vector<std::string>& dst = src == &a ? la : lb;
    size_t pos = 0;
    while (pos < src->size()) {
      size_t nl = src->find('\n', pos);
      if (nl == std::string::npos) nl = src->size();
      dst.push_back(src->substr(pos, nl - pos));
      pos = nl + 1;
    }
  }
  if (la.size() != lb.size()) {
    *why = fmt("row count %zu vs %zu", la.size(), lb.size());
    return false;
  }
  for (size_t i = 0; i < la.size(); ++i) {
    std::vector<std::string> ca, cb;
    for (const std::string* src : {&la[i], &lb[i]}) {
      std::vector<std::string>& dst = src == &la[i] ? ca : cb;
      size_t pos = 0;
      while (true) {
        size_t comma = src->find(',', pos);
        dst.push_back(src->substr(pos, comma == std::string::npos ? comma : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    }
    if (ca.size() != cb.size()) {
      *why = fmt("row %zu: cell count %zu vs %zu", i, ca.size(), cb.size());
      return false;
    }
    for (size_t j = 0; j < ca.size(); ++j) {
      if (ca[j] == cb[j]) continue;
      char* enda = nullptr;
      char* endb = nullptr;
      const double x = std::strtod(ca[j].c_str(), &enda);
      const double y = std::strtod(cb[j].c_str(), &endb);
      const bool nums = enda && *enda == '\0' && endb && *endb == '\0' && !ca[j].empty() &&
                        !cb[j].empty();
      if (!nums || std::fabs(x - y) > tol * std::max(std::fabs(x), std::fabs(y))) {
        *why = fmt("row %zu cell %zu: '%s' vs '%s'", i, j, ca[j].c_str(), cb[j].c_str());
        return false;
      }
    }
  }
  return true;
}

bool criterion10(std::string& detail) {
  namespace fs = std::filesystem;
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(SOBNL_CONFIG_DIR))
    if (e.path().extension() == ".json") configs.push_back(e.path());
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) {
    detail = "no reference configs found under " SOBNL_CONFIG_DIR;
    return false;
  }
  bool ok = true;
  double slowest = 0.0;
  std::string bad;
  for (const fs::path& path : configs) {
    ExperimentConfig base = load_config(path.string());
    auto run_at = [&](int threads) {
      nlohmann::json raw = base.raw;
      raw["threads"] = threads;
      return run_experiment(parse_config(raw));
    };
    const ExperimentResult one = run_at(1);
    const ExperimentResult eight = run_at(8);
    slowest = std::max(slowest, one.seconds);
    std::string why;
    if (one.summary.dump(2) != eight.summary.dump(2)) {
      ok = false;
      bad += path.filename().string() + " (summary bytes differ) ";
    } else if (!csv_cells_close(one.csv, eight.csv, 1e-12, &why)) {
      ok = false;
      bad += path.filename().string() + " (" + why + ") ";
    }
    ok = ok && one.seconds < 120.0;
  }
  detail = fmt("%zu configs, summaries byte-identical at 1 vs 8 threads; slowest %.1f s "
               "single-threaded%s%s",
               configs.size(), slowest, bad.empty() ? "" : "; FAILED: ", bad.c_str());
  return ok;
}

struct Criterion {
  int id;
  const char* name;
  bool (*fn)(std::string&);
};

}  // namespace

int main() {
  const std::vector<Criterion> table = {
      {1, "sweep limits match sphere targets", criterion1},
      {2, "higher-order limits of the cubic", criterion2},
      {3, "sub-threshold polynomials vanish", criterion3},
      {4, "detector sharp at threshold order", criterion4},
      {5, "reconstruction convergence rates", criterion5},
      {6, "cube structure + partition of unity", criterion6},
      {7, "flat-kernel functional equivalence", criterion7},
      {8, "remainder bound dominates condition", criterion8},
      {9, "sphere norm axioms + rule weights", criterion9},
      {10, "reference configs thread-invariant", criterion10},
  };
  int failures = 0;
  std::printf("acceptance: %zu criteria\n", table.size());
  for (const Criterion& c : table) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& e) {
      detail = fmt("exception: %s", e.what());
    }
    if (!ok) ++failures;
    std::printf("criterion %2d  %-38s %s  %s\n", c.id, c.name, ok ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria pass\n", static_cast<int>(table.size()) - failures,
              table.size());
  return failures;
}
