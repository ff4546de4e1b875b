#include "sobnl/experiment.hpp"

#include <chrono>
#include <optional>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "sobnl/calderon.hpp"
#include "sobnl/catalog.hpp"
#include "sobnl/detector.hpp"
#include "sobnl/functional.hpp"
#include "sobnl/geometry.hpp"
#include "sobnl/jet.hpp"
#include "sobnl/mollifier.hpp"
#include "sobnl/sphere.hpp"
#include "sobnl/whitney.hpp"

namespace sobnl {

namespace {

// ---- config access with field-level diagnostics ----------------------------

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config." + path + ": " + what);
}

const nlohmann::json& need(const nlohmann::json& j, const std::string& path,
                           const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) fail(path.empty() ? key : path + "." + key, "missing required field");
  return *it;
}

double need_num(const nlohmann::json& j, const std::string& path, const std::string& key) {
  const nlohmann::json& v = need(j, path, key);
  if (!v.is_number()) fail(path.empty() ? key : path + "." + key, "expected a number");
  return v.get<double>();
}

int need_int(const nlohmann::json& j, const std::string& path, const std::string& key) {
  const nlohmann::json& v = need(j, path, key);
  if (!v.is_number_integer()) fail(path.empty() ? key : path + "." + key, "expected an integer");
  return v.get<int>();
}

std::string need_str(const nlohmann::json& j, const std::string& path, const std::string& key) {
  const nlohmann::json& v = need(j, path, key);
  if (!v.is_string()) fail(path.empty() ? key : path + "." + key, "expected a string");
  return v.get<std::string>();
}

double opt_num(const nlohmann::json& j, const std::string& path, const std::string& key,
               double dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_number()) fail(path.empty() ? key : path + "." + key, "expected a number");
  return it->get<double>();
}

int opt_int(const nlohmann::json& j, const std::string& path, const std::string& key, int dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_number_integer()) fail(path.empty() ? key : path + "." + key, "expected an integer");
  return it->get<int>();
}

std::vector<double> need_num_array(const nlohmann::json& j, const std::string& path,
                                   const std::string& key) {
  const nlohmann::json& v = need(j, path, key);
  if (!v.is_array() || v.empty()) fail(path + "." + key, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(path + "." + key, "expected a non-empty array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Vec vec_field(const nlohmann::json& j, const std::string& path, const std::string& key, int n) {
  const nlohmann::json& v = need(j, path, key);
  Vec out{0, 0, 0};
  if (v.is_number() && n == 1) {
    out[0] = v.get<double>();
    return out;
  }
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    fail(path + "." + key, "expected an array of " + std::to_string(n) + " numbers");
  for (int d = 0; d < n; ++d) {
    if (!v[d].is_number()) fail(path + "." + key, "expected numbers");
    out[d] = v[d].get<double>();
  }
  return out;
}

// ---- sub-object parsers -----------------------------------------------------

Domain parse_domain(const nlohmann::json& j, int n) {
  if (!j.is_object()) fail("domain", "expected an object");
  std::string kind = need_str(j, "domain", "kind");
  if (kind == "interval") {
    if (n != 1) fail("domain.kind", "interval requires n = 1");
    double lo = need_num(j, "domain", "lo"), hi = need_num(j, "domain", "hi");
    if (!(lo < hi)) fail("domain", "lo must be below hi");
    return Domain::interval(lo, hi);
  }
  if (kind == "box") {
    Vec lo = vec_field(j, "domain", "lo", n), hi = vec_field(j, "domain", "hi", n);
    for (int d = 0; d < n; ++d)
      if (!(lo[d] < hi[d])) fail("domain", "lo must be below hi in every axis");
    return Domain::box(lo, hi, n);
  }
  if (kind == "l-shape") {
    if (n != 2) fail("domain.kind", "l-shape requires n = 2");
    return Domain::l_shape();
  }
  if (kind == "square-with-hole") {
    if (n != 2) fail("domain.kind", "square-with-hole requires n = 2");
    double a = opt_num(j, "domain", "a", 0.25);
    if (!(a > 0.0 && a < 0.5)) fail("domain.a", "expected a in (0, 0.5)");
    return Domain::square_with_hole(a);
  }
  if (kind == "union") {
    const nlohmann::json& comps = need(j, "domain", "components");
    if (!comps.is_array() || comps.empty())
      fail("domain.components", "expected a non-empty array");
    std::vector<Domain::Component> cs;
    for (size_t i = 0; i < comps.size(); ++i) {
      const std::string path = "domain.components[" + std::to_string(i) + "]";
      Vec lo = vec_field(comps[i], path, "lo", n), hi = vec_field(comps[i], path, "hi", n);
      for (int d = 0; d < n; ++d)
        if (!(lo[d] < hi[d])) fail(path, "lo must be below hi in every axis");
      Domain::Component c;
      c.box = Box{lo, hi, n};
      if (comps[i].contains("hole_lo") || comps[i].contains("hole_hi"))
        c.hole = Box{vec_field(comps[i], path, "hole_lo", n),
                     vec_field(comps[i], path, "hole_hi", n), n};
      cs.push_back(c);
    }
    return Domain::disjoint_union(cs, n);
  }
  fail("domain.kind", "unknown kind '" + kind +
                          "' (interval, box, l-shape, square-with-hole, union)");
}

MollifierFamily parse_mollifier(const nlohmann::json& cfg, int n, int m, double p) {
  auto it = cfg.find("mollifier");
  if (it == cfg.end()) return MollifierFamily::power(n, m, p);
  const nlohmann::json& j = *it;
  if (!j.is_object()) fail("mollifier", "expected an object");
  std::string kind = need_str(j, "mollifier", "kind");
  if (kind == "power") return MollifierFamily::power(n, m, p);
  if (kind == "log") return MollifierFamily::log_type(n);
  if (kind == "gaussian") return MollifierFamily::gaussian(n);
  if (kind == "table") {
    std::vector<double> r = need_num_array(j, "mollifier", "r");
    std::vector<double> rho = need_num_array(j, "mollifier", "rho");
    if (r.size() != rho.size()) fail("mollifier", "r and rho must have equal length");
    try {
      return MollifierFamily::table(n, r, rho);
    } catch (const std::invalid_argument& e) {
      fail("mollifier", e.what());
    }
  }
  fail("mollifier.kind", "unknown kind '" + kind + "' (power, log, gaussian, table)");
}

EpsSchedule parse_eps(const nlohmann::json& cfg, double h) {
  const nlohmann::json& j = need(cfg, "", "eps");
  if (!j.is_object()) fail("eps", "expected an object {start, ratio, count}");
  EpsSchedule s;
  s.eps0 = need_num(j, "eps", "start");
  s.ratio = opt_num(j, "eps", "ratio", 0.5);
  s.count = opt_int(j, "eps", "count", 5);
  if (!(s.eps0 > 0.0)) fail("eps.start", "expected a positive number");
  if (!(s.ratio > 0.0 && s.ratio < 1.0)) fail("eps.ratio", "expected a ratio in (0, 1)");
  if (s.count < 1 || s.count > 64) fail("eps.count", "expected 1..64 steps");
  const double eps_min = s.eps0 * std::pow(s.ratio, s.count - 1);
  if (!(eps_min >= 2.0 * h))
    fail("eps", "smallest epsilon " + std::to_string(eps_min) +
                    " is below twice the grid spacing h = " + std::to_string(h));
  return s;
}

struct Problem {
  CatalogEntryPtr entry;
  std::optional<Jet> jet;  // order m-1
  int n = 1, m = 1;
  double p = 2.0;
  Domain dom = Domain::interval(0, 1);
  double h = 0.0;
  QuadratureConfig quad;
};

Problem parse_problem(const nlohmann::json& cfg) {
  Problem pr;
  pr.n = need_int(cfg, "", "n");
  if (pr.n < 1 || pr.n > 3) fail("n", "expected dimension 1..3");
  pr.m = need_int(cfg, "", "m");
  if (pr.m < 1 || pr.m > 6) fail("m", "expected order 1..6");
  pr.p = need_num(cfg, "", "p");
  if (!(pr.p >= 1.0)) fail("p", "expected p >= 1");
  std::string fname = need_str(cfg, "", "function");
  try {
    pr.entry = catalog_lookup(fname);
  } catch (const std::invalid_argument& e) {
    fail("function", e.what());
  }
  if (pr.entry->dim() != pr.n)
    fail("function", "'" + fname + "' has dimension " + std::to_string(pr.entry->dim()) +
                         ", config says n = " + std::to_string(pr.n));
  pr.dom = parse_domain(need(cfg, "", "domain"), pr.n);
  pr.h = need_num(cfg, "", "h");
  if (!(pr.h > 0.0)) fail("h", "expected a positive spacing");
  Box bb = pr.dom.bounding_box();
  for (int d = 0; d < pr.n; ++d)
    if (pr.h > 0.5 * (bb.hi[d] - bb.lo[d])) fail("h", "spacing exceeds half the domain side");

  pr.quad.h = pr.h;
  pr.quad.threads = opt_int(cfg, "", "threads", 1);
  if (pr.quad.threads < 1 || pr.quad.threads > 256) fail("threads", "expected 1..256");
  pr.quad.cutoff = opt_num(cfg, "", "cutoff", 0.0);
  if (pr.quad.cutoff < 0.0) fail("cutoff", "expected a non-negative cutoff");

  std::string jet_kind = "analytic";
  if (auto it = cfg.find("jet"); it != cfg.end()) {
    if (!it->is_string()) fail("jet", "expected \"analytic\" or \"sampled\"");
    jet_kind = it->get<std::string>();
  }
  if (jet_kind == "analytic") {
    pr.jet = Jet::analytic(pr.entry, pr.m - 1);
  } else if (jet_kind == "sampled") {
    double jh = opt_num(cfg, "", "jet_h", pr.h);
    if (!(jh > 0.0)) fail("jet_h", "expected a positive spacing");
    pr.jet = Jet::sampled(pr.entry, pr.m - 1, pr.dom.bounding_box(), jh);
  } else {
    fail("jet", "expected \"analytic\" or \"sampled\"");
  }
  return pr;
}

// ---- output helpers ---------------------------------------------------------

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sweep_csv(const FunctionalSweep& s) {
  std::string csv = "eps,value\n";
  for (size_t i = 0; i < s.epsilons.size(); ++i)
    csv += fmt(s.epsilons[i]) + "," + fmt(s.values[i]) + "\n";
  return csv;
}

nlohmann::json sweep_json(const FunctionalSweep& s) {
  return {{"epsilons", s.epsilons},
          {"values", s.values},
          {"limit", s.limit},
          {"monotone", s.monotone},
          {"extrapolated", s.extrapolated},
          {"note", s.note}};
}

double sphere_target(const Problem& pr) {
  Jet full = Jet::analytic(pr.entry, pr.m);
  Grid g(pr.dom, pr.h);
  return sphere_limit_target(full, pr.m, pr.p, SphereRule::make(pr.n), g);
}

nlohmann::json base_summary(const ExperimentConfig& cfg, const Problem& pr) {
  return {{"schema", cfg.recipe + "-v1"},
          {"recipe", cfg.recipe},
          {"function", cfg.raw.at("function").get<std::string>()},
          {"n", pr.n},
          {"m", pr.m},
          {"p", pr.p},
          {"h", pr.h}};
}

// ---- recipes ----------------------------------------------------------------

ExperimentResult run_bbm_like(const ExperimentConfig& cfg, bool difference) {
  Problem pr = parse_problem(cfg.raw);
  EpsSchedule sched = parse_eps(cfg.raw, pr.h);
  MollifierFamily mol = parse_mollifier(cfg.raw, pr.n, pr.m, pr.p);

  DifferenceDiagnostics diag;
  FunctionalSweep sweep = run_sweep(
      [&](double eps) {
        return difference
                   ? difference_functional(*pr.jet, pr.m, pr.p, mol, eps, pr.dom, pr.quad, &diag)
                   : bbm_functional(*pr.jet, pr.m, pr.p, mol, eps, pr.dom, pr.quad);
      },
      sched);

  double target = sphere_target(pr);
  if (difference) {
    double scale = 1.0;
    for (int i = 1; i <= pr.m; ++i) scale *= static_cast<double>(i) / pr.m;
    target *= std::pow(scale, pr.p);
  }

  ExperimentResult res;
  res.recipe = cfg.recipe;
  res.summary = base_summary(cfg, pr);
  res.summary["mollifier"] = mol.kind_name();
  res.summary["sweep"] = sweep_json(sweep);
  res.summary["limit"] = sweep.limit;
  res.summary["target"] = target;
  if (std::abs(target) > 1e-300)
    res.summary["rel_err"] = std::abs(sweep.limit - target) / std::abs(target);
  if (difference) res.summary["segment_pairs_skipped"] = diag.pairs_skipped;
  res.csv = sweep_csv(sweep);
  return res;
}

ExperimentResult run_lemma_identity(const ExperimentConfig& cfg) {
  if (auto it = cfg.raw.find("mollifier"); it != cfg.raw.end()) {
    std::string kind = need_str(*it, "mollifier", "kind");
    if (kind != "power") fail("mollifier.kind", "lemma-identity pins the power mollifier");
  }
  ExperimentResult res = run_bbm_like(cfg, false);
  double rel = res.summary.contains("rel_err") ? res.summary["rel_err"].get<double>()
                                               : std::abs(res.summary["limit"].get<double>());
  res.summary["within_3pct"] = rel <= 0.03;
  res.summary["verdict"] = rel <= 0.03 ? "match" : "mismatch";
  return res;
}

ExperimentResult run_polynomial_detect(const ExperimentConfig& cfg) {
  Problem pr = parse_problem(cfg.raw);
  EpsSchedule sched = parse_eps(cfg.raw, pr.h);
  DetectionReport rep = detect_polynomial(*pr.jet, pr.m, pr.p, pr.dom, sched, pr.quad);

  ExperimentResult res;
  res.recipe = cfg.recipe;
  res.summary = base_summary(cfg, pr);
  res.summary["report"] = nlohmann::json::parse(detection_report_json(rep, pr.n));
  res.summary["verdict"] = rep.verdict;
  res.csv = "section,x,value\n";
  for (size_t i = 0; i < rep.sweep.epsilons.size(); ++i)
    res.csv += "sweep," + fmt(rep.sweep.epsilons[i]) + "," + fmt(rep.sweep.values[i]) + "\n";
  for (size_t i = 0; i < rep.singular.spacings.size(); ++i)
    res.csv +=
        "singular," + fmt(rep.singular.spacings[i]) + "," + fmt(rep.singular.values[i]) + "\n";
  return res;
}

ExperimentResult run_whitney(const ExperimentConfig& cfg) {
  Problem pr = parse_problem(cfg.raw);
  const nlohmann::json& lv = need(cfg.raw, "", "levels");
  if (!lv.is_array() || lv.size() < 3) fail("levels", "expected an ascending array of >= 3 ints");
  std::vector<int> levels;
  for (const auto& e : lv) {
    if (!e.is_number_integer()) fail("levels", "expected integers");
    levels.push_back(e.get<int>());
  }
  for (size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1]) fail("levels", "expected a strictly ascending array");

  RateTable t;
  try {
    t = reconstruction_rates(*pr.jet, pr.dom, pr.m, pr.p, levels, pr.h, pr.quad.threads);
  } catch (const std::invalid_argument& e) {
    fail("levels", e.what());
  }

  ExperimentResult res;
  res.recipe = cfg.recipe;
  res.summary = base_summary(cfg, pr);
  std::vector<std::string> names;
  for (const MultiIndex& a : t.alphas) names.push_back(a.str());
  nlohmann::json slopes = nlohmann::json::object();
  for (size_t r = 0; r < t.alphas.size(); ++r) {
    if (t.alphas[r].order() >= pr.m) continue;
    if (t.exact[r])
      slopes[names[r]] = "exact";
    else
      slopes[names[r]] = t.slopes[r];
  }
  res.summary["levels"] = t.levels;
  res.summary["alphas"] = names;
  res.summary["slopes"] = slopes;
  res.summary["mth_norms_bounded"] = t.mth_bounded;
  res.summary["max_level"] = t.max_level;
  res.summary["resolved_distance"] = t.resolved_distance;
  res.summary["eval_cells"] = t.eval_cells;

  res.csv = "level";
  for (const std::string& s : names) res.csv += ",norm(" + s + ")";
  res.csv += "\n";
  for (size_t i = 0; i < t.levels.size(); ++i) {
    res.csv += std::to_string(t.levels[i]);
    for (double v : t.norms[i]) res.csv += "," + fmt(v);
    res.csv += "\n";
  }

  WhitneyDecomposition dec(pr.dom, levels.front(), t.max_level);
  res.extra_files.emplace_back("cubes.json", whitney_cubes_json(dec));
  return res;
}

ExperimentResult run_calderon(const ExperimentConfig& cfg) {
  Problem pr = parse_problem(cfg.raw);
  EpsSchedule sched = parse_eps(cfg.raw, pr.h);
  double spacing = opt_num(cfg.raw, "", "center_spacing", 4.0 * pr.h);
  if (!(spacing >= pr.h)) fail("center_spacing", "expected spacing >= h");

  MaximalProfile prof = maximal_profile(*pr.jet, pr.m, pr.p, sched.values(), pr.dom, pr.h,
                                        spacing, pr.quad.threads);

  ExperimentResult res;
  res.recipe = cfg.recipe;
  res.summary = base_summary(cfg, pr);
  res.summary["eps_grid"] = prof.eps_grid;
  res.summary["fit_degree"] = prof.fit_degree;
  res.summary["centers"] = prof.centers.size();
  res.summary["lp_norm"] = prof.lp_norm;
  res.summary["max_value"] = prof.max_value;
  int growing = 0;
  for (int g : prof.growing) growing += g;
  res.summary["growing_centers"] = growing;
  res.csv = maximal_profile_csv(prof, pr.n);
  return res;
}

ExperimentResult run_jet_condition(const ExperimentConfig& cfg) {
  Problem pr = parse_problem(cfg.raw);
  EpsSchedule sched = parse_eps(cfg.raw, pr.h);

  bool shifted = cfg.raw.contains("shift");
  MultiIndex j = MultiIndex::zero(pr.n);
  double margin = 0.0;
  if (shifted) {
    const nlohmann::json& sj = cfg.raw.at("shift");
    if (!sj.is_array() || static_cast<int>(sj.size()) != pr.n)
      fail("shift", "expected an array of " + std::to_string(pr.n) + " non-negative ints");
    for (int d = 0; d < pr.n; ++d) {
      if (!sj[d].is_number_integer() || sj[d].get<int>() < 0)
        fail("shift", "expected non-negative integers");
      j.at(d) = sj[d].get<int>();
    }
    if (j.order() > pr.m - 1) fail("shift", "|shift| must be <= m-1");
    margin = opt_num(cfg.raw, "", "margin", sched.eps0 + 4.0 * pr.h);
    if (!(margin >= sched.eps0 + 2.0 * pr.h))
      fail("margin", "expected margin >= eps.start + 2h so every ball is resolved");
  }

  FunctionalSweep sweep = run_sweep(
      [&](double eps) {
        return shifted
                   ? shifted_jet_condition(*pr.jet, j, pr.p, eps, pr.dom, margin, pr.quad)
                   : jet_condition_value(*pr.jet, pr.p, eps, pr.dom, pr.quad);
      },
      sched);

  ExperimentResult res;
  res.recipe = cfg.recipe;
  res.summary = base_summary(cfg, pr);
  res.summary["sweep"] = sweep_json(sweep);
  res.summary["limit"] = sweep.limit;
  res.summary["bounded"] = sweep.note != "no-decay";
  if (shifted) {
    res.summary["shift"] = j.str();
    res.summary["margin"] = margin;
  }
  res.csv = sweep_csv(sweep);
  return res;
}

}  // namespace

const std::vector<RecipeInfo>& list_recipes() {
  static const std::vector<RecipeInfo> recipes = {
      {"bbm-sweep",
       "lim_{eps->0} intint |R^{m-1}f(x,y)|^p |x-y|^{-mp} rho_eps(|x-y|) dy dx "
       "= int_Omega int_S |sum_{|a|=m} D^a f(x) e^a/a!|^p de dx",
       {"function", "n", "m", "p", "domain", "h", "eps"},
       {"mollifier", "threads", "jet", "jet_h", "cutoff", "out"}},
      {"difference-sweep",
       "same kernel with the m-th equispaced segment difference in place of the "
       "remainder; limit = (m!/m^m)^p times the sphere-average target",
       {"function", "n", "m", "p", "domain", "h", "eps"},
       {"mollifier", "threads", "jet", "jet_h", "cutoff", "out"}},
      {"lemma-identity",
       "power-mollifier sweep checked against the closed-form sphere-average "
       "target, pass at 3% relative",
       {"function", "n", "m", "p", "domain", "h", "eps"},
       {"threads", "jet", "jet_h", "cutoff", "out"}},
      {"polynomial-detect",
       "intint |R^{m-1}f|^p |x-y|^{-mp-n} dy dx finite iff f is a polynomial of "
       "degree <= m-1; mollified sweep + divergence probe must agree",
       {"function", "n", "m", "p", "domain", "h", "eps"},
       {"threads", "jet", "jet_h", "cutoff", "out"}},
      {"whitney-reconstruct",
       "||D^a w^k - f_a||_{L^p} <= c 2^{(|a|-m)k} for |a| < m and bounded "
       "m-th derivatives, w^k the cube-averaged jet reconstruction",
       {"function", "n", "m", "p", "domain", "h", "levels"},
       {"threads", "jet", "jet_h", "out"}},
      {"calderon-profile",
       "N(f,y) = sup_eps eps^{-m} (avg_{B(y,eps)} |f - P_y|^p)^{1/p} with P_y "
       "the best local degree-(m-1) fit, over a finite eps-grid",
       {"function", "n", "m", "p", "domain", "h", "eps"},
       {"center_spacing", "threads", "jet", "jet_h", "out"}},
      {"jet-condition",
       "eps^{-(n+mp)} intint_{|x-y|<eps} |R^{m-1}f(x,y)|^p dy dx bounded as "
       "eps -> 0 (optionally the shifted-remainder variant over an inner domain)",
       {"function", "n", "m", "p", "domain", "h", "eps"},
       {"shift", "margin", "threads", "jet", "jet_h", "cutoff", "out"}},
  };
  return recipes;
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig cfg;
  cfg.recipe = need_str(j, "", "recipe");
  cfg.raw = j;
  const RecipeInfo* info = nullptr;
  for (const RecipeInfo& r : list_recipes())
    if (r.name == cfg.recipe) info = &r;
  if (!info) {
    std::string names;
    for (const RecipeInfo& r : list_recipes()) names += (names.empty() ? "" : ", ") + r.name;
    fail("recipe", "unknown recipe '" + cfg.recipe + "' (known: " + names + ")");
  }
  for (const std::string& k : info->required)
    if (!j.contains(k)) fail(k, "missing required field for recipe " + cfg.recipe);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "recipe") continue;
    bool known = false;
    for (const std::string& r : info->required) known = known || r == k;
    for (const std::string& o : info->optional) known = known || o == k;
    if (!known) fail(k, "unknown field for recipe " + cfg.recipe);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

void apply_override(nlohmann::json& j, const std::string& keyval) {
  auto eq = keyval.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + keyval + "': expected key=value");
  std::string path = keyval.substr(0, eq);
  std::string val = keyval.substr(eq + 1);

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(val);
  } catch (const nlohmann::json::exception&) {
    parsed = val;  // bare strings stay strings
  }

  nlohmann::json* cur = &j;
  size_t pos = 0;
  while (true) {
    size_t dot = path.find('.', pos);
    std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (key.empty()) throw ConfigError("override '" + keyval + "': empty path segment");
    if (dot == std::string::npos) {
      (*cur)[key] = parsed;
      break;
    }
    cur = &(*cur)[key];
    if (!cur->is_object() && !cur->is_null())
      throw ConfigError("override '" + keyval + "': '" + key + "' is not an object");
    pos = dot + 1;
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentResult res;
  if (cfg.recipe == "bbm-sweep")
    res = run_bbm_like(cfg, false);
  else if (cfg.recipe == "difference-sweep")
    res = run_bbm_like(cfg, true);
  else if (cfg.recipe == "lemma-identity")
    res = run_lemma_identity(cfg);
  else if (cfg.recipe == "polynomial-detect")
    res = run_polynomial_detect(cfg);
  else if (cfg.recipe == "whitney-reconstruct")
    res = run_whitney(cfg);
  else if (cfg.recipe == "calderon-profile")
    res = run_calderon(cfg);
  else if (cfg.recipe == "jet-condition")
    res = run_jet_condition(cfg);
  else
    fail("recipe", "unknown recipe '" + cfg.recipe + "'");
  res.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

void write_outputs(const ExperimentResult& res, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "summary.json");
    if (!out) throw std::runtime_error("cannot write " + dir + "/summary.json");
    out << res.summary.dump(2) << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / "table.csv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/table.csv");
    out << res.csv;
  }
  for (const auto& [name, content] : res.extra_files) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw std::runtime_error("cannot write " + dir + "/" + name);
    out << content;
  }
}

}  // namespace sobnl
