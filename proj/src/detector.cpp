#include "sobnl/detector.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sobnl/catalog.hpp"
#include "sobnl/mollifier.hpp"

#include "json.hpp"

namespace sobnl {

namespace {

struct CellFit {
  std::vector<double> coeff;  // (x-c)^alpha / alpha! basis
  double residual = 0.0;
};

CellFit fit_cells(const Jet& F, const Grid& grid, const std::vector<int64_t>& cells,
                  const std::vector<MultiIndex>& basis, const Vec& center, double scale,
                  double p) {
  const int n = grid.dim();
  const int nb = static_cast<int>(basis.size());
  if (static_cast<int64_t>(cells.size()) < nb)
    throw std::invalid_argument("detect_polynomial: component resolves fewer cells than the fit basis");

  Eigen::MatrixXd A(cells.size(), nb);
  Eigen::VectorXd b(cells.size());
  for (size_t i = 0; i < cells.size(); ++i) {
    Vec x = grid.center(cells[i]);
    Vec d = sub(x, center);
    for (int k = 0; k < n; ++k) d[k] /= scale;
    for (int j = 0; j < nb; ++j) A(i, j) = basis[j].pow(d);
    b(i) = F.component(MultiIndex::zero(n), x);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < nb) throw std::invalid_argument("detect_polynomial: rank-deficient fit");
  Eigen::VectorXd c = qr.solve(b);

  CellFit out;
  Eigen::VectorXd r = b - A * c;
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) s += std::pow(std::abs(r(i)), p);
  out.residual = std::pow(s / static_cast<double>(r.size()), 1.0 / p);
  out.coeff.resize(nb);
  for (int j = 0; j < nb; ++j)
    out.coeff[j] = c(j) * basis[j].factorial() / std::pow(scale, basis[j].order());
  return out;
}

}  // namespace

DetectionReport detect_polynomial(const Jet& F, int m, double p, const Domain& dom,
                                  const EpsSchedule& sched, const QuadratureConfig& cfg) {
  const int n = dom.dim();
  if (F.dim() != n) throw std::invalid_argument("detect_polynomial: jet/domain dimension mismatch");
  if (m < 1 || F.order() < m - 1)
    throw std::invalid_argument("detect_polynomial: jet order below m-1");
  if (!(p >= 1.0)) throw std::invalid_argument("detect_polynomial: p must be >= 1");

  DetectionReport rep;
  MollifierFamily mol = MollifierFamily::power(n, m, p);

  rep.sweep = run_sweep(
      [&](double eps) { return bbm_functional(F, m, p, mol, eps, dom, cfg); }, sched);

  // Noise floor: the same sweep on a known degree-(m-1) polynomial measures
  // what pure cancellation noise looks like on this grid.
  Jet cal = Jet::analytic(canonical_polynomial(n, m - 1), F.order());
  FunctionalSweep cal_sweep = run_sweep(
      [&](double eps) { return bbm_functional(cal, m, p, mol, eps, dom, cfg); }, sched);
  rep.calibration_floor = std::abs(cal_sweep.limit);
  rep.theta_zero = std::max(10.0 * rep.calibration_floor, 1e-10);
  rep.channel_a_polynomial = std::abs(rep.sweep.limit) <= rep.theta_zero;

  rep.singular = singular_remainder_integral(F, m, p, dom, cfg);
  rep.channel_b_polynomial = !rep.singular.divergent;

  if (rep.channel_a_polynomial && rep.channel_b_polynomial)
    rep.verdict = "polynomial";
  else if (!rep.channel_a_polynomial && !rep.channel_b_polynomial)
    rep.verdict = "not-polynomial";
  else
    rep.verdict = "inconclusive";

  if (rep.verdict == "polynomial") {
    Grid grid(dom, cfg.h);
    rep.basis = enumerate_multiindices(n, m - 1);
    Box bb = dom.bounding_box();
    rep.fit_center = bb.center();
    double scale = 0.0;
    for (int d = 0; d < n; ++d) scale = std::max(scale, 0.5 * (bb.hi[d] - bb.lo[d]));

    const auto& comps = dom.components();
    std::vector<int64_t> all;
    double worst = 0.0;
    for (const Domain::Component& comp : comps) {
      std::vector<int64_t> cells = grid.active_in(Domain::disjoint_union({comp}, n));
      all.insert(all.end(), cells.begin(), cells.end());
      CellFit f = fit_cells(F, grid, cells, rep.basis, rep.fit_center, scale, p);
      rep.coeffs.push_back(f.coeff);
      rep.residuals.push_back(f.residual);
      worst = std::max(worst, f.residual);
    }
    std::sort(all.begin(), all.end());
    CellFit g = fit_cells(F, grid, all, rep.basis, rep.fit_center, scale, p);
    rep.global_residual = g.residual;

    if (worst > rep.fit_tolerance) {
      // Channels said polynomial but no polynomial fits a component: the
      // probes are inconsistent with the samples, so do not claim either way.
      rep.verdict = "inconclusive";
    } else {
      rep.per_component = comps.size() > 1 &&
                          rep.global_residual > std::max(10.0 * worst, rep.fit_tolerance);
    }
  }
  return rep;
}

std::string detection_report_json(const DetectionReport& rep, int dim) {
  nlohmann::json j;
  j["verdict"] = rep.verdict;
  j["channel_a"] = {{"epsilons", rep.sweep.epsilons},
                    {"values", rep.sweep.values},
                    {"limit", rep.sweep.limit},
                    {"monotone", rep.sweep.monotone},
                    {"note", rep.sweep.note},
                    {"theta_zero", rep.theta_zero},
                    {"calibration_floor", rep.calibration_floor},
                    {"polynomial", rep.channel_a_polynomial}};
  j["channel_b"] = {{"spacings", rep.singular.spacings},
                    {"values", rep.singular.values},
                    {"divergent", rep.singular.divergent},
                    {"polynomial", rep.channel_b_polynomial}};
  if (!rep.coeffs.empty()) {
    nlohmann::json fit;
    std::vector<std::string> names;
    for (const MultiIndex& a : rep.basis) names.push_back(a.str());
    fit["basis"] = names;
    fit["center"] = std::vector<double>(rep.fit_center.begin(), rep.fit_center.begin() + dim);
    fit["coefficients"] = rep.coeffs;
    fit["residuals"] = rep.residuals;
    fit["global_residual"] = rep.global_residual;
    fit["per_component"] = rep.per_component;
    fit["tolerance"] = rep.fit_tolerance;
    j["fit"] = fit;
  }
  return j.dump(2);
}

}  // namespace sobnl
