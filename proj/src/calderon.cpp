#include "sobnl/calderon.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "sobnl/multiindex.hpp"

namespace sobnl {

namespace {

// Sample points: centers of active cells inside the open ball B(y, eps).
std::vector<int64_t> cells_in_ball(const Grid& grid, const Vec& y, double eps) {
  std::vector<int64_t> out;
  const double r2 = eps * eps;
  for (int64_t a = 0; a < grid.active_count(); ++a) {
    Vec c = grid.center(a);
    if (norm2(sub(c, y), grid.dim()) < r2) out.push_back(a);
  }
  return out;
}

double avg_residual_p(const Eigen::VectorXd& r, double p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) s += std::pow(std::abs(r[i]), p);
  return std::pow(s / static_cast<double>(r.size()), 1.0 / p);
}

}  // namespace

LocalFit best_local_polynomial(const Jet& F, const Vec& y, double eps, int degree,
                               double p, const Grid& grid) {
  const int n = grid.dim();
  if (F.dim() != n) throw std::invalid_argument("best_local_polynomial: jet/grid dimension mismatch");
  if (degree < 0 || degree > 6) throw std::invalid_argument("best_local_polynomial: degree out of range");
  if (!(p >= 1.0)) throw std::invalid_argument("best_local_polynomial: p must be >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("best_local_polynomial: eps must be positive");

  LocalFit fit;
  fit.basis = enumerate_multiindices(n, degree);
  const int nb = static_cast<int>(fit.basis.size());

  std::vector<int64_t> pts = cells_in_ball(grid, y, eps);
  fit.points = static_cast<int64_t>(pts.size());
  if (fit.points < nb)
    throw std::invalid_argument("best_local_polynomial: ball resolves fewer points than the basis");

  // Design matrix in the scaled basis ((x-y)/eps)^alpha: keeps the columns
  // of comparable size so the rank test is meaningful.
  Eigen::MatrixXd A(fit.points, nb);
  Eigen::VectorXd b(fit.points);
  for (int64_t i = 0; i < fit.points; ++i) {
    Vec d = sub(grid.center(pts[i]), y);
    Vec ds = d;
    for (int k = 0; k < n; ++k) ds[k] /= eps;
    for (int j = 0; j < nb; ++j) A(i, j) = fit.basis[j].pow(ds);
    b(i) = F.component(MultiIndex::zero(n), grid.center(pts[i]));
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < nb)
    throw std::invalid_argument("best_local_polynomial: rank-deficient sample (ball too small)");
  Eigen::VectorXd c = qr.solve(b);
  fit.iterations = 1;

  if (p != 2.0) {
    // IRLS for the L^p objective: weights |r|^{p-2}, ridge-regularized
    // weighted normal equations, stop on coefficient stagnation.
    const double ridge = 1e-12;
    const double tol = 1e-8;
    for (int it = 2; it <= 100; ++it) {
      Eigen::VectorXd r = b - A * c;
      const double floor_r = 1e-10 * (1.0 + b.cwiseAbs().maxCoeff());
      Eigen::VectorXd w(fit.points);
      for (int64_t i = 0; i < fit.points; ++i)
        w(i) = std::pow(std::max(std::abs(r(i)), floor_r), p - 2.0);
      Eigen::MatrixXd Aw = w.cwiseSqrt().asDiagonal() * A;
      Eigen::VectorXd bw = w.cwiseSqrt().asDiagonal() * b;
      Eigen::MatrixXd M = Aw.transpose() * Aw;
      M.diagonal().array() += ridge;
      Eigen::VectorXd next = M.ldlt().solve(Aw.transpose() * bw);
      double step = (next - c).cwiseAbs().maxCoeff();
      c = next;
      fit.iterations = it;
      if (step <= tol * (1.0 + c.cwiseAbs().maxCoeff())) break;
    }
  }

  fit.residual = avg_residual_p(b - A * c, p);

  // Back to the (x-y)^alpha / alpha! basis.
  fit.coeff.resize(nb);
  for (int j = 0; j < nb; ++j)
    fit.coeff[j] = c(j) * fit.basis[j].factorial() / std::pow(eps, fit.basis[j].order());
  return fit;
}

double local_fit_value(const LocalFit& fit, const Vec& y, const Vec& x) {
  double v = 0.0;
  for (size_t j = 0; j < fit.basis.size(); ++j) {
    const MultiIndex& a = fit.basis[j];
    v += fit.coeff[j] * a.pow(sub(x, y)) / a.factorial();
  }
  return v;
}

MaximalValue maximal_function(const Jet& F, const Vec& y, int m, double p,
                              const std::vector<double>& eps_grid, const Grid& grid) {
  if (m < 1) throw std::invalid_argument("maximal_function: m must be >= 1");
  if (eps_grid.empty()) throw std::invalid_argument("maximal_function: empty eps grid");
  for (double e : eps_grid)
    if (!(e >= 2.0 * grid.max_spacing()))
      throw std::invalid_argument("maximal_function: eps below twice the grid spacing");

  const double bd = grid.domain().boundary_distance(y);
  MaximalValue out;
  double v_largest = -1.0, v_smallest = -1.0, e_largest = 0.0, e_smallest = 0.0;
  for (double eps : eps_grid) {
    if (!(eps < bd)) continue;  // only balls inside the domain
    LocalFit fit = best_local_polynomial(F, y, eps, m - 1, p, grid);
    double v = std::pow(eps, -static_cast<double>(m)) * fit.residual;
    ++out.admissible;
    if (v > out.value) {
      out.value = v;
      out.argmax_eps = eps;
    }
    if (eps > e_largest || v_largest < 0.0) { e_largest = eps; v_largest = v; }
    if (eps < e_smallest || v_smallest < 0.0) { e_smallest = eps; v_smallest = v; }
  }
  if (out.admissible == 0)
    throw std::invalid_argument("maximal_function: no admissible eps (center too close to the boundary)");
  out.growing = out.admissible >= 3 && v_smallest > 1e-12 && v_smallest >= 1.8 * v_largest;
  return out;
}

MaximalProfile maximal_profile(const Jet& F, int m, double p,
                               const std::vector<double>& eps_grid, const Domain& dom,
                               double h, double center_spacing, int threads) {
  if (threads < 1) throw std::invalid_argument("maximal_profile: threads must be >= 1");
  Grid grid(dom, h);
  Grid centers_grid(dom, center_spacing);
  const double eps_min = *std::min_element(eps_grid.begin(), eps_grid.end());

  MaximalProfile prof;
  prof.eps_grid = eps_grid;
  prof.fit_degree = m - 1;
  std::sort(prof.eps_grid.begin(), prof.eps_grid.end(), std::greater<double>());

  for (int64_t a = 0; a < centers_grid.active_count(); ++a) {
    Vec y = centers_grid.center(a);
    if (dom.boundary_distance(y) > eps_min) prof.centers.push_back(y);
  }
  const size_t nc = prof.centers.size();
  prof.values.assign(nc, 0.0);
  prof.argmax_eps.assign(nc, 0.0);
  prof.growing.assign(nc, 0);

  auto work = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      MaximalValue mv = maximal_function(F, prof.centers[i], m, p, prof.eps_grid, grid);
      prof.values[i] = mv.value;
      prof.argmax_eps[i] = mv.argmax_eps;
      prof.growing[i] = mv.growing ? 1 : 0;
    }
  };
  const int nt = std::min<size_t>(threads, std::max<size_t>(nc, 1));
  if (nt <= 1) {
    work(0, nc);
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (nc + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
      size_t lo = std::min(nc, static_cast<size_t>(t) * chunk);
      size_t hi = std::min(nc, lo + chunk);
      pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  // Slot writes above keep the reduction order fixed regardless of threads.
  double s = 0.0;
  for (size_t i = 0; i < nc; ++i) {
    s += std::pow(prof.values[i], p);
    prof.max_value = std::max(prof.max_value, prof.values[i]);
  }
  prof.lp_norm = std::pow(s * centers_grid.cell_volume(), 1.0 / p);
  return prof;
}

std::string maximal_profile_csv(const MaximalProfile& prof, int dim) {
  std::string out;
  for (int d = 0; d < dim; ++d) out += "y" + std::to_string(d) + ",";
  out += "N,argmax_eps,growing\n";
  char buf[64];
  for (size_t i = 0; i < prof.centers.size(); ++i) {
    for (int d = 0; d < dim; ++d) {
      std::snprintf(buf, sizeof buf, "%.17g,", prof.centers[i][d]);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", prof.values[i],
                  prof.argmax_eps[i], prof.growing[i]);
    out += buf;
  }
  return out;
}

}  // namespace sobnl
