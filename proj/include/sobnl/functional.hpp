#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sobnl/geometry.hpp"
#include "sobnl/jet.hpp"
#include "sobnl/mollifier.hpp"
#include "sobnl/pair_weights.hpp"

namespace sobnl {

struct QuadratureConfig {
  double h = 1.0 / 64.0;  // target lattice spacing
  int threads = 1;
  // Optional pair cutoff radius; 0 means the kernel support. Only pairs
  // closer than the cutoff contribute.
  double cutoff = 0.0;
};

struct EpsSchedule {
  double eps0 = 0.25;
  double ratio = 0.5;
  int count = 5;

  std::vector<double> values() const;
};

struct FunctionalSweep {
  std::vector<double> epsilons;
  std::vector<double> values;
  double limit = 0.0;
  bool monotone = false;
  bool extrapolated = false;
  std::string note;  // "constant", "extrapolated", "non-monotone", ...
};

// Sweep driver: evaluates at each epsilon in the schedule (descending),
// then extrapolates geometrically from the last three values when their
// increments decay consistently; otherwise keeps the final value and flags.
FunctionalSweep run_sweep(const std::function<double(double)>& value_at_eps,
                          const EpsSchedule& sched);

// int_Omega int_Omega |R^{m-1}F(x,y)|^p / |x-y|^{mp} rho_eps(|x-y|) dy dx.
// Jet order must be >= m-1; refuses eps < 2h.
double bbm_functional(const Jet& F, int m, double p, const MollifierFamily& mol,
                      double eps, const Domain& dom, const QuadratureConfig& cfg);

struct DifferenceDiagnostics {
  int64_t pairs_total = 0;
  int64_t pairs_skipped = 0;  // segment samples left the domain
};

// Same kernel with the m-th segment difference in place of the remainder.
double difference_functional(const Jet& F, int m, double p, const MollifierFamily& mol,
                             double eps, const Domain& dom, const QuadratureConfig& cfg,
                             DifferenceDiagnostics* diag = nullptr);

struct SingularIntegral {
  std::vector<double> spacings;  // h, h/2, h/4
  std::vector<double> values;
  bool divergent = false;
};

// h-regularized int int |R^{m-1}F|^p / |x-y|^{mp+n} (midpoint pairs, diagonal
// excluded) at h, h/2, h/4; divergent when the growth ratio stays above 1.5.
SingularIntegral singular_remainder_integral(const Jet& F, int m, double p,
                                             const Domain& dom, const QuadratureConfig& cfg);

// eps^{-(n+mp)} int int_{|x-y|<eps} |R^{m-1}F|^p; m = F.order() + 1.
double jet_condition_value(const Jet& F, double p, double eps, const Domain& dom,
                           const QuadratureConfig& cfg);

// eps^{-(m-|j|)p} int_{Omega'} avg_{B(x,eps)} |R_j^{m-1-|j|}F(x,y)|^p dy dx
// with Omega' = dom shrunk by `margin`; requires margin >= eps + spacing so
// every averaging ball is resolved inside the domain.
double shifted_jet_condition(const Jet& F, const MultiIndex& j, double p, double eps,
                             const Domain& dom, double margin, const QuadratureConfig& cfg);

namespace detail {

// Deterministic blocked pair sum shared by the functionals: the block
// partition is fixed, so results are bitwise identical for any thread count.
class PairSum {
 public:
  // xs: active ids to use as left points (empty = all active cells).
  PairSum(const Grid& grid, const std::vector<OffsetWeight>& weights, int threads,
          std::vector<int64_t> xs = {});

  // term(i, j, k) -> contribution for active cells i, j at weights[k]; the
  // weight factor is applied by the caller inside term. Pairs whose right
  // cell is inactive are skipped and counted.
  double run(const std::function<double(int64_t, int64_t, size_t)>& term) const;

  int64_t pairs_seen() const { return pairs_seen_; }
  int64_t pairs_skipped() const { return pairs_skipped_; }

 private:
  const Grid& grid_;
  const std::vector<OffsetWeight>& weights_;
  int threads_;
  std::vector<int64_t> xs_;
  mutable int64_t pairs_seen_ = 0;
  mutable int64_t pairs_skipped_ = 0;
};

double pow_p(double v, double p);

}  // namespace detail

}  // namespace sobnl
