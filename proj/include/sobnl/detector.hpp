#pragma once

#include <string>
#include <vector>

#include "sobnl/functional.hpp"
#include "sobnl/geometry.hpp"
#include "sobnl/jet.hpp"

namespace sobnl {

// Decides whether f agrees with a polynomial of degree <= m-1 by running two
// independent probes and comparing their answers:
//   (a) the mollified remainder functional swept to eps -> 0 against a noise
//       floor calibrated on a known degree-(m-1) polynomial over the same
//       grid, and
//   (b) divergence of the bare singular remainder integral under spacing
//       refinement (finite only for polynomials).
struct DetectionReport {
  std::string verdict;  // "polynomial" | "not-polynomial" | "inconclusive"
  FunctionalSweep sweep;
  double theta_zero = 0.0;
  double calibration_floor = 0.0;  // measured sweep limit of the calibration polynomial
  SingularIntegral singular;
  bool channel_a_polynomial = false;
  bool channel_b_polynomial = false;

  // Filled on a "polynomial" verdict: per-component least-squares fits of
  // degree m-1 with residuals measured as (avg |f - P|^p)^{1/p}.
  std::vector<MultiIndex> basis;
  Vec fit_center{};
  std::vector<std::vector<double>> coeffs;  // one row per component
  std::vector<double> residuals;            // one per component
  double global_residual = 0.0;
  bool per_component = false;  // components carry different polynomials
  double fit_tolerance = 1e-8;
};

DetectionReport detect_polynomial(const Jet& F, int m, double p, const Domain& dom,
                                  const EpsSchedule& sched, const QuadratureConfig& cfg);

std::string detection_report_json(const DetectionReport& rep, int dim);

}  // namespace sobnl
