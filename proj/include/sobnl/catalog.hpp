#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sobnl/multiindex.hpp"

namespace sobnl {

// An analytic scalar function with closed-form mixed partials of every
// order. Entries are the ground truth the tests and jets are built from.
class CatalogEntry {
 public:
  virtual ~CatalogEntry() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual double derivative(const MultiIndex& alpha, const Vec& x) const = 0;

  double operator()(const Vec& x) const { return derivative(MultiIndex::zero(dim()), x); }
};

using CatalogEntryPtr = std::shared_ptr<const CatalogEntry>;

// Polynomial with explicit coefficient list; exact derivatives.
class PolynomialEntry : public CatalogEntry {
 public:
  PolynomialEntry(int dim, std::vector<std::pair<MultiIndex, double>> terms,
                  std::string name = "");

  int dim() const override { return dim_; }
  std::string name() const override { return name_; }
  double derivative(const MultiIndex& alpha, const Vec& x) const override;

  int degree() const;
  const std::vector<std::pair<MultiIndex, double>>& terms() const { return terms_; }

 private:
  int dim_;
  std::vector<std::pair<MultiIndex, double>> terms_;
  std::string name_;
};

// Parse "1 + 2x - 0.5x^2y" style expressions (variables x, y, z). The
// dimension is the highest variable mentioned unless forced higher.
std::shared_ptr<const PolynomialEntry> parse_polynomial(const std::string& expr,
                                                        int min_dim = 1);

// Named lookup used by the CLI and tests. Accepts "poly:<expr>" for
// arbitrary polynomials plus a fixed set of named entries:
//   n=1: "x", "x^2", "x^3", "sin", "cos", "exp", "sqrt" (x^{1/2}, derivative
//        blows up at the left boundary), "sqrtabs" (|x|^{1/2})
//   n=2: "xy", "sinsin" (sin x sin y), "expsum" (e^{x+y})
//   n=3: "xyz", "sinsinsin", "expsum3"
CatalogEntryPtr catalog_lookup(const std::string& name);

// Canonical dense polynomial of the given total degree (all monomials with
// fixed nonzero coefficients); used by annihilation tests.
std::shared_ptr<const PolynomialEntry> canonical_polynomial(int dim, int degree);

std::vector<std::string> catalog_names();

}  // namespace sobnl
