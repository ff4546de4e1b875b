#include "sobnl/catalog.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace sobnl {

namespace {

// Falling factorial e（e-1)...(e-k+1); derivative coefficient of t^e.
double falling(int e, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= (e - i);
  return r;
}

// Separable product of sin(a_d x_d + b_d) over the first `dim` axes.
// Every derivative is again such a product with a phase shift.
class TrigProductEntry : public CatalogEntry {
 public:
  TrigProductEntry(int dim, Vec freq, Vec phase, std::string name)
      : dim_(dim), freq_(freq), phase_(phase), name_(std::move(name)) {}

  int dim() const override { return dim_; }
  std::string name() const override { return name_; }

  double derivative(const MultiIndex& alpha, const Vec& x) const override {
    double v = 1.0;
    for (int d = 0; d < dim_; ++d) {
      double f = std::sin(freq_[d] * x[d] + phase_[d] + alpha[d] * (M_PI / 2.0));
      for (int k = 0; k < alpha[d]; ++k) f *= freq_[d];
      v *= f;
    }
    return v;
  }

 private:
  int dim_;
  Vec freq_, phase_;
  std::string name_;
};

// exp(c . x); derivatives scale by c^alpha.
class ExpEntry : public CatalogEntry {
 public:
  ExpEntry(int dim, Vec coef, std::string name)
      : dim_(dim), coef_(coef), name_(std::move(name)) {}

  int dim() const override { return dim_; }
  std::string name() const override { return name_; }

  double derivative(const MultiIndex& alpha, const Vec& x) const override {
    return alpha.pow(coef_) * std::exp(dot(coef_, x, dim_));
  }

 private:
  int dim_;
  Vec coef_;
  std::string name_;
};

// x^gamma on (0, inf), or |x|^gamma with abs_ set; n=1 only. Fractional
// gamma puts a derivative singularity at the origin end of the domain.
class PowerEntry : public CatalogEntry {
 public:
  PowerEntry(double gamma, bool abs, std::string name)
      : gamma_(gamma), abs_(abs), name_(std::move(name)) {}

  int dim() const override { return 1; }
  std::string name() const override { return name_; }

  double derivative(const MultiIndex& alpha, const Vec& x) const override {
    int k = alpha[0];
    double t = abs_ ? std::fabs(x[0]) : x[0];
    if (t == 0.0) {
      if (k == 0 && gamma_ > 0.0) return 0.0;
      throw std::invalid_argument("catalog: derivative of " + name_ + " undefined at 0");
    }
    double c = 1.0;
    for (int i = 0; i < k; ++i) c *= (gamma_ - i);
    double v = c * std::pow(t, gamma_ - k);
    if (abs_ && x[0] < 0.0 && (k % 2) == 1) v = -v;
    return v;
  }

 private:
  double gamma_;
  bool abs_;
  std::string name_;
};

}  // namespace

PolynomialEntry::PolynomialEntry(int dim, std::vector<std::pair<MultiIndex, double>> terms,
                                 std::string name)
    : dim_(dim), terms_(std::move(terms)), name_(std::move(name)) {
  for (const auto& [a, c] : terms_)
    if (a.dim() != dim_) throw std::invalid_argument("PolynomialEntry: term dimension mismatch");
  if (name_.empty()) name_ = "poly";
}

double PolynomialEntry::derivative(const MultiIndex& alpha, const Vec& x) const {
  double v = 0.0;
  for (const auto& [a, c] : terms_) {
    if (!alpha.leq(a)) continue;
    double term = c;
    for (int d = 0; d < dim_; ++d) {
      term *= falling(a[d], alpha[d]);
      for (int k = 0; k < a[d] - alpha[d]; ++k) term *= x[d];
    }
    v += term;
  }
  return v;
}

int PolynomialEntry::degree() const {
  int deg = 0;
  for (const auto& [a, c] : terms_)
    if (c != 0.0) deg = std::max(deg, a.order());
  return deg;
}

std::shared_ptr<const PolynomialEntry> parse_polynomial(const std::string& expr, int min_dim) {
  std::vector<std::pair<MultiIndex, double>> terms;
  int dim = min_dim;
  size_t i = 0;
  auto skip_ws = [&] { while (i < expr.size() && std::isspace(static_cast<unsigned char>(expr[i]))) ++i; };

  skip_ws();
  bool first = true;
  while (i < expr.size()) {
    double sign = 1.0;
    skip_ws();
    if (expr[i] == '+' || expr[i] == '-') {
      sign = (expr[i] == '-') ? -1.0 : 1.0;
      ++i;
    } else if (!first) {
      throw std::invalid_argument("parse_polynomial: expected '+' or '-' in '" + expr + "'");
    }
    first = false;
    skip_ws();

    double coef = 1.0;
    bool saw_number = false;
    if (i < expr.size() && (std::isdigit(static_cast<unsigned char>(expr[i])) || expr[i] == '.')) {
      size_t used = 0;
      coef = std::stod(expr.substr(i), &used);
      i += used;
      saw_number = true;
    }
    skip_ws();
    if (i < expr.size() && expr[i] == '*') { ++i; skip_ws(); }

    std::array<int, kMaxDim> exps{0, 0, 0};
    bool saw_var = false;
    while (i < expr.size()) {
      char v = expr[i];
      int axis = (v == 'x') ? 0 : (v == 'y') ? 1 : (v == 'z') ? 2 : -1;
      if (axis < 0) break;
      ++i;
      int e = 1;
      if (i < expr.size() && expr[i] == '^') {
        ++i;
        if (i >= expr.size() || !std::isdigit(static_cast<unsigned char>(expr[i])))
          throw std::invalid_argument("parse_polynomial: bad exponent in '" + expr + "'");
        e = 0;
        while (i < expr.size() && std::isdigit(static_cast<unsigned char>(expr[i])))
          e = 10 * e + (expr[i++] - '0');
      }
      exps[axis] += e;
      dim = std::max(dim, axis + 1);
      saw_var = true;
      skip_ws();
      if (i < expr.size() && expr[i] == '*') { ++i; skip_ws(); }
    }
    if (!saw_number && !saw_var)
      throw std::invalid_argument("parse_polynomial: empty term in '" + expr + "'");

    terms.push_back({MultiIndex{0}, sign * coef});
    terms.back().first = MultiIndex::zero(kMaxDim);
    for (int d = 0; d < kMaxDim; ++d) terms.back().first.at(d) = exps[d];
    skip_ws();
  }
  if (terms.empty()) throw std::invalid_argument("parse_polynomial: empty expression");

  // rebuild the indices at the final dimension
  std::vector<std::pair<MultiIndex, double>> fixed;
  for (auto& [a, c] : terms) {
    MultiIndex b = MultiIndex::zero(dim);
    for (int d = 0; d < dim; ++d) b.at(d) = a[d];
    for (int d = dim; d < kMaxDim; ++d)
      if (a[d] != 0) throw std::invalid_argument("parse_polynomial: variable beyond dimension");
    fixed.push_back({b, c});
  }
  return std::make_shared<PolynomialEntry>(dim, std::move(fixed), "poly:" + expr);
}

std::shared_ptr<const PolynomialEntry> canonical_polynomial(int dim, int degree) {
  // Fixed mixed coefficients c = 1 + (rank mod 3) keep every monomial active
  // without blowing up scale.
  std::vector<std::pair<MultiIndex, double>> terms;
  auto idx = enumerate_multiindices(dim, degree);
  for (size_t r = 0; r < idx.size(); ++r) {
    double c = 1.0 + static_cast<double>(r % 3);
    if (r % 2 == 1) c = -c;
    terms.push_back({idx[r], c});
  }
  return std::make_shared<PolynomialEntry>(dim, std::move(terms),
                                           "canonical-deg" + std::to_string(degree));
}

CatalogEntryPtr catalog_lookup(const std::string& name) {
  if (name.rfind("poly:", 0) == 0) return parse_polynomial(name.substr(5));
  if (name == "x") return parse_polynomial("x");
  if (name == "x^2") return parse_polynomial("x^2");
  if (name == "x^3") return parse_polynomial("x^3");
  if (name == "xy") return parse_polynomial("xy");
  if (name == "xyz") return parse_polynomial("xyz");
  if (name == "sin")
    return std::make_shared<TrigProductEntry>(1, vec1(1.0), Vec{0, 0, 0}, "sin");
  if (name == "cos")
    return std::make_shared<TrigProductEntry>(1, vec1(1.0), Vec{M_PI / 2.0, 0, 0}, "cos");
  if (name == "sinsin")
    return std::make_shared<TrigProductEntry>(2, vec2(1.0, 1.0), Vec{0, 0, 0}, "sinsin");
  if (name == "sinsinsin")
    return std::make_shared<TrigProductEntry>(3, vec3(1.0, 1.0, 1.0), Vec{0, 0, 0}, "sinsinsin");
  if (name == "exp") return std::make_shared<ExpEntry>(1, vec1(1.0), "exp");
  if (name == "expsum") return std::make_shared<ExpEntry>(2, vec2(1.0, 1.0), "expsum");
  if (name == "expsum3") return std::make_shared<ExpEntry>(3, vec3(1.0, 1.0, 1.0), "expsum3");
  if (name == "sqrt") return std::make_shared<PowerEntry>(0.5, false, "sqrt");
  if (name == "sqrtabs") return std::make_shared<PowerEntry>(0.5, true, "sqrtabs");
  throw std::invalid_argument("catalog: unknown entry '" + name + "'");
}

std::vector<std::string> catalog_names() {
  return {"poly:<expr>", "x",      "x^2",    "x^3",       "xy",     "xyz",
          "sin",         "cos",    "sinsin", "sinsinsin", "exp",    "expsum",
          "expsum3",     "sqrt",   "sqrtabs"};
}

}  // namespace sobnl
