#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sobnl {

// Points live in at most three dimensions; unused slots stay zero so the
// same value type serves every n.
inline constexpr int kMaxDim = 3;
using Vec = std::array<double, kMaxDim>;

inline Vec vec1(double x) { return {x, 0.0, 0.0}; }
inline Vec vec2(double x, double y) { return {x, y, 0.0}; }
inline Vec vec3(double x, double y, double z) { return {x, y, z}; }

inline Vec sub(const Vec& a, const Vec& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline double dot(const Vec& a, const Vec& b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += a[d] * b[d];
  return s;
}

inline double norm2(const Vec& a, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += a[d] * a[d];
  return s;
}

// Exponent vector of a mixed partial / monomial. Order(alpha) = sum of
// entries, alpha! = product of entry factorials.
class MultiIndex {
 public:
  MultiIndex() : n_(0), e_{0, 0, 0} {}

  MultiIndex(std::initializer_list<int> entries) : n_(0), e_{0, 0, 0} {
    if (entries.size() == 0 || entries.size() > kMaxDim)
      throw std::invalid_argument("MultiIndex: dimension must be 1..3");
    for (int v : entries) {
      if (v < 0) throw std::invalid_argument("MultiIndex: negative entry");
      e_[n_++] = v;
    }
  }

  static MultiIndex zero(int dim) {
    MultiIndex a;
    if (dim < 1 || dim > kMaxDim)
      throw std::invalid_argument("MultiIndex: dimension must be 1..3");
    a.n_ = dim;
    return a;
  }

  static MultiIndex unit(int dim, int axis) {
    MultiIndex a = zero(dim);
    a.e_[axis] = 1;
    return a;
  }

  int dim() const { return n_; }
  int operator[](int d) const { return e_[d]; }
  int& at(int d) { return e_[d]; }

  int order() const { return e_[0] + e_[1] + e_[2]; }

  double factorial() const {
    double f = 1.0;
    for (int d = 0; d < n_; ++d)
      for (int k = 2; k <= e_[d]; ++k) f *= k;
    return f;
  }

  // v^alpha over the first dim() axes.
  double pow(const Vec& v) const {
    double r = 1.0;
    for (int d = 0; d < n_; ++d)
      for (int k = 0; k < e_[d]; ++k) r *= v[d];
    return r;
  }

  MultiIndex operator+(const MultiIndex& o) const {
    if (o.n_ != n_) throw std::invalid_argument("MultiIndex: dim mismatch");
    MultiIndex r = *this;
    for (int d = 0; d < n_; ++d) r.e_[d] += o.e_[d];
    return r;
  }

  bool operator==(const MultiIndex& o) const {
    return n_ == o.n_ && e_ == o.e_;
  }
  bool operator!=(const MultiIndex& o) const { return !(*this == o); }

  // componentwise <=, the partial order used for "j + alpha <= beta" sums
  bool leq(const MultiIndex& o) const {
    for (int d = 0; d < n_; ++d)
      if (e_[d] > o.e_[d]) return false;
    return true;
  }

  MultiIndex minus(const MultiIndex& o) const {
    MultiIndex r = *this;
    for (int d = 0; d < n_; ++d) {
      r.e_[d] -= o.e_[d];
      if (r.e_[d] < 0) throw std::invalid_argument("MultiIndex: negative difference");
    }
    return r;
  }

  std::string str() const {
    std::string s = "(";
    for (int d = 0; d < n_; ++d) {
      if (d) s += ",";
      s += std::to_string(e_[d]);
    }
    return s + ")";
  }

  // Monomial spelling, e.g. "x^2 y"; "1" for the zero index.
  std::string monomial() const {
    static const char* names[kMaxDim] = {"x", "y", "z"};
    std::string s;
    for (int d = 0; d < n_; ++d) {
      if (e_[d] == 0) continue;
      if (!s.empty()) s += " ";
      s += names[d];
      if (e_[d] > 1) s += "^" + std::to_string(e_[d]);
    }
    return s.empty() ? "1" : s;
  }

 private:
  int n_;
  std::array<int, kMaxDim> e_;
};

// Graded-lexicographic: sort by order, then lexicographically with the
// leading axis weighted heaviest, so (1,0) precedes (0,1).
inline bool grlex_less(const MultiIndex& a, const MultiIndex& b) {
  if (a.order() != b.order()) return a.order() < b.order();
  for (int d = 0; d < a.dim(); ++d)
    if (a[d] != b[d]) return a[d] > b[d];
  return false;
}

// All alpha with dim n and |alpha| <= k, in graded-lex order.
// Size is C(n + k, n).
inline std::vector<MultiIndex> enumerate_multiindices(int n, int k) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("enumerate_multiindices: n must be 1..3");
  if (k < 0) throw std::invalid_argument("enumerate_multiindices: negative order");
  std::vector<MultiIndex> out;
  for (int total = 0; total <= k; ++total) {
    // descending-lex walk over compositions of `total` into n parts
    MultiIndex a = MultiIndex::zero(n);
    if (n == 1) {
      a.at(0) = total;
      out.push_back(a);
      continue;
    }
    for (int i = total; i >= 0; --i) {
      if (n == 2) {
        a.at(0) = i;
        a.at(1) = total - i;
        out.push_back(a);
      } else {
        for (int j = total - i; j >= 0; --j) {
          a.at(0) = i;
          a.at(1) = j;
          a.at(2) = total - i - j;
          out.push_back(a);
        }
      }
    }
  }
  return out;
}

inline std::vector<MultiIndex> multiindices_of_order(int n, int m) {
  std::vector<MultiIndex> out;
  for (const auto& a : enumerate_multiindices(n, m))
    if (a.order() == m) out.push_back(a);
  return out;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace sobnl
