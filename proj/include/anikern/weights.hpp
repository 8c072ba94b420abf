#ifndef ANIKERN_WEIGHTS_HPP
#define ANIKERN_WEIGHTS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "anikern/rational.hpp"

namespace anikern {

/// Multi-index: a vector of non-negative integer exponents.
struct MultiIndex {
  std::vector<int> entries;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> e) : entries(std::move(e)) {
    for (int v : entries)
      if (v < 0) throw std::invalid_argument("MultiIndex: negative entry");
  }

  int dim() const { return static_cast<int>(entries.size()); }
  int order() const {
    int s = 0;
    for (int v : entries) s += v;
    return s;
  }
  int operator[](int k) const { return entries[static_cast<std::size_t>(k)]; }

  bool operator==(const MultiIndex& o) const { return entries == o.entries; }
  bool operator<(const MultiIndex& o) const { return entries < o.entries; }

  MultiIndex operator+(const MultiIndex& o) const {
    if (dim() != o.dim()) throw std::invalid_argument("MultiIndex: dimension mismatch");
    std::vector<int> e(entries);
    for (int k = 0; k < dim(); ++k) e[static_cast<std::size_t>(k)] += o[k];
    return MultiIndex(e);
  }
};

/// Anisotropy weights m with the derived dilation exponents 1/(2 m_k) and
/// the homogeneous order mu = sum_k 1/(2 m_k), kept as exact rationals.
class WeightVector {
public:
  explicit WeightVector(std::vector<int> m) : m_(std::move(m)) {
    if (m_.empty()) throw std::invalid_argument("WeightVector: empty");
    for (int mk : m_)
      if (mk < 1) throw std::invalid_argument("WeightVector: every m_k must be >= 1");
    mu_ = Rational(0);
    for (int mk : m_) {
      exponents_.emplace_back(1, 2 * static_cast<std::int64_t>(mk));
      mu_ = mu_ + exponents_.back();
    }
  }

  int dim() const { return static_cast<int>(m_.size()); }
  int m(int k) const { return m_[static_cast<std::size_t>(k)]; }
  const std::vector<int>& m() const { return m_; }
  Rational mu() const { return mu_; }
  Rational dilation_exponent(int k) const { return exponents_[static_cast<std::size_t>(k)]; }

  /// kappa = min{n : mu/n < 1}
  int kappa() const {
    int n = 1;
    while (!(mu_ < Rational(n))) ++n;
    return n;
  }

private:
  std::vector<int> m_;
  std::vector<Rational> exponents_;
  Rational mu_;
};

/// |beta : m| = sum beta_k / m_k, exact.
inline Rational weighted_degree(const MultiIndex& beta, const WeightVector& m) {
  if (beta.dim() != m.dim())
    throw std::invalid_argument("weighted_degree: dimension mismatch");
  Rational s(0);
  for (int k = 0; k < m.dim(); ++k) s = s + Rational(beta[k], m.m(k));
  return s;
}

/// |beta : 2m|, the half-order weighted degree.
inline Rational half_weighted_degree(const MultiIndex& beta, const WeightVector& m) {
  if (beta.dim() != m.dim())
    throw std::invalid_argument("half_weighted_degree: dimension mismatch");
  Rational s(0);
  for (int k = 0; k < m.dim(); ++k) s = s + Rational(beta[k], 2 * m.m(k));
  return s;
}

inline Rational homogeneous_order(const WeightVector& m) { return m.mu(); }

/// t^E x with (t^E x)_k = t^{1/(2 m_k)} x_k.
inline Eigen::VectorXd dilate(const WeightVector& m, double t, const Eigen::VectorXd& x) {
  if (t <= 0.0) throw std::invalid_argument("dilate: t must be positive");
  if (x.size() != m.dim()) throw std::invalid_argument("dilate: dimension mismatch");
  Eigen::VectorXd y(x.size());
  for (int k = 0; k < m.dim(); ++k)
    y[k] = std::pow(t, m.dilation_exponent(k).to_double()) * x[k];
  return y;
}

/// t^{I-E} x with (t^{I-E} x)_k = t^{1 - 1/(2 m_k)} x_k, the dilation under
/// which the Legendre-Fenchel transform is homogeneous.
inline Eigen::VectorXd dilate_dual(const WeightVector& m, double t, const Eigen::VectorXd& x) {
  if (t <= 0.0) throw std::invalid_argument("dilate_dual: t must be positive");
  if (x.size() != m.dim()) throw std::invalid_argument("dilate_dual: dimension mismatch");
  Eigen::VectorXd y(x.size());
  for (int k = 0; k < m.dim(); ++k)
    y[k] = std::pow(t, 1.0 - m.dilation_exponent(k).to_double()) * x[k];
  return y;
}

}  // namespace anikern

#endif  // ANIKERN_WEIGHTS_HPP
