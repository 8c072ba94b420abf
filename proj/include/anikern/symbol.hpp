#ifndef ANIKERN_SYMBOL_HPP
#define ANIKERN_SYMBOL_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "anikern/weights.hpp"

namespace anikern {

using Complex = std::complex<double>;

/// A positive-homogeneous polynomial symbol P(xi) = sum a_beta xi^beta with
/// every term at weighted degree |beta:m| = 2. R = Re P is the part all
/// estimates are phrased in.
class Symbol {
public:
  struct Term {
    MultiIndex beta;
    Complex coeff;
  };

  Symbol(WeightVector weights, std::vector<Term> terms, bool strict = true)
      : weights_(std::move(weights)), terms_(std::move(terms)) {
    for (const auto& term : terms_) {
      if (term.beta.dim() != weights_.dim())
        throw std::invalid_argument("Symbol: term dimension mismatch");
      if (weighted_degree(term.beta, weights_) != Rational(2))
        throw std::invalid_argument("Symbol: term has weighted degree != 2");
    }
    real_part_only_ = true;
    for (const auto& term : terms_)
      if (term.coeff.imag() != 0.0) real_part_only_ = false;
    if (strict) {
      const auto [mn, arg] = min_on_sphere(default_sphere_samples());
      (void)arg;
      if (!(mn > 0.0))
        throw std::invalid_argument("Symbol: real part not positive-definite");
    }
  }

  const WeightVector& weights() const { return weights_; }
  const std::vector<Term>& terms() const { return terms_; }
  int dim() const { return weights_.dim(); }
  bool real_part_only() const { return real_part_only_; }
  int default_sphere_samples() const { return 10000 * dim(); }

  /// P(xi), exact term-by-term monomial evaluation.
  Complex eval(const Eigen::VectorXd& xi) const {
    if (xi.size() != dim()) throw std::invalid_argument("Symbol::eval: dimension mismatch");
    Complex acc(0.0, 0.0);
    for (const auto& term : terms_) acc += term.coeff * monomial(term.beta, xi);
    return acc;
  }

  /// R(xi) = Re P(xi) for real xi.
  double eval_real(const Eigen::VectorXd& xi) const {
    if (xi.size() != dim()) throw std::invalid_argument("Symbol::eval_real: dimension mismatch");
    double acc = 0.0;
    for (const auto& term : terms_) acc += term.coeff.real() * monomial(term.beta, xi);
    return acc;
  }

  /// grad R(xi).
  Eigen::VectorXd grad_real(const Eigen::VectorXd& xi) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    for (const auto& term : terms_) {
      for (int k = 0; k < dim(); ++k) {
        const int bk = term.beta[k];
        if (bk == 0) continue;
        double v = term.coeff.real() * bk;
        for (int j = 0; j < dim(); ++j) {
          const int e = term.beta[j] - (j == k ? 1 : 0);
          v *= ipow(xi[j], e);
        }
        g[k] += v;
      }
    }
    return g;
  }

  /// Hessian of R(xi).
  Eigen::MatrixXd hess_real(const Eigen::VectorXd& xi) const {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim(), dim());
    for (const auto& term : terms_) {
      for (int k = 0; k < dim(); ++k) {
        for (int l = 0; l < dim(); ++l) {
          const int bk = term.beta[k];
          const int bl = term.beta[l] - (l == k ? 1 : 0);
          if (bk == 0 || bl <= 0) continue;
          double v = term.coeff.real() * bk * bl;
          for (int j = 0; j < dim(); ++j) {
            int e = term.beta[j] - (j == k ? 1 : 0) - (j == l ? 1 : 0);
            v *= ipow(xi[j], e);
          }
          h(k, l) += v;
        }
      }
    }
    return h;
  }

  std::pair<double, Eigen::VectorXd> min_on_sphere(int n_samples) const {
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd argmin = Eigen::VectorXd::Zero(dim());
    for (const auto& p : sphere_samples(dim(), n_samples)) {
      const double v = eval_real(p);
      if (v < best) {
        best = v;
        argmin = p;
      }
    }
    return {best, argmin};
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["m"] = weights_.m();
    j["terms"] = nlohmann::json::array();
    for (const auto& term : terms_) {
      nlohmann::json t;
      t["beta"] = term.beta.entries;
      t["re"] = term.coeff.real();
      t["im"] = term.coeff.imag();
      j["terms"].push_back(t);
    }
    return j;
  }

  static Symbol from_json(const nlohmann::json& j, bool strict = true) {
    WeightVector w(j.at("m").get<std::vector<int>>());
    std::vector<Term> terms;
    for (const auto& t : j.at("terms")) {
      terms.push_back(Term{MultiIndex(t.at("beta").get<std::vector<int>>()),
                           Complex(t.at("re").get<double>(),
                                   t.value("im", 0.0))});
    }
    return Symbol(std::move(w), std::move(terms), strict);
  }

  /// FNV-1a over the canonical JSON serialization.
  std::uint64_t hash() const {
    const std::string s = to_json().dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

  /// Quasi-uniform unit-sphere sample: endpoints for d=1, equal angles for
  /// d=2, Fibonacci lattice for d=3, seeded Gaussian directions beyond.
  static std::vector<Eigen::VectorXd> sphere_samples(int d, int n) {
    std::vector<Eigen::VectorXd> out;
    if (d == 1) {
      Eigen::VectorXd p(1);
      p[0] = 1.0;
      out.push_back(p);
      p[0] = -1.0;
      out.push_back(p);
      return out;
    }
    if (d == 2) {
      out.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const double th = 2.0 * M_PI * i / n;
        Eigen::VectorXd p(2);
        p << std::cos(th), std::sin(th);
        out.push_back(p);
      }
      return out;
    }
    if (d == 3) {
      out.reserve(static_cast<std::size_t>(n));
      const double ga = M_PI * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = ga * i;
        Eigen::VectorXd p(3);
        p << r * std::cos(th), r * std::sin(th), z;
        out.push_back(p);
      }
      return out;
    }
    std::mt19937_64 rng(0x5eed5eedULL + static_cast<std::uint64_t>(d));
    std::normal_distribution<double> gauss(0.0, 1.0);
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd p(d);
      do {
        for (int k = 0; k < d; ++k) p[k] = gauss(rng);
      } while (p.norm() < 1e-12);
      out.push_back(p / p.norm());
    }
    return out;
  }

private:
  static double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
  }

  static double monomial(const MultiIndex& beta, const Eigen::VectorXd& xi) {
    double v = 1.0;
    for (int k = 0; k < beta.dim(); ++k) v *= ipow(xi[k], beta[k]);
    return v;
  }

  WeightVector weights_;
  std::vector<Term> terms_;
  bool real_part_only_ = true;
};

inline Complex eval_symbol(const Symbol& s, const Eigen::VectorXd& xi) { return s.eval(xi); }

/// max over samples of |t P(xi) - P(t^{E*} xi)| / (|t P(xi)| + floor).
inline double check_homogeneity(const Symbol& s,
                                const std::vector<std::pair<double, Eigen::VectorXd>>& samples) {
  double worst = 0.0;
  for (const auto& [t, xi] : samples) {
    if (t <= 0.0) throw std::invalid_argument("check_homogeneity: t must be positive");
    const Complex lhs = Complex(t, 0.0) * s.eval(xi);
    const Complex rhs = s.eval(dilate(s.weights(), t, xi));
    const double dev = std::abs(lhs - rhs) /
                       (std::abs(lhs) + std::numeric_limits<double>::min());
    worst = std::max(worst, dev);
  }
  return worst;
}

/// min of R over the unit sphere; the symbol is acceptable iff the min is
/// positive (homogeneity extends positivity off the sphere).
inline std::pair<double, Eigen::VectorXd> check_positive_definite(const Symbol& s,
                                                                  int n_sphere_samples) {
  if (n_sphere_samples < 2 * s.dim())
    throw std::invalid_argument("check_positive_definite: too few samples");
  return s.min_on_sphere(n_sphere_samples);
}

struct ComparabilityReport {
  double constant_c = 0.0;
  double constant_C = 0.0;
  std::vector<Eigen::VectorXd> witness_points;  // argmin / argmax of Q/R
};

/// Sphere extrema of Q/R; for functions sharing a contracting dilation group
/// these extend to global two-sided bounds.
inline ComparabilityReport comparability_constants(
    const std::function<double(const Eigen::VectorXd&)>& q_fn,
    const std::function<double(const Eigen::VectorXd&)>& r_fn, const WeightVector& m,
    int n_samples) {
  ComparabilityReport rep;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd arg_lo, arg_hi;
  for (const auto& p : Symbol::sphere_samples(m.dim(), n_samples)) {
    const double r = r_fn(p);
    if (!(r > 0.0))
      throw std::invalid_argument("comparability_constants: R vanishes on the sphere");
    const double ratio = q_fn(p) / r;
    if (ratio < lo) { lo = ratio; arg_lo = p; }
    if (ratio > hi) { hi = ratio; arg_hi = p; }
  }
  rep.constant_c = lo;
  rep.constant_C = hi;
  rep.witness_points = {arg_lo, arg_hi};
  return rep;
}

/// Smallest admissible constant M_eps with |xi^alpha| <= eps R(xi)^kappa + M_eps,
/// floored at 1. Valid only when |alpha:2m| < kappa, which makes the excess
/// |xi^alpha| - eps R^kappa decay along every dilation orbit; the sup is then
/// attained on a compact set found by anisotropic box doubling.
inline double scaling_majorant(const MultiIndex& alpha, const Symbol& s, double eps, int kappa) {
  if (eps <= 0.0) throw std::invalid_argument("scaling_majorant: eps must be positive");
  const WeightVector& m = s.weights();
  if (!(half_weighted_degree(alpha, m) < Rational(kappa)))
    throw std::invalid_argument("scaling_majorant: requires |alpha:2m| < kappa");

  const int d = m.dim();
  const int per_axis = 65;
  const auto excess = [&](const Eigen::VectorXd& xi) {
    double mono = 1.0;
    for (int k = 0; k < d; ++k) mono *= std::pow(std::abs(xi[k]), alpha[k]);
    return mono - eps * std::pow(s.eval_real(xi), kappa);
  };

  double t = 2.0;
  double running = 0.0;
  Eigen::VectorXd best = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd spacing = Eigen::VectorXd::Zero(d);
  double prev1 = -1.0, prev2 = -1.0;
  for (int iter = 0; iter < 60; ++iter) {
    Eigen::VectorXd radii(d);
    for (int k = 0; k < d; ++k)
      radii[k] = std::pow(t, m.dilation_exponent(k).to_double());
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    while (true) {
      Eigen::VectorXd xi(d);
      for (int k = 0; k < d; ++k)
        xi[k] = -radii[k] + 2.0 * radii[k] * idx[static_cast<std::size_t>(k)] / (per_axis - 1);
      const double v = excess(xi);
      if (v > running) {
        running = v;
        best = xi;
        spacing = 2.0 * radii / (per_axis - 1);
      }
      int k = 0;
      for (; k < d; ++k) {
        if (++idx[static_cast<std::size_t>(k)] < per_axis) break;
        idx[static_cast<std::size_t>(k)] = 0;
      }
      if (k == d) break;
    }
    if (prev2 >= 0.0 && std::abs(running - prev2) <= 1e-9 * std::max(1.0, std::abs(running)))
      break;
    prev2 = prev1;
    prev1 = running;
    t *= 2.0;
  }

  // Zoom on the coarse argmax so the certificate is not an under-estimate.
  Eigen::VectorXd width = spacing;
  for (int level = 0; level < 8; ++level) {
    const int fine = 17;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    Eigen::VectorXd center = best;
    while (true) {
      Eigen::VectorXd xi(d);
      for (int k = 0; k < d; ++k)
        xi[k] = center[k] - width[k] +
                2.0 * width[k] * idx[static_cast<std::size_t>(k)] / (fine - 1);
      const double v = excess(xi);
      if (v > running) { running = v; best = xi; }
      int k = 0;
      for (; k < d; ++k) {
        if (++idx[static_cast<std::size_t>(k)] < fine) break;
        idx[static_cast<std::size_t>(k)] = 0;
      }
      if (k == d) break;
    }
    width /= 4.0;
  }
  return std::max(1.0, running);
}

}  // namespace anikern

#endif  // ANIKERN_SYMBOL_HPP
