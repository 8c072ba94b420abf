#ifndef ANIKERN_OPERATOR_VC_HPP
#define ANIKERN_OPERATOR_VC_HPP

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "anikern/grid.hpp"
#include "anikern/symbol.hpp"
#include "anikern/weights.hpp"

namespace anikern {

namespace detail {

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Forward first difference on interior nodes with zero Dirichlet padding.
inline Eigen::MatrixXd forward_difference(int n, double h) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    p(i, i) = -1.0 / h;
    if (i + 1 < n) p(i, i + 1) = 1.0 / h;
  }
  return p;
}

/// Discrete d^a/dx^a: alternating forward/backward composition, so that
/// even orders reproduce the classical stencils ((-1,2,-1)/h^2 and its
/// powers) and the divergence-form integration by parts is exact.
inline Eigen::MatrixXd axis_derivative(int n, double h, int order) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd p = forward_difference(n, h);
  const Eigen::MatrixXd bt = -p.transpose();  // backward difference
  for (int a = 1; a <= order; ++a) d = (a % 2 == 1 ? p : bt) * d;
  return d;
}

/// Zero-extension from the n interior nodes into a lattice padded by `pad`
/// ghost nodes on each side; differences of the extended sequence are then
/// exact wherever the padding covers the stencil reach.
inline Eigen::MatrixXd zero_extension(int n, int pad) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n + 2 * pad, n);
  for (int i = 0; i < n; ++i) r(i + pad, i) = 1.0;
  return r;
}

}  // namespace detail

/// Full discrete derivative D^alpha = prod_k (-i d/dx_k)^{alpha_k} applied to
/// the zero extension of an interior-node vector. Rows live on the padded
/// lattice (pad_k ghost nodes per side, flat order, last axis fastest), so
/// that the Dirichlet extension by zero is differenced exactly: D^alpha maps
/// prod (count_k - 1) interior values to prod (count_k - 1 + 2 pad_k) lattice
/// values. pad must dominate alpha componentwise; it defaults to alpha.
inline Eigen::MatrixXcd discrete_derivative(const AnisoGrid& grid, const MultiIndex& alpha,
                                            const MultiIndex& pad) {
  if (alpha.dim() != grid.dim() || pad.dim() != grid.dim())
    throw std::invalid_argument("discrete_derivative: dimension mismatch");
  Eigen::MatrixXd real_part = Eigen::MatrixXd::Identity(1, 1);
  for (int k = 0; k < grid.dim(); ++k) {
    if (pad[k] < alpha[k])
      throw std::invalid_argument("discrete_derivative: padding below stencil reach");
    const int n = grid.count(k) - 1;
    const Eigen::MatrixXd axis =
        detail::axis_derivative(n + 2 * pad[k], grid.spacing(k), alpha[k]) *
        detail::zero_extension(n, pad[k]);
    real_part = detail::kron(real_part, axis);
  }
  Complex phase(1.0, 0.0);
  for (int j = 0; j < alpha.order(); ++j) phase *= Complex(0.0, -1.0);
  return phase * real_part.cast<Complex>();
}

inline Eigen::MatrixXcd discrete_derivative(const AnisoGrid& grid, const MultiIndex& alpha) {
  return discrete_derivative(grid, alpha, alpha);
}

/// Coordinates of a flat index on the padded lattice used by
/// discrete_derivative (last axis fastest).
inline Eigen::VectorXd padded_node(const AnisoGrid& grid, const MultiIndex& pad, long flat) {
  Eigen::VectorXd x(grid.dim());
  for (int k = grid.dim() - 1; k >= 0; --k) {
    const long nk = grid.count(k) - 1 + 2 * pad[k];
    const long e = flat % nk;
    flat /= nk;
    x[k] = grid.axis_node(k, 1) + (static_cast<double>(e) - pad[k]) * grid.spacing(k);
  }
  return x;
}

enum class OperatorKind { plain, reference, twisted, power, rescaled };

class DiscreteOperator {
public:
  DiscreteOperator(Eigen::MatrixXcd matrix, AnisoGrid grid, WeightVector m, bool hermitian,
                   OperatorKind kind)
      : matrix_(std::move(matrix)),
        grid_(std::move(grid)),
        m_(std::move(m)),
        hermitian_(hermitian),
        kind_(kind) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() != grid_.interior_nodes())
      throw std::invalid_argument("DiscreteOperator: matrix/grid size mismatch");
  }

  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  const AnisoGrid& grid() const { return grid_; }
  const WeightVector& weights() const { return m_; }
  bool hermitian() const { return hermitian_; }
  OperatorKind kind() const { return kind_; }
  long size() const { return matrix_.rows(); }

  /// Spectral decomposition, computed once per operator.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>& eig() const {
    if (!hermitian_) throw std::logic_error("DiscreteOperator::eig: operator not Hermitian");
    std::scoped_lock lock(cache_->mutex);
    if (!cache_->solver) {
      cache_->solver = std::make_unique<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>>(matrix_);
      if (cache_->solver->info() != Eigen::Success)
        throw std::runtime_error("DiscreteOperator::eig: eigensolver failed");
    }
    return *cache_->solver;
  }

private:
  struct EigCache {
    std::mutex mutex;
    std::unique_ptr<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>> solver;
  };

  Eigen::MatrixXcd matrix_;
  AnisoGrid grid_;
  WeightVector m_;
  bool hermitian_;
  OperatorKind kind_;
  std::shared_ptr<EigCache> cache_ = std::make_shared<EigCache>();
};

/// Divergence-form coefficient data a_{alpha,beta}(x), with the constant
/// principal reference A_{alpha,beta} it must stay comparable to.
class CoefficientField {
public:
  using CoeffFn = std::function<Complex(const Eigen::VectorXd&)>;
  struct Pair {
    MultiIndex alpha;
    MultiIndex beta;
    CoeffFn fn;
  };
  struct ReferencePair {
    MultiIndex alpha;
    MultiIndex beta;
    double value;
  };

  CoefficientField(WeightVector m, AnisoGrid grid, std::vector<Pair> pairs,
                   std::vector<ReferencePair> reference, bool validate = true)
      : m_(std::move(m)), grid_(std::move(grid)), pairs_(std::move(pairs)),
        reference_(std::move(reference)) {
    if (grid_.dim() != m_.dim())
      throw std::invalid_argument("CoefficientField: dimension mismatch");
    for (const auto& p : pairs_) {
      if (weighted_degree(p.alpha, m_) > Rational(1) || weighted_degree(p.beta, m_) > Rational(1))
        throw std::invalid_argument("CoefficientField: pair exceeds |alpha:m| <= 1");
    }
    if (validate) {
      check_hermitian_pairing();
      certify_principal_comparability();
    }
    gamma_ = 0.0;
    for (const auto& p : pairs_)
      for (long f = 0; f < grid_.interior_nodes(); ++f)
        gamma_ = std::max(gamma_, std::abs(p.fn(interior_node(f))));
  }

  const WeightVector& weights() const { return m_; }
  const AnisoGrid& grid() const { return grid_; }
  const std::vector<Pair>& pairs() const { return pairs_; }
  const std::vector<ReferencePair>& reference() const { return reference_; }
  double gamma() const { return gamma_; }
  double comparability_upper() const { return comparability_upper_; }

  bool principal_only() const {
    for (const auto& p : pairs_)
      if (weighted_degree(p.alpha, m_) != Rational(1) || weighted_degree(p.beta, m_) != Rational(1))
        return false;
    return true;
  }

  Eigen::VectorXd interior_node(long flat) const {
    Eigen::VectorXd x(grid_.dim());
    for (int k = grid_.dim() - 1; k >= 0; --k) {
      const int n = grid_.count(k) - 1;
      x[k] = grid_.axis_node(k, 1 + static_cast<int>(flat % n));
      flat /= n;
    }
    return x;
  }

private:
  void check_hermitian_pairing() const {
    for (const auto& p : pairs_) {
      const Pair* partner = nullptr;
      for (const auto& q : pairs_)
        if (q.alpha == p.beta && q.beta == p.alpha) partner = &q;
      if (partner == nullptr)
        throw std::invalid_argument("CoefficientField: missing Hermitian partner pair");
      for (long f = 0; f < grid_.interior_nodes(); f += std::max<long>(1, grid_.interior_nodes() / 64)) {
        const Eigen::VectorXd x = interior_node(f);
        if (std::abs(p.fn(x) - std::conj(partner->fn(x))) > 1e-12 * (1.0 + std::abs(p.fn(x))))
          throw std::invalid_argument("CoefficientField: Hermitian pairing violated");
      }
    }
  }

  // node-wise pencil bounds of the principal block against the reference A
  void certify_principal_comparability() {
    std::vector<MultiIndex> principal;
    for (const auto& p : pairs_) {
      if (weighted_degree(p.alpha, m_) != Rational(1)) continue;
      bool seen = false;
      for (const auto& q : principal) seen = seen || (q == p.alpha);
      if (!seen) principal.push_back(p.alpha);
    }
    if (principal.empty())
      throw std::invalid_argument("CoefficientField: no principal terms");

    const int np = static_cast<int>(principal.size());
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(np, np);
    for (const auto& r : reference_) {
      int ia = -1, ib = -1;
      for (int i = 0; i < np; ++i) {
        if (principal[static_cast<std::size_t>(i)] == r.alpha) ia = i;
        if (principal[static_cast<std::size_t>(i)] == r.beta) ib = i;
      }
      if (ia < 0 || ib < 0)
        throw std::invalid_argument("CoefficientField: reference pair without matching principal");
      A(ib, ia) += r.value;
    }

    double c_low = std::numeric_limits<double>::infinity();
    double c_high = 0.0;
    const long stride = std::max<long>(1, grid_.interior_nodes() / 512);
    for (long f = 0; f < grid_.interior_nodes(); f += stride) {
      const Eigen::VectorXd x = interior_node(f);
      Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(np, np);
      for (const auto& p : pairs_) {
        if (weighted_degree(p.alpha, m_) != Rational(1) ||
            weighted_degree(p.beta, m_) != Rational(1))
          continue;
        int ia = -1, ib = -1;
        for (int i = 0; i < np; ++i) {
          if (principal[static_cast<std::size_t>(i)] == p.alpha) ia = i;
          if (principal[static_cast<std::size_t>(i)] == p.beta) ib = i;
        }
        P(ib, ia) += p.fn(x);
      }
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> ges(P, A);
      if (ges.info() != Eigen::Success)
        throw std::invalid_argument("CoefficientField: reference A not positive-definite");
      c_low = std::min(c_low, ges.eigenvalues().minCoeff());
      c_high = std::max(c_high, ges.eigenvalues().maxCoeff());
    }
    if (c_low < 0.75 - 1e-9)
      throw std::invalid_argument("CoefficientField: principal block below (3/4) A");
    comparability_upper_ = c_high;
  }

  WeightVector m_;
  AnisoGrid grid_;
  std::vector<Pair> pairs_;
  std::vector<ReferencePair> reference_;
  double gamma_ = 0.0;
  double comparability_upper_ = 1.0;
};

/// H = sum D^beta { a_{alpha,beta}(x) D^alpha } as the interior-node matrix
/// sum (D^beta)^H diag(a_{alpha,beta}) D^alpha; Hermitian by the pairing
/// condition, and the discrete integration by parts is exact (zero padding
/// produces no boundary terms).
inline DiscreteOperator assemble(const CoefficientField& coeffs,
                                 OperatorKind kind = OperatorKind::plain) {
  const AnisoGrid& grid = coeffs.grid();
  const long n = grid.interior_nodes();
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);

  std::map<std::pair<std::vector<int>, std::vector<int>>, Eigen::MatrixXcd> deriv_cache;
  const auto deriv = [&](const MultiIndex& a, const MultiIndex& pad) -> const Eigen::MatrixXcd& {
    auto it = deriv_cache.find({a.entries, pad.entries});
    if (it == deriv_cache.end())
      it = deriv_cache
               .emplace(std::make_pair(a.entries, pad.entries),
                        discrete_derivative(grid, a, pad))
               .first;
    return it->second;
  };

  for (const auto& p : coeffs.pairs()) {
    // shared padded lattice for the pair: both stencils fit, and the
    // coefficient is sampled on that lattice
    std::vector<int> pv(p.alpha.entries.size());
    for (std::size_t k = 0; k < pv.size(); ++k)
      pv[k] = std::max(p.alpha.entries[k], p.beta.entries[k]);
    const MultiIndex pad(pv);
    const Eigen::MatrixXcd& da = deriv(p.alpha, pad);
    Eigen::VectorXcd diag(da.rows());
    for (long f = 0; f < da.rows(); ++f) diag[f] = p.fn(padded_node(grid, pad, f));
    acc += deriv(p.beta, pad).adjoint() * diag.asDiagonal() * da;
  }
  return DiscreteOperator(std::move(acc), grid, coeffs.weights(), true, kind);
}

/// Symbol of the constant-coefficient reference sum A_{alpha,beta} D^{alpha+beta}.
inline Symbol reference_symbol(const std::vector<CoefficientField::ReferencePair>& a,
                               const WeightVector& m, bool strict = true) {
  std::map<std::vector<int>, double> merged;
  for (const auto& r : a) merged[(r.alpha + r.beta).entries] += r.value;
  std::vector<Symbol::Term> terms;
  for (const auto& [beta, coeff] : merged)
    terms.push_back({MultiIndex(beta), Complex(coeff, 0.0)});
  return Symbol(m, std::move(terms), strict);
}

inline DiscreteOperator assemble_reference(const std::vector<CoefficientField::ReferencePair>& a,
                                           const AnisoGrid& grid, const WeightVector& m) {
  reference_symbol(a, m, true);  // rejects indefinite A
  std::vector<CoefficientField::Pair> pairs;
  for (const auto& r : a) {
    const double v = r.value;
    pairs.push_back({r.alpha, r.beta, [v](const Eigen::VectorXd&) { return Complex(v, 0.0); }});
  }
  CoefficientField cf(m, grid, std::move(pairs), a);
  return assemble(cf, OperatorKind::reference);
}

/// <H f, f> under the discrete inner product sum f conj(g) prod h_k.
inline Complex quadratic_form(const DiscreteOperator& hd, const Eigen::VectorXcd& f) {
  if (f.size() != hd.size()) throw std::invalid_argument("quadratic_form: dimension mismatch");
  const Complex v = f.dot(hd.matrix() * f) * hd.grid().cell_volume();
  return hd.hermitian() ? Complex(v.real(), 0.0) : v;
}

/// e^{-t H}: spectral decomposition in the Hermitian case (computed once and
/// reused across t), Pade scaling-and-squaring otherwise.
inline Eigen::MatrixXcd semigroup(const DiscreteOperator& hd, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("semigroup: t must be positive");
  if (hd.hermitian()) {
    const auto& eig = hd.eig();
    const Eigen::VectorXd decay = (-t * eig.eigenvalues().array()).exp();
    return eig.eigenvectors() * decay.asDiagonal() * eig.eigenvectors().adjoint();
  }
  const Eigen::MatrixXcd scaled = -t * hd.matrix();
  return scaled.exp();
}

/// K_H(t, ., y) = (e^{-tH} e_y) / prod h_k, the kernel against the volume
/// element.
inline Eigen::VectorXcd kernel_column(const DiscreteOperator& hd, double t, long y_interior) {
  if (y_interior < 0 || y_interior >= hd.size())
    throw std::invalid_argument("kernel_column: node outside grid");
  if (hd.hermitian()) {
    const auto& eig = hd.eig();
    const Eigen::VectorXd decay = (-t * eig.eigenvalues().array()).exp();
    const Eigen::VectorXcd w = eig.eigenvectors().row(y_interior).adjoint();
    return (eig.eigenvectors() * (decay.asDiagonal() * w)) / hd.grid().cell_volume();
  }
  return semigroup(hd, t).col(y_interior) / hd.grid().cell_volume();
}

/// Per-axis cutoff of the identity: psi equals the identity on the anchor
/// interval, then transitions to a constant over width w through an l-times
/// differentiable polynomial blend with certified derivative bounds.
class TwistMap {
public:
  struct Axis {
    double lo;       // identity holds on [lo, hi]
    double hi;
    double width;    // transition width
    int blend_order; // smoothstep order of the blend
  };

  TwistMap(std::vector<Axis> axes, Eigen::VectorXd lambda, Eigen::VectorXd anchor_x,
           Eigen::VectorXd anchor_y, int l)
      : axes_(std::move(axes)), lambda_(std::move(lambda)), anchor_x_(std::move(anchor_x)),
        anchor_y_(std::move(anchor_y)), l_(l) {}

  int dim() const { return static_cast<int>(axes_.size()); }
  const Eigen::VectorXd& lambda() const { return lambda_; }
  int l() const { return l_; }
  const Eigen::VectorXd& anchor_x() const { return anchor_x_; }
  const Eigen::VectorXd& anchor_y() const { return anchor_y_; }

  TwistMap with_lambda(const Eigen::VectorXd& lambda) const {
    TwistMap t = *this;
    t.lambda_ = lambda;
    return t;
  }

  double psi(int axis, double x) const {
    const Axis& a = axes_[static_cast<std::size_t>(axis)];
    if (x >= a.lo && x <= a.hi) return x;
    if (x > a.hi) {
      const double s = x - a.hi;
      if (s >= a.width) return a.hi + half_mass(a) * a.width;
      return a.hi + a.width * ramp(a, s / a.width);
    }
    const double s = a.lo - x;
    if (s >= a.width) return a.lo - half_mass(a) * a.width;
    return a.lo - a.width * ramp(a, s / a.width);
  }

  Eigen::VectorXd phi(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(dim());
    for (int k = 0; k < dim(); ++k) out[k] = psi(k, x[k]);
    return out;
  }

  double lambda_phi(const Eigen::VectorXd& x) const { return lambda_.dot(phi(x)); }

  double sup_abs_psi(int axis) const {
    const Axis& a = axes_[static_cast<std::size_t>(axis)];
    return std::max(std::abs(a.lo - half_mass(a) * a.width),
                    std::abs(a.hi + half_mass(a) * a.width));
  }

  /// max over j = 1..l and a dense axis sweep of |psi^{(j)}| by central
  /// finite differences; the F_l certificate.
  double derivative_sweep_max(int axis, int n_points = 4001) const {
    const Axis& a = axes_[static_cast<std::size_t>(axis)];
    const double lo = a.lo - 1.5 * a.width;
    const double hi = a.hi + 1.5 * a.width;
    const double span = hi - lo;
    // step chosen to balance truncation against roundoff amplification
    // eps / h^j at the orders certified here
    const double h = 0.05;
    (void)span;
    double worst = 0.0;
    for (int j = 1; j <= l_; ++j) {
      for (int i = 0; i < n_points; ++i) {
        const double x = lo + span * i / (n_points - 1);
        // central finite difference of order j
        double acc = 0.0;
        for (int r = 0; r <= j; ++r) {
          const double binom = std::tgamma(j + 1.0) / (std::tgamma(r + 1.0) * std::tgamma(j - r + 1.0));
          acc += ((j - r) % 2 == 0 ? 1.0 : -1.0) * binom * psi(axis, x + (r - j / 2.0) * h);
        }
        worst = std::max(worst, std::abs(acc / std::pow(h, j)));
      }
    }
    return worst;
  }

private:
  // integral of the smoothstep over [0,1] is 1/2 by symmetry
  static double half_mass(const Axis&) { return 0.5; }

  /// int_0^u (1 - S(v)) dv where S is the order-p smoothstep
  /// S(u) = int_0^u v^p (1-v)^p dv / B(p+1, p+1); psi' = 1 - S(s/w) across
  /// the transition. Both are closed-form polynomials in u.
  double ramp(const Axis& a, double u) const {
    // int_0^u S = sum c_j u^{e_j + 1} / (e_j + 1)
    double acc = 0.0;
    for (const auto& [e, c] : smoothstep_terms(a.blend_order))
      acc += c * std::pow(u, e + 1) / (e + 1);
    return u - acc;
  }

  // term list (exponent, coefficient) of S(u) via the binomial expansion of
  // v^p (1-v)^p
  static const std::vector<std::pair<int, double>>& smoothstep_terms(int p) {
    static std::mutex mu;
    static std::map<int, std::vector<std::pair<int, double>>> cache;
    std::scoped_lock lock(mu);
    auto it = cache.find(p);
    if (it != cache.end()) return it->second;
    const double beta = std::tgamma(p + 1.0) * std::tgamma(p + 1.0) / std::tgamma(2.0 * p + 2.0);
    std::vector<std::pair<int, double>> terms;
    double binom = 1.0;
    for (int j = 0; j <= p; ++j) {
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      terms.emplace_back(p + 1 + j, sign * binom / ((p + 1 + j) * beta));
      binom = binom * (p - j) / (j + 1.0);
    }
    return cache.emplace(p, std::move(terms)).first->second;
  }

  std::vector<Axis> axes_;
  Eigen::VectorXd lambda_;
  Eigen::VectorXd anchor_x_;
  Eigen::VectorXd anchor_y_;
  int l_;
};

/// Build the twist anchored at (x, y): per-axis identity on the smallest
/// interval containing both anchor coordinates, transition width widened
/// until the finite-difference certificate |psi^(j)| <= 1 passes for
/// j = 1..l.
inline TwistMap make_twist(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const AnisoGrid& grid, const WeightVector& m, int l = 0) {
  const int d = grid.dim();
  if (x.size() != d || y.size() != d)
    throw std::invalid_argument("make_twist: anchor dimension mismatch");
  for (int k = 0; k < d; ++k) {
    if (std::abs(x[k]) > grid.radius(k) || std::abs(y[k]) > grid.radius(k))
      throw std::invalid_argument("make_twist: anchors outside grid");
  }
  if (l <= 0) {
    l = 0;
    for (int k = 0; k < d; ++k) l = std::max(l, 2 * m.m(k));
  }

  std::vector<TwistMap::Axis> axes;
  for (int k = 0; k < d; ++k) {
    TwistMap::Axis a;
    a.lo = std::min(x[k], y[k]);
    a.hi = std::max(x[k], y[k]);
    a.blend_order = l;  // l vanishing derivatives at the joints
    a.width = 2.0;
    axes.push_back(a);
  }
  TwistMap tm(axes, Eigen::VectorXd::Zero(d), x, y, l);

  for (int k = 0; k < d; ++k) {
    bool certified = false;
    for (int attempt = 0; attempt < 12 && !certified; ++attempt) {
      certified = tm.derivative_sweep_max(k) <= 1.0 + 1e-9;
      if (!certified) {
        axes[static_cast<std::size_t>(k)].width *= 2.0;
        tm = TwistMap(axes, Eigen::VectorXd::Zero(d), x, y, l);
      }
    }
    if (!certified)
      throw std::runtime_error("make_twist: no admissible transition width found");
  }
  return tm;
}

/// H_{lambda,phi} = e^{lambda(phi)} H e^{-lambda(phi)} on the grid, a
/// diagonal similarity; spectrum is preserved, Hermiticity is not.
inline DiscreteOperator twist(const DiscreteOperator& hd, const TwistMap& tm,
                              const CoefficientField* coeffs = nullptr) {
  if (hd.kind() == OperatorKind::twisted)
    throw std::invalid_argument("twist: operator already twisted");
  const long n = hd.size();
  Eigen::VectorXd lp(n);
  for (long f = 0; f < n; ++f) {
    Eigen::VectorXd xnode(hd.grid().dim());
    long rem = f;
    for (int k = hd.grid().dim() - 1; k >= 0; --k) {
      const int nk = hd.grid().count(k) - 1;
      xnode[k] = hd.grid().axis_node(k, 1 + static_cast<int>(rem % nk));
      rem /= nk;
    }
    lp[f] = tm.lambda_phi(xnode);
  }
  (void)coeffs;
  const double worst = lp.cwiseAbs().maxCoeff();
  if (worst > 300.0) {
    const double lam_norm = tm.lambda().norm();
    throw std::runtime_error("twist: e^{lambda(phi)} overflow; max admissible |lambda| ~ " +
                             std::to_string(lam_norm * 300.0 / worst));
  }
  const Eigen::VectorXcd dplus = lp.array().exp().matrix().cast<Complex>();
  const Eigen::VectorXcd dminus = (-lp.array()).exp().matrix().cast<Complex>();
  Eigen::MatrixXcd twisted = dplus.asDiagonal() * hd.matrix() * dminus.asDiagonal();
  return DiscreteOperator(std::move(twisted), hd.grid(), hd.weights(), false,
                          OperatorKind::twisted);
}

inline DiscreteOperator power(const DiscreteOperator& hd, int kappa) {
  if (kappa < 1) throw std::invalid_argument("power: kappa must be >= 1");
  if (kappa == 1) return hd;
  Eigen::MatrixXcd acc = hd.matrix();
  for (int i = 1; i < kappa; ++i) acc = acc * hd.matrix();
  return DiscreteOperator(std::move(acc), hd.grid(), hd.weights(), hd.hermitian(),
                          OperatorKind::power);
}

/// Coefficients of H_s: x -> a(s^{-E} x) on the correspondingly dilated box.
inline CoefficientField rescale(const CoefficientField& coeffs, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("rescale: s must be positive");
  if (!coeffs.principal_only())
    throw std::invalid_argument("rescale: requires principal-only coefficients");
  const WeightVector m = coeffs.weights();
  std::vector<double> radii(static_cast<std::size_t>(coeffs.grid().dim()));
  for (int k = 0; k < coeffs.grid().dim(); ++k)
    radii[static_cast<std::size_t>(k)] =
        coeffs.grid().radius(k) * std::pow(s, m.dilation_exponent(k).to_double());
  const AnisoGrid dilated(radii, coeffs.grid().counts());

  std::vector<CoefficientField::Pair> pairs;
  for (const auto& p : coeffs.pairs()) {
    auto fn = p.fn;
    const WeightVector mw = m;
    const double inv = 1.0 / s;
    pairs.push_back({p.alpha, p.beta, [fn, mw, inv](const Eigen::VectorXd& x) {
                       return fn(dilate(mw, inv, x));
                     }});
  }
  return CoefficientField(m, dilated, std::move(pairs), coeffs.reference());
}

/// max(0, -lambda_min) of a Hermitian operator: the recorded lower shift.
inline double lower_shift(const DiscreteOperator& hd) {
  return std::max(0.0, -hd.eig().eigenvalues().minCoeff());
}

}  // namespace anikern

#endif  // ANIKERN_OPERATOR_VC_HPP
