#ifndef ANIKERN_LEGENDRE_HPP
#define ANIKERN_LEGENDRE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "anikern/grid.hpp"
#include "anikern/symbol.hpp"

namespace anikern {

enum class LFStatus { converged, grid_only };

struct LFResult {
  double value = 0.0;
  Eigen::VectorXd argmax;
  LFStatus status = LFStatus::grid_only;
  int iterations = 0;
};

struct LFOptions {
  double coarse_grid_radius_t = 0.0;  // 0 = choose automatically
  int n_starts = 8;
  double tol = 1e-10;
};

namespace detail {

/// Smallest dilation parameter t such that R >= 2|x.xi| on the boundary of
/// the dilated unit ball; the maximizer of x.xi - R(xi) is then interior.
inline double enclosing_dilation(const Symbol& s, const Eigen::VectorXd& x) {
  const WeightVector& m = s.weights();
  const auto boundary = Symbol::sphere_samples(m.dim(), m.dim() == 1 ? 2 : 256);
  const auto margin_ok = [&](double t) {
    for (const auto& u : boundary) {
      const Eigen::VectorXd xi = dilate(m, t, u);
      if (s.eval_real(xi) < 2.0 * std::abs(x.dot(xi))) return false;
    }
    return true;
  };
  double t = 1.0;
  int guard = 0;
  while (!margin_ok(t)) {
    t *= 2.0;
    if (++guard > 400) throw std::runtime_error("lf_point: objective appears unbounded");
  }
  // one bisection pass tightens the box; looser boxes only cost grid nodes
  double lo = t / 2.0, hi = t;
  if (t > 1.0) {
    for (int i = 0; i < 20; ++i) {
      const double mid = 0.5 * (lo + hi);
      (margin_ok(mid) ? hi : lo) = mid;
    }
  }
  return hi;
}

inline LFResult ascend(const Symbol& s, const Eigen::VectorXd& x, Eigen::VectorXd xi,
                       double tol, int max_iter = 200) {
  LFResult res;
  const auto objective = [&](const Eigen::VectorXd& p) { return x.dot(p) - s.eval_real(p); };
  double f = objective(xi);
  int it = 0;
  for (; it < max_iter; ++it) {
    const Eigen::VectorXd grad = x - s.grad_real(xi);
    if (grad.lpNorm<Eigen::Infinity>() < tol) break;

    Eigen::VectorXd dir;
    const Eigen::MatrixXd hess = s.hess_real(xi);  // Hessian of R
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() == Eigen::Success) {
      dir = llt.solve(grad);
      if (dir.dot(grad) <= 0.0) dir = grad;  // indefinite round-off fallback
    } else {
      dir = grad;
    }

    double step = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::VectorXd cand = xi + step * dir;
      const double fc = objective(cand);
      if (fc > f) {
        xi = cand;
        f = fc;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    if (!std::isfinite(f) || f > 1e100)
      throw std::runtime_error("lf_point: ascent diverged (symbol not positive-definite?)");
  }
  res.value = std::max(0.0, f);  // xi = 0 is always feasible
  res.argmax = xi;
  res.iterations = it;
  res.status = ((x - s.grad_real(xi)).lpNorm<Eigen::Infinity>() < tol) ? LFStatus::converged
                                                                       : LFStatus::grid_only;
  return res;
}

}  // namespace detail

/// R^#(x) = sup_xi { x.xi - R(xi) }. Coarse anisotropic scan followed by
/// multistart damped-Newton ascent; R need not be convex, so the scan is what
/// guarantees the right basin.
inline LFResult lf_point(const Symbol& s, const Eigen::VectorXd& x, LFOptions opts = {},
                         const Eigen::VectorXd* warm_start = nullptr) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("lf_point: tol must be positive");
  const WeightVector& m = s.weights();
  const int d = m.dim();
  if (x.size() != d) throw std::invalid_argument("lf_point: dimension mismatch");

  if (x.lpNorm<Eigen::Infinity>() == 0.0) {
    LFResult res;
    res.argmax = Eigen::VectorXd::Zero(d);
    res.status = LFStatus::converged;
    return res;
  }

  const double t_star =
      opts.coarse_grid_radius_t > 0.0 ? opts.coarse_grid_radius_t : detail::enclosing_dilation(s, x);

  const int per_axis = 11;
  Eigen::VectorXd radii(d);
  for (int k = 0; k < d; ++k) radii[k] = std::pow(t_star, m.dilation_exponent(k).to_double());

  // keep the best n_starts scan points as ascent seeds
  std::vector<std::pair<double, Eigen::VectorXd>> seeds;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Eigen::VectorXd xi(d);
    for (int k = 0; k < d; ++k)
      xi[k] = -radii[k] + 2.0 * radii[k] * idx[static_cast<std::size_t>(k)] / (per_axis - 1);
    seeds.emplace_back(x.dot(xi) - s.eval_real(xi), xi);
    int k = 0;
    for (; k < d; ++k) {
      if (++idx[static_cast<std::size_t>(k)] < per_axis) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
    if (k == d) break;
  }
  std::sort(seeds.begin(), seeds.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  const int n_starts = std::min<int>(std::max(1, opts.n_starts), static_cast<int>(seeds.size()));

  LFResult best;
  best.value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_starts; ++i) {
    const LFResult r = detail::ascend(s, x, seeds[static_cast<std::size_t>(i)].second, opts.tol);
    if (r.value > best.value) best = r;
  }
  if (warm_start != nullptr) {
    const LFResult r = detail::ascend(s, x, *warm_start, opts.tol);
    if (r.value > best.value) best = r;
  }
  return best;
}

/// lf_point at every grid node; neighbouring argmaxes are reused as warm
/// starts (an optimization only, values agree with the cold path within tol).
inline std::vector<LFResult> lf_grid(const Symbol& s, const AnisoGrid& grid, LFOptions opts = {}) {
  std::vector<LFResult> out;
  out.reserve(static_cast<std::size_t>(grid.total_nodes()));
  const Eigen::VectorXd* warm = nullptr;
  Eigen::VectorXd last;
  for (long f = 0; f < grid.total_nodes(); ++f) {
    LFResult r = lf_point(s, grid.node(f), opts, warm);
    last = r.argmax;
    warm = &last;
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_lf_csv(const Symbol& s, const AnisoGrid& grid,
                         const std::vector<LFResult>& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_lf_csv: cannot open " + path);
  const int d = s.dim();
  for (int k = 0; k < d; ++k) out << "x_" << (k + 1) << ",";
  out << "lf_value";
  for (int k = 0; k < d; ++k) out << ",argmax_" << (k + 1);
  out << ",status\n";
  out.precision(17);
  for (long f = 0; f < grid.total_nodes(); ++f) {
    const Eigen::VectorXd x = grid.node(f);
    const LFResult& r = field[static_cast<std::size_t>(f)];
    for (int k = 0; k < d; ++k) out << x[k] << ",";
    out << r.value;
    for (int k = 0; k < d; ++k) out << "," << r.argmax[k];
    out << "," << (r.status == LFStatus::converged ? "converged" : "grid_only") << "\n";
  }
}

/// max relative deviation of t R^#(x) = R^#(t^{I-E} x) over the samples.
inline double check_lf_homogeneity(const Symbol& s,
                                   const std::vector<std::pair<double, Eigen::VectorXd>>& samples,
                                   LFOptions opts = {}) {
  double worst = 0.0;
  for (const auto& [t, x] : samples) {
    const double lhs = t * lf_point(s, x, opts).value;
    const double rhs = lf_point(s, dilate_dual(s.weights(), t, x), opts).value;
    worst = std::max(worst, std::abs(lhs - rhs) /
                                (std::abs(lhs) + std::numeric_limits<double>::min()));
  }
  return worst;
}

}  // namespace anikern

#endif  // ANIKERN_LEGENDRE_HPP
