#include <doctest.h>

#include <random>

#include "anikern/estimator.hpp"
#include "anikern/legendre.hpp"

using namespace anikern;

namespace {

CoefficientField::CoeffFn constant(double c) {
  return [c](const Eigen::VectorXd&) { return Complex(c, 0.0); };
}

CoefficientField::CoeffFn checkerboard(double lo, double hi, double period = 1.0) {
  return [lo, hi, period](const Eigen::VectorXd& x) {
    long cell = 0;
    for (long k = 0; k < x.size(); ++k) cell += static_cast<long>(std::floor(x[k] / period));
    return Complex(((cell % 2 + 2) % 2 == 0) ? lo : hi, 0.0);
  };
}

DiscreteOperator laplacian_1d(const AnisoGrid& grid) {
  return assemble_reference({{MultiIndex({1}), MultiIndex({1}), 1.0}}, grid, WeightVector({1}));
}

Symbol gaussian_symbol() { return Symbol(WeightVector({1}), {{MultiIndex({2}), {1.0, 0.0}}}); }

std::function<TwistMap(const Eigen::VectorXd&)> mid_twist(const AnisoGrid& grid,
                                                          const WeightVector& m) {
  Eigen::VectorXd x(grid.dim()), y(grid.dim());
  for (int k = 0; k < grid.dim(); ++k) {
    x[k] = -grid.radius(k) / 2.0;
    y[k] = grid.radius(k) / 2.0;
  }
  const AnisoGrid g = grid;
  return [g, m, x, y](const Eigen::VectorXd&) { return make_twist(x, y, g, m); };
}

std::vector<KernelSample> gaussian_samples(const std::vector<double>& times, double radius,
                                           int n_nodes) {
  std::vector<KernelSample> out;
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(1);
  for (double t : times)
    for (int i = 0; i <= n_nodes; ++i) {
      Eigen::VectorXd x(1);
      x << -radius + 2.0 * radius * i / n_nodes;
      const double absk = std::pow(4.0 * M_PI * t, -0.5) * std::exp(-x[0] * x[0] / (4.0 * t));
      out.push_back({t, x, y, absk});
    }
  return out;
}

double gaussian_lf(const Eigen::VectorXd& u) { return u[0] * u[0] / 4.0; }

}  // namespace

TEST_CASE("hypothesis 1: proportional pencils are exact") {
  const AnisoGrid grid({1.0}, {16});
  const DiscreteOperator ld = laplacian_1d(grid);
  const HypothesisReport same = verify_hypothesis1(ld, ld, 0.0);
  CHECK(same.constants.at("c_low") == 1.0);
  CHECK(same.constants.at("C_high") == 1.0);
  CHECK(same.accepted);

  const DiscreteOperator twice(2.0 * ld.matrix(), ld.grid(), ld.weights(), true,
                               OperatorKind::plain);
  const HypothesisReport dbl = verify_hypothesis1(twice, ld, 0.0);
  CHECK(dbl.constants.at("c_low") == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(dbl.constants.at("C_high") == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("hypothesis 1: checkerboard coefficients") {
  const AnisoGrid grid({4.0}, {64});
  const WeightVector m({1});
  const CoefficientField cf(m, grid,
                            {{MultiIndex({1}), MultiIndex({1}), checkerboard(0.75, 2.0)}},
                            {{MultiIndex({1}), MultiIndex({1}), 1.0}});
  const DiscreteOperator hd = assemble(cf);
  const DiscreteOperator ld = laplacian_1d(grid);
  const HypothesisReport rep = verify_hypothesis1(hd, ld, 0.0);
  CHECK(rep.constants.at("c_low") >= 0.75 - 1e-9);
  CHECK(rep.constants.at("c_low") <= rep.constants.at("C_high"));
  CHECK(rep.accepted);

  const AnisoGrid other({4.0}, {32});
  CHECK_THROWS(verify_hypothesis1(hd, laplacian_1d(other), 0.0));
}

TEST_CASE("hypothesis 2: lambda = 0 gives M = 0 and checkerboard M is stable") {
  const AnisoGrid grid({4.0}, {32});
  const WeightVector m({1});
  const CoefficientField cf(m, grid,
                            {{MultiIndex({1}), MultiIndex({1}), checkerboard(1.0, 1.5)}},
                            {{MultiIndex({1}), MultiIndex({1}), 1.0}});
  const DiscreteOperator hd = assemble(cf);
  const Symbol ref = reference_symbol(cf.reference(), m, true);

  const HypothesisReport zero =
      verify_hypothesis2(hd, ref, {Eigen::VectorXd::Zero(1)}, mid_twist(grid, m), 16, 5);
  CHECK(zero.constants.at("M") <= 1e-10);

  std::vector<Eigen::VectorXd> lams;
  for (double v : {-1.0, 1.0}) {
    Eigen::VectorXd l(1);
    l << v;
    lams.push_back(l);
  }
  const HypothesisReport rep = verify_hypothesis2(hd, ref, lams, mid_twist(grid, m), 32, 5);
  CHECK(std::isfinite(rep.constants.at("M")));
  CHECK(rep.constants.at("M") > 0.0);
  CHECK(rep.accepted);
}

TEST_CASE("twisted semigroup norm bound and form lower bound") {
  const AnisoGrid grid({4.0}, {32});
  const WeightVector m({1});
  const CoefficientField cf(m, grid,
                            {{MultiIndex({1}), MultiIndex({1}), checkerboard(1.0, 1.5)}},
                            {{MultiIndex({1}), MultiIndex({1}), 1.0}});
  const DiscreteOperator hd = assemble(cf);
  const Symbol ref = reference_symbol(cf.reference(), m, true);
  const auto builder = mid_twist(grid, m);

  std::vector<Eigen::VectorXd> lams;
  for (double v : {-1.0, 1.0}) {
    Eigen::VectorXd l(1);
    l << v;
    lams.push_back(l);
  }
  const HypothesisReport h2 = verify_hypothesis2(hd, ref, lams, builder, 32, 7);
  const double m_fit = h2.constants.at("M");

  for (const auto& lam : lams) {
    const double r_lam = ref.eval_real(lam);
    const DiscreteOperator ht = twist(hd, builder(lam).with_lambda(lam));
    CHECK(check_twisted_sg_norm(ht, m_fit, r_lam, {0.01, 0.1, 1.0}) >= -1e-9);
    CHECK(check_twisted_form_lower(ht, m_fit, r_lam) <= 1.0 + 1e-9);
  }

  // lambda = 0: semigroup is a contraction, Hermitian part is PSD
  const DiscreteOperator h0 = twist(hd, builder(lams[0]).with_lambda(Eigen::VectorXd::Zero(1)));
  CHECK(check_twisted_sg_norm(h0, 1.0, 0.0, {0.01, 0.1, 1.0}) >= 0.0);
  CHECK(check_twisted_form_lower(h0, 1.0, 0.0) <= 0.0 + 1e-12);
}

TEST_CASE("twisted slack is continuous across a refined time grid") {
  const AnisoGrid grid({4.0}, {32});
  const DiscreteOperator ld = laplacian_1d(grid);
  const WeightVector m({1});
  const auto builder = mid_twist(grid, m);
  Eigen::VectorXd lam(1);
  lam << 1.0;
  const DiscreteOperator ht = twist(ld, builder(lam).with_lambda(lam));
  const double m_fit = 4.0;
  std::vector<double> coarse = {0.01, 0.1, 1.0};
  bool coarse_nonneg = check_twisted_sg_norm(ht, m_fit, 1.0, coarse) >= -1e-9;
  bool fine_nonneg = true;
  for (double t = 0.01; t <= 1.0; t *= 1.2)
    fine_nonneg = fine_nonneg && check_twisted_sg_norm(ht, m_fit, 1.0, {t}) >= -1e-9;
  CHECK(coarse_nonneg == fine_nonneg);
}

TEST_CASE("bound fit recovers the Gaussian constants") {
  const auto samples = gaussian_samples({0.5, 1.0, 2.0}, 10.0, 200);
  const BoundFit fit = fit_offdiagonal_bound(samples, 0.5, gaussian_lf, false);
  CHECK(fit.C == doctest::Approx(std::pow(4.0 * M_PI, -0.5) * (1.0 + 1e-6)).epsilon(1e-12));
  CHECK(fit.M >= 1.0);
  CHECK(fit.M <= 1.0001);
  CHECK(fit.min_margin >= -1e-12);
  CHECK(fit.min_margin <= 1e-9);
  CHECK_FALSE(fit.includes_Mt_term);
  CHECK(fit.n_points == static_cast<int>(samples.size()));
}

TEST_CASE("bound fit edge cases") {
  // single diagonal sample: trivial bound with M = 0
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(1);
  const BoundFit diag = fit_offdiagonal_bound({{2.0, z, z, 0.3}}, 0.5, gaussian_lf, false);
  CHECK(diag.M == 0.0);
  CHECK(diag.C == doctest::Approx(std::pow(2.0, 0.5) * 0.3 * (1.0 + 1e-6)).epsilon(1e-12));
  CHECK(diag.min_margin >= 0.0);

  // sub-floor samples are dropped
  Eigen::VectorXd far(1);
  far << 5.0;
  const BoundFit dropped = fit_offdiagonal_bound(
      {{2.0, z, z, 0.3}, {2.0, far, z, 1e-310}}, 0.5, gaussian_lf, false);
  CHECK(dropped.n_points == 1);
  CHECK_THROWS(fit_offdiagonal_bound({{2.0, far, z, 1e-310}}, 0.5, gaussian_lf, false));

  // off-diagonal sample above every admissible bound: infeasible
  CHECK_THROWS(fit_offdiagonal_bound({{1.0, z, z, 1.0}, {1.0, far, z, 2.0}}, 0.5,
                                     gaussian_lf, false));
}

TEST_CASE("bound fit: adding samples never increases M") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> ux(-8.0, 8.0), ut(0.3, 3.0);
  std::vector<KernelSample> samples = gaussian_samples({1.0}, 6.0, 40);
  BoundFit prev = fit_offdiagonal_bound(samples, 0.5, gaussian_lf, false);
  for (int round = 0; round < 20; ++round) {
    Eigen::VectorXd x(1);
    x << ux(rng);
    const double t = ut(rng);
    const double absk = std::pow(4.0 * M_PI * t, -0.5) * std::exp(-x[0] * x[0] / (4.0 * t));
    samples.push_back({t, x, Eigen::VectorXd::Zero(1), absk});
    const BoundFit next = fit_offdiagonal_bound(samples, 0.5, gaussian_lf, false);
    CHECK(next.M <= prev.M + 1e-12);
    prev = next;
  }
}

TEST_CASE("bound fit: normalization covariance") {
  auto samples = gaussian_samples({0.5, 1.0, 2.0}, 8.0, 80);
  const BoundFit base = fit_offdiagonal_bound(samples, 0.5, gaussian_lf, false);
  const double c = 37.5;
  for (auto& s : samples) s.abs_k *= c;
  const BoundFit scaled = fit_offdiagonal_bound(samples, 0.5, gaussian_lf, false);
  CHECK(scaled.C == doctest::Approx(c * base.C).epsilon(1e-12));
  CHECK(scaled.M == doctest::Approx(base.M).epsilon(1e-9));
}

TEST_CASE("bound fit: held-out margins stay non-negative") {
  const BoundFit fit =
      fit_offdiagonal_bound(gaussian_samples({0.5, 2.0}, 8.0, 80), 0.5, gaussian_lf, false);
  for (const auto& s : gaussian_samples({1.0, 1.5}, 8.0, 80)) {
    if (s.abs_k < 1e-300) continue;
    const double rsharp = gaussian_lf((s.x - s.y) / s.t);
    const double margin =
        std::log(fit.C) - 0.5 * std::log(s.t) - fit.M * s.t * rsharp - std::log(s.abs_k);
    CHECK(margin >= -1e-6);
  }
}

TEST_CASE("Nash constant") {
  const WeightVector m({1});
  std::vector<double> cs;
  for (int n : {256, 512}) {
    const AnisoGrid grid({8.0}, {n});
    const DiscreteOperator ld = laplacian_1d(grid);
    std::vector<Eigen::VectorXcd> family = detail::band_limited_family(grid, 24, 47);
    // localized bump
    Eigen::VectorXcd bump = Eigen::VectorXcd::Zero(ld.size());
    for (long i = 0; i < ld.size(); ++i) {
      const double x = grid.axis_node(0, 1 + static_cast<int>(i));
      if (std::abs(x) < 1.0) bump[i] = std::exp(-1.0 / (1.0 - x * x));
    }
    family.push_back(bump);
    cs.push_back(nash_constant(ld, 0.5, family));
    CHECK(std::isfinite(cs.back()));
    CHECK(cs.back() > 0.0);
    // exact invariance under f -> c f
    const double with_scale = nash_constant(ld, 0.5, {bump, Eigen::VectorXcd(3.0 * bump)});
    CHECK(with_scale == doctest::Approx(nash_constant(ld, 0.5, {bump})).epsilon(1e-12));
  }
  CHECK(std::abs(cs[1] - cs[0]) <= 0.05 * cs[1]);
}

TEST_CASE("Nash ratio is dilation invariant") {
  const WeightVector m({1});
  const AnisoGrid grid({8.0}, {1024});
  const DiscreteOperator ld = laplacian_1d(grid);
  std::vector<double> ratios;
  for (double t : {1.0, 2.0, 4.0}) {
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(ld.size());
    for (long i = 0; i < ld.size(); ++i) {
      const double u = dilate(m, t, (Eigen::VectorXd(1) << grid.axis_node(
                                         0, 1 + static_cast<int>(i))).finished())[0];
      if (std::abs(u) < 1.0) f[i] = std::exp(-1.0 / (1.0 - u * u));
    }
    ratios.push_back(nash_constant(ld, 0.5, {f}));
  }
  for (double r : ratios) CHECK(std::abs(r - ratios[0]) <= 0.03 * ratios[0]);
}

TEST_CASE("Gagliardo-Nirenberg analogue") {
  const WeightVector m({1});
  std::vector<double> cs;
  for (int n : {256, 512}) {
    const AnisoGrid grid({8.0}, {n});
    const DiscreteOperator ld = laplacian_1d(grid);
    const auto family = detail::band_limited_family(grid, 24, 53);
    cs.push_back(gn_check(ld, 0.5, family));
    CHECK(std::isfinite(cs.back()));
  }
  CHECK(std::abs(cs[1] - cs[0]) <= 0.05 * cs[1]);

  // mu >= 1 is outside the lemma's hypothesis
  const AnisoGrid g2({4.0, 4.0}, {8, 8});
  const DiscreteOperator ld2 = assemble_reference(
      {{MultiIndex({1, 0}), MultiIndex({1, 0}), 1.0}, {MultiIndex({0, 1}), MultiIndex({0, 1}), 1.0}},
      g2, WeightVector({1, 1}));
  try {
    gn_check(ld2, 1.0, {});
    CHECK(false);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("requires mu") != std::string::npos);
  }
}

TEST_CASE("ultracontractivity slope") {
  const AnisoGrid grid({14.0}, {112});
  const double slope =
      ultracontractivity_slope(gaussian_symbol(), {0.5, 1.0, 2.0, 4.0}, grid, {256});
  CHECK(std::abs(slope + 0.25) <= 0.005);
  CHECK_THROWS(ultracontractivity_slope(gaussian_symbol(), {1.0}, grid, {256}));
}

TEST_CASE("Hoelder exponent of kernel columns") {
  const AnisoGrid grid({8.0}, {256});
  const DiscreteOperator ld = laplacian_1d(grid);
  const long yc = ld.size() / 2;
  const Eigen::VectorXcd col = kernel_column(ld, 1.0, yc);
  const HolderEstimate est = holder_exponent(col, grid, yc, 0.5);
  CHECK(est.alpha >= 0.15);          // floor (1 - mu)/2 - 0.1
  CHECK(est.alpha >= 0.8);           // smooth kernel saturates near 1
  CHECK(est.alpha <= 1.2);
  CHECK(est.stderr_alpha < 0.2);

  // doubling t does not change the conclusion
  const HolderEstimate est2 = holder_exponent(kernel_column(ld, 2.0, yc), grid, yc, 0.5);
  CHECK(est2.alpha >= 0.15);

  CHECK_THROWS(holder_exponent(col, grid, yc, 1.0));
}

TEST_CASE("hypothesis 3: kappa = 1 reduction and identity case") {
  const AnisoGrid grid({4.0}, {24});
  const DiscreteOperator ld = laplacian_1d(grid);
  const WeightVector m({1});
  const Symbol ref = gaussian_symbol();
  const auto builder = mid_twist(grid, m);

  // sup over f of q/(q + ||f||^2) on a finite grid is lmax/(lmax + 1),
  // approaching the continuum value 1 from below
  const HypothesisReport same =
      verify_hypothesis3(ld, ld, 1, ref, {Eigen::VectorXd::Zero(1)}, builder, 16, 11);
  const double lmax = ld.eig().eigenvalues().maxCoeff();
  CHECK(same.constants.at("C") == doctest::Approx(lmax / (lmax + 1.0)).epsilon(1e-6));
  CHECK(same.constants.at("C") <= 1.0 + 1e-9);
  CHECK(same.accepted);

  CHECK_THROWS(verify_hypothesis3(ld, ld, 2, ref, {Eigen::VectorXd::Zero(1)}, builder));
}
