// Acceptance suite: ten end-to-end criteria, one pass/fail line each.
// Tolerances are pinned here on purpose; loosening them is not an option.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "anikern/estimator.hpp"
#include "anikern/kernel_cc.hpp"
#include "anikern/legendre.hpp"
#include "anikern/operator_vc.hpp"

using namespace anikern;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool passed, const std::string& detail) {
  std::printf("criterion %2d %-28s %s  (%s)\n", number, name.c_str(),
              passed ? "PASS" : "FAIL", detail.c_str());
  if (!passed) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Symbol example_2d() {
  return Symbol(WeightVector({1, 2}),
                {{MultiIndex({2, 0}), {1.0, 0.0}}, {MultiIndex({0, 4}), {1.0, 0.0}}});
}

Symbol gaussian_1d() { return Symbol(WeightVector({1}), {{MultiIndex({2}), {1.0, 0.0}}}); }

CoefficientField::CoeffFn checkerboard(double lo, double hi) {
  return [lo, hi](const Eigen::VectorXd& x) {
    long cell = 0;
    for (long k = 0; k < x.size(); ++k) cell += static_cast<long>(std::floor(x[k]));
    return Complex(((cell % 2 + 2) % 2 == 0) ? lo : hi, 0.0);
  };
}

// 1. Legendre transform of xi_1^2 + xi_2^4 against its closed form.
void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const Symbol s = example_2d();
  const AnisoGrid grid({4.0, 4.0}, {32, 32});  // 33 x 33 nodes
  const auto field = lf_grid(s, grid);
  double worst = 0.0;
  for (long f = 0; f < grid.total_nodes(); ++f) {
    const Eigen::VectorXd x = grid.node(f);
    const double exact =
        (x[0] / 2.0) * (x[0] / 2.0) + 3.0 * std::pow(std::abs(x[1]) / 4.0, 4.0 / 3.0);
    worst = std::max(worst, std::abs(field[static_cast<std::size_t>(f)].value - exact));
  }
  const double dt = seconds_since(t0);
  report(1, "lf closed form", worst <= 1e-6 && dt < 10.0,
         "max abs dev " + std::to_string(worst) + ", " + std::to_string(dt) + " s");
}

// 2. Gaussian kernel ground truth and unit mass.
void criterion_2() {
  const Symbol s = gaussian_1d();
  const AnisoGrid grid({16.0}, {256});
  double worst_rel = 0.0, worst_mass = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    const KernelField k = kernel_cc(s, t, grid, {256});
    const double peak = k.peak();
    for (long f = 0; f < k.values.size(); ++f) {
      const double x = k.grid.node(f)[0];
      const double exact = std::pow(4.0 * M_PI * t, -0.5) * std::exp(-x * x / (4.0 * t));
      if (std::abs(k.values[f]) > 1e-6 * peak)
        worst_rel = std::max(worst_rel, std::abs(k.values[f].real() - exact) / exact);
    }
    worst_mass = std::max(worst_mass, check_mass(k).deviation);
  }
  report(2, "gaussian ground truth", worst_rel <= 1e-8 && worst_mass <= 1e-10,
         "rel " + std::to_string(worst_rel) + ", mass dev " + std::to_string(worst_mass));
}

// 3. Kernel scaling identity on a 256 x 128 frequency grid.
void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  const Symbol s = example_2d();
  const AnisoGrid grid({8.0, 4.0}, {64, 32});
  double worst = 0.0;
  for (double t : {0.25, 4.0})
    worst = std::max(worst, check_scaling_identity(s, t, grid, {256, 128}));
  const double dt = seconds_since(t0);
  report(3, "scaling identity", worst <= 1e-7 && dt < 30.0,
         "max rel dev " + std::to_string(worst) + ", " + std::to_string(dt) + " s");
}

// 4. L^s norm slopes: -mu/2 at s=2 within 2%, zero at s=1 within 0.5%.
void criterion_4() {
  const std::vector<double> times = {0.5, 1.0, 2.0, 4.0};
  const AnisoGrid g1({14.0}, {112});
  const double gauss2 = log_log_slope(norm_profile(gaussian_1d(), 2.0, times, g1, {256}));
  const double gauss1 = log_log_slope(norm_profile(gaussian_1d(), 1.0, times, g1, {256}));
  const AnisoGrid g2({12.0, 6.0}, {64, 32});
  const double aniso2 = log_log_slope(norm_profile(example_2d(), 2.0, times, g2, {128, 64}));
  const bool ok = std::abs(gauss2 + 0.25) <= 0.02 * 0.25 &&
                  std::abs(aniso2 + 0.375) <= 0.02 * 0.375 && std::abs(gauss1) <= 0.005;
  report(4, "norm slopes",
         ok,
         "s=2: " + std::to_string(gauss2) + " / " + std::to_string(aniso2) +
             ", s=1: " + std::to_string(gauss1));
}

// 5. Homogeneous off-diagonal fit without the Mt term.
void criterion_5() {
  const Symbol s = example_2d();
  const AnisoGrid grid({10.0, 5.0}, {64, 32});
  std::vector<KernelSample> samples;
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  for (double t : {0.5, 1.0, 2.0}) {
    const KernelField k = kernel_cc(s, t, grid, {128, 64});
    for (long f = 0; f < k.values.size(); ++f)
      if (std::abs(k.values[f]) > 1e-12)
        samples.push_back({t, k.grid.node(f), y, std::abs(k.values[f])});
  }
  const auto lf = [&s](const Eigen::VectorXd& u) { return lf_point(s, u).value; };
  bool ok = false;
  std::string detail;
  try {
    const BoundFit fit = fit_offdiagonal_bound(samples, 0.75, lf, false);
    ok = fit.M > 0.05 && fit.min_margin >= -1e-12;
    detail = "M " + std::to_string(fit.M) + ", min margin " + std::to_string(fit.min_margin);
  } catch (const std::exception& e) {
    detail = e.what();
  }
  report(5, "homogeneous bound fit", ok, detail);
}

// 6. Variable coefficients, mu < 1: hypotheses, twisted bounds, and the fit.
void criterion_6() {
  const auto t0 = std::chrono::steady_clock::now();
  const WeightVector m({1});
  const AnisoGrid grid({8.0}, {256});
  const CoefficientField cf(m, grid,
                            {{MultiIndex({1}), MultiIndex({1}), checkerboard(0.75, 1.5)}},
                            {{MultiIndex({1}), MultiIndex({1}), 1.0}});
  const DiscreteOperator hd = assemble(cf);
  const DiscreteOperator ld =
      assemble_reference({{MultiIndex({1}), MultiIndex({1}), 1.0}}, grid, m);
  const Symbol ref = reference_symbol(cf.reference(), m, true);

  const HypothesisReport h1 = verify_hypothesis1(hd, ld, lower_shift(hd));
  bool ok = h1.constants.at("c_low") >= 0.5 - 1e-9;
  std::string detail = "c_low " + std::to_string(h1.constants.at("c_low"));

  Eigen::VectorXd ax(1), ay(1);
  ax << -4.0;
  ay << 4.0;
  const auto builder = [&](const Eigen::VectorXd&) { return make_twist(ax, ay, grid, m); };
  std::vector<Eigen::VectorXd> lams;
  for (double v : {-2.0, -1.0, 1.0, 2.0}) {
    Eigen::VectorXd l(1);
    l << v;
    lams.push_back(l);
  }
  const HypothesisReport h2 = verify_hypothesis2(hd, ref, lams, builder, 48, 1);
  const double m_fit = h2.constants.at("M");
  ok = ok && h2.accepted && std::isfinite(m_fit);
  detail += ", M " + std::to_string(m_fit);

  double worst_slack = std::numeric_limits<double>::infinity();
  for (const auto& lam : lams) {
    const DiscreteOperator ht = twist(hd, builder(lam).with_lambda(lam));
    worst_slack = std::min(worst_slack, check_twisted_sg_norm(ht, m_fit, ref.eval_real(lam),
                                                              {0.01, 0.1, 1.0}));
  }
  ok = ok && worst_slack >= -1e-9;
  detail += ", slack " + std::to_string(worst_slack);

  std::vector<KernelSample> samples;
  const long yc = hd.size() / 2;
  Eigen::VectorXd y(1);
  y << grid.axis_node(0, 1 + static_cast<int>(yc));
  for (double t : {0.05, 0.2, 1.0}) {
    const Eigen::VectorXcd col = kernel_column(hd, t, yc);
    for (long i = 0; i < col.size(); ++i) {
      Eigen::VectorXd x(1);
      x << grid.axis_node(0, 1 + static_cast<int>(i));
      samples.push_back({t, x, y, std::abs(col[i])});
    }
  }
  const auto lf = [&ref](const Eigen::VectorXd& u) { return lf_point(ref, u).value; };
  try {
    const BoundFit fit = fit_offdiagonal_bound(samples, 0.5, lf, true);
    ok = ok && fit.min_margin >= -1e-12;
    detail += ", vc M " + std::to_string(fit.M);
  } catch (const std::exception& e) {
    ok = false;
    detail += std::string(", fit error: ") + e.what();
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < 300.0;
  report(6, "variable coefficients", ok, detail + ", " + std::to_string(dt) + " s");
}

// 7. kappa = 2 path: smooth lower-order terms over a constant principal part.
void criterion_7() {
  const auto t0 = std::chrono::steady_clock::now();
  const WeightVector m({1, 1});
  const AnisoGrid grid({4.0, 4.0}, {24, 24});
  const auto smooth = [](const Eigen::VectorXd& x) {
    return Complex(0.5 + 0.25 * std::cos(x[0]) * std::cos(x[1]), 0.0);
  };
  const std::vector<CoefficientField::ReferencePair> ref_pairs = {
      {MultiIndex({1, 0}), MultiIndex({1, 0}), 1.0},
      {MultiIndex({0, 1}), MultiIndex({0, 1}), 1.0}};
  std::vector<CoefficientField::Pair> pairs;
  for (const auto& r : ref_pairs)
    pairs.push_back({r.alpha, r.beta, [](const Eigen::VectorXd&) { return Complex(1.0, 0.0); }});
  pairs.push_back({MultiIndex({0, 0}), MultiIndex({0, 0}), smooth});
  const CoefficientField cf(m, grid, pairs, ref_pairs);
  const DiscreteOperator hd = assemble(cf);
  const DiscreteOperator ld = assemble_reference(ref_pairs, grid, m);
  const Symbol ref = reference_symbol(ref_pairs, m, true);

  Eigen::VectorXd ax(2), ay(2);
  ax << -2.0, -2.0;
  ay << 2.0, 2.0;
  const auto builder = [&](const Eigen::VectorXd&) { return make_twist(ax, ay, grid, m); };
  std::vector<Eigen::VectorXd> lams;
  for (auto [a, b] : {std::pair{0.5, 0.0}, std::pair{0.0, 0.5}, std::pair{0.5, 0.5}}) {
    Eigen::VectorXd l(2);
    l << a, b;
    lams.push_back(l);
  }
  bool ok = false;
  std::string detail;
  try {
    const HypothesisReport h3 = verify_hypothesis3(hd, ld, 2, ref, lams, builder, 48, 2);
    ok = h3.accepted && std::isfinite(h3.constants.at("C"));
    detail = "C " + std::to_string(h3.constants.at("C"));
  } catch (const std::exception& e) {
    detail = e.what();
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < 600.0;
  report(7, "kappa=2 hypothesis", ok, detail + ", " + std::to_string(dt) + " s");
}

// 8. Nash and Gagliardo-Nirenberg stability, plus dilation-family invariance.
void criterion_8() {
  const WeightVector m({1});
  std::vector<double> nash, gn;
  for (int n : {256, 512}) {
    const AnisoGrid grid({8.0}, {n});
    const DiscreteOperator ld =
        assemble_reference({{MultiIndex({1}), MultiIndex({1}), 1.0}}, grid, m);
    auto family = detail::band_limited_family(grid, 32, 3);
    Eigen::VectorXcd bump = Eigen::VectorXcd::Zero(ld.size());
    for (long i = 0; i < ld.size(); ++i) {
      const double x = grid.axis_node(0, 1 + static_cast<int>(i));
      if (std::abs(x) < 1.0) bump[i] = std::exp(-1.0 / (1.0 - x * x));
    }
    family.push_back(bump);
    nash.push_back(nash_constant(ld, 0.5, family));
    gn.push_back(gn_check(ld, 0.5, family));
  }
  const bool stable = std::abs(nash[1] - nash[0]) <= 0.05 * nash[1] &&
                      std::abs(gn[1] - gn[0]) <= 0.05 * gn[1];

  const AnisoGrid grid({8.0}, {1024});
  const DiscreteOperator ld =
      assemble_reference({{MultiIndex({1}), MultiIndex({1}), 1.0}}, grid, m);
  std::vector<double> ratios;
  for (double t : {1.0, 2.0, 4.0}) {
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(ld.size());
    for (long i = 0; i < ld.size(); ++i) {
      const double u =
          std::sqrt(t) * grid.axis_node(0, 1 + static_cast<int>(i));
      if (std::abs(u) < 1.0) f[i] = std::exp(-1.0 / (1.0 - u * u));
    }
    ratios.push_back(nash_constant(ld, 0.5, {f}));
  }
  bool invariant = true;
  for (double r : ratios) invariant = invariant && std::abs(r - ratios[0]) <= 0.03 * ratios[0];

  report(8, "nash / GN stability", stable && invariant,
         "nash " + std::to_string(nash[1]) + ", gn " + std::to_string(gn[1]) + ", ratio spread " +
             std::to_string(std::abs(ratios[2] - ratios[0]) / ratios[0]));
}

// 9. Appendix suite: Fenchel-Young, LF homogeneity, majorants, comparability.
void criterion_9() {
  const Symbol s = example_2d();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ux(-5.0, 5.0), uxi(-3.0, 3.0), ut(0.25, 16.0);

  bool fy_ok = true;
  for (int i = 0; i < 10000; ++i) {
    Eigen::VectorXd x(2), xi(2);
    x << ux(rng), ux(rng);
    xi << uxi(rng), uxi(rng);
    const double rsharp =
        (x[0] / 2.0) * (x[0] / 2.0) + 3.0 * std::pow(std::abs(x[1]) / 4.0, 4.0 / 3.0);
    fy_ok = fy_ok && (x.dot(xi) <= s.eval_real(xi) + rsharp + 1e-9);
  }

  std::vector<std::pair<double, Eigen::VectorXd>> samples;
  for (int i = 0; i < 25; ++i) {
    Eigen::VectorXd x(2);
    x << ux(rng), ux(rng);
    samples.emplace_back(ut(rng), x);
  }
  const double lf_dev = check_lf_homogeneity(s, samples);

  bool maj_ok = true;
  const double m10 = scaling_majorant(MultiIndex({1, 0}), s, 1.0, 1);
  const double m01 = scaling_majorant(MultiIndex({0, 1}), s, 0.1, 1);
  std::uniform_real_distribution<double> uw(-50.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    Eigen::VectorXd xi(2);
    xi << uw(rng), uw(rng);
    maj_ok = maj_ok && std::abs(xi[0]) <= 1.0 * s.eval_real(xi) + m10 + 1e-9;
    maj_ok = maj_ok && std::abs(xi[1]) <= 0.1 * s.eval_real(xi) + m01 + 1e-9;
  }

  const Symbol s5(WeightVector({1, 2}),
                  {{MultiIndex({2, 0}), {5.0, 0.0}}, {MultiIndex({0, 4}), {5.0, 0.0}}});
  const auto lf_r = [&](const Eigen::VectorXd& x) { return lf_point(s, x).value; };
  const auto lf_5r = [&](const Eigen::VectorXd& x) { return lf_point(s5, x).value; };
  const ComparabilityReport cmp =
      comparability_constants(lf_r, lf_5r, WeightVector({1, 2}), 2000);
  const bool cmp_ok = cmp.constant_c > 0.0 && std::isfinite(cmp.constant_C);

  report(9, "appendix suite", fy_ok && lf_dev <= 1e-8 && maj_ok && cmp_ok,
         "lf hom dev " + std::to_string(lf_dev) + ", comparability [" +
             std::to_string(cmp.constant_c) + ", " + std::to_string(cmp.constant_C) + "]");
}

// 10. Discrete kernel column vs the continuum constant-coefficient kernel.
void criterion_10() {
  const WeightVector m({1});
  const AnisoGrid grid({8.0}, {256});
  const DiscreteOperator ld =
      assemble_reference({{MultiIndex({1}), MultiIndex({1}), 1.0}}, grid, m);
  const long yc = ld.size() / 2;
  const double yx = grid.axis_node(0, 1 + static_cast<int>(yc));
  const Eigen::VectorXcd col = kernel_column(ld, 1.0, yc);

  const KernelField cc = kernel_cc(gaussian_1d(), 1.0, grid, {256});
  double worst = 0.0;
  int compared = 0;
  const double peak = cc.peak();
  for (long i = 0; i < col.size(); ++i) {
    const double x = grid.axis_node(0, 1 + static_cast<int>(i));
    if (std::abs(x) > 0.5 * grid.radius(0)) continue;  // stay 25% of the box off the boundary
    // translate: K_cc(x - y)
    const double u = x - yx;
    const double exact = std::pow(4.0 * M_PI, -0.5) * std::exp(-u * u / 4.0);
    if (exact < 1e-3 * peak) continue;
    worst = std::max(worst, std::abs(col[i].real() - exact) / exact);
    ++compared;
  }
  report(10, "cross-module kernel", worst <= 0.02 && compared > 50,
         "max rel dev " + std::to_string(worst) + " over " + std::to_string(compared) +
             " nodes");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  if (g_failures > 0) std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
