// anikern: experiment runner for anisotropic heat-kernel computations and
// bound verification. One JSON config per invocation; JSON/CSV artifacts.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "anikern/estimator.hpp"
#include "anikern/kernel_cc.hpp"
#include "anikern/legendre.hpp"
#include "anikern/operator_vc.hpp"
#include "anikern/symbol.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace anikern;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitConfigError = 2;

struct ExperimentConfig {
  std::optional<json> symbol_json;
  std::optional<std::string> coefficients_path;
  std::optional<json> grid_json;
  std::vector<int> freq_counts;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> lambdas;
  std::optional<int> kappa;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::vector<std::string> checks;
  fs::path base_dir;  // directory of the config file, for relative refs
};

const std::set<std::string>& check_registry() {
  static const std::set<std::string> reg = {
      "symbol_check", "lf_oracle",       "kernel_csv",         "mass",
      "scaling_identity", "norm_slopes", "bound_fit",          "hyp1",
      "hyp2",         "hyp3",            "twisted_sg_norm",    "twisted_form_lower",
      "vc_bound_fit"};
  return reg;
}

// fixed execution order: kernels before fits, H1/H2 before twisted checks
const std::vector<std::string>& check_order() {
  static const std::vector<std::string> order = {
      "symbol_check", "lf_oracle",       "kernel_csv",         "mass",
      "scaling_identity", "norm_slopes", "bound_fit",          "hyp1",
      "hyp2",         "twisted_sg_norm", "twisted_form_lower", "hyp3",
      "vc_bound_fit"};
  return order;
}

std::optional<ExperimentConfig> parse_config(const std::string& path,
                                             std::vector<std::string>& errors) {
  std::ifstream in(path);
  if (!in) {
    errors.push_back("cannot open config file: " + path);
    return std::nullopt;
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    errors.push_back(std::string("config is not valid JSON: ") + e.what());
    return std::nullopt;
  }

  ExperimentConfig cfg;
  cfg.base_dir = fs::absolute(path).parent_path();
  try {
    if (j.contains("symbol")) cfg.symbol_json = j["symbol"];
    if (j.contains("coefficients")) {
      if (j["coefficients"].is_string())
        cfg.coefficients_path = j["coefficients"].get<std::string>();
      else
        cfg.coefficients_path = j["coefficients"].at("path").get<std::string>();
    }
    if (j.contains("grid")) cfg.grid_json = j["grid"];
    if (j.contains("freq_counts")) cfg.freq_counts = j["freq_counts"].get<std::vector<int>>();
    if (j.contains("times")) cfg.times = j["times"].get<std::vector<double>>();
    if (j.contains("lambdas")) {
      for (const auto& l : j["lambdas"]) {
        std::vector<double> v;
        if (l.is_number())
          v.push_back(l.get<double>());
        else
          v = l.get<std::vector<double>>();
        cfg.lambdas.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<long>(v.size())));
      }
    }
    if (j.contains("kappa")) cfg.kappa = j["kappa"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("checks")) cfg.checks = j["checks"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    errors.push_back(std::string("config field error: ") + e.what());
    return std::nullopt;
  }
  return cfg;
}

std::string canonical_check(const std::string& name) {
  if (name == "scaling") return "scaling_identity";
  if (name == "lf") return "lf_oracle";
  return name;
}

struct CoefficientSpec {
  WeightVector m;
  AnisoGrid grid;
  std::vector<CoefficientField::Pair> pairs;
  std::vector<CoefficientField::ReferencePair> reference;
};

CoefficientField::CoeffFn parse_coeff_values(const json& v) {
  if (v.is_number()) {
    const double c = v.get<double>();
    return [c](const Eigen::VectorXd&) { return Complex(c, 0.0); };
  }
  if (v.is_object() && v.contains("re")) {
    const Complex c(v.value("re", 0.0), v.value("im", 0.0));
    return [c](const Eigen::VectorXd&) { return c; };
  }
  if (v.is_object() && v.value("type", "") == "checkerboard") {
    const double lo = v.at("low").get<double>();
    const double hi = v.at("high").get<double>();
    const double period = v.value("period", 1.0);
    return [lo, hi, period](const Eigen::VectorXd& x) {
      long cell = 0;
      for (long k = 0; k < x.size(); ++k)
        cell += static_cast<long>(std::floor(x[k] / period));
      return Complex(((cell % 2 + 2) % 2 == 0) ? lo : hi, 0.0);
    };
  }
  if (v.is_object() && v.value("type", "") == "cosine") {
    // a(x) = base + amp * prod_k cos(freq * x_k)
    const double base = v.at("base").get<double>();
    const double amp = v.at("amp").get<double>();
    const double freq = v.value("freq", 1.0);
    return [base, amp, freq](const Eigen::VectorXd& x) {
      double prod = 1.0;
      for (long k = 0; k < x.size(); ++k) prod *= std::cos(freq * x[k]);
      return Complex(base + amp * prod, 0.0);
    };
  }
  throw std::runtime_error("coefficients: unsupported \"values\" entry");
}

CoefficientSpec load_coefficients(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open coefficient file: " + path.string());
  json j;
  in >> j;
  WeightVector m(j.at("m").get<std::vector<int>>());
  AnisoGrid grid = AnisoGrid::from_json(j.at("grid"));
  std::vector<CoefficientField::Pair> pairs;
  for (const auto& p : j.at("pairs")) {
    pairs.push_back({MultiIndex(p.at("alpha").get<std::vector<int>>()),
                     MultiIndex(p.at("beta").get<std::vector<int>>()),
                     parse_coeff_values(p.at("values"))});
  }
  std::vector<CoefficientField::ReferencePair> reference;
  for (const auto& r : j.at("reference")) {
    reference.push_back({MultiIndex(r.at("alpha").get<std::vector<int>>()),
                         MultiIndex(r.at("beta").get<std::vector<int>>()),
                         r.at("value").get<double>()});
  }
  return CoefficientSpec{std::move(m), std::move(grid), std::move(pairs), std::move(reference)};
}

long interior_center(const AnisoGrid& grid) {
  long flat = 0;
  for (int k = 0; k < grid.dim(); ++k)
    flat = flat * (grid.count(k) - 1) + (grid.count(k) / 2 - 1);
  return flat;
}

Eigen::VectorXd interior_node_of(const AnisoGrid& grid, long flat) {
  Eigen::VectorXd x(grid.dim());
  for (int k = grid.dim() - 1; k >= 0; --k) {
    const int n = grid.count(k) - 1;
    x[k] = grid.axis_node(k, 1 + static_cast<int>(flat % n));
    flat /= n;
  }
  return x;
}

template <typename Fn>
void parallel_for(long n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next(0);
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<long>(jobs, n));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

// Everything lazily shared between checks of one run.
struct RunContext {
  const ExperimentConfig& cfg;
  int jobs;
  fs::path out;

  std::optional<Symbol> symbol;
  std::optional<AnisoGrid> grid;
  std::map<double, KernelField> kernels;

  std::optional<CoefficientSpec> cspec;
  std::optional<CoefficientField> coeffs;
  std::optional<DiscreteOperator> hd;
  std::optional<DiscreteOperator> ld;
  std::optional<Symbol> ref_symbol;
  double shift = 0.0;
  double hyp2_m = std::numeric_limits<double>::quiet_NaN();

  const Symbol& get_symbol() {
    if (!symbol) {
      if (!cfg.symbol_json) throw std::runtime_error("this check requires a \"symbol\" entry");
      symbol = Symbol::from_json(*cfg.symbol_json);
    }
    return *symbol;
  }

  const AnisoGrid& get_grid() {
    if (!grid) {
      if (!cfg.grid_json) throw std::runtime_error("this check requires a \"grid\" entry");
      grid = AnisoGrid::from_json(*cfg.grid_json);
    }
    return *grid;
  }

  std::vector<int> get_freq_counts() {
    if (!cfg.freq_counts.empty()) return cfg.freq_counts;
    std::vector<int> fc(static_cast<std::size_t>(get_grid().dim()), 128);
    return fc;
  }

  const KernelField& kernel_at(double t) {
    const auto it = kernels.find(t);
    if (it != kernels.end()) return it->second;
    return kernels.emplace(t, kernel_cc(get_symbol(), t, get_grid(), get_freq_counts()))
        .first->second;
  }

  void precompute_kernels() {
    std::vector<double> missing;
    for (double t : cfg.times)
      if (!kernels.count(t)) missing.push_back(t);
    std::vector<std::optional<KernelField>> done(missing.size());
    parallel_for(static_cast<long>(missing.size()), jobs, [&](long i) {
      done[static_cast<std::size_t>(i)] =
          kernel_cc(get_symbol(), missing[static_cast<std::size_t>(i)], get_grid(),
                    get_freq_counts());
    });
    for (std::size_t i = 0; i < missing.size(); ++i)
      kernels.emplace(missing[i], std::move(*done[i]));
  }

  void require_operators() {
    if (hd) return;
    if (!cfg.coefficients_path)
      throw std::runtime_error("this check requires a \"coefficients\" entry");
    cspec = load_coefficients(cfg.base_dir / *cfg.coefficients_path);
    coeffs.emplace(cspec->m, cspec->grid, cspec->pairs, cspec->reference);
    hd = assemble(*coeffs);
    ld = assemble_reference(cspec->reference, cspec->grid, cspec->m);
    ref_symbol = reference_symbol(cspec->reference, cspec->m, true);
    shift = lower_shift(*hd);
  }

  std::function<TwistMap(const Eigen::VectorXd&)> twist_builder() {
    require_operators();
    const AnisoGrid& g = hd->grid();
    Eigen::VectorXd x(g.dim()), y(g.dim());
    for (int k = 0; k < g.dim(); ++k) {
      x[k] = -g.radius(k) / 2.0;
      y[k] = g.radius(k) / 2.0;
    }
    const WeightVector m = hd->weights();
    const AnisoGrid gc = g;
    return [m, gc, x, y](const Eigen::VectorXd&) { return make_twist(x, y, gc, m); };
  }

  void write_json(const std::string& name, json j) {
    j["seed"] = cfg.seed;
    if (symbol) j["symbol_hash"] = symbol->hash();
    if (grid) j["grid"] = grid->to_json();
    std::ofstream f(out / name);
    f << j.dump(2) << "\n";
  }
};

struct CheckResult {
  bool passed = false;
  json report;
};

CheckResult run_check(const std::string& name, RunContext& ctx) {
  CheckResult res;
  res.report["check"] = name;
  const std::vector<double>& times = ctx.cfg.times;

  if (name == "symbol_check") {
    const Symbol& s = ctx.get_symbol();
    std::mt19937_64 rng(ctx.cfg.seed);
    std::uniform_real_distribution<double> ut(0.1, 10.0), ux(-3.0, 3.0);
    std::vector<std::pair<double, Eigen::VectorXd>> samples;
    for (int i = 0; i < 200; ++i) {
      Eigen::VectorXd xi(s.dim());
      for (int k = 0; k < s.dim(); ++k) xi[k] = ux(rng);
      samples.emplace_back(ut(rng), xi);
    }
    const double dev = check_homogeneity(s, samples);
    const auto [min_val, witness] = check_positive_definite(s, s.default_sphere_samples());
    res.report["homogeneity_deviation"] = dev;
    res.report["sphere_min"] = min_val;
    res.report["mu"] = s.weights().mu().to_double();
    res.report["kappa"] = s.weights().kappa();
    res.passed = dev <= 1e-10 && min_val > 0.0;
  } else if (name == "lf_oracle") {
    const Symbol& s = ctx.get_symbol();
    const AnisoGrid& g = ctx.get_grid();
    const auto field = lf_grid(s, g);
    write_lf_csv(s, g, field, (ctx.out / "lf.csv").string());
    std::mt19937_64 rng(ctx.cfg.seed + 1);
    std::uniform_real_distribution<double> ut(0.25, 4.0), ux(-2.0, 2.0);
    std::vector<std::pair<double, Eigen::VectorXd>> samples;
    for (int i = 0; i < 20; ++i) {
      Eigen::VectorXd x(s.dim());
      for (int k = 0; k < s.dim(); ++k) x[k] = ux(rng);
      samples.emplace_back(ut(rng), x);
    }
    const double dev = check_lf_homogeneity(s, samples);
    long converged = 0;
    bool finite = true;
    for (const auto& r : field) {
      converged += r.status == LFStatus::converged;
      finite = finite && std::isfinite(r.value);
    }
    res.report["homogeneity_deviation"] = dev;
    res.report["converged"] = converged;
    res.report["total"] = static_cast<long>(field.size());
    res.passed = finite && dev <= 1e-8;
  } else if (name == "kernel_csv") {
    ctx.precompute_kernels();
    for (double t : times) {
      std::string tag = std::to_string(t);
      std::replace(tag.begin(), tag.end(), '.', 'p');
      write_kernel_csv(ctx.kernel_at(t), (ctx.out / ("kernel_t" + tag + ".csv")).string());
    }
    res.report["files"] = times.size();
    res.passed = !times.empty();
  } else if (name == "mass") {
    ctx.precompute_kernels();
    double worst = 0.0;
    bool covered = true;
    for (double t : times) {
      const MassReport rep = check_mass(ctx.kernel_at(t));
      worst = std::max(worst, rep.deviation);
      covered = covered && rep.support_covered;
      res.report["per_time"][std::to_string(t)] = rep.deviation;
    }
    res.report["worst_deviation"] = worst;
    res.report["support_covered"] = covered;
    res.passed = covered && worst <= 1e-6 && !times.empty();
  } else if (name == "scaling_identity") {
    double worst = 0.0;
    std::ofstream csv(ctx.out / "scaling.csv");
    csv << "t,deviation\n";
    csv.precision(17);
    for (double t : times) {
      const double dev = check_scaling_identity(ctx.get_symbol(), t, ctx.get_grid(),
                                                ctx.get_freq_counts());
      worst = std::max(worst, dev);
      csv << t << "," << dev << "\n";
    }
    res.report["worst_deviation"] = worst;
    res.passed = worst <= 1e-6 && !times.empty();
  } else if (name == "norm_slopes") {
    if (times.size() < 2) throw std::runtime_error("norm_slopes: need at least two times");
    const double mu = ctx.get_symbol().weights().mu().to_double();
    const double s2 =
        ultracontractivity_slope(ctx.get_symbol(), times, ctx.get_grid(), ctx.get_freq_counts());
    const double s1 =
        log_log_slope(norm_profile(ctx.get_symbol(), 1.0, times, ctx.get_grid(),
                                   ctx.get_freq_counts()));
    res.report["slope_l2"] = s2;
    res.report["slope_l1"] = s1;
    res.report["expected_l2"] = -mu / 2.0;
    res.passed = std::abs(s2 + mu / 2.0) <= 0.02 * (mu / 2.0) && std::abs(s1) <= 0.005;
  } else if (name == "bound_fit") {
    ctx.precompute_kernels();
    const Symbol& s = ctx.get_symbol();
    const double mu = s.weights().mu().to_double();
    std::vector<KernelSample> samples;
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(s.dim());
    for (double t : times) {
      const KernelField& k = ctx.kernel_at(t);
      for (long f = 0; f < k.values.size(); ++f)
        samples.push_back({t, k.grid.node(f), y, std::abs(k.values[f])});
    }
    const auto lf = [&s](const Eigen::VectorXd& u) { return lf_point(s, u).value; };
    const BoundFit fit = fit_offdiagonal_bound(samples, mu, lf, false);
    write_margin_csv(fit, (ctx.out / "bound_fit_margins.csv").string());
    res.report["C"] = fit.C;
    res.report["M"] = fit.M;
    res.report["n_points"] = fit.n_points;
    res.report["min_margin"] = fit.min_margin;
    res.report["includes_Mt_term"] = fit.includes_Mt_term;
    res.passed = std::isfinite(fit.M) && fit.min_margin >= -1e-12;
  } else if (name == "hyp1") {
    ctx.require_operators();
    const HypothesisReport rep = verify_hypothesis1(*ctx.hd, *ctx.ld, ctx.shift);
    res.report["c_low"] = rep.constants.at("c_low");
    res.report["C_high"] = rep.constants.at("C_high");
    res.report["shift"] = ctx.shift;
    res.passed = rep.accepted;
  } else if (name == "hyp2") {
    ctx.require_operators();
    if (ctx.cfg.lambdas.empty()) throw std::runtime_error("hyp2: config has no lambdas");
    const HypothesisReport rep = verify_hypothesis2(*ctx.hd, *ctx.ref_symbol, ctx.cfg.lambdas,
                                                    ctx.twist_builder(), 64, ctx.cfg.seed);
    ctx.hyp2_m = rep.constants.at("M");
    res.report["M"] = ctx.hyp2_m;
    res.report["worst_lambda"] = rep.worst_case;
    res.passed = rep.accepted && std::isfinite(ctx.hyp2_m);
  } else if (name == "twisted_sg_norm" || name == "twisted_form_lower") {
    ctx.require_operators();
    if (ctx.cfg.lambdas.empty()) throw std::runtime_error(name + ": config has no lambdas");
    if (!std::isfinite(ctx.hyp2_m)) {
      const HypothesisReport rep = verify_hypothesis2(*ctx.hd, *ctx.ref_symbol, ctx.cfg.lambdas,
                                                      ctx.twist_builder(), 64, ctx.cfg.seed);
      ctx.hyp2_m = rep.constants.at("M");
    }
    const auto builder = ctx.twist_builder();
    double worst = std::numeric_limits<double>::infinity();
    bool all_ok = true;
    for (const auto& lam : ctx.cfg.lambdas) {
      const double r_lam = ctx.ref_symbol->eval_real(lam);
      const DiscreteOperator ht = twist(*ctx.hd, builder(lam).with_lambda(lam));
      if (name == "twisted_sg_norm") {
        if (times.empty()) throw std::runtime_error("twisted_sg_norm: config has no times");
        const double slack = check_twisted_sg_norm(ht, ctx.hyp2_m, r_lam, times);
        worst = std::min(worst, slack);
        all_ok = all_ok && slack >= -1e-9;
      } else {
        const double ratio = check_twisted_form_lower(ht, ctx.hyp2_m, r_lam);
        worst = std::min(worst, -ratio);
        all_ok = all_ok && ratio <= 1.0 + 1e-9;
      }
    }
    res.report[name == "twisted_sg_norm" ? "min_slack" : "worst_neg_ratio"] = worst;
    res.report["M"] = ctx.hyp2_m;
    res.passed = all_ok;
  } else if (name == "hyp3") {
    ctx.require_operators();
    if (ctx.cfg.lambdas.empty()) throw std::runtime_error("hyp3: config has no lambdas");
    const int kappa = ctx.cfg.kappa.value_or(ctx.hd->weights().kappa());
    const HypothesisReport rep =
        verify_hypothesis3(*ctx.hd, *ctx.ld, kappa, *ctx.ref_symbol, ctx.cfg.lambdas,
                           ctx.twist_builder(), 64, ctx.cfg.seed);
    res.report["C"] = rep.constants.at("C");
    res.report["kappa"] = kappa;
    res.passed = rep.accepted;
  } else if (name == "vc_bound_fit") {
    ctx.require_operators();
    if (times.empty()) throw std::runtime_error("vc_bound_fit: config has no times");
    const AnisoGrid& g = ctx.hd->grid();
    const long yc = interior_center(g);
    const Eigen::VectorXd y = interior_node_of(g, yc);
    const double mu = ctx.hd->weights().mu().to_double();
    std::vector<KernelSample> samples;
    std::ofstream csv(ctx.out / "vc_columns.csv");
    csv << "t,flat,absK\n";
    csv.precision(17);
    for (double t : times) {
      const Eigen::VectorXcd col = kernel_column(*ctx.hd, t, yc);
      for (long f = 0; f < col.size(); ++f) {
        samples.push_back({t, interior_node_of(g, f), y, std::abs(col[f])});
        csv << t << "," << f << "," << std::abs(col[f]) << "\n";
      }
    }
    const Symbol& rs = *ctx.ref_symbol;
    const auto lf = [&rs](const Eigen::VectorXd& u) { return lf_point(rs, u).value; };
    const BoundFit fit = fit_offdiagonal_bound(samples, mu, lf, true);
    write_margin_csv(fit, (ctx.out / "vc_bound_fit_margins.csv").string());
    res.report["C"] = fit.C;
    res.report["M"] = fit.M;
    res.report["min_margin"] = fit.min_margin;
    res.passed = std::isfinite(fit.M) && fit.min_margin >= -1e-12;
  } else {
    throw std::runtime_error("unknown check: " + name);
  }
  return res;
}

std::vector<std::string> validate_semantics(const ExperimentConfig& cfg) {
  std::vector<std::string> errors;
  if (cfg.symbol_json) {
    try {
      Symbol::from_json(*cfg.symbol_json);
    } catch (const std::exception& e) {
      errors.push_back(std::string("symbol: ") + e.what());
    }
  }
  if (cfg.grid_json) {
    try {
      AnisoGrid::from_json(*cfg.grid_json);
    } catch (const std::exception& e) {
      errors.push_back(std::string("grid: ") + e.what());
    }
  }
  if (cfg.coefficients_path) {
    const fs::path p = cfg.base_dir / *cfg.coefficients_path;
    if (!fs::exists(p))
      errors.push_back("coefficients: file not found: " + p.string());
  }
  for (double t : cfg.times)
    if (!(t > 0.0)) errors.push_back("times: entries must be positive");
  for (const auto& name : cfg.checks)
    if (!check_registry().count(canonical_check(name)))
      errors.push_back("checks: unknown check \"" + name + "\"");
  return errors;
}

int cmd_validate(const ExperimentConfig& cfg, const std::vector<std::string>& parse_errors) {
  json out;
  std::vector<std::string> errors = parse_errors;
  const auto sem = validate_semantics(cfg);
  errors.insert(errors.end(), sem.begin(), sem.end());
  out["errors"] = errors;
  out["valid"] = errors.empty();
  if (errors.empty() && cfg.symbol_json) {
    const Symbol s = Symbol::from_json(*cfg.symbol_json);
    out["mu"] = s.weights().mu().to_double();
    out["kappa"] = s.weights().kappa();
    if (cfg.grid_json && !cfg.freq_counts.empty() && !cfg.times.empty()) {
      const AnisoGrid g = AnisoGrid::from_json(*cfg.grid_json);
      json nyq = json::array();
      for (double t : cfg.times) {
        const auto box = frequency_box(s, t);
        json per_t;
        per_t["t"] = t;
        bool ok = true;
        for (int k = 0; k < g.dim(); ++k) {
          const double dxi = 2.0 * box[static_cast<std::size_t>(k)] /
                             cfg.freq_counts[static_cast<std::size_t>(k)];
          ok = ok && dxi <= M_PI / g.radius(k);
        }
        per_t["nyquist_ok"] = ok;
        nyq.push_back(per_t);
      }
      out["nyquist"] = nyq;
    }
  }
  std::cout << out.dump(2) << "\n";
  return errors.empty() ? kExitPass : kExitConfigError;
}

int run_checks(const ExperimentConfig& cfg, const std::vector<std::string>& selected, int jobs,
               const std::string& out_override) {
  const auto errors = validate_semantics(cfg);
  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
    return kExitConfigError;
  }

  std::set<std::string> wanted;
  for (const auto& name : (cfg.checks.empty() ? selected : cfg.checks)) {
    const std::string canon = canonical_check(name);
    if (!check_registry().count(canon)) {
      std::cerr << "config error: unknown check \"" << name << "\"\n";
      return kExitConfigError;
    }
    wanted.insert(canon);
  }
  if (!cfg.checks.empty()) {
    // a subcommand narrows config checks to its own scope when both are given
    std::set<std::string> scope(selected.begin(), selected.end());
    std::set<std::string> narrowed;
    for (const auto& c : wanted)
      if (scope.count(c)) narrowed.insert(c);
    if (!narrowed.empty()) wanted = narrowed;
  }

  RunContext ctx{cfg, jobs,
                 fs::path(out_override.empty() ? cfg.output_dir : out_override)};
  fs::create_directories(ctx.out);

  json summary;
  summary["seed"] = cfg.seed;
  bool all_passed = true;
  bool any_error = false;
  for (const auto& name : check_order()) {
    if (!wanted.count(name)) continue;
    json entry;
    try {
      CheckResult res = run_check(name, ctx);
      entry = res.report;
      entry["status"] = res.passed ? "pass" : "fail";
      all_passed = all_passed && res.passed;
      std::cout << name << ": " << (res.passed ? "pass" : "fail") << "\n";
      ctx.write_json(name + ".json", res.report);
    } catch (const std::exception& e) {
      entry["status"] = "error";
      entry["message"] = e.what();
      any_error = true;
      std::cout << name << ": error (" << e.what() << ")\n";
    }
    summary["checks"][name] = entry;
  }
  ctx.write_json("summary.json", summary);
  return (all_passed && !any_error) ? kExitPass : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* mode = std::getenv("ANIKERN_FLOAT_MODE")) {
    const std::string m(mode);
    if (m != "strict" && m != "fast") {
      std::cerr << "config error: ANIKERN_FLOAT_MODE must be \"strict\" or \"fast\"\n";
      return kExitConfigError;
    }
  }

  CLI::App app{"anisotropic heat kernel computations and bound verification"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::int64_t seed_override = -1;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--jobs", jobs, "worker count");
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--out", out_dir, "override the output directory");
  };

  std::map<std::string, std::vector<std::string>> defaults = {
      {"symbol-check", {"symbol_check"}},
      {"lf", {"lf_oracle"}},
      {"kernel", {"kernel_csv", "mass", "scaling_identity", "norm_slopes"}},
      {"fit-bound", {"bound_fit"}},
      {"vc-run", {"hyp1", "vc_bound_fit"}},
      {"hyp", {"hyp1", "hyp2", "twisted_sg_norm", "twisted_form_lower", "hyp3"}},
  };
  for (const auto& [name, checks] : defaults) add_common(app.add_subcommand(name));
  add_common(app.add_subcommand("validate", "check a config without running anything"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfigError;
  }

  std::vector<std::string> parse_errors;
  auto cfg = parse_config(config_path, parse_errors);
  const std::string sub = app.get_subcommands().front()->get_name();

  if (sub == "validate") {
    if (!cfg) {
      ExperimentConfig empty;
      return cmd_validate(empty, parse_errors);
    }
    return cmd_validate(*cfg, parse_errors);
  }

  if (!cfg) {
    for (const auto& e : parse_errors) std::cerr << "config error: " << e << "\n";
    return kExitConfigError;
  }
  if (seed_override >= 0) cfg->seed = static_cast<std::uint64_t>(seed_override);

  try {
    return run_checks(*cfg, defaults.at(sub), jobs, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailure;
  }
}
