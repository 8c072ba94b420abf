#ifndef ANIKERN_KERNEL_CC_HPP
#define ANIKERN_KERNEL_CC_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "anikern/grid.hpp"
#include "anikern/symbol.hpp"

namespace anikern {

/// Sampled heat-kernel values K(t, x) on a spatial grid.
struct KernelField {
  AnisoGrid grid;
  double t;
  Eigen::VectorXcd values;  // flattened over grid nodes, last axis fastest
  std::uint64_t symbol_hash = 0;

  double peak() const { return values.cwiseAbs().maxCoeff(); }
};

/// Frequency box radii L_k with min of t R over the box boundary equal to
/// `threshold`; outside the box the integrand is below e^{-threshold}. Found
/// by scaling the unit box along the dilation group, which is exact because
/// R(t^E u) = t R(u).
inline std::vector<double> frequency_box(const Symbol& s, double t, double threshold = 40.0) {
  if (!(t > 0.0)) throw std::invalid_argument("frequency_box: t must be positive");
  if (!(threshold > 0.0)) throw std::invalid_argument("frequency_box: threshold must be positive");
  const WeightVector& m = s.weights();
  const int d = m.dim();

  // min of R over the unit-box boundary
  double mb = std::numeric_limits<double>::infinity();
  const int per_axis = 129;
  for (int face_axis = 0; face_axis < d; ++face_axis) {
    for (int sign = -1; sign <= 1; sign += 2) {
      std::vector<int> idx(static_cast<std::size_t>(d), 0);
      while (true) {
        Eigen::VectorXd u(d);
        for (int k = 0; k < d; ++k) {
          if (k == face_axis)
            u[k] = sign;
          else
            u[k] = -1.0 + 2.0 * idx[static_cast<std::size_t>(k)] / (per_axis - 1);
        }
        mb = std::min(mb, s.eval_real(u));
        int k = 0;
        for (; k < d; ++k) {
          if (k == face_axis) continue;
          if (++idx[static_cast<std::size_t>(k)] < per_axis) break;
          idx[static_cast<std::size_t>(k)] = 0;
        }
        if (k == d) break;
      }
      if (d == 1) break;  // both signs covered by u[k] = sign loop
    }
  }
  if (d == 1) {
    mb = std::min(s.eval_real(Eigen::VectorXd::Constant(1, 1.0)),
                  s.eval_real(Eigen::VectorXd::Constant(1, -1.0)));
  }
  if (!(mb > 0.0)) throw std::runtime_error("frequency_box: symbol vanishes on the unit box");

  const double t_star = threshold / (t * mb);
  std::vector<double> radii(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k)
    radii[static_cast<std::size_t>(k)] = std::pow(t_star, m.dilation_exponent(k).to_double());
  return radii;
}

/// K(t, x) = (2 pi)^{-d} sum_j e^{-i xi_j . x} e^{-t R(xi_j)} prod_k dxi_k,
/// the Riemann sum over the truncated frequency box, evaluated by per-axis
/// phase-matrix contractions (the sum factorizes over a tensor grid).
inline KernelField kernel_cc(const Symbol& s, double t, const AnisoGrid& grid,
                             const std::vector<int>& freq_counts, double threshold = 40.0) {
  if (!(t > 0.0)) throw std::invalid_argument("kernel_cc: t must be positive");
  const int d = s.dim();
  if (grid.dim() != d || static_cast<int>(freq_counts.size()) != d)
    throw std::invalid_argument("kernel_cc: dimension mismatch");
  if (d > 3) throw std::invalid_argument("kernel_cc: d > 3 not supported");

  const std::vector<double> box = frequency_box(s, t, threshold);
  std::vector<double> dxi(static_cast<std::size_t>(d));
  std::vector<Eigen::VectorXd> freq_nodes(static_cast<std::size_t>(d));
  double scale = 1.0;
  for (int k = 0; k < d; ++k) {
    const int nf = freq_counts[static_cast<std::size_t>(k)];
    if (nf < 2) throw std::invalid_argument("kernel_cc: freq_counts too small");
    const double L = box[static_cast<std::size_t>(k)];
    dxi[static_cast<std::size_t>(k)] = 2.0 * L / nf;
    if (dxi[static_cast<std::size_t>(k)] > M_PI / grid.radius(k) + 1e-15)
      throw std::invalid_argument("kernel_cc: Nyquist violation, increase freq_counts");
    Eigen::VectorXd nodes(nf);
    for (int j = 0; j < nf; ++j) nodes[j] = -L + (j + 0.5) * dxi[static_cast<std::size_t>(k)];
    freq_nodes[static_cast<std::size_t>(k)] = nodes;
    scale *= dxi[static_cast<std::size_t>(k)] / (2.0 * M_PI);
  }

  // phase matrices E_k(j, a) = exp(-i xi_j x_a)
  std::vector<Eigen::MatrixXcd> phases(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const Eigen::VectorXd& xs = freq_nodes[static_cast<std::size_t>(k)];
    const int na = grid.nodes_on_axis(k);
    Eigen::MatrixXcd E(xs.size(), na);
    for (int j = 0; j < xs.size(); ++j)
      for (int a = 0; a < na; ++a)
        E(j, a) = std::exp(Complex(0.0, -xs[j] * grid.axis_node(k, a)));
    phases[static_cast<std::size_t>(k)] = std::move(E);
  }

  KernelField field{grid, t, Eigen::VectorXcd(), s.hash()};
  if (d == 1) {
    const Eigen::VectorXd& xi = freq_nodes[0];
    Eigen::VectorXcd w(xi.size());
    Eigen::VectorXd p(1);
    for (int j = 0; j < xi.size(); ++j) {
      p[0] = xi[j];
      w[j] = std::exp(-Complex(t, 0.0) * s.eval(p));
    }
    field.values = scale * (phases[0].transpose() * w);
  } else if (d == 2) {
    const Eigen::VectorXd& xi1 = freq_nodes[0];
    const Eigen::VectorXd& xi2 = freq_nodes[1];
    Eigen::MatrixXcd w(xi1.size(), xi2.size());
    Eigen::VectorXd p(2);
    for (int j1 = 0; j1 < xi1.size(); ++j1)
      for (int j2 = 0; j2 < xi2.size(); ++j2) {
        p << xi1[j1], xi2[j2];
        w(j1, j2) = std::exp(-Complex(t, 0.0) * s.eval(p));
      }
    const Eigen::MatrixXcd K = phases[0].transpose() * w * phases[1];
    field.values = scale * Eigen::Map<const Eigen::VectorXcd>(
                               Eigen::MatrixXcd(K.transpose()).data(), K.size());
    // row-major flatten: node order has axis 1 fastest
  } else {
    const Eigen::VectorXd& xi1 = freq_nodes[0];
    const Eigen::VectorXd& xi2 = freq_nodes[1];
    const Eigen::VectorXd& xi3 = freq_nodes[2];
    const int n1 = grid.nodes_on_axis(0), n2 = grid.nodes_on_axis(1), n3 = grid.nodes_on_axis(2);
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(static_cast<long>(n1) * n2 * n3);
    Eigen::VectorXd p(3);
    Eigen::MatrixXcd w23(xi2.size(), xi3.size());
    for (int j1 = 0; j1 < xi1.size(); ++j1) {
      for (int j2 = 0; j2 < xi2.size(); ++j2)
        for (int j3 = 0; j3 < xi3.size(); ++j3) {
          p << xi1[j1], xi2[j2], xi3[j3];
          w23(j2, j3) = std::exp(-Complex(t, 0.0) * s.eval(p));
        }
      const Eigen::MatrixXcd M = phases[1].transpose() * w23 * phases[2];
      for (int a = 0; a < n1; ++a) {
        const Complex ph = phases[0](j1, a);
        for (int b = 0; b < n2; ++b)
          for (int c = 0; c < n3; ++c)
            acc[(static_cast<long>(a) * n2 + b) * n3 + c] += ph * M(b, c);
      }
    }
    field.values = scale * acc;
  }
  return field;
}

struct MassReport {
  double deviation = 0.0;
  bool support_covered = true;
};

/// |trapezoid(K) - 1|; mass is exactly one in the continuum because R(0)=0.
inline MassReport check_mass(const KernelField& k) {
  Complex total(0.0, 0.0);
  for (long f = 0; f < k.values.size(); ++f)
    total += k.grid.quad_weight(f) * k.values[f];
  MassReport rep;
  rep.deviation = std::abs(total - Complex(1.0, 0.0));

  const double pk = k.peak();
  double boundary_max = 0.0;
  for (long f = 0; f < k.values.size(); ++f) {
    long rem = f;
    bool boundary = false;
    for (int ax = k.grid.dim() - 1; ax >= 0; --ax) {
      const int n = k.grid.nodes_on_axis(ax);
      const int i = static_cast<int>(rem % n);
      if (i == 0 || i == n - 1) boundary = true;
      rem /= n;
    }
    if (boundary) boundary_max = std::max(boundary_max, std::abs(k.values[f]));
  }
  rep.support_covered = boundary_max < 1e-12 * pk;
  return rep;
}

/// max relative deviation of K(t,x) = t^{-mu} K(1, t^{-E} x) over nodes with
/// |K| above 1e-6 of the peak.
inline double check_scaling_identity(const Symbol& s, double t, const AnisoGrid& grid,
                                     const std::vector<int>& freq_counts) {
  if (!(t > 0.0)) throw std::invalid_argument("check_scaling_identity: t must be positive");
  const KernelField lhs = kernel_cc(s, t, grid, freq_counts);

  const WeightVector& m = s.weights();
  std::vector<double> dilated_radii(static_cast<std::size_t>(grid.dim()));
  for (int k = 0; k < grid.dim(); ++k)
    dilated_radii[static_cast<std::size_t>(k)] =
        grid.radius(k) * std::pow(t, -m.dilation_exponent(k).to_double());
  const AnisoGrid dilated(dilated_radii, grid.counts());
  const KernelField unit = kernel_cc(s, 1.0, dilated, freq_counts);

  const double mu = m.mu().to_double();
  const double prefactor = std::pow(t, -mu);
  const double floor = 1e-6 * lhs.peak();
  double worst = 0.0;
  for (long f = 0; f < lhs.values.size(); ++f) {
    const Complex a = lhs.values[f];
    if (std::abs(a) <= floor) continue;
    const Complex b = prefactor * unit.values[f];
    worst = std::max(worst, std::abs(a - b) / std::abs(a));
  }
  return worst;
}

/// Discrete L^s norm of the field (power sum times the volume element; max
/// for s = inf, encoded as s <= 0).
inline double field_norm(const KernelField& k, double s) {
  if (s <= 0.0 || std::isinf(s)) return k.peak();
  double acc = 0.0;
  for (long f = 0; f < k.values.size(); ++f)
    acc += k.grid.quad_weight(f) * std::pow(std::abs(k.values[f]), s);
  return std::pow(acc, 1.0 / s);
}

/// (t, ||K(t,.)||_s) per requested time; the spatial box follows the dilation
/// so every time sees its full effective support.
inline std::vector<std::pair<double, double>> norm_profile(const Symbol& s, double ls_order,
                                                           const std::vector<double>& times,
                                                           const AnisoGrid& base_grid,
                                                           const std::vector<int>& freq_counts) {
  const WeightVector& m = s.weights();
  std::vector<std::pair<double, double>> out;
  for (double t : times) {
    if (!(t > 0.0)) throw std::invalid_argument("norm_profile: times must be positive");
    std::vector<double> radii(static_cast<std::size_t>(base_grid.dim()));
    for (int k = 0; k < base_grid.dim(); ++k)
      radii[static_cast<std::size_t>(k)] =
          base_grid.radius(k) * std::pow(t, m.dilation_exponent(k).to_double());
    const AnisoGrid g(radii, base_grid.counts());
    out.emplace_back(t, field_norm(kernel_cc(s, t, g, freq_counts), ls_order));
  }
  return out;
}

/// Least-squares slope of log(norm) against log(t).
inline double log_log_slope(const std::vector<std::pair<double, double>>& profile) {
  const auto n = static_cast<double>(profile.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [t, v] : profile) {
    const double x = std::log(t), y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline void write_kernel_csv(const KernelField& k, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_kernel_csv: cannot open " + path);
  out << "t";
  for (int j = 0; j < k.grid.dim(); ++j) out << ",x_" << (j + 1);
  out << ",re,im,abs\n";
  out.precision(17);
  for (long f = 0; f < k.values.size(); ++f) {
    const Eigen::VectorXd x = k.grid.node(f);
    out << k.t;
    for (int j = 0; j < k.grid.dim(); ++j) out << "," << x[j];
    out << "," << k.values[f].real() << "," << k.values[f].imag() << ","
        << std::abs(k.values[f]) << "\n";
  }
}

/// Binary cache: one JSON header line, then interleaved little-endian
/// float64 (re, im) pairs over the flat node order.
inline void write_kernel_cache(const KernelField& k, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_kernel_cache: cannot open " + path);
  nlohmann::json header;
  header["grid"] = k.grid.to_json();
  header["t"] = k.t;
  header["symbol_hash"] = k.symbol_hash;
  header["count"] = k.values.size();
  header["layout"] = "re_im_interleaved_f64_le";
  out << header.dump() << "\n";
  for (long f = 0; f < k.values.size(); ++f) {
    const double re = k.values[f].real();
    const double im = k.values[f].imag();
    out.write(reinterpret_cast<const char*>(&re), sizeof(double));
    out.write(reinterpret_cast<const char*>(&im), sizeof(double));
  }
}

inline KernelField read_kernel_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_kernel_cache: cannot open " + path);
  std::string line;
  std::getline(in, line);
  const nlohmann::json header = nlohmann::json::parse(line);
  KernelField k{AnisoGrid::from_json(header.at("grid")), header.at("t").get<double>(),
                Eigen::VectorXcd(header.at("count").get<long>()),
                header.at("symbol_hash").get<std::uint64_t>()};
  for (long f = 0; f < k.values.size(); ++f) {
    double re = 0.0, im = 0.0;
    in.read(reinterpret_cast<char*>(&re), sizeof(double));
    in.read(reinterpret_cast<char*>(&im), sizeof(double));
    k.values[f] = Complex(re, im);
  }
  if (!in) throw std::runtime_error("read_kernel_cache: truncated payload");
  return k;
}

}  // namespace anikern

#endif  // ANIKERN_KERNEL_CC_HPP
