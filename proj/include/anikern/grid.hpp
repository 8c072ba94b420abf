#ifndef ANIKERN_GRID_HPP
#define ANIKERN_GRID_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace anikern {

/// Node-centered tensor grid on the box prod_k [-r_k, r_k]. Axis k carries
/// counts_k + 1 nodes at spacing h_k = 2 r_k / counts_k; counts are even so
/// the origin is a node. The last axis varies fastest in the flat ordering.
class AnisoGrid {
public:
  AnisoGrid(std::vector<double> radii, std::vector<int> counts)
      : radii_(std::move(radii)), counts_(std::move(counts)) {
    if (radii_.empty() || radii_.size() != counts_.size())
      throw std::invalid_argument("AnisoGrid: radii/counts mismatch");
    for (double r : radii_)
      if (!(r > 0.0)) throw std::invalid_argument("AnisoGrid: radii must be positive");
    for (int c : counts_) {
      if (c < 4) throw std::invalid_argument("AnisoGrid: counts must be >= 4");
      if (c % 2 != 0) throw std::invalid_argument("AnisoGrid: counts must be even");
    }
  }

  int dim() const { return static_cast<int>(radii_.size()); }
  double radius(int k) const { return radii_[static_cast<std::size_t>(k)]; }
  int count(int k) const { return counts_[static_cast<std::size_t>(k)]; }
  const std::vector<double>& radii() const { return radii_; }
  const std::vector<int>& counts() const { return counts_; }
  double spacing(int k) const { return 2.0 * radius(k) / count(k); }
  int nodes_on_axis(int k) const { return count(k) + 1; }

  long total_nodes() const {
    long n = 1;
    for (int k = 0; k < dim(); ++k) n *= nodes_on_axis(k);
    return n;
  }

  long interior_nodes() const {
    long n = 1;
    for (int k = 0; k < dim(); ++k) n *= count(k) - 1;
    return n;
  }

  double cell_volume() const {
    double v = 1.0;
    for (int k = 0; k < dim(); ++k) v *= spacing(k);
    return v;
  }

  double axis_node(int k, int i) const { return -radius(k) + i * spacing(k); }

  Eigen::VectorXd node(long flat) const {
    Eigen::VectorXd x(dim());
    for (int k = dim() - 1; k >= 0; --k) {
      const int n = nodes_on_axis(k);
      x[k] = axis_node(k, static_cast<int>(flat % n));
      flat /= n;
    }
    return x;
  }

  long flat_index(const std::vector<int>& idx) const {
    long f = 0;
    for (int k = 0; k < dim(); ++k) f = f * nodes_on_axis(k) + idx[static_cast<std::size_t>(k)];
    return f;
  }

  /// Trapezoid weight (boundary nodes count half per axis), times the cell
  /// volume.
  double quad_weight(long flat) const {
    double w = cell_volume();
    for (int k = dim() - 1; k >= 0; --k) {
      const int n = nodes_on_axis(k);
      const int i = static_cast<int>(flat % n);
      if (i == 0 || i == n - 1) w *= 0.5;
      flat /= n;
    }
    return w;
  }

  AnisoGrid refined() const {
    std::vector<int> c(counts_);
    for (int& v : c) v *= 2;
    return AnisoGrid(radii_, c);
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"radii", radii_}, {"counts", counts_}};
  }

  static AnisoGrid from_json(const nlohmann::json& j) {
    return AnisoGrid(j.at("radii").get<std::vector<double>>(),
                     j.at("counts").get<std::vector<int>>());
  }

private:
  std::vector<double> radii_;
  std::vector<int> counts_;
};

}  // namespace anikern

#endif  // ANIKERN_GRID_HPP
