#include "warpflow/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace warpflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

inline int mirror_or_wrap(int i, int n, bool periodic) {
  if (periodic) {
    int m = i % n;
    return m < 0 ? m + n : m;
  }
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - 1 - i;
  return i;
}

}  // namespace

Grid Grid::make(Topology topology, int n) {
  if (n < 16) throw std::invalid_argument("grid size must be at least 16");
  Grid g;
  g.topology = topology;
  g.n = n;
  switch (topology) {
    case Topology::SphereLike: g.length = kPi; break;
    case Topology::RingLike: g.length = 2.0 * kPi; break;
    case Topology::Circle: g.length = 1.0; break;
  }
  g.dx = g.length / n;
  g.nodes.resize(n);
  for (int j = 0; j < n; ++j) g.nodes[j] = (j + 0.5) * g.dx;
  return g;
}

Eigen::ArrayXd d1_apply(const Grid& g, const Eigen::ArrayXd& u) {
  const int n = g.n;
  if (u.size() != n) throw std::invalid_argument("field length does not match grid");
  const bool per = g.periodic();
  const double s = 1.0 / (12.0 * g.dx);
  Eigen::ArrayXd out(n);
  for (int j = 0; j < n; ++j) {
    if (!per && j >= 2 && j < n - 2) {
      out[j] = s * (u[j - 2] - 8.0 * u[j - 1] + 8.0 * u[j + 1] - u[j + 2]);
      continue;
    }
    const double um2 = u[mirror_or_wrap(j - 2, n, per)];
    const double um1 = u[mirror_or_wrap(j - 1, n, per)];
    const double up1 = u[mirror_or_wrap(j + 1, n, per)];
    const double up2 = u[mirror_or_wrap(j + 2, n, per)];
    out[j] = s * (um2 - 8.0 * um1 + 8.0 * up1 - up2);
  }
  return out;
}

Eigen::ArrayXd d2_apply(const Grid& g, const Eigen::ArrayXd& u) {
  const int n = g.n;
  if (u.size() != n) throw std::invalid_argument("field length does not match grid");
  const bool per = g.periodic();
  const double s = 1.0 / (12.0 * g.dx * g.dx);
  Eigen::ArrayXd out(n);
  for (int j = 0; j < n; ++j) {
    if (!per && j >= 2 && j < n - 2) {
      out[j] = s * (-u[j - 2] + 16.0 * u[j - 1] - 30.0 * u[j] + 16.0 * u[j + 1] - u[j + 2]);
      continue;
    }
    const double um2 = u[mirror_or_wrap(j - 2, n, per)];
    const double um1 = u[mirror_or_wrap(j - 1, n, per)];
    const double up1 = u[mirror_or_wrap(j + 1, n, per)];
    const double up2 = u[mirror_or_wrap(j + 2, n, per)];
    out[j] = s * (-um2 + 16.0 * um1 - 30.0 * u[j] + 16.0 * up1 - up2);
  }
  return out;
}

namespace {

Eigen::SparseMatrix<double> stencil_matrix(const Grid& g, const std::vector<std::pair<int, double>>& taps,
                                           double scale) {
  const int n = g.n;
  const bool per = g.periodic();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(taps.size() * n);
  for (int j = 0; j < n; ++j) {
    for (const auto& [off, c] : taps) {
      trips.emplace_back(j, mirror_or_wrap(j + off, n, per), c * scale);
    }
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

}  // namespace

Eigen::SparseMatrix<double> d1_matrix(const Grid& g) {
  return stencil_matrix(g, {{-2, 1.0}, {-1, -8.0}, {1, 8.0}, {2, -1.0}}, 1.0 / (12.0 * g.dx));
}

Eigen::SparseMatrix<double> d2_matrix(const Grid& g) {
  return stencil_matrix(g, {{-2, -1.0}, {-1, 16.0}, {0, -30.0}, {1, 16.0}, {2, -1.0}},
                        1.0 / (12.0 * g.dx * g.dx));
}

Eigen::SparseMatrix<double> staggered_d1_matrix(const Grid& g) {
  const int n = g.n;
  const bool per = g.periodic();
  const int rows = per ? n : n + 1;
  const double s = 1.0 / (24.0 * g.dx);
  // derivative at x = j dx from nodes j-2, j-1, j, j+1 (offsets -1.5..+1.5 dx)
  const std::vector<std::pair<int, double>> taps = {{-2, 1.0}, {-1, -27.0}, {0, 27.0}, {1, -1.0}};
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * rows);
  for (int j = 0; j < rows; ++j) {
    for (const auto& [off, c] : taps) {
      trips.emplace_back(j, mirror_or_wrap(j + off, n, per), c * s);
    }
  }
  Eigen::SparseMatrix<double> m(rows, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::ArrayXd half_nodes(const Grid& g) {
  const int rows = g.periodic() ? g.n : g.n + 1;
  Eigen::ArrayXd x(rows);
  for (int j = 0; j < rows; ++j) x[j] = j * g.dx;
  return x;
}

double kahan_sum(const Eigen::ArrayXd& v) {
  double sum = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double y = v[i] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

double kahan_dot(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  double sum = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double y = a[i] * b[i] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace warpflow
