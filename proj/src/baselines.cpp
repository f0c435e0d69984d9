#include "das/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>

namespace das {

BruteForceResult brute_force_search(const FeedForwardNet& net, const CausalModel& high,
                                    const std::vector<std::string>& var_map,
                                    const WindowSearchConfig& cfg,
                                    const std::vector<CounterfactualExample>& dataset) {
  if (cfg.intervention_size == 0) fail(Errc::Config, "intervention_size must be positive");
  if (cfg.layers.empty()) fail(Errc::Config, "no layers to scan");
  const std::size_t k = var_map.size();

  BruteForceResult res;
  for (std::size_t layer : cfg.layers) {
    const std::size_t width = net.layer_dim(layer);
    if (cfg.intervention_size * k > width) continue;

    std::vector<std::size_t> starts = cfg.start_indices;
    if (starts.empty())
      for (std::size_t s = 0; s + cfg.intervention_size <= width; ++s) starts.push_back(s);

    // Enumerate disjoint start combinations in lexicographic order.
    std::vector<std::size_t> pick(k, 0);
    std::vector<std::size_t> chosen;
    std::function<void(std::size_t)> recurse = [&](std::size_t var) {
      if (var == k) {
        SubspacePartition part = SubspacePartition::windows(
            width, std::vector<std::size_t>(k, cfg.intervention_size), chosen);
        WindowPlacement p;
        p.layer = layer;
        p.starts = chosen;
        p.iia_value = distributed_iia_net(net, layer, high, Tensor::identity(width),
                                          part, var_map, dataset);
        res.table.push_back(std::move(p));
        return;
      }
      for (std::size_t s : starts) {
        bool ok = s + cfg.intervention_size <= width;
        for (std::size_t c : chosen)
          if (s < c + cfg.intervention_size && c < s + cfg.intervention_size) ok = false;
        if (!ok) continue;
        chosen.push_back(s);
        recurse(var + 1);
        chosen.pop_back();
      }
    };
    recurse(0);
  }

  if (res.table.empty())
    fail(Errc::NoAdmissiblePlacement, "no disjoint window placement fits");
  res.best = res.table.front();
  for (const auto& p : res.table)
    if (p.iia_value > res.best.iia_value) res.best = p;  // first best wins ties
  return res;
}

bool is_signed_permutation(const Tensor& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const std::size_t n = m.rows();
  std::vector<int> row_count(n, 0), col_count(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double v = m.at(i, j);
      if (std::abs(v) <= tol) continue;
      if (std::abs(std::abs(v) - 1.0) > tol) return false;
      ++row_count[i];
      ++col_count[j];
    }
  for (std::size_t i = 0; i < n; ++i)
    if (row_count[i] != 1 || col_count[i] != 1) return false;
  return true;
}

SignedPermutation find_localist_alignment(const Tensor& rotation) {
  if (rotation.rows() != rotation.cols())
    fail(Errc::ShapeMismatch, "localist alignment needs a square matrix");
  const std::size_t n = rotation.rows();
  Tensor abs = rotation;
  for (std::size_t i = 0; i < n * n; ++i) abs[i] = std::abs(abs[i]);

  Tensor out = Tensor::zeros(n, n);
  for (std::size_t pick = 0; pick < n; ++pick) {
    std::size_t br = 0, bc = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (abs.at(i, j) > best) {  // strict: earliest (row, col) wins ties
          best = abs.at(i, j);
          br = i;
          bc = j;
        }
    out.at(br, bc) = rotation.at(br, bc) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) abs.at(br, j) = 0.0;
    for (std::size_t i = 0; i < n; ++i) abs.at(i, bc) = 0.0;
  }
  return SignedPermutation{std::move(out)};
}

std::vector<double> rotation_angles(const Tensor& rotation) {
  if (rotation.rows() != rotation.cols())
    fail(Errc::ShapeMismatch, "rotation_angles needs a square matrix");
  if (orthogonality_defect(rotation) >= 1e-6)
    fail(Errc::NotOrthogonal, "matrix is not orthogonal within 1e-6");
  const std::size_t n = rotation.rows();
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(j)) = rotation.at(i, j);

  Eigen::RealSchur<Eigen::MatrixXd> schur(m);
  const Eigen::MatrixXd& t = schur.matrixT();

  constexpr double kSubdiagTol = 1e-9;
  constexpr double kRad2Deg = 180.0 / M_PI;
  std::vector<double> angles;
  std::size_t i = 0;
  while (i < n) {
    if (i + 1 < n && std::abs(t(static_cast<Eigen::Index>(i) + 1,
                                static_cast<Eigen::Index>(i))) > kSubdiagTol) {
      // 2x2 block: complex pair cos(theta) +- i*sin(theta).
      const double a = t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
      const double d = t(static_cast<Eigen::Index>(i) + 1, static_cast<Eigen::Index>(i) + 1);
      const double b = t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i) + 1);
      const double c = t(static_cast<Eigen::Index>(i) + 1, static_cast<Eigen::Index>(i));
      const double re = 0.5 * (a + d);
      const double im2 = -b * c - 0.25 * (a - d) * (a - d);
      const double im = std::sqrt(std::max(im2, 0.0));
      angles.push_back(std::atan2(im, re) * kRad2Deg);
      i += 2;
    } else {
      angles.push_back(t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) >= 0.0
                           ? 0.0
                           : 180.0);
      ++i;
    }
  }
  return angles;
}

}  // namespace das
