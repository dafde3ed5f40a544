#include <Eigen/Dense>

#include <cmath>

#include "dppg/tracking.hpp"

namespace dppg::tracking {

std::optional<Affine> affine_from_three(std::span<const Point2, 3> s, std::span<const Point2, 3> d) {
  // Rows [x y 1]; solve for (a, b, tx) and (c, d, ty) by Cramer's rule.
  const double det = s[0].x * (s[1].y - s[2].y) - s[0].y * (s[1].x - s[2].x) + (s[1].x * s[2].y - s[2].x * s[1].y);
  if (std::abs(det) < 1e-9) return std::nullopt;
  auto solve = [&](double r0, double r1, double r2) {
    const double a = (r0 * (s[1].y - s[2].y) - s[0].y * (r1 - r2) + (r1 * s[2].y - r2 * s[1].y)) / det;
    const double b = (s[0].x * (r1 - r2) - r0 * (s[1].x - s[2].x) + (s[1].x * r2 - s[2].x * r1)) / det;
    const double t = (s[0].x * (s[1].y * r2 - s[2].y * r1) - s[0].y * (s[1].x * r2 - s[2].x * r1) +
                      r0 * (s[1].x * s[2].y - s[2].x * s[1].y)) /
                     det;
    return std::array<double, 3>{a, b, t};
  };
  const auto rx = solve(d[0].x, d[1].x, d[2].x);
  const auto ry = solve(d[0].y, d[1].y, d[2].y);
  Affine m{rx[0], rx[1], rx[2], ry[0], ry[1], ry[2]};
  if (!m.finite()) return std::nullopt;
  return m;
}

std::optional<Affine> fit_affine_least_squares(std::span<const Point2> src, std::span<const Point2> dst) {
  if (src.size() != dst.size() || src.size() < 3) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::MatrixXd rhs(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    a(i, 0) = src[u].x;
    a(i, 1) = src[u].y;
    a(i, 2) = 1.0;
    rhs(i, 0) = dst[u].x;
    rhs(i, 1) = dst[u].y;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 3) return std::nullopt;
  const Eigen::MatrixXd sol = qr.solve(rhs);
  Affine m{sol(0, 0), sol(1, 0), sol(2, 0), sol(0, 1), sol(1, 1), sol(2, 1)};
  if (!m.finite()) return std::nullopt;
  return m;
}

std::optional<RansacResult> ransac_affine(std::span<const Point2> src, std::span<const Point2> dst,
                                          const RansacParams& params, std::mt19937_64& rng) {
  const std::size_t n = src.size();
  if (n != dst.size() || n < 3) return std::nullopt;

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<bool> best_mask, mask(n);
  std::size_t best_count = 0;

  for (int it = 0; it < params.iterations; ++it) {
    std::size_t i0 = pick(rng), i1 = pick(rng), i2 = pick(rng);
    while (i1 == i0) i1 = pick(rng);
    while (i2 == i0 || i2 == i1) i2 = pick(rng);
    const std::array<Point2, 3> s{src[i0], src[i1], src[i2]};
    const std::array<Point2, 3> d{dst[i0], dst[i1], dst[i2]};
    const auto model = affine_from_three(s, d);
    if (!model) continue;
    std::size_t count = 0;
    for (std::size_t k = 0; k < n; ++k) {
      mask[k] = distance(model->apply(src[k]), dst[k]) <= params.eps_px;
      count += mask[k] ? 1 : 0;
    }
    if (count > best_count) {
      best_count = count;
      best_mask = mask;
    }
  }
  if (best_count < 3 || static_cast<double>(best_count) < params.inlier_frac * static_cast<double>(n))
    return std::nullopt;

  std::vector<Point2> s_in, d_in;
  for (std::size_t k = 0; k < n; ++k)
    if (best_mask[k]) {
      s_in.push_back(src[k]);
      d_in.push_back(dst[k]);
    }
  const auto refit = fit_affine_least_squares(s_in, d_in);
  if (!refit || std::abs(refit->det()) <= 1e-6) return std::nullopt;

  RansacResult r;
  r.model = *refit;
  r.inliers = std::move(best_mask);
  r.inlier_count = best_count;
  for (std::size_t k = 0; k < s_in.size(); ++k)
    r.max_inlier_residual = std::max(r.max_inlier_residual, distance(refit->apply(s_in[k]), d_in[k]));
  return r;
}

}  // namespace dppg::tracking
