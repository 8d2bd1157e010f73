#include "multimix/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "multimix/error.hpp"

namespace multimix {
namespace {

double cross(Point2 o, Point2 a, Point2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::vector<Point2> columns(const Eigen::MatrixXd& m) {
  if (m.rows() != 2) throw ShapeError("hull membership is defined for 2-D points only");
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.cols(); ++k) out.push_back({m(0, k), m(1, k)});
  return out;
}

}  // namespace

std::vector<Point2> convex_hull(std::vector<Point2> points) {
  std::sort(points.begin(), points.end(), [](Point2 a, Point2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  points.erase(std::unique(points.begin(), points.end(),
                           [](Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }),
               points.end());
  if (points.size() < 3) return points;

  std::vector<Point2> hull(2 * points.size());
  std::size_t k = 0;
  for (const auto& p : points) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  return hull;
}

double segment_distance(Point2 a, Point2 b, Point2 p) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

bool in_convex_hull(const std::vector<Point2>& hull, Point2 p, double tol) {
  if (hull.empty()) return false;
  if (hull.size() == 1) return std::hypot(p.x - hull[0].x, p.y - hull[0].y) <= tol;
  if (hull.size() == 2) return segment_distance(hull[0], hull[1], p) <= tol;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2 a = hull[i];
    const Point2 b = hull[(i + 1) % hull.size()];
    const double edge = std::hypot(b.x - a.x, b.y - a.y);
    if (cross(a, b, p) / edge < -tol) return false;
  }
  return true;
}

std::vector<bool> hull_membership(const Eigen::MatrixXd& points, const Eigen::MatrixXd& hull_of,
                                  double tol) {
  const auto hull = convex_hull(columns(hull_of));
  std::vector<bool> out;
  for (const auto& p : columns(points)) out.push_back(in_convex_hull(hull, p, tol));
  return out;
}

}  // namespace multimix
