#pragma once

#include <vector>

#include <Eigen/Core>

namespace multimix {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Andrew's monotone chain. Counter-clockwise, collinear points dropped.
/// Degenerate inputs return one point or the two segment endpoints.
std::vector<Point2> convex_hull(std::vector<Point2> points);

/// Distance from p to the closed segment [a, b].
double segment_distance(Point2 a, Point2 b, Point2 p);

/// True when p lies in the hull, allowing `tol` of signed distance outside
/// each edge. Point and segment hulls fall back to a distance test.
bool in_convex_hull(const std::vector<Point2>& hull, Point2 p, double tol = 1e-9);

/// Membership of every column of `points` (2 x n) in the hull of the columns
/// of `hull_of` (2 x m).
std::vector<bool> hull_membership(const Eigen::MatrixXd& points, const Eigen::MatrixXd& hull_of,
                                  double tol = 1e-9);

}  // namespace multimix
