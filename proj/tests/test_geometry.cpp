#include <doctest.h>

#include "multimix/error.hpp"
#include "multimix/geometry.hpp"
#include "multimix/sampling.hpp"
#include "oracles.hpp"

using namespace multimix;

TEST_CASE("hull of a square with interior and collinear points") {
  const auto hull = convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.5, 0}, {0.2, 0.7}});
  CHECK(hull.size() == 4);
  CHECK(in_convex_hull(hull, {0.5, 0.5}));
  CHECK(in_convex_hull(hull, {1, 1}));
  CHECK(in_convex_hull(hull, {1, 0.5}));
  CHECK(!in_convex_hull(hull, {1.01, 0.5}));
  CHECK(!in_convex_hull(hull, {-1e-6, 0.5}));
}

TEST_CASE("hull vertices, centroid, exterior point") {
  Rng rng(1);
  const Eigen::MatrixXd pts = oracle::random_matrix(2, 12, rng);
  CHECK(std::ranges::all_of(hull_membership(pts, pts), [](bool b) { return b; }));

  const Eigen::MatrixXd centroid = pts.rowwise().mean();
  CHECK(hull_membership(centroid, pts).front());

  const double radius = (pts.colwise() - centroid.col(0)).colwise().norm().maxCoeff();
  Eigen::MatrixXd far(2, 1);
  far << centroid(0) + 2 * radius, centroid(1);
  CHECK(!hull_membership(far, pts).front());
}

TEST_CASE("degenerate hulls") {
  Eigen::MatrixXd seg(2, 2);
  seg << 0, 2, 0, 2;
  Eigen::MatrixXd probe(2, 3);
  probe << 1, 1, 3, 1, 1.1, 3;
  const auto in = hull_membership(probe, seg);
  CHECK(in[0]);
  CHECK(!in[1]);
  CHECK(!in[2]);

  Eigen::MatrixXd point(2, 3);
  point << 1, 1, 1, 2, 2, 2;
  Eigen::MatrixXd at(2, 1);
  at << 1, 2;
  CHECK(hull_membership(at, point).front());

  CHECK_THROWS_AS(hull_membership(Eigen::MatrixXd::Zero(3, 1), Eigen::MatrixXd::Zero(3, 3)), ShapeError);
}

TEST_CASE("segment distance") {
  CHECK(segment_distance({0, 0}, {2, 0}, {1, 1}) == 1.0);
  CHECK(segment_distance({0, 0}, {2, 0}, {3, 0}) == 1.0);
  CHECK(segment_distance({0, 0}, {0, 0}, {3, 4}) == 5.0);
}

TEST_CASE("convex combinations of a batch are in its hull") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd batch = oracle::random_matrix(2, 10, rng);
    const auto lam = sample_interpolation_matrix(10, 300, AlphaPolicy::uniform_range(0.5, 2.0), rng);
    const auto in = hull_membership(batch * lam.weights, batch);
    CHECK(std::count(in.begin(), in.end(), true) == 300);
  }
}
